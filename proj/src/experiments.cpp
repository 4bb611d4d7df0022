#include "pairig/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pairig/errors.hpp"

namespace pairig {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Traffic.

TrafficNetworkSpec TrafficNetworkSpec::standard() {
  TrafficNetworkSpec spec;
  spec.C.resize(5, 5);
  spec.C << 0.92, 0, 0, 5, 0,  //
      0, 5.92, 0, 0, 5,        //
      0, 0, 10.92, 0, 0,       //
      2, 0, 0, 10.92, 0,       //
      0, 1, 0, 0, 15.92;
  spec.q.resize(5);
  spec.q << 1000, 950, 3000, 1000, 1300;
  spec.B.resize(2, 5);
  spec.B << 1, 1, 1, 0, 0,  //
      0, 0, 0, 1, 1;
  spec.demand_mean.resize(2);
  spec.demand_mean << 210, 120;
  spec.demand_std = Vector::Constant(2, 10.0);
  return spec;
}

Matrix traffic_block_matrix(const Matrix& C, const Matrix& B) {
  const Eigen::Index arcs = C.rows();
  const Eigen::Index pairs = B.rows();
  Matrix M = Matrix::Zero(arcs + pairs, arcs + pairs);
  M.topLeftCorner(arcs, arcs) = C;
  M.topRightCorner(arcs, pairs) = -B.transpose();
  M.bottomLeftCorner(pairs, arcs) = B;
  return M;
}

namespace {

void check_traffic_spec(const TrafficNetworkSpec& spec) {
  if (!spec.seed) throw ArgumentError("traffic: a seed is required");
  const Eigen::Index arcs = spec.C.rows();
  if (spec.C.cols() != arcs || spec.q.size() != arcs || spec.B.cols() != arcs) {
    throw ArgumentError("traffic: C, q and B disagree on the number of arcs");
  }
  if (spec.demand_mean.size() != spec.B.rows() || spec.demand_std.size() != spec.B.rows()) {
    throw ArgumentError("traffic: demand parameters disagree with B");
  }
  if (spec.agents == 0 || spec.samples == 0 || spec.samples % spec.agents != 0) {
    throw ArgumentError("traffic: sample count must be a positive multiple of the agent count");
  }
  if (!(spec.cost_std >= 0.0) || (spec.demand_std.array() < 0.0).any()) {
    throw ArgumentError("traffic: standard deviations must be nonnegative");
  }
}

}  // namespace

std::vector<TrafficSample> draw_traffic_samples(const TrafficNetworkSpec& spec) {
  check_traffic_spec(spec);
  Rng rng(*spec.seed);
  std::vector<TrafficSample> out(spec.samples);
  for (auto& s : out) {
    s.demand.resize(spec.demand_mean.size());
    for (Eigen::Index j = 0; j < s.demand.size(); ++j) {
      s.demand[j] = rng.normal(spec.demand_mean[j], spec.demand_std[j]);
    }
    s.cost_offset.resize(spec.q.size());
    for (Eigen::Index j = 0; j < s.cost_offset.size(); ++j) {
      s.cost_offset[j] = rng.normal(spec.q[j], spec.cost_std);
    }
  }
  return out;
}

VIConstrainedProblem build_traffic_problem(const TrafficNetworkSpec& spec) {
  const auto samples = draw_traffic_samples(spec);
  const Eigen::Index arcs = spec.C.rows();
  const Eigen::Index dim = arcs + spec.B.rows();
  const Matrix M = traffic_block_matrix(spec.C, spec.B);

  // f(x, xi) = 1^T C h + 1^T q_l.
  Vector cost_gradient = Vector::Zero(dim);
  cost_gradient.head(arcs) = spec.C.transpose() * Vector::Ones(arcs);

  std::vector<ObjectiveOracle> objectives;
  std::vector<MappingOracle> mappings;
  objectives.reserve(samples.size());
  mappings.reserve(samples.size());
  for (const auto& s : samples) {
    objectives.push_back(ObjectiveOracle::from_quadratic(
        {Matrix::Zero(dim, dim), cost_gradient, s.cost_offset.sum()}));
    Vector offset(dim);
    offset << s.cost_offset, -s.demand;
    mappings.push_back(MappingOracle::from_affine({M, offset}));
  }
  ProblemMetadata meta;
  meta.name = "traffic-equilibrium";
  return build_ncp_problem(objectives, mappings, equal_partition(spec.samples, spec.agents),
                           static_cast<std::size_t>(dim), spec.aggregation, meta);
}

// ---------------------------------------------------------------------------
// SVM.

namespace {

void check_svm_spec(const SvmDatasetSpec& spec) {
  if (!spec.seed) throw ArgumentError("svm: a seed is required");
  if (spec.features == 0) throw ArgumentError("svm: feature dimension must be positive");
  if (spec.agents == 0 || spec.samples < spec.agents) {
    throw ArgumentError("svm: need at least one sample per agent");
  }
  if (!(spec.lambda > 0.0)) throw ArgumentError("svm: lambda must be positive");
  if (!(spec.box_radius > 0.0)) throw ArgumentError("svm: box radius must be positive");
}

void check_dataset(const SvmDatasetSpec& spec, const SvmDataset& data) {
  if (static_cast<std::size_t>(data.features.rows()) != spec.samples ||
      static_cast<std::size_t>(data.features.cols()) != spec.features ||
      static_cast<std::size_t>(data.labels.size()) != spec.samples) {
    throw ArgumentError("svm: dataset shape does not match the spec");
  }
}

std::size_t svm_dim(const SvmDatasetSpec& spec) { return spec.features + 1 + spec.samples; }

/// Row a with a^T x = -v_j (w^T u_j + b) - z_j, so g_j(x) = 1 + a^T x.
Vector margin_row(const SvmDatasetSpec& spec, const SvmDataset& data, std::size_t j) {
  const auto n = static_cast<Eigen::Index>(spec.features);
  const auto jj = static_cast<Eigen::Index>(j);
  Vector a = Vector::Zero(static_cast<Eigen::Index>(svm_dim(spec)));
  a.head(n) = -data.labels[jj] * data.features.row(jj).transpose();
  a[n] = -data.labels[jj];
  a[n + 1 + jj] = -1.0;
  return a;
}

Vector slack_row(const SvmDatasetSpec& spec, std::size_t j) {
  Vector a = Vector::Zero(static_cast<Eigen::Index>(svm_dim(spec)));
  a[static_cast<Eigen::Index>(spec.features + 1 + j)] = -1.0;
  return a;
}

}  // namespace

SvmDataset generate_synthetic_svm_data(const SvmDatasetSpec& spec) {
  check_svm_spec(spec);
  Rng rng(*spec.seed);
  const auto n = static_cast<Eigen::Index>(spec.features);
  const auto count = static_cast<Eigen::Index>(spec.samples);
  const double shift = spec.separation / std::sqrt(static_cast<double>(n));
  SvmDataset data{Matrix(count, n), Vector(count)};
  for (Eigen::Index j = 0; j < count; ++j) {
    const double label = rng.uniform01() < 0.5 ? 1.0 : -1.0;
    data.labels[j] = label;
    for (Eigen::Index c = 0; c < n; ++c) data.features(j, c) = rng.normal(0.0, 1.0) + label * shift;
  }
  return data;
}

std::vector<ConstraintBlock> svm_constraint_blocks(const SvmDatasetSpec& spec, const SvmDataset& data) {
  check_svm_spec(spec);
  check_dataset(spec, data);
  std::vector<ConstraintBlock> blocks;
  for (const auto& cell : equal_partition(spec.samples, spec.agents)) {
    ConstraintBlock block;
    for (std::size_t j : cell) {
      block.inequalities.push_back(Inequality::linear(margin_row(spec, data, j), -1.0));
      block.inequalities.push_back(Inequality::linear(slack_row(spec, j), 0.0));
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

VIConstrainedProblem build_svm_problem(const SvmDatasetSpec& spec, const SvmDataset& data) {
  auto blocks = svm_constraint_blocks(spec, data);
  const auto dim = static_cast<Eigen::Index>(svm_dim(spec));
  const auto n = static_cast<Eigen::Index>(spec.features);
  const auto cells = equal_partition(spec.samples, spec.agents);
  const double md = static_cast<double>(spec.agents);

  std::vector<AgentOracle> agents;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    QuadraticObjective f{Matrix::Zero(dim, dim), Vector::Zero(dim), 0.0};
    f.Q.topLeftCorner(n, n).diagonal().setConstant(1.0 / md);
    for (std::size_t j : cells[i]) f.c[n + 1 + static_cast<Eigen::Index>(j)] = 1.0 / spec.lambda;
    agents.push_back(build_penalty_agent(std::move(blocks[i]), ObjectiveOracle::from_quadratic(std::move(f)),
                                         static_cast<std::size_t>(dim)));
  }
  ProblemMetadata meta;
  meta.name = "soft-margin-svm";
  return VIConstrainedProblem(std::move(agents),
                              SetSpec::uniform_box(static_cast<std::size_t>(dim), -spec.box_radius,
                                                   spec.box_radius),
                              meta);
}

double svm_constraint_residual(const std::vector<ConstraintBlock>& blocks, const Vector& x) {
  double total = 0.0;
  for (const auto& b : blocks) total += constraint_residual(b, x);
  return total;
}

SetSpec svm_feasible_set(const SvmDatasetSpec& spec, const SvmDataset& data) {
  check_svm_spec(spec);
  check_dataset(spec, data);
  const auto dim = static_cast<Eigen::Index>(svm_dim(spec));
  std::vector<Halfspace> halfspaces;
  for (std::size_t j = 0; j < spec.samples; ++j) {
    halfspaces.push_back({margin_row(spec, data, j), -1.0});
    halfspaces.push_back({slack_row(spec, j), 0.0});
  }
  // w = 0, b = 0, z = 1 meets every margin constraint with equality.
  Vector witness = Vector::Zero(dim);
  witness.tail(static_cast<Eigen::Index>(spec.samples)).setOnes();
  Box bounds{Vector::Constant(dim, -spec.box_radius), Vector::Constant(dim, spec.box_radius)};
  return SetSpec::polyhedron(std::move(halfspaces), std::move(bounds), std::move(witness));
}

// ---------------------------------------------------------------------------
// Config parsing.

namespace {

class ConfigReader {
 public:
  ConfigReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigurationError("config " + (path_.empty() ? std::string("<root>") : path_) + ": " + what);
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) fail("missing key '" + key + "'");
    return node_.at(key);
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    return v.get<double>();
  }
  double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::uint64_t unsigned_int(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_unsigned()) fail("'" + key + "' must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t unsigned_or(const std::string& key, std::uint64_t fallback) {
    return has(key) ? unsigned_int(key) : fallback;
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }

  ConfigReader child(const std::string& key) {
    return ConfigReader(at(key), path_.empty() ? key : path_ + "." + key);
  }

  /// Call once every expected key has been read.
  void finish() const {
    for (const auto& item : node_.items()) {
      if (!seen_.count(item.key())) fail("unknown key '" + item.key() + "'");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

ProblemSelector parse_problem(ConfigReader r) {
  const std::string kind = r.string("kind");
  ProblemSelector out;
  if (kind == "traffic") {
    auto spec = TrafficNetworkSpec::standard();
    spec.samples = r.unsigned_or("samples", spec.samples);
    spec.agents = r.unsigned_or("agents", spec.agents);
    spec.cost_std = r.number_or("cost_std", spec.cost_std);
    spec.seed = r.unsigned_int("seed");
    if (r.has("aggregation")) {
      const std::string a = r.string("aggregation");
      if (a == "cell-mean") spec.aggregation = SampleAggregation::CellMean;
      else if (a == "sum") spec.aggregation = SampleAggregation::Sum;
      else r.fail("aggregation must be 'cell-mean' or 'sum'");
    }
    out = spec;
  } else if (kind == "svm") {
    SvmDatasetSpec spec;
    spec.features = r.unsigned_or("features", spec.features);
    spec.samples = r.unsigned_or("samples", spec.samples);
    spec.agents = r.unsigned_or("agents", spec.agents);
    spec.lambda = r.number_or("lambda", spec.lambda);
    spec.separation = r.number_or("separation", spec.separation);
    spec.box_radius = r.number_or("box_radius", spec.box_radius);
    spec.seed = r.unsigned_int("seed");
    out = spec;
  } else if (kind == "custom") {
    out = CustomProblemSpec{r.string("path")};
  } else {
    r.fail("problem kind must be 'traffic', 'svm' or 'custom'");
  }
  r.finish();
  return out;
}

Schedule parse_schedule(ConfigReader r) {
  const std::string kind = r.string("kind");
  std::optional<Schedule> out;
  if (kind == "rate") {
    out = RateSchedule{r.number("gamma0"), r.number("eta0"), r.number("b")};
  } else if (kind == "tikhonov") {
    out = TikhonovSchedule{r.number("gamma"), r.number("eta"), r.number("a"), r.number("b"),
                           r.number("Gamma")};
  } else {
    r.fail("schedule kind must be 'rate' or 'tikhonov'");
  }
  r.finish();
  out->validate();
  return *out;
}

const char* solver_name(SolverKind k) {
  switch (k) {
    case SolverKind::PairIG: return "pair-ig";
    case SolverKind::ProjectedIG: return "projected-ig";
    case SolverKind::ProximalIAG: return "proximal-iag";
    case SolverKind::SAGA: return "saga";
  }
  return "?";
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("config: invalid JSON: ") + e.what());
  }
  ConfigReader r(doc, "");
  if (r.string("schema") != kConfigSchema) {
    r.fail(std::string("schema must be '") + kConfigSchema + "'");
  }
  ExperimentConfig config;
  config.problem = parse_problem(r.child("problem"));

  {
    ConfigReader s = r.child("solver");
    const std::string kind = s.string("kind");
    if (kind == "pair-ig") config.solver = SolverKind::PairIG;
    else if (kind == "projected-ig") config.solver = SolverKind::ProjectedIG;
    else if (kind == "proximal-iag") config.solver = SolverKind::ProximalIAG;
    else if (kind == "saga") config.solver = SolverKind::SAGA;
    else s.fail("solver kind must be one of pair-ig, projected-ig, proximal-iag, saga");
    if (s.has("step_rule")) {
      const std::string rule = s.string("step_rule");
      if (rule == "constant") config.step_rule = StepRule::Constant;
      else if (rule == "diminishing") config.step_rule = StepRule::Diminishing;
      else s.fail("step_rule must be 'constant' or 'diminishing'");
    }
    s.finish();
  }

  config.schedule = parse_schedule(r.child("schedule"));
  config.r = r.number_or("r", 0.0);
  if (!(config.r >= 0.0 && config.r < 1.0)) r.fail("r must lie in [0, 1)");
  config.epochs = r.unsigned_int("epochs");
  config.seed = r.unsigned_or("seed", config.seed);
  if (r.has("output")) config.output = r.string("output");
  if (r.has("instrumentation")) {
    const std::string level = r.string("instrumentation");
    if (level == "metrics-only") config.instrumentation = Instrumentation::MetricsOnly;
    else if (level == "full-invariants") config.instrumentation = Instrumentation::FullInvariants;
    else r.fail("instrumentation must be 'metrics-only' or 'full-invariants'");
  }
  if (r.has("log")) {
    ConfigReader l = r.child("log");
    config.stride.dense_until = l.unsigned_or("dense_until", config.stride.dense_until);
    config.stride.ratio = l.number_or("ratio", config.stride.ratio);
    if (!(config.stride.ratio >= 1.0)) l.fail("ratio must be at least 1");
    l.finish();
  }
  r.finish();

  if (config.solver != SolverKind::PairIG && !config.schedule.get_if<RateSchedule>()) {
    throw ConfigurationError("config: baseline solvers take their step from a rate schedule");
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("config: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto config = parse_config(buffer.str());
  // Relative problem files are looked up next to the config file.
  if (auto* custom = std::get_if<CustomProblemSpec>(&config.problem); custom && custom->path.is_relative()) {
    custom->path = path.parent_path() / custom->path;
  }
  return config;
}

std::string config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["schema"] = kConfigSchema;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TrafficNetworkSpec>) {
          doc["problem"] = {{"kind", "traffic"},
                            {"samples", p.samples},
                            {"agents", p.agents},
                            {"cost_std", p.cost_std},
                            {"seed", p.seed.value_or(0)},
                            {"aggregation",
                             p.aggregation == SampleAggregation::CellMean ? "cell-mean" : "sum"}};
        } else if constexpr (std::is_same_v<T, SvmDatasetSpec>) {
          doc["problem"] = {{"kind", "svm"},          {"features", p.features},
                            {"samples", p.samples},   {"agents", p.agents},
                            {"lambda", p.lambda},     {"separation", p.separation},
                            {"box_radius", p.box_radius}, {"seed", p.seed.value_or(0)}};
        } else {
          doc["problem"] = {{"kind", "custom"}, {"path", p.path.string()}};
        }
      },
      config.problem);
  doc["solver"] = {{"kind", solver_name(config.solver)},
                   {"step_rule", config.step_rule == StepRule::Constant ? "constant" : "diminishing"}};
  if (const auto* s = config.schedule.get_if<RateSchedule>()) {
    doc["schedule"] = {{"kind", "rate"}, {"gamma0", s->gamma0}, {"eta0", s->eta0}, {"b", s->b}};
  } else {
    const auto& t = *config.schedule.get_if<TikhonovSchedule>();
    doc["schedule"] = {{"kind", "tikhonov"}, {"gamma", t.gamma}, {"eta", t.eta},
                       {"a", t.a},           {"b", t.b},         {"Gamma", t.Gamma}};
  }
  doc["r"] = config.r;
  doc["epochs"] = config.epochs;
  doc["seed"] = config.seed;
  doc["output"] = config.output.string();
  doc["instrumentation"] =
      config.instrumentation == Instrumentation::FullInvariants ? "full-invariants" : "metrics-only";
  doc["log"] = {{"dense_until", config.stride.dense_until}, {"ratio", config.stride.ratio}};
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Custom problems.

namespace {

Vector to_vector(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigurationError("custom problem: " + what + " must be an array");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!v[j].is_number()) throw ConfigurationError("custom problem: " + what + " must hold numbers");
    out[static_cast<Eigen::Index>(j)] = v[j].get<double>();
  }
  return out;
}

Matrix to_matrix(const json& v, const std::string& what, Eigen::Index n) {
  if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != n) {
    throw ConfigurationError("custom problem: " + what + " must have " + std::to_string(n) + " rows");
  }
  Matrix out(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Vector row = to_vector(v[static_cast<std::size_t>(r)], what);
    if (row.size() != n) throw ConfigurationError("custom problem: " + what + " must be square");
    out.row(r) = row.transpose();
  }
  return out;
}

}  // namespace

VIConstrainedProblem load_custom_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("custom problem: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("custom problem: invalid JSON: ") + e.what());
  }
  ConfigReader r(doc, "custom");
  ConfigReader set = r.child("set");
  const Vector lower = to_vector(set.at("lower"), "set.lower");
  const Vector upper = to_vector(set.at("upper"), "set.upper");
  set.finish();
  const Eigen::Index n = lower.size();
  const json& agents_json = r.at("agents");
  if (!agents_json.is_array() || agents_json.empty()) r.fail("'agents' must be a nonempty array");
  std::vector<AgentOracle> agents;
  for (std::size_t i = 0; i < agents_json.size(); ++i) {
    ConfigReader a(agents_json[i], "custom.agents[" + std::to_string(i) + "]");
    QuadraticObjective f{a.has("Q") ? to_matrix(a.at("Q"), "Q", n) : Matrix::Zero(n, n),
                         a.has("c") ? to_vector(a.at("c"), "c") : Vector::Zero(n), 0.0};
    AffineMap F{a.has("M") ? to_matrix(a.at("M"), "M", n) : Matrix::Zero(n, n),
                a.has("q") ? to_vector(a.at("q"), "q") : Vector::Zero(n)};
    a.finish();
    if (f.c.size() != n || F.q.size() != n) a.fail("vector length differs from the set dimension");
    agents.push_back(AgentOracle::affine(std::move(f), std::move(F)));
  }
  ProblemMetadata meta;
  if (r.has("mu_min")) meta.strong_convexity_modulus = r.number("mu_min");
  if (r.has("name")) meta.name = r.string("name");
  r.finish();
  return VIConstrainedProblem(std::move(agents), SetSpec::box(lower, upper), meta);
}

// ---------------------------------------------------------------------------
// Orchestration.

BuiltProblem build_problem(const ExperimentConfig& config) {
  if (const auto* t = std::get_if<TrafficNetworkSpec>(&config.problem)) {
    auto problem = build_traffic_problem(*t);
    auto infeasibility = [problem](const Vector& x) {
      return ncp_infeasibility_phi(x, eval_global_mapping(problem, x));
    };
    return {std::move(problem), {}, std::nullopt, infeasibility, "ncp-phi"};
  }
  if (const auto* s = std::get_if<SvmDatasetSpec>(&config.problem)) {
    auto data = generate_synthetic_svm_data(*s);
    auto blocks = svm_constraint_blocks(*s, data);
    auto problem = build_svm_problem(*s, data);
    auto infeasibility = [blocks](const Vector& x) { return svm_constraint_residual(blocks, x); };
    return {std::move(problem), std::move(blocks), std::move(data), infeasibility, "constraint-residual"};
  }
  const auto& c = std::get<CustomProblemSpec>(config.problem);
  auto problem = load_custom_problem(c.path);
  auto infeasibility = [problem](const Vector& x) {
    return dual_gap(problem, x, GapMode::AffineExact).value;
  };
  return {std::move(problem), {}, std::nullopt, infeasibility, "dual-gap"};
}

namespace {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << kTraceHeader << '\n';
  for (const auto& rec : trace.records) {
    for (std::size_t i = 0; i < rec.objective.size(); ++i) {
      out << rec.epoch << ',' << (i + 1) << ',' << format_number(rec.gamma) << ','
          << format_number(rec.eta) << ',' << format_number(rec.objective[i]) << ','
          << format_number(rec.infeasibility[i]) << ',' << format_number(rec.consensus_dist[i]) << ','
          << format_number(rec.invariant_max_residual) << '\n';
    }
  }
}

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  config.schedule.validate();
  BuiltProblem built = build_problem(config);
  const VIConstrainedProblem& problem = built.problem;
  const auto n = static_cast<Eigen::Index>(problem.dim());

  json sidecar;
  sidecar["config"] = json::parse(config_to_json(config));
  sidecar["problem"] = {{"name", problem.metadata().name},
                        {"dim", problem.dim()},
                        {"agents", problem.agent_count()},
                        {"infeasibility_metric", built.infeasibility_name}};
  if (const auto* s = std::get_if<SvmDatasetSpec>(&config.problem)) {
    sidecar["problem"]["box_radius"] = s->box_radius;
  }

  // Sampled validation of convexity and monotonicity.
  ValidationOptions vopt;
  vopt.sample_count = 50;
  vopt.seed = config.seed;
  if (!problem.set().is_bounded()) {
    vopt.sampling_box = Box{Vector::Zero(n), Vector::Constant(n, 1000.0)};
  }
  const auto validation = validate_problem(problem, vopt);
  sidecar["validation"] = {{"passed", validation.passed()},
                           {"pairs_checked", validation.pairs_checked},
                           {"issues", validation.issues.size()}};
  if (!validation.passed()) {
    const auto& issue = validation.issues.front();
    throw ConfigurationError(std::string("validation failed: ") + to_string(issue.kind) +
                             " at agent " + std::to_string(issue.agent) + " (" + issue.detail + ")");
  }

  std::optional<ConstantsEstimate> constants;
  if (problem.set().is_bounded()) {
    constants = estimate_constants(problem);
    sidecar["constants"] = {{"C_f", constants->C_f}, {"C_F", constants->C_F},
                            {"M_X", constants->M_X}, {"M_f", constants->M_f},
                            {"method", to_string(constants->method)},
                            {"sample_count", constants->sample_count}};
  } else {
    sidecar["constants"] = nullptr;
    sidecar["constants_note"] = "set is unbounded; the bound constants are undefined";
  }

  const bool full = config.instrumentation == Instrumentation::FullInvariants;
  if (full && !constants) {
    throw ConfigurationError("full-invariants instrumentation needs a compact set");
  }

  ExperimentOutcome outcome;
  const Vector x0 = project(problem.set(), Vector::Zero(n));
  try {
    if (config.solver == SolverKind::PairIG) {
      RunOptions options;
      options.epochs = config.epochs;
      options.r = config.r;
      options.x0 = x0;
      options.stride = config.stride;
      options.infeasibility = built.infeasibility;
      if (full) {
        options.invariants = InvariantConstants{constants->C_f, constants->C_F};
        Rng rng(config.seed);
        for (int p = 0; p < 10; ++p) options.probe_points.push_back(sample_point(problem.set(), rng));
        options.record_averages = problem.affine_mapping().has_value();
      }
      auto result = run(problem, config.schedule, options);
      outcome.trace = std::move(result.trace);
    } else {
      const auto& rate = *config.schedule.get_if<RateSchedule>();
      BaselineConfig bc;
      bc.method = config.solver == SolverKind::ProjectedIG   ? BaselineMethod::ProjectedIG
                  : config.solver == SolverKind::ProximalIAG ? BaselineMethod::ProximalIAG
                                                             : BaselineMethod::SAGA;
      bc.rule = config.step_rule;
      bc.step = rate.gamma0;
      bc.epochs = config.epochs;
      bc.seed = config.seed;
      bc.stride = config.stride;
      bc.infeasibility = built.infeasibility;
      SetSpec set = problem.set();
      if (const auto* s = std::get_if<SvmDatasetSpec>(&config.problem)) {
        set = svm_feasible_set(*s, *built.svm_data);
        const DykstraOptions dykstra;
        sidecar["projection"] = {{"method", "dykstra"},
                                 {"max_sweeps", dykstra.max_sweeps},
                                 {"tol", dykstra.tol}};
      }
      bc.x0 = project(set, x0);
      auto result = run_baseline(problem, set, bc);
      outcome.trace = std::move(result.trace);
    }
  } catch (const TruncatedRunError& e) {
    outcome.trace = e.partial();
    outcome.truncated = true;
    outcome.message = e.what();
  }

  // Invariant outcomes and bounds.
  if (full && outcome.trace.invariants) {
    const auto& inv = *outcome.trace.invariants;
    const bool neighbor_ok = inv.neighbor_a <= 1e-9 && inv.neighbor_b <= 1e-9;
    const bool pseudo_ok = inv.pseudo_bound <= 1e-8;
    sidecar["invariants"] = {{"neighbor_a_max_residual", number_or_null(inv.neighbor_a)},
                             {"neighbor_b_max_residual", number_or_null(inv.neighbor_b)},
                             {"pseudo_bound_max_residual", number_or_null(inv.pseudo_bound)},
                             {"checks", inv.checks}};
    outcome.invariants_ok = neighbor_ok && pseudo_ok;
    if (!outcome.trace.records.empty()) {
      const auto consensus =
          check_consensus_bounds(problem, outcome.trace, *constants, config.schedule, config.r);
      sidecar["invariants"]["consensus_violations"] = consensus.violations.size();
      outcome.invariants_ok = outcome.invariants_ok && consensus.passed();
    }
    sidecar["invariants"]["passed"] = outcome.invariants_ok;
  }
  if (constants && config.solver == SolverKind::PairIG && !outcome.trace.records.empty()) {
    if (const auto* rate = config.schedule.get_if<RateSchedule>()) {
      const std::size_t N = outcome.trace.records.back().epoch;
      const std::size_t m = problem.agent_count();
      if (N >= rate_bound_threshold(config.r)) {
        const RateBoundParams p{rate->gamma0, rate->eta0, rate->b, config.r};
        const InitializationTerms init{};
        sidecar["bounds"] = {{"N", N},
                             {"agent", m},
                             {"suboptimality", rate_bound_suboptimality(*constants, p, init, m, m, N)},
                             {"gap", rate_bound_gap(*constants, p, init, m, m, N)},
                             {"constants_method", to_string(constants->method)}};
      }
    }
  }

  outcome.trace_path = config.output;
  outcome.sidecar_path = config.output;
  outcome.sidecar_path += ".json";
  {
    std::ofstream out(outcome.trace_path);
    if (!out) throw ConfigurationError("cannot write trace " + outcome.trace_path.string());
    write_trace_csv(out, outcome.trace);
    if (outcome.truncated) out << "# truncated: " << outcome.message << '\n';
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  sidecar["elapsed_seconds"] = elapsed;
  sidecar["truncated"] = outcome.truncated;
  {
    std::ofstream out(outcome.sidecar_path);
    if (!out) throw ConfigurationError("cannot write sidecar " + outcome.sidecar_path.string());
    out << sidecar.dump(2) << '\n';
  }
  return outcome;
}

}  // namespace pairig
