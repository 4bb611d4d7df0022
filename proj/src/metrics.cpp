#include "pairig/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pairig/errors.hpp"

namespace pairig {

// ---------------------------------------------------------------------------
// Dual gap.

namespace {

/// Maximizes a concave quadratic h over X with FISTA (gradient restart).
/// grad(y) returns grad h(y); value(y) returns h(y).
template <typename Grad, typename Value>
std::pair<Vector, std::size_t> maximize_concave(const SetSpec& set, Vector y, double lipschitz,
                                                double tol, std::size_t max_iters, Grad grad,
                                                Value value) {
  const double step = 1.0 / lipschitz;
  Vector z = y;
  double t = 1.0;
  double h_prev = value(y);
  for (std::size_t it = 1; it <= max_iters; ++it) {
    const Vector y_next = project(set, z + step * grad(z));
    const double h_next = value(y_next);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (h_next < h_prev) {
      // Restart from the last monotone point.
      z = y;
      t = 1.0;
      continue;
    }
    z = y_next + ((t - 1.0) / t_next) * (y_next - y);
    const double mapping = (project(set, y_next + step * grad(y_next)) - y_next).norm() / step;
    y = y_next;
    h_prev = h_next;
    t = t_next;
    if (mapping <= tol) return {y, it};
  }
  return {y, max_iters};
}

GapResult sampled_gap(const VIConstrainedProblem& problem, const Vector& x, const GapOptions& opt) {
  const SetSpec& set = problem.set();
  Rng rng(opt.seed);
  auto h = [&](const Vector& y) { return eval_global_mapping(problem, y).dot(x - y); };

  GapResult result;
  result.lower_bound = true;
  result.value = 0.0;  // y = x
  if (set.is_bounded()) {
    for (std::size_t s = 0; s < opt.budget; ++s) result.value = std::max(result.value, h(sample_point(set, rng)));
    result.iterations = opt.budget;
    return result;
  }
  constexpr int kRadii = 5;
  const std::size_t per_radius = std::max<std::size_t>(1, opt.budget / kRadii);
  std::vector<double> maxima;
  const auto n = x.size();
  for (int j = 0; j < kRadii; ++j) {
    const double radius = (1.0 + x.norm()) * std::pow(10.0, j);
    const Box box{x.array() - radius, x.array() + radius};
    double best = 0.0;
    for (std::size_t s = 0; s < per_radius; ++s) {
      Vector y(n);
      for (Eigen::Index c = 0; c < n; ++c) y[c] = rng.uniform(box.lower[c], box.upper[c]);
      best = std::max(best, h(project(set, y)));
    }
    maxima.push_back(best);
    result.value = std::max(result.value, best);
  }
  result.iterations = per_radius * kRadii;
  const double last = maxima[kRadii - 1];
  const double prev = maxima[kRadii - 2];
  if (last > 0.0 && last >= 5.0 * prev) {
    result.unbounded = true;
    result.value = std::numeric_limits<double>::infinity();
  }
  return result;
}

}  // namespace

GapResult dual_gap(const VIConstrainedProblem& problem, const Vector& x, GapMode mode,
                   const GapOptions& options) {
  if (static_cast<std::size_t>(x.size()) != problem.dim()) {
    throw ArgumentError("dual_gap: dimension mismatch");
  }
  if (mode == GapMode::Sampled) return sampled_gap(problem, x, options);

  const auto affine = problem.affine_mapping();
  if (!affine) throw ArgumentError("dual_gap: affine-exact mode needs an affine mapping");
  if (!problem.set().is_bounded()) {
    throw ArgumentError("dual_gap: affine-exact mode needs a compact set");
  }
  const Matrix& M = affine->M;
  const Vector& q = affine->q;
  const Matrix H = M + M.transpose();
  double L = H.size() == 0 ? 0.0 : Eigen::JacobiSVD<Matrix>(H).singularValues()(0);
  L = std::max(L, 1e-6 * (1.0 + M.norm()));

  auto grad = [&](const Vector& y) -> Vector { return M.transpose() * (x - y) - (M * y + q); };
  auto value = [&](const Vector& y) { return (M * y + q).dot(x - y); };
  const std::size_t cap = std::max<std::size_t>(1, options.budget) * 1000;
  auto [y, iters] = maximize_concave(problem.set(), x, L, options.tol, cap, grad, value);
  GapResult result;
  result.value = std::max(0.0, value(y));
  result.iterations = iters;
  return result;
}

double ncp_infeasibility_phi(const Vector& x, const Vector& Fx) {
  if (x.size() != Fx.size()) throw ArgumentError("ncp_infeasibility_phi: dimension mismatch");
  return (-x).cwiseMax(0.0).squaredNorm() + (-Fx).cwiseMax(0.0).squaredNorm() +
         std::abs(x.dot(Fx));
}

// ---------------------------------------------------------------------------
// Constants.

std::string to_string(EstimateMethod method) {
  return method == EstimateMethod::Exact ? "exact" : "sampled";
}

namespace {

double spectral_norm(const Matrix& A) {
  return A.size() == 0 ? 0.0 : Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
}

/// min over the box of a convex quadratic, by FISTA on -f.
double quadratic_min_on_box(const QuadraticObjective& f, const Box& box) {
  const SetSpec set = SetSpec::box(box.lower, box.upper);
  const double L = std::max(spectral_norm(f.Q), 1e-12);
  auto grad = [&](const Vector& y) -> Vector { return -f.gradient(y); };
  auto value = [&](const Vector& y) { return -f.value(y); };
  const Vector start = 0.5 * (box.lower + box.upper);
  auto [y, iters] = maximize_concave(set, start, L, 1e-12, 1'000'000, grad, value);
  (void)iters;
  return f.value(y);
}

bool is_psd(const Matrix& Q) {
  if (Q.size() == 0) return true;
  const Matrix S = 0.5 * (Q + Q.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  return eig.eigenvalues().minCoeff() >= -1e-12 * (1.0 + S.norm());
}

std::optional<ConstantsEstimate> exact_constants(const VIConstrainedProblem& problem) {
  const std::size_t m = problem.agent_count();
  const auto md = static_cast<double>(m);
  for (const auto& a : problem.agents()) {
    if (!a.mapping.affine || !a.objective.quadratic) return std::nullopt;
  }
  const auto quad = problem.quadratic_objective();
  ConstantsEstimate c;
  c.method = EstimateMethod::Exact;

  if (const auto* box = problem.set().get_if<Box>()) {
    if (problem.dim() > 20 || !is_psd(quad->Q)) return std::nullopt;
    const auto vertices = box_vertices(*box);
    double maxF = 0.0;
    double maxg = 0.0;
    double maxf = -std::numeric_limits<double>::infinity();
    for (const auto& v : vertices) {
      for (const auto& a : problem.agents()) {
        maxF = std::max(maxF, a.mapping.affine->apply(v).norm());
        maxg = std::max(maxg, a.objective.quadratic->gradient(v).norm());
      }
      maxf = std::max(maxf, quad->value(v));
    }
    const double minf = quadratic_min_on_box(*quad, *box);
    c.C_F = md * maxF;
    c.C_f = md * maxg;
    c.M_X = diameter_bound(problem.set()).value;
    c.M_f = std::max(std::abs(maxf), std::abs(minf));
    c.sample_count = vertices.size();
    return c;
  }
  if (const auto* ball = problem.set().get_if<Ball>()) {
    double maxF = 0.0;
    double maxg = 0.0;
    for (const auto& a : problem.agents()) {
      const auto& F = *a.mapping.affine;
      const auto& f = *a.objective.quadratic;
      maxF = std::max(maxF, F.apply(ball->center).norm() + spectral_norm(F.M) * ball->radius);
      maxg = std::max(maxg, f.gradient(ball->center).norm() + spectral_norm(f.Q) * ball->radius);
    }
    c.C_F = md * maxF;
    c.C_f = md * maxg;
    c.M_X = diameter_bound(problem.set()).value;
    c.M_f = std::abs(quad->value(ball->center)) + quad->gradient(ball->center).norm() * ball->radius +
            0.5 * spectral_norm(quad->Q) * ball->radius * ball->radius;
    return c;
  }
  return std::nullopt;
}

}  // namespace

ConstantsEstimate estimate_constants(const VIConstrainedProblem& problem,
                                     const ConstantsOptions& options) {
  const SetSpec& set = problem.set();
  if (!set.is_bounded() && !options.sampling_box) {
    throw ArgumentError("estimate_constants: unbounded set needs a sampling box");
  }
  if (set.is_bounded()) {
    if (auto exact = exact_constants(problem)) return *exact;
  }

  const std::size_t m = problem.agent_count();
  const auto md = static_cast<double>(m);
  Rng rng(options.seed);
  double maxF = 0.0;
  double maxg = 0.0;
  double maxx = 0.0;
  double maxf = 0.0;
  for (std::size_t s = 0; s < options.budget; ++s) {
    const Vector x = sample_point(set, rng, options.sampling_box);
    for (const auto& a : problem.agents()) {
      maxF = std::max(maxF, a.F(x).norm());
      maxg = std::max(maxg, a.subgradient(x).norm());
    }
    maxx = std::max(maxx, x.norm());
    maxf = std::max(maxf, std::abs(eval_global_objective(problem, x)));
  }
  ConstantsEstimate c;
  c.method = EstimateMethod::Sampled;
  c.sample_count = options.budget;
  c.C_F = options.safety * md * maxF;
  c.C_f = options.safety * md * maxg;
  c.M_X = set.is_bounded() ? diameter_bound(set).value : options.safety * maxx;
  c.M_f = options.safety * maxf;
  return c;
}

// ---------------------------------------------------------------------------
// Rate bounds.

std::size_t rate_bound_threshold(double r) {
  return static_cast<std::size_t>(std::ceil(std::pow(2.0, 2.0 / (1.0 - r)) - 1.0 - 1e-12));
}

namespace {

void check_rate_args(const RateBoundParams& p, std::size_t m, std::size_t i, std::size_t N) {
  if (!(p.b > 0.0 && p.b < 0.5)) throw ArgumentError("rate bound: b must lie in (0, 0.5)");
  if (!(p.r >= 0.0 && p.r < 1.0)) throw ArgumentError("rate bound: r must lie in [0, 1)");
  if (!(p.gamma0 > 0.0) || !(p.eta0 > 0.0)) {
    throw ArgumentError("rate bound: gamma0 and eta0 must be positive");
  }
  if (m == 0 || i < 1 || i > m) throw ArgumentError("rate bound: agent index outside [1, m]");
  const std::size_t threshold = rate_bound_threshold(p.r);
  if (N < threshold) {
    std::ostringstream msg;
    msg << "rate bound: N = " << N << " is below the validity threshold 2^(2/(1-r)) - 1 = "
        << threshold;
    throw PreconditionError(msg.str());
  }
}

}  // namespace

double rate_bound_suboptimality(const ConstantsEstimate& c, const RateBoundParams& p,
                                const InitializationTerms& init, std::size_t m, std::size_t i,
                                std::size_t N) {
  check_rate_args(p, m, i, N);
  const double lead = c.C_F + p.eta0 * c.C_f;
  const double md = static_cast<double>(m);
  const double bracket = 2.0 * c.M_X * c.M_X / (p.eta0 * p.gamma0) +
                         p.gamma0 * lead * lead / (p.eta0 * (1.0 - p.r + 2.0 * p.b)) +
                         init.f_init_diff + c.C_f * init.dist_i_m +
                         2.0 * static_cast<double>(m - i) * p.gamma0 * c.C_f * lead / (md * (1.0 - p.r));
  return (2.0 - p.r) / std::pow(static_cast<double>(N) + 1.0, 0.5 - p.b) * bracket;
}

double rate_bound_gap(const ConstantsEstimate& c, const RateBoundParams& p,
                      const InitializationTerms& init, std::size_t m, std::size_t i, std::size_t N) {
  check_rate_args(p, m, i, N);
  const double lead = c.C_F + p.eta0 * c.C_f;
  const double md = static_cast<double>(m);
  const double bracket = 2.0 * c.M_X * c.M_X / p.gamma0 +
                         2.0 * c.M_f * p.eta0 / (1.0 - 0.5 * p.r - p.b) + c.C_F * init.dist_m_x0 +
                         c.C_F * init.dist_i_m + lead * lead * p.gamma0 / (1.0 - p.r) +
                         2.0 * static_cast<double>(m - i) * c.C_F * lead * p.gamma0 / (md * (1.0 - p.r));
  return (2.0 - p.r) / std::pow(static_cast<double>(N) + 1.0, p.b) * bracket;
}

std::uint64_t iteration_complexity(double C_f, double C_F, double eps) {
  if (!(eps > 0.0)) throw ArgumentError("iteration_complexity: eps must be positive");
  if (!(C_f >= 0.0) || !(C_F >= 0.0) || !(C_f + C_F > 0.0)) {
    throw ArgumentError("iteration_complexity: constants must be nonnegative and not both zero");
  }
  const double n = std::pow(30.0 * (C_f + C_F) / eps, 4.0) - 1.0;
  if (n >= 1.8e19) throw ArgumentError("iteration_complexity: result exceeds 64 bits");
  const auto threshold = static_cast<std::uint64_t>(rate_bound_threshold(0.0));
  return std::max(threshold, static_cast<std::uint64_t>(std::ceil(n)));
}

// ---------------------------------------------------------------------------
// Tikhonov analysis.

double TikhonovBoundParams::B0() const {
  const auto& s = schedule;
  const double eta0 = s.eta / std::pow(s.Gamma, s.b);
  const double md = static_cast<double>(m);
  const double lead = C_F + eta0 * C_f;
  return 1.5 * C_f * C_f /
             (md * md * std::pow(mu_min, 3) * std::pow(s.gamma, 3) * s.eta *
              std::pow(s.Gamma, 2.0 - 3.0 * s.a - s.b)) +
         lead * lead;
}

double TikhonovBoundParams::tau() const {
  const auto& s = schedule;
  return std::max(mu_min * s.eta / s.gamma / B0() * std::pow(s.Gamma, s.a - s.b) *
                      initial_distance * initial_distance,
                  2.0);
}

double tikhonov_bound(const TikhonovBoundParams& params, std::size_t k, std::size_t i) {
  Schedule(params.schedule).validate();
  const auto& s = params.schedule;
  if (!(params.mu_min > 0.0)) throw ConfigurationError("tikhonov_bound: mu_min must be positive");
  if (params.m == 0 || i < 1 || i > params.m) {
    throw ArgumentError("tikhonov_bound: agent index outside [1, m]");
  }
  const double gem = s.gamma * s.eta * params.mu_min;
  if (std::pow(s.Gamma, s.a + s.b) < 2.0 * gem || std::pow(s.Gamma, 1.0 - s.a - s.b) < 4.0 / gem) {
    throw ConfigurationError("tikhonov_bound: Gamma too small for gamma, eta and mu_min");
  }
  const double kk = static_cast<double>(k);
  const double md = static_cast<double>(params.m);
  const double eta0 = s.eta / std::pow(s.Gamma, s.b);
  const double lead = params.C_F + eta0 * params.C_f;
  const double im1 = static_cast<double>(i - 1);
  const double first = 2.0 * im1 * im1 * lead * lead * s.gamma * s.gamma /
                       (md * md * std::pow(kk + s.Gamma + 1.0, 2.0 * s.a));
  const double second = 2.0 * params.tau() * params.B0() * s.gamma /
                        (params.mu_min * s.eta * std::pow(kk + s.Gamma, s.a - s.b));
  return first + second;
}

HarmonicSumBounds harmonic_sum_bounds(double beta, double Gamma, std::size_t K) {
  if (!(beta >= 0.0 && beta < 1.0)) throw ArgumentError("harmonic_sum_bounds: beta outside [0, 1)");
  if (!(Gamma >= 1.0)) throw ArgumentError("harmonic_sum_bounds: Gamma must be at least 1");
  const double threshold = (std::pow(2.0, 1.0 / (1.0 - beta)) - 1.0) * Gamma;
  if (static_cast<double>(K) < threshold - 1e-12) {
    std::ostringstream msg;
    msg << "harmonic_sum_bounds: K = " << K << " is below (2^{1/(1-beta)} - 1) Gamma = " << threshold;
    throw PreconditionError(msg.str());
  }
  CompensatedSum sum;
  for (std::size_t k = 0; k <= K; ++k) sum.add(std::pow(static_cast<double>(k) + Gamma, -beta));
  const double top = std::pow(static_cast<double>(K) + Gamma, 1.0 - beta);
  return {top / (2.0 * (1.0 - beta)), sum.value(), top / (1.0 - beta)};
}

bool ScheduleConditionReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ConditionCheck& c) { return c.passed; });
}

const ConditionCheck* ScheduleConditionReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

class ConditionAccumulator {
 public:
  explicit ConditionAccumulator(std::string name) { check_.name = std::move(name); }

  /// Records rhs - lhs at k; a violation beyond rounding marks the witness.
  void observe(std::size_t k, double lhs, double rhs) {
    const double slack = rhs - lhs;
    check_.worst_slack = std::min(check_.worst_slack, slack);
    const double tol = 1e-12 * (1.0 + std::abs(lhs) + std::abs(rhs));
    if (slack < -tol) {
      check_.passed = false;
      if (!check_.witness_k || k < *check_.witness_k) check_.witness_k = k;
    }
  }

  ConditionCheck take() { return std::move(check_); }

 private:
  ConditionCheck check_{"", true, std::nullopt, std::numeric_limits<double>::infinity()};
};

ConditionCheck closed_form(std::string name, double lhs, double rhs) {
  ConditionAccumulator acc(std::move(name));
  acc.observe(0, lhs, rhs);
  auto c = acc.take();
  c.witness_k.reset();
  return c;
}

std::vector<std::size_t> schedule_grid(const ScheduleCheckOptions& options) {
  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= std::min(options.dense_until, options.max_k); ++k) ks.push_back(k);
  for (double v = static_cast<double>(options.dense_until); v <= static_cast<double>(options.max_k);
       v *= 1.01) {
    ks.push_back(static_cast<std::size_t>(v));
  }
  ks.push_back(options.max_k);
  Rng rng(options.seed);
  for (std::size_t s = 0; s < options.random_samples; ++s) ks.push_back(1 + rng.index(options.max_k));
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

}  // namespace

ScheduleConditionReport check_schedule_conditions(const TikhonovSchedule& s, double mu_min,
                                                  const ScheduleCheckOptions& options) {
  ScheduleConditionReport report;
  const double gem = s.gamma * s.eta * mu_min;
  // Prerequisites, written as lhs <= rhs.
  report.checks.push_back(closed_form("a > b", s.b, s.a - 1e-300));
  report.checks.push_back(closed_form("a + b < 1", s.a + s.b, 1.0 - 1e-300));
  report.checks.push_back(closed_form("3a + b < 2", 3.0 * s.a + s.b, 2.0 - 1e-300));
  report.checks.push_back(closed_form("Gamma >= 1", 1.0, s.Gamma));
  report.checks.push_back(closed_form("Gamma^(a+b) >= 2 gamma eta mu", 2.0 * gem, std::pow(s.Gamma, s.a + s.b)));
  report.checks.push_back(closed_form("Gamma^(1-a-b) >= 4 / (gamma eta mu)", 4.0 / gem,
                                      std::pow(s.Gamma, 1.0 - s.a - s.b)));
  if (s.a == s.b) report.checks[0].passed = false;

  const Schedule schedule(s);
  auto at = [&](std::size_t k) { return schedule_values(schedule, k); };
  const auto ks = schedule_grid(options);

  ConditionAccumulator c1("(i) positive, nonincreasing, gamma_0 eta_0 mu <= 0.5");
  const auto v0 = at(0);
  c1.observe(0, v0.gamma * v0.eta * mu_min, 0.5);
  c1.observe(0, 0.0, std::min(v0.gamma, v0.eta));
  ConditionAccumulator c2("(ii) 1 - eta_k2/eta_k1 <= (k2-k1)/(k2+Gamma)");
  ConditionAccumulator c3("(iii) (1 - eta_k/eta_{k-1})^2 / (gamma_k^3 eta_k) <= 1/(gamma^3 eta Gamma^(2-3a-b))");
  ConditionAccumulator c4("(iv) gamma_{k-1}/eta_{k-1} <= (gamma_k/eta_k)(1 + 0.5 gamma_k eta_k mu)");
  const double c3_rhs = 1.0 / (std::pow(s.gamma, 3) * s.eta * std::pow(s.Gamma, 2.0 - 3.0 * s.a - s.b));
  Rng rng(options.seed + 1);
  for (std::size_t k : ks) {
    const auto cur = at(k);
    const auto prev = at(k - 1);
    c1.observe(k, cur.gamma, prev.gamma);
    c1.observe(k, cur.eta, prev.eta);
    c1.observe(k, 0.0, std::min(cur.gamma, cur.eta));
    const double kk = static_cast<double>(k);
    c2.observe(k, 1.0 - cur.eta / prev.eta, 1.0 / (kk + s.Gamma));
    c2.observe(k, 1.0 - cur.eta / v0.eta, kk / (kk + s.Gamma));
    const std::size_t k1 = rng.index(k + 1);
    c2.observe(k, 1.0 - cur.eta / at(k1).eta, static_cast<double>(k - k1) / (kk + s.Gamma));
    const double ratio = 1.0 - cur.eta / prev.eta;
    c3.observe(k, ratio * ratio / (std::pow(cur.gamma, 3) * cur.eta), c3_rhs);
    c4.observe(k, prev.gamma / prev.eta, (cur.gamma / cur.eta) * (1.0 + 0.5 * cur.gamma * cur.eta * mu_min));
  }
  report.checks.push_back(c1.take());
  report.checks.push_back(c2.take());
  report.checks.push_back(c3.take());
  report.checks.push_back(c4.take());
  return report;
}

// ---------------------------------------------------------------------------
// Consensus bounds.

ConsensusReport check_consensus_bounds(const VIConstrainedProblem& problem, const RunTrace& trace,
                                       const ConstantsEstimate& constants, const Schedule& schedule,
                                       double r, double slack) {
  ConsensusReport report;
  const std::size_t m = problem.agent_count();
  if (trace.records.empty() || trace.averaged0.size() != m) {
    throw ArgumentError("check_consensus_bounds: trace lacks records or initial averages");
  }
  const bool check_gap = problem.affine_mapping().has_value() && problem.set().is_bounded() &&
                         !trace.records.front().averaged.empty();
  const double md = static_cast<double>(m);
  const double eta0 = schedule_values(schedule, 0).eta;
  const double lead = constants.C_F + eta0 * constants.C_f;

  GapOptions gap_options;
  gap_options.tol = 1e-11;
  for (const auto& rec : trace.records) {
    const std::size_t N = rec.epoch;
    const auto lambda = averaging_weights(schedule, r, N);
    CompensatedSum weighted;
    for (std::size_t k = 0; k <= N; ++k) weighted.add(lambda[k] * schedule_values(schedule, k).gamma);
    std::vector<double> gaps;
    if (check_gap) {
      for (const auto& avg : rec.averaged) {
        gaps.push_back(dual_gap(problem, avg, GapMode::AffineExact, gap_options).value);
      }
    }
    for (std::size_t i = 1; i <= m; ++i) {
      const double init = lambda[0] * (trace.averaged0[i - 1] - trace.averaged0[m - 1]).norm();
      const double tail = static_cast<double>(m - i) * lead / md * weighted.value();
      const double lhs_f = rec.objective[i - 1] - rec.objective[m - 1];
      const double rhs_f = constants.C_f * init + constants.C_f * tail;
      const double excess_f = lhs_f - rhs_f;
      report.worst_excess = std::max(report.worst_excess, excess_f);
      ++report.checks;
      if (excess_f > slack) report.violations.push_back({N, i, false, excess_f});
      if (check_gap) {
        const double lhs_g = gaps[i - 1] - gaps[m - 1];
        const double rhs_g = constants.C_F * init + constants.C_F * tail;
        const double excess_g = lhs_g - rhs_g;
        report.worst_excess = std::max(report.worst_excess, excess_g);
        ++report.checks;
        if (excess_g > slack) report.violations.push_back({N, i, true, excess_g});
      }
    }
  }
  return report;
}

}  // namespace pairig
