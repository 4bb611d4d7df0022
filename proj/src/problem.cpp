#include "pairig/problem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "pairig/errors.hpp"

namespace pairig {
namespace {

void require_dim(std::size_t expected, Eigen::Index actual, const char* what) {
  if (static_cast<std::size_t>(actual) != expected) {
    throw ArgumentError(std::string(what) + ": dimension mismatch (expected " +
                        std::to_string(expected) + ", got " + std::to_string(actual) + ")");
  }
}

}  // namespace

ObjectiveOracle ObjectiveOracle::from_quadratic(QuadraticObjective q) {
  if (q.Q.rows() != q.Q.cols() || q.Q.rows() != q.c.size()) {
    throw ArgumentError("quadratic objective: Q must be square and match c");
  }
  ObjectiveOracle out;
  out.value = [q](const Vector& x) { return q.value(x); };
  out.subgradient = [q](const Vector& x) { return q.gradient(x); };
  out.quadratic = std::move(q);
  return out;
}

ObjectiveOracle ObjectiveOracle::zero(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return from_quadratic({Matrix::Zero(n, n), Vector::Zero(n), 0.0});
}

MappingOracle MappingOracle::from_affine(AffineMap map) {
  if (map.M.rows() != map.M.cols() || map.M.rows() != map.q.size()) {
    throw ArgumentError("affine mapping: M must be square and match q");
  }
  MappingOracle out;
  out.apply = [map](const Vector& x) { return map.apply(x); };
  out.affine = std::move(map);
  return out;
}

MappingOracle MappingOracle::zero(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  return from_affine({Matrix::Zero(n, n), Vector::Zero(n)});
}

AgentOracle AgentOracle::affine(QuadraticObjective f, AffineMap F) {
  const auto n = static_cast<std::size_t>(f.c.size());
  require_dim(n, F.q.size(), "affine agent");
  return AgentOracle{n, ObjectiveOracle::from_quadratic(std::move(f)),
                     MappingOracle::from_affine(std::move(F))};
}

VIConstrainedProblem::VIConstrainedProblem(std::vector<AgentOracle> agents, SetSpec set,
                                           ProblemMetadata metadata)
    : agents_(std::move(agents)), set_(std::move(set)), metadata_(std::move(metadata)) {
  if (agents_.empty()) throw ArgumentError("problem: needs at least one agent");
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const auto& a = agents_[i];
    if (a.dim != set_.dim()) {
      throw ArgumentError("problem: agent " + std::to_string(i + 1) +
                          " dimension differs from the set dimension");
    }
    if (!a.objective.value || !a.objective.subgradient || !a.mapping.apply) {
      throw ArgumentError("problem: agent " + std::to_string(i + 1) + " has an empty oracle");
    }
  }
  if (metadata_.known_optimal_point) {
    require_dim(set_.dim(), metadata_.known_optimal_point->size(), "problem metadata x*");
    if (set_.is_bounded() && !contains(set_, *metadata_.known_optimal_point, 1e-8)) {
      throw ArgumentError("problem: known optimal point lies outside the set");
    }
  }
  if (metadata_.strong_convexity_modulus && *metadata_.strong_convexity_modulus < 0.0) {
    throw ArgumentError("problem: strong convexity modulus must be nonnegative");
  }
}

std::optional<AffineMap> VIConstrainedProblem::affine_mapping() const {
  const auto n = static_cast<Eigen::Index>(dim());
  AffineMap sum{Matrix::Zero(n, n), Vector::Zero(n)};
  for (const auto& a : agents_) {
    if (!a.mapping.affine) return std::nullopt;
    sum.M += a.mapping.affine->M;
    sum.q += a.mapping.affine->q;
  }
  return sum;
}

std::optional<QuadraticObjective> VIConstrainedProblem::quadratic_objective() const {
  const auto n = static_cast<Eigen::Index>(dim());
  QuadraticObjective sum{Matrix::Zero(n, n), Vector::Zero(n), 0.0};
  for (const auto& a : agents_) {
    if (!a.objective.quadratic) return std::nullopt;
    sum.Q += a.objective.quadratic->Q;
    sum.c += a.objective.quadratic->c;
    sum.constant += a.objective.quadratic->constant;
  }
  return sum;
}

VIConstrainedProblem VIConstrainedProblem::with_metadata(ProblemMetadata metadata) const {
  return VIConstrainedProblem(agents_, set_, std::move(metadata));
}

double eval_global_objective(const VIConstrainedProblem& problem, const Vector& x) {
  require_dim(problem.dim(), x.size(), "eval_global_objective");
  double sum = 0.0;
  for (const auto& a : problem.agents()) sum += a.f(x);
  return sum;
}

Vector eval_global_mapping(const VIConstrainedProblem& problem, const Vector& x) {
  require_dim(problem.dim(), x.size(), "eval_global_mapping");
  Vector sum = Vector::Zero(x.size());
  for (const auto& a : problem.agents()) sum += a.F(x);
  return sum;
}

Vector eval_global_subgradient(const VIConstrainedProblem& problem, const Vector& x) {
  require_dim(problem.dim(), x.size(), "eval_global_subgradient");
  Vector sum = Vector::Zero(x.size());
  for (const auto& a : problem.agents()) sum += a.subgradient(x);
  return sum;
}

// ---------------------------------------------------------------------------

Inequality Inequality::linear(Vector a, double c) {
  Inequality out;
  out.g = [a, c](const Vector& x) { return a.dot(x) - c; };
  out.gradient = [a](const Vector&) { return a; };
  return out;
}

double penalty_value(const ConstraintBlock& block, const Vector& x) {
  return 0.5 * constraint_residual(block, x);
}

double constraint_residual(const ConstraintBlock& block, const Vector& x) {
  double sum = 0.0;
  if (block.equality) sum += (block.equality->A * x - block.equality->b).squaredNorm();
  for (const auto& ineq : block.inequalities) {
    const double v = std::max(0.0, ineq.g(x));
    sum += v * v;
  }
  return sum;
}

Vector penalty_mapping(const ConstraintBlock& block, const Vector& x) {
  Vector out = Vector::Zero(x.size());
  if (block.equality) {
    out += block.equality->A.transpose() * (block.equality->A * x - block.equality->b);
  }
  for (const auto& ineq : block.inequalities) {
    const double v = ineq.g(x);
    if (v > 0.0) out += v * ineq.gradient(x);
  }
  return out;
}

AgentOracle build_penalty_agent(ConstraintBlock block, ObjectiveOracle objective, std::size_t dim) {
  if (block.equality) {
    const auto& eq = *block.equality;
    if (static_cast<std::size_t>(eq.A.cols()) != dim || eq.A.rows() != eq.b.size()) {
      throw ArgumentError("build_penalty_agent: equality block has inconsistent shape");
    }
  }
  for (const auto& ineq : block.inequalities) {
    if (!ineq.g || !ineq.gradient) {
      throw ArgumentError("build_penalty_agent: inequality with empty function");
    }
  }
  AgentOracle agent;
  agent.dim = dim;
  agent.objective = std::move(objective);
  if (block.inequalities.empty() && block.equality) {
    const auto& eq = *block.equality;
    agent.mapping = MappingOracle::from_affine(
        {eq.A.transpose() * eq.A, -(eq.A.transpose() * eq.b)});
  } else if (block.inequalities.empty()) {
    agent.mapping = MappingOracle::zero(dim);
  } else {
    agent.mapping.apply = [block = std::move(block)](const Vector& x) {
      return penalty_mapping(block, x);
    };
  }
  return agent;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::size_t>> equal_partition(std::size_t count, std::size_t parts) {
  if (parts == 0) throw ArgumentError("equal_partition: zero cells");
  if (count < parts) {
    throw ArgumentError("equal_partition: " + std::to_string(count) +
                        " samples cannot fill " + std::to_string(parts) + " cells");
  }
  std::vector<std::vector<std::size_t>> cells(parts);
  const std::size_t base = count / parts;
  const std::size_t extra = count % parts;
  std::size_t next = 0;
  for (std::size_t c = 0; c < parts; ++c) {
    const std::size_t size = base + (c < extra ? 1 : 0);
    for (std::size_t k = 0; k < size; ++k) cells[c].push_back(next++);
  }
  return cells;
}

namespace {

AgentOracle aggregate_cell(const std::vector<ObjectiveOracle>& objectives,
                           const std::vector<MappingOracle>& mappings,
                           const std::vector<std::size_t>& cell, std::size_t dim, double weight) {
  const auto n = static_cast<Eigen::Index>(dim);
  AgentOracle agent;
  agent.dim = dim;

  const bool all_quadratic = std::all_of(cell.begin(), cell.end(), [&](std::size_t l) {
    return objectives[l].quadratic.has_value();
  });
  if (all_quadratic) {
    QuadraticObjective sum{Matrix::Zero(n, n), Vector::Zero(n), 0.0};
    for (std::size_t l : cell) {
      sum.Q += objectives[l].quadratic->Q;
      sum.c += objectives[l].quadratic->c;
      sum.constant += objectives[l].quadratic->constant;
    }
    sum.Q *= weight;
    sum.c *= weight;
    sum.constant *= weight;
    agent.objective = ObjectiveOracle::from_quadratic(std::move(sum));
  } else {
    std::vector<ObjectiveOracle> parts;
    for (std::size_t l : cell) parts.push_back(objectives[l]);
    agent.objective.value = [parts, weight](const Vector& x) {
      double s = 0.0;
      for (const auto& p : parts) s += p.value(x);
      return weight * s;
    };
    agent.objective.subgradient = [parts, weight](const Vector& x) {
      Vector s = Vector::Zero(x.size());
      for (const auto& p : parts) s += p.subgradient(x);
      return Vector(weight * s);
    };
  }

  const bool all_affine = std::all_of(cell.begin(), cell.end(), [&](std::size_t l) {
    return mappings[l].affine.has_value();
  });
  if (all_affine) {
    AffineMap sum{Matrix::Zero(n, n), Vector::Zero(n)};
    for (std::size_t l : cell) {
      sum.M += mappings[l].affine->M;
      sum.q += mappings[l].affine->q;
    }
    sum.M *= weight;
    sum.q *= weight;
    agent.mapping = MappingOracle::from_affine(std::move(sum));
  } else {
    std::vector<MappingOracle> parts;
    for (std::size_t l : cell) parts.push_back(mappings[l]);
    agent.mapping.apply = [parts, weight](const Vector& x) {
      Vector s = Vector::Zero(x.size());
      for (const auto& p : parts) s += p.apply(x);
      return Vector(weight * s);
    };
  }
  return agent;
}

}  // namespace

VIConstrainedProblem build_ncp_problem(const std::vector<ObjectiveOracle>& objective_samples,
                                       const std::vector<MappingOracle>& mapping_samples,
                                       const std::vector<std::vector<std::size_t>>& partition,
                                       std::size_t dim, SampleAggregation aggregation,
                                       ProblemMetadata metadata) {
  if (objective_samples.size() != mapping_samples.size()) {
    throw ArgumentError("build_ncp_problem: objective and mapping sample counts differ");
  }
  const std::size_t count = objective_samples.size();
  std::vector<int> seen(count, 0);
  for (std::size_t c = 0; c < partition.size(); ++c) {
    if (partition[c].empty()) {
      throw ArgumentError("build_ncp_problem: partition cell " + std::to_string(c + 1) +
                          " is empty");
    }
    for (std::size_t l : partition[c]) {
      if (l >= count) throw ArgumentError("build_ncp_problem: sample index out of range");
      ++seen[l];
    }
  }
  if (partition.empty() || std::any_of(seen.begin(), seen.end(), [](int s) { return s != 1; })) {
    throw ArgumentError("build_ncp_problem: partition must cover every sample exactly once");
  }

  std::vector<AgentOracle> agents;
  agents.reserve(partition.size());
  for (const auto& cell : partition) {
    const double weight =
        aggregation == SampleAggregation::Sum ? 1.0 : 1.0 / static_cast<double>(cell.size());
    agents.push_back(aggregate_cell(objective_samples, mapping_samples, cell, dim, weight));
  }
  return VIConstrainedProblem(std::move(agents), SetSpec::nonnegative_orthant(dim),
                              std::move(metadata));
}

VIConstrainedProblem build_equality_coupled_problem(std::vector<AgentOracle> agents,
                                                    ProblemMetadata metadata) {
  if (agents.empty()) throw ArgumentError("build_equality_coupled_problem: no agents");
  const std::size_t n = agents.front().dim;
  return VIConstrainedProblem(std::move(agents), SetSpec::whole_space(n), std::move(metadata));
}

// ---------------------------------------------------------------------------

const char* to_string(ValidationIssue::Kind kind) {
  switch (kind) {
    case ValidationIssue::Kind::Convexity:
      return "convexity";
    case ValidationIssue::Kind::Monotonicity:
      return "monotonicity";
    case ValidationIssue::Kind::NonDeterministic:
      return "nondeterministic-subgradient";
    case ValidationIssue::Kind::NonFinite:
      return "non-finite";
    case ValidationIssue::Kind::OptimumOutsideSet:
      return "optimum-outside-set";
  }
  return "unknown";
}

ValidationReport validate_problem(const VIConstrainedProblem& problem,
                                  const ValidationOptions& options) {
  if (!problem.set().is_bounded() && !options.sampling_box) {
    throw ArgumentError("validate_problem: unbounded set requires a sampling box");
  }
  ValidationReport report;
  Rng rng(options.seed);

  auto add = [&](ValidationIssue::Kind kind, std::size_t agent, double magnitude,
                 const std::string& detail) {
    report.issues.push_back({kind, agent, magnitude, detail});
  };

  const auto& meta = problem.metadata();
  if (meta.known_optimal_point && problem.set().is_bounded() &&
      !contains(problem.set(), *meta.known_optimal_point, options.tol)) {
    add(ValidationIssue::Kind::OptimumOutsideSet, 0, 0.0, "known optimal point not in X");
  }

  for (std::size_t s = 0; s < options.sample_count; ++s) {
    const Vector x = sample_point(problem.set(), rng, options.sampling_box);
    const Vector y = sample_point(problem.set(), rng, options.sampling_box);
    ++report.pairs_checked;
    for (std::size_t i = 0; i < problem.agent_count(); ++i) {
      const auto& a = problem.agent(i);
      const double fx = a.f(x);
      const double fy = a.f(y);
      const Vector gx = a.subgradient(x);
      const Vector Fx = a.F(x);
      const Vector Fy = a.F(y);
      if (!std::isfinite(fx) || !std::isfinite(fy) || !gx.allFinite() || !Fx.allFinite() ||
          !Fy.allFinite()) {
        add(ValidationIssue::Kind::NonFinite, i + 1, 0.0, "oracle returned a non-finite value");
        continue;
      }
      if (a.subgradient(x) != gx) {
        add(ValidationIssue::Kind::NonDeterministic, i + 1, 0.0,
            "subgradient selection differs between identical calls");
      }
      const double convexity_gap = fy - fx - gx.dot(y - x);
      const double convexity_scale = 1.0 + std::abs(fx) + std::abs(fy);
      if (convexity_gap < -options.tol * convexity_scale) {
        std::ostringstream msg;
        msg << "f(y) - f(x) - <g, y - x> = " << convexity_gap;
        add(ValidationIssue::Kind::Convexity, i + 1, -convexity_gap, msg.str());
      }
      const Vector dF = Fx - Fy;
      const Vector dx = x - y;
      const double monotone = dF.dot(dx);
      const double monotone_scale = 1.0 + dF.norm() * dx.norm();
      if (monotone < -options.tol * monotone_scale) {
        std::ostringstream msg;
        msg << "<F(x) - F(y), x - y> = " << monotone;
        add(ValidationIssue::Kind::Monotonicity, i + 1, -monotone, msg.str());
      }
    }
  }
  return report;
}

ConstraintBlockReport validate_constraint_block(const ConstraintBlock& block, const SetSpec& set,
                                                const ValidationOptions& options) {
  if (!set.is_bounded() && !options.sampling_box) {
    throw ArgumentError("validate_constraint_block: unbounded set requires a sampling box");
  }
  ConstraintBlockReport report;
  Rng rng(options.seed);
  const double h = 1e-6;
  for (std::size_t s = 0; s < options.sample_count; ++s) {
    const Vector x = sample_point(set, rng, options.sampling_box);
    const Vector y = sample_point(set, rng, options.sampling_box);
    const double t = rng.uniform01();
    for (const auto& ineq : block.inequalities) {
      const Vector grad = ineq.gradient(x);
      Vector fd(x.size());
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        fd[j] = (ineq.g(xp) - ineq.g(xm)) / (2.0 * h);
      }
      const double rel = (fd - grad).norm() / std::max(1.0, grad.norm());
      report.max_gradient_error = std::max(report.max_gradient_error, rel);

      const double gx = ineq.g(x);
      const double gy = ineq.g(y);
      const double mid = ineq.g(t * x + (1.0 - t) * y);
      const double excess = (mid - (t * gx + (1.0 - t) * gy)) /
                            (1.0 + std::abs(gx) + std::abs(gy));
      report.max_secant_violation = std::max(report.max_secant_violation, excess);
    }
  }
  return report;
}

}  // namespace pairig
