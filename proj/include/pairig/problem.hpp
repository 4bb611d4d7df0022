#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pairig/geometry.hpp"

namespace pairig {

/// f(x) = 0.5 x^T Q x + c^T x + constant. Q is assumed symmetric.
struct QuadraticObjective {
  Matrix Q;
  Vector c;
  double constant = 0.0;

  double value(const Vector& x) const { return 0.5 * x.dot(Q * x) + c.dot(x) + constant; }
  Vector gradient(const Vector& x) const { return Q * x + c; }
};

/// F(x) = M x + q.
struct AffineMap {
  Matrix M;
  Vector q;

  Vector apply(const Vector& x) const { return M * x + q; }
};

/// One agent's objective f_i with a deterministic subgradient selection.
struct ObjectiveOracle {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> subgradient;
  /// Present when f_i is (at most) quadratic; enables exact constants.
  std::optional<QuadraticObjective> quadratic;

  static ObjectiveOracle from_quadratic(QuadraticObjective q);
  static ObjectiveOracle zero(std::size_t dim);
};

/// One agent's mapping F_i.
struct MappingOracle {
  std::function<Vector(const Vector&)> apply;
  /// Present when F_i is affine; enables exact gap and constants.
  std::optional<AffineMap> affine;

  static MappingOracle from_affine(AffineMap map);
  static MappingOracle zero(std::size_t dim);
};

/// Local information held by agent i: f_i, a subgradient selection of f_i, and F_i.
/// Oracles must be re-entrant; problems are shared across concurrent runs.
struct AgentOracle {
  std::size_t dim = 0;
  ObjectiveOracle objective;
  MappingOracle mapping;

  double f(const Vector& x) const { return objective.value(x); }
  Vector subgradient(const Vector& x) const { return objective.subgradient(x); }
  Vector F(const Vector& x) const { return mapping.apply(x); }

  static AgentOracle affine(QuadraticObjective f, AffineMap F);
};

struct ProblemMetadata {
  std::optional<double> known_optimal_value;
  std::optional<Vector> known_optimal_point;
  /// mu_min = min_i mu_{f_i}; only meaningful for strongly convex objectives.
  std::optional<double> strong_convexity_modulus;
  std::string name;
};

/// minimize sum_i f_i(x) subject to x in SOL(X, sum_i F_i).
/// Immutable after construction.
class VIConstrainedProblem {
 public:
  VIConstrainedProblem(std::vector<AgentOracle> agents, SetSpec set, ProblemMetadata metadata = {});

  std::size_t dim() const { return set_.dim(); }
  std::size_t agent_count() const { return agents_.size(); }
  const std::vector<AgentOracle>& agents() const { return agents_; }
  const AgentOracle& agent(std::size_t i) const { return agents_.at(i); }
  const SetSpec& set() const { return set_; }
  const ProblemMetadata& metadata() const { return metadata_; }

  /// Sum of the agents' affine data when every F_i is affine.
  std::optional<AffineMap> affine_mapping() const;
  /// Sum of the agents' quadratic data when every f_i is quadratic.
  std::optional<QuadraticObjective> quadratic_objective() const;

  VIConstrainedProblem with_metadata(ProblemMetadata metadata) const;

 private:
  std::vector<AgentOracle> agents_;
  SetSpec set_;
  ProblemMetadata metadata_;
};

/// f(x) = sum_i f_i(x).
double eval_global_objective(const VIConstrainedProblem& problem, const Vector& x);
/// F(x) = sum_i F_i(x).
Vector eval_global_mapping(const VIConstrainedProblem& problem, const Vector& x);
/// Sum of the agents' subgradient selections.
Vector eval_global_subgradient(const VIConstrainedProblem& problem, const Vector& x);

// ---------------------------------------------------------------------------
// Reformulation of local inequality / linear equality constraints.

struct LinearEquality {
  Matrix A;
  Vector b;
};

/// g(x) <= 0 with g convex and continuously differentiable.
struct Inequality {
  std::function<double(const Vector&)> g;
  std::function<Vector(const Vector&)> gradient;

  /// a^T x <= c, i.e. g(x) = a^T x - c.
  static Inequality linear(Vector a, double c);
};

struct ConstraintBlock {
  std::optional<LinearEquality> equality;
  std::vector<Inequality> inequalities;
};

/// Theta(x) = 0.5 ||A x - b||^2 + 0.5 sum_j max{0, g_j(x)}^2.
double penalty_value(const ConstraintBlock& block, const Vector& x);

/// ||A x - b||^2 + sum_j max{0, g_j(x)}^2 (= 2 Theta).
double constraint_residual(const ConstraintBlock& block, const Vector& x);

/// grad Theta(x) = A^T (A x - b) + sum_j max{0, g_j(x)} grad g_j(x).
Vector penalty_mapping(const ConstraintBlock& block, const Vector& x);

/// Agent whose mapping is the penalty gradient of its constraint block, so that
/// SOL(X, sum F_i) equals the feasible set of the constraints (when nonempty).
AgentOracle build_penalty_agent(ConstraintBlock block, ObjectiveOracle objective, std::size_t dim);

// ---------------------------------------------------------------------------
// Builders.

/// Contiguous partition of `count` indices into `parts` cells whose sizes
/// differ by at most one.
std::vector<std::vector<std::size_t>> equal_partition(std::size_t count, std::size_t parts);

enum class SampleAggregation {
  Sum,       ///< f_i = sum_{l in S_i} f(., xi_l), likewise F_i
  CellMean,  ///< f_i = (1/|S_i|) sum_{l in S_i} f(., xi_l), likewise F_i
};

/// Sample-average best-equilibrium NCP: X = R^n_+, agent i aggregates the
/// samples listed in partition[i]. Affine/quadratic samples are folded into a
/// single affine/quadratic oracle per agent.
VIConstrainedProblem build_ncp_problem(const std::vector<ObjectiveOracle>& objective_samples,
                                       const std::vector<MappingOracle>& mapping_samples,
                                       const std::vector<std::vector<std::size_t>>& partition,
                                       std::size_t dim,
                                       SampleAggregation aggregation = SampleAggregation::Sum,
                                       ProblemMetadata metadata = {});

/// minimize sum f_i subject to sum F_i(x) = 0, i.e. X = R^n.
VIConstrainedProblem build_equality_coupled_problem(std::vector<AgentOracle> agents,
                                                    ProblemMetadata metadata = {});

// ---------------------------------------------------------------------------
// Sampled validation of convexity and monotonicity.

struct ValidationOptions {
  std::size_t sample_count = 200;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  /// Required when the problem's set is unbounded.
  std::optional<Box> sampling_box;
};

struct ValidationIssue {
  enum class Kind { Convexity, Monotonicity, NonDeterministic, NonFinite, OptimumOutsideSet };
  Kind kind;
  std::size_t agent;
  double magnitude;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  std::size_t pairs_checked = 0;
  bool passed() const { return issues.empty(); }
};

const char* to_string(ValidationIssue::Kind kind);

/// Spot-checks, on sampled pairs (x, y) in X:
///   f_i(y) >= f_i(x) + <g_i(x), y - x> - tol * (1 + |f_i(x)| + |f_i(y)|)
///   <F_i(x) - F_i(y), x - y> >= -tol * (1 + ||F_i(x) - F_i(y)|| ||x - y||)
/// plus subgradient determinism and finiteness.
ValidationReport validate_problem(const VIConstrainedProblem& problem,
                                  const ValidationOptions& options = {});

struct ConstraintBlockReport {
  double max_gradient_error = 0.0;  ///< relative finite-difference mismatch
  double max_secant_violation = 0.0;
  bool passed(double gradient_tol = 1e-5, double convexity_tol = 1e-8) const {
    return max_gradient_error <= gradient_tol && max_secant_violation <= convexity_tol;
  }
};

/// Checks each g_j against central finite differences and the secant
/// inequality g(t x + (1-t) y) <= t g(x) + (1-t) g(y) on sampled points.
ConstraintBlockReport validate_constraint_block(const ConstraintBlock& block, const SetSpec& set,
                                                const ValidationOptions& options = {});

}  // namespace pairig
