#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pairig/geometry.hpp"
#include "pairig/problem.hpp"
#include "pairig/schedule.hpp"
#include "pairig/solver.hpp"

namespace pairig {

// ---------------------------------------------------------------------------
// Dual gap and NCP infeasibility.

enum class GapMode {
  AffineExact,  ///< concave maximization, requires affine F and compact X
  Sampled       ///< maximum over uniform samples: a lower bound on the gap
};

struct GapResult {
  double value = 0.0;
  /// Set when the supremum was detected to be unbounded (unbounded X only).
  bool unbounded = false;
  /// True for Sampled mode: the value underestimates the supremum.
  bool lower_bound = false;
  std::size_t iterations = 0;
};

struct GapOptions {
  std::size_t budget = 2000;  ///< samples (Sampled) or iteration cap / 1000 (AffineExact)
  std::uint64_t seed = 1;
  double tol = 1e-8;
};

/// GAP(x) = sup_{y in X} F(y)^T (x - y) with F the summed mapping.
///
/// AffineExact maximizes the concave quadratic y -> (M y + q)^T (x - y) with
/// accelerated projected gradient ascent (with restart) until the gradient
/// mapping falls below tol. Sampled mode on an unbounded X probes balls of
/// growing radius around x and flags the supremum as unbounded when the
/// maximum keeps growing at least linearly with the radius.
GapResult dual_gap(const VIConstrainedProblem& problem, const Vector& x, GapMode mode,
                   const GapOptions& options = {});

/// phi(x) = ||max(0, -x)||^2 + ||max(0, -F)||^2 + |x^T F|.
double ncp_infeasibility_phi(const Vector& x, const Vector& Fx);

// ---------------------------------------------------------------------------
// Problem constants.

enum class EstimateMethod { Exact, Sampled };

struct ConstantsEstimate {
  double C_f = 0.0;  ///< m * sup_X max_i ||g_i||
  double C_F = 0.0;  ///< m * sup_X max_i ||F_i||
  double M_X = 0.0;  ///< sup_X ||x||
  double M_f = 0.0;  ///< sup_X |f|
  EstimateMethod method = EstimateMethod::Exact;
  std::size_t sample_count = 0;
};

std::string to_string(EstimateMethod method);

struct ConstantsOptions {
  std::size_t budget = 2000;
  std::uint64_t seed = 7;
  double safety = 1.1;
  /// Needed for unbounded X; the estimate is then sampled.
  std::optional<Box> sampling_box;
};

/// Exact mode applies when X is a Box (n <= 20) and every F_i is affine and
/// every f_i quadratic: norms of affine maps are convex so their maxima sit at
/// vertices, and the extremes of a convex quadratic come from a vertex scan
/// (maximum) and a projected-gradient solve (minimum). X = Ball with
/// affine data uses ||M c + q|| + ||M|| r, which is exact when M c + q = 0.
/// Everything else is sampled, with the maxima scaled by `safety`.
ConstantsEstimate estimate_constants(const VIConstrainedProblem& problem,
                                     const ConstantsOptions& options = {});

// ---------------------------------------------------------------------------
// Rate bounds for the rate schedule.

struct RateBoundParams {
  double gamma0;
  double eta0;
  double b;
  double r = 0.0;
};

/// Initialization terms appearing in the bounds. f_init_diff is
/// f(xbar_{0,m}) - f(x_{0,1}) and is used signed, never clipped.
struct InitializationTerms {
  double f_init_diff = 0.0;
  double dist_i_m = 0.0;   ///< ||xbar_{0,i} - xbar_{0,m}||
  double dist_m_x0 = 0.0;  ///< ||xbar_{0,m} - x_{0,1}||
};

/// Smallest N for which the agent-wise rate bounds hold: ceil(2^{2/(1-r)} - 1).
std::size_t rate_bound_threshold(double r);

/// Right-hand side of the suboptimality bound for agent i (1-based). Throws
/// PreconditionError below rate_bound_threshold and ArgumentError for b
/// outside (0, 0.5), r outside [0, 1) or i outside [1, m].
double rate_bound_suboptimality(const ConstantsEstimate& c, const RateBoundParams& p,
                                const InitializationTerms& init, std::size_t m, std::size_t i,
                                std::size_t N);
/// Right-hand side of the dual gap bound, same conventions.
double rate_bound_gap(const ConstantsEstimate& c, const RateBoundParams& p,
                      const InitializationTerms& init, std::size_t m, std::size_t i, std::size_t N);

/// Epochs that guarantee f(xbar_N) - f* + GAP(xbar_N) <= eps for the parameter
/// choice r = 0, gamma0 = 1/(C_F + C_f), eta0 = 1, b = 1/4, zero
/// initialization terms and M_X = 1. With S = C_F + C_f, the two bounds sum to
/// at most 30 S / (N+1)^{1/4}, so N_eps = ceil((30 S / eps)^4 - 1).
std::uint64_t iteration_complexity(double C_f, double C_F, double eps);

// ---------------------------------------------------------------------------
// Tikhonov analysis.

struct TikhonovBoundParams {
  TikhonovSchedule schedule;
  double mu_min;
  std::size_t m;
  double C_f;
  double C_F;
  /// ||x_{1,1} - x*_{eta_0}||.
  double initial_distance;

  double B0() const;
  double tau() const;
};

/// Right-hand side bounding ||x_{k+1,i} - x*_{eta_k}||^2 (i is 1-based).
/// Throws ConfigurationError when the schedule violates its conditions.
double tikhonov_bound(const TikhonovBoundParams& params, std::size_t k, std::size_t i);

struct HarmonicSumBounds {
  double lower;
  double exact;
  double upper;
};

/// Sandwich for sum_{k=0}^{K} (k+Gamma)^{-beta}. Requires
/// K >= (2^{1/(1-beta)} - 1) Gamma, else PreconditionError.
HarmonicSumBounds harmonic_sum_bounds(double beta, double Gamma, std::size_t K);

struct ConditionCheck {
  std::string name;
  bool passed;
  std::optional<std::size_t> witness_k;  ///< first failing k, if any
  double worst_slack;                    ///< min over checked k of (rhs - lhs)
};

struct ScheduleConditionReport {
  std::vector<ConditionCheck> checks;
  bool passed() const;
  const ConditionCheck* find(const std::string& name) const;
};

struct ScheduleCheckOptions {
  std::size_t dense_until = 1000;
  std::size_t random_samples = 200;
  std::size_t max_k = 1'000'000;
  std::uint64_t seed = 3;
};

/// Evaluates the prerequisites (a > b, a + b < 1, 3a + b < 2, Gamma >= 1 and
/// the two Gamma conditions) and properties (i)-(iv) on k = 1..dense_until,
/// a logarithmic grid up to max_k, and random k.
ScheduleConditionReport check_schedule_conditions(const TikhonovSchedule& schedule, double mu_min,
                                                  const ScheduleCheckOptions& options = {});

// ---------------------------------------------------------------------------
// Consensus bounds.

struct ConsensusViolation {
  std::size_t epoch;
  std::size_t agent;  ///< 1-based
  bool gap;           ///< false: objective inequality
  double excess;
};

struct ConsensusReport {
  std::vector<ConsensusViolation> violations;
  std::size_t checks = 0;
  double worst_excess = -std::numeric_limits<double>::infinity();
  bool passed() const { return violations.empty(); }
};

/// Checks, at every logged epoch N of a pair-IG trace and every agent i,
///   f(xbar_{N,i}) - f(xbar_{N,m})     <= C_f lam_0 ||xbar_{0,i} - xbar_{0,m}|| + T
///   GAP(xbar_{N,i}) - GAP(xbar_{N,m}) <= C_F lam_0 ||xbar_{0,i} - xbar_{0,m}|| + T'
/// with T = (m-i) C_f (C_F + eta_0 C_f)/m sum_k lam_k gamma_k and T' the same
/// with C_F leading. The gap inequality is checked only when the records carry
/// averaged iterates (RunOptions::record_averages) and the problem is affine
/// over a compact set; gaps are then computed in AffineExact mode.
ConsensusReport check_consensus_bounds(const VIConstrainedProblem& problem, const RunTrace& trace,
                                       const ConstantsEstimate& constants, const Schedule& schedule,
                                       double r, double slack = 1e-8);

}  // namespace pairig
