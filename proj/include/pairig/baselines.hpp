#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pairig/geometry.hpp"
#include "pairig/problem.hpp"
#include "pairig/schedule.hpp"
#include "pairig/solver.hpp"

namespace pairig {

enum class BaselineMethod { ProjectedIG, ProximalIAG, SAGA };
enum class StepRule {
  Constant,    ///< gamma_k = step
  Diminishing  ///< gamma_k = step / sqrt(k+1)
};

struct BaselineConfig {
  BaselineMethod method = BaselineMethod::ProjectedIG;
  StepRule rule = StepRule::Diminishing;
  double step = 0.1;
  std::size_t epochs = 0;
  std::uint64_t seed = 1;
  Vector x0;
  LogStride stride;
  std::function<double(const Vector&)> infeasibility;
};

/// Baselines keep one iterate, so each trace record carries a single entry
/// per metric vector and consensus_dist is 0.
struct BaselineResult {
  RunTrace trace;
  Vector x;
};

// Update equations, with g_j the subgradient selection of f_j, P the
// projection onto `set`, and one epoch = m inner steps:
//
//   projected IG : for j = 1..m:  x <- P(x - gamma_k g_j(x))
//   proximal IAG : for j = 1..m:  t_j <- g_j(x);  x <- P(x - gamma_k sum_l t_l)
//                  (table t initialised with g_l(x0))
//   SAGA         : m times: draw j uniformly;
//                  v = m (g_j(x) - t_j) + sum_l t_l;  t_j <- g_j(x);  x <- P(x - gamma_k v)
//                  (table t initialised with g_l(x0))
//
// The mappings F_i of the problem are ignored; `set` replaces the problem's X
// (for instance by the full constraint polyhedron).

BaselineResult projected_ig_run(const VIConstrainedProblem& problem, const SetSpec& set,
                                const BaselineConfig& config);
BaselineResult proximal_iag_run(const VIConstrainedProblem& problem, const SetSpec& set,
                                const BaselineConfig& config);
BaselineResult saga_projected_run(const VIConstrainedProblem& problem, const SetSpec& set,
                                  const BaselineConfig& config);
/// Dispatches on config.method.
BaselineResult run_baseline(const VIConstrainedProblem& problem, const SetSpec& set,
                            const BaselineConfig& config);

// ---------------------------------------------------------------------------

struct TikhonovPoint {
  double eta;
  Vector point;
  double residual;       ///< ||x - P_X(x - G_eta(x))||
  std::size_t iterations;
};

struct ExtragradientOptions {
  double tol = 1e-10;
  std::size_t max_iters = 2'000'000;
  std::optional<Vector> start;
  /// Lipschitz estimate of G_eta; computed when absent (exact spectral norm
  /// for affine/quadratic data, otherwise 1.1 times a sampled maximum).
  std::optional<double> lipschitz;
};

/// Solves VI(X, sum_i F_i + eta sum_i grad f_i) by extragradient with step
/// 1/(2 L). For eta > 0 the problem metadata must carry a positive strong
/// convexity modulus; eta = 0 is accepted and then the caller vouches for
/// strong monotonicity of sum_i F_i. Throws NumericalError carrying the best
/// residual when max_iters is exhausted.
TikhonovPoint solve_regularized_vi(const VIConstrainedProblem& problem, double eta,
                                   const ExtragradientOptions& options = {});

/// Lipschitz estimate of G_eta used by solve_regularized_vi.
double regularized_lipschitz(const VIConstrainedProblem& problem, double eta);

/// x*_{eta_k} for k = 0..epochs, each solve warm-started at the previous point.
std::vector<TikhonovPoint> tikhonov_trajectory(const VIConstrainedProblem& problem,
                                               const Schedule& schedule, std::size_t epochs,
                                               double tol);
/// Same for an explicit list of regularization levels.
std::vector<TikhonovPoint> tikhonov_trajectory(const VIConstrainedProblem& problem,
                                               const std::vector<double>& etas, double tol);

/// Exhaustive solver for VI(box, M x + q) with n <= 3. Every coordinate is
/// put at its lower bound, its upper bound, or left free with zero mapped
/// component; each of the 3^n patterns yields a linear system (solved in the
/// least-norm sense when singular), and candidates meeting the VI optimality
/// conditions are kept. Returns the candidate of smallest norm; throws
/// NumericalError if no pattern is admissible.
Vector brute_force_affine_vi(const Matrix& M, const Vector& q, const Box& box);

}  // namespace pairig
