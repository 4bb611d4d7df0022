#include "pairig/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "pairig/errors.hpp"

namespace pairig {
namespace {

void validate_config(const VIConstrainedProblem& problem, const SetSpec& set,
                     const BaselineConfig& config) {
  if (!(config.step > 0.0) || !std::isfinite(config.step)) {
    throw ConfigurationError("baseline: step must be positive");
  }
  if (set.dim() != problem.dim()) throw ConfigurationError("baseline: set dimension mismatch");
  if (static_cast<std::size_t>(config.x0.size()) != set.dim() ||
      !contains(set, config.x0, 1e-9 * (1.0 + config.x0.norm()))) {
    throw ConfigurationError("baseline: x0 must lie in the projection set");
  }
}

double step_at(const BaselineConfig& config, std::size_t k) {
  return config.rule == StepRule::Constant
             ? config.step
             : config.step / std::sqrt(static_cast<double>(k) + 1.0);
}

class BaselineLogger {
 public:
  BaselineLogger(const VIConstrainedProblem& problem, const BaselineConfig& config)
      : problem_(problem), config_(config), epochs_(logged_epochs(config.stride, config.epochs)) {}

  void maybe_log(std::size_t epoch, const Vector& x) {
    if (!x.allFinite()) {
      throw NumericalError("baseline: non-finite iterate at epoch " + std::to_string(epoch));
    }
    if (next_ < epochs_.size() && epochs_[next_] == epoch) {
      const double gamma = step_at(config_, epoch);
      const double phi = config_.infeasibility ? config_.infeasibility(x)
                                               : std::numeric_limits<double>::quiet_NaN();
      trace_.records.push_back({epoch, gamma, 0.0, {eval_global_objective(problem_, x)}, {phi},
                                {0.0}, std::numeric_limits<double>::quiet_NaN(), {}});
      ++next_;
    }
  }

  RunTrace take() { return std::move(trace_); }

  template <typename Body>
  BaselineResult guard(Body body) {
    try {
      Vector x = body();
      return {take(), std::move(x)};
    } catch (const TruncatedRunError&) {
      throw;
    } catch (const NumericalError& e) {
      throw TruncatedRunError(e.what(), take());
    }
  }

 private:
  const VIConstrainedProblem& problem_;
  const BaselineConfig& config_;
  std::vector<std::size_t> epochs_;
  std::size_t next_ = 0;
  RunTrace trace_;
};

}  // namespace

BaselineResult projected_ig_run(const VIConstrainedProblem& problem, const SetSpec& set,
                                const BaselineConfig& config) {
  validate_config(problem, set, config);
  BaselineLogger logger(problem, config);
  return logger.guard([&] {
    Vector x = config.x0;
    logger.maybe_log(0, x);
    for (std::size_t k = 0; k < config.epochs; ++k) {
      const double gamma = step_at(config, k);
      for (const auto& agent : problem.agents()) x = project(set, x - gamma * agent.subgradient(x));
      logger.maybe_log(k + 1, x);
    }
    return x;
  });
}

BaselineResult proximal_iag_run(const VIConstrainedProblem& problem, const SetSpec& set,
                                const BaselineConfig& config) {
  validate_config(problem, set, config);
  const std::size_t m = problem.agent_count();
  BaselineLogger logger(problem, config);
  Vector x = config.x0;
  std::vector<Vector> table(m);
  Vector aggregate = Vector::Zero(x.size());
  for (std::size_t j = 0; j < m; ++j) {
    table[j] = problem.agent(j).subgradient(x);
    aggregate += table[j];
  }
  return logger.guard([&] {
    logger.maybe_log(0, x);
    for (std::size_t k = 0; k < config.epochs; ++k) {
      const double gamma = step_at(config, k);
      for (std::size_t j = 0; j < m; ++j) {
        Vector g = problem.agent(j).subgradient(x);
        aggregate += g - table[j];
        table[j] = std::move(g);
        x = project(set, x - gamma * aggregate);
      }
      logger.maybe_log(k + 1, x);
    }
    return x;
  });
}

BaselineResult saga_projected_run(const VIConstrainedProblem& problem, const SetSpec& set,
                                  const BaselineConfig& config) {
  validate_config(problem, set, config);
  const std::size_t m = problem.agent_count();
  const auto md = static_cast<double>(m);
  Rng rng(config.seed);
  BaselineLogger logger(problem, config);
  Vector x = config.x0;
  std::vector<Vector> table(m);
  Vector aggregate = Vector::Zero(x.size());
  for (std::size_t j = 0; j < m; ++j) {
    table[j] = problem.agent(j).subgradient(x);
    aggregate += table[j];
  }
  return logger.guard([&] {
    logger.maybe_log(0, x);
    for (std::size_t k = 0; k < config.epochs; ++k) {
      const double gamma = step_at(config, k);
      for (std::size_t inner = 0; inner < m; ++inner) {
        const std::size_t j = rng.index(m);
        Vector g = problem.agent(j).subgradient(x);
        const Vector v = md * (g - table[j]) + aggregate;
        aggregate += g - table[j];
        table[j] = std::move(g);
        x = project(set, x - gamma * v);
      }
      logger.maybe_log(k + 1, x);
    }
    return x;
  });
}

BaselineResult run_baseline(const VIConstrainedProblem& problem, const SetSpec& set,
                            const BaselineConfig& config) {
  switch (config.method) {
    case BaselineMethod::ProjectedIG:
      return projected_ig_run(problem, set, config);
    case BaselineMethod::ProximalIAG:
      return proximal_iag_run(problem, set, config);
    case BaselineMethod::SAGA:
      return saga_projected_run(problem, set, config);
  }
  throw ArgumentError("run_baseline: unknown method");
}

// ---------------------------------------------------------------------------

namespace {

Vector regularized_map(const VIConstrainedProblem& problem, double eta, const Vector& x) {
  Vector g = eval_global_mapping(problem, x);
  if (eta != 0.0) g += eta * eval_global_subgradient(problem, x);
  return g;
}

}  // namespace

double regularized_lipschitz(const VIConstrainedProblem& problem, double eta) {
  const auto affine = problem.affine_mapping();
  const auto quad = problem.quadratic_objective();
  if (affine && (eta == 0.0 || quad)) {
    Matrix J = affine->M;
    if (eta != 0.0) J += eta * quad->Q;
    return Eigen::JacobiSVD<Matrix>(J).singularValues()(0);
  }
  if (!problem.set().is_bounded()) {
    throw ArgumentError("regularized_lipschitz: non-affine data on an unbounded set");
  }
  Rng rng(12345);
  double best = 0.0;
  for (int s = 0; s < 400; ++s) {
    const Vector x = sample_point(problem.set(), rng);
    const Vector y = sample_point(problem.set(), rng);
    const double d = (x - y).norm();
    if (d == 0.0) continue;
    best = std::max(best, (regularized_map(problem, eta, x) - regularized_map(problem, eta, y)).norm() / d);
  }
  return 1.1 * best;
}

TikhonovPoint solve_regularized_vi(const VIConstrainedProblem& problem, double eta,
                                   const ExtragradientOptions& options) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw ArgumentError("solve_regularized_vi: eta must be nonnegative");
  }
  if (eta > 0.0) {
    const auto& mu = problem.metadata().strong_convexity_modulus;
    if (!mu || !(*mu > 0.0)) {
      throw PreconditionError("solve_regularized_vi: needs a positive strong convexity modulus");
    }
  }
  const SetSpec& set = problem.set();
  const Vector origin = Vector::Zero(static_cast<Eigen::Index>(problem.dim()));
  Vector x = project(set, options.start ? *options.start : origin);
  const double L = options.lipschitz ? *options.lipschitz : regularized_lipschitz(problem, eta);

  auto residual_at = [&](const Vector& z, const Vector& gz) { return (z - project(set, z - gz)).norm(); };

  Vector gx = regularized_map(problem, eta, x);
  double residual = residual_at(x, gx);
  if (L == 0.0 || residual <= options.tol) return {eta, x, residual, 0};

  const double step = 1.0 / (2.0 * L);
  double best = residual;
  for (std::size_t it = 1; it <= options.max_iters; ++it) {
    const Vector y = project(set, x - step * gx);
    x = project(set, x - step * regularized_map(problem, eta, y));
    gx = regularized_map(problem, eta, x);
    residual = residual_at(x, gx);
    if (!std::isfinite(residual)) throw NumericalError("solve_regularized_vi: non-finite iterate");
    best = std::min(best, residual);
    if (residual <= options.tol) return {eta, x, residual, it};
  }
  std::ostringstream msg;
  msg << "solve_regularized_vi: no convergence in " << options.max_iters
      << " iterations (best residual " << best << ", eta " << eta << ")";
  throw NumericalError(msg.str());
}

std::vector<TikhonovPoint> tikhonov_trajectory(const VIConstrainedProblem& problem,
                                               const std::vector<double>& etas, double tol) {
  std::vector<TikhonovPoint> out;
  out.reserve(etas.size());
  ExtragradientOptions options;
  options.tol = tol;
  for (double eta : etas) {
    if (!out.empty()) options.start = out.back().point;
    out.push_back(solve_regularized_vi(problem, eta, options));
  }
  return out;
}

std::vector<TikhonovPoint> tikhonov_trajectory(const VIConstrainedProblem& problem,
                                               const Schedule& schedule, std::size_t epochs,
                                               double tol) {
  schedule.validate();
  std::vector<double> etas;
  etas.reserve(epochs + 1);
  for (std::size_t k = 0; k <= epochs; ++k) etas.push_back(schedule_values(schedule, k).eta);
  return tikhonov_trajectory(problem, etas, tol);
}

// ---------------------------------------------------------------------------

Vector brute_force_affine_vi(const Matrix& M, const Vector& q, const Box& box) {
  const Eigen::Index n = q.size();
  if (n < 1 || n > 3) throw UnsupportedError("brute_force_affine_vi: supports 1 <= n <= 3");
  if (M.rows() != n || M.cols() != n || box.lower.size() != n || box.upper.size() != n) {
    throw ArgumentError("brute_force_affine_vi: dimension mismatch");
  }
  const double scale = 1.0 + M.norm() * std::max(box.lower.norm(), box.upper.norm()) + q.norm();
  const double tol = 1e-9 * scale;

  std::optional<Vector> best;
  int patterns = 1;
  for (Eigen::Index j = 0; j < n; ++j) patterns *= 3;
  for (int code = 0; code < patterns; ++code) {
    // state 0: at lower bound, 1: at upper bound, 2: free.
    std::vector<int> state(static_cast<std::size_t>(n));
    int c = code;
    for (Eigen::Index j = 0; j < n; ++j) {
      state[static_cast<std::size_t>(j)] = c % 3;
      c /= 3;
    }
    Vector x = Vector::Zero(n);
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < n; ++j) {
      const int s = state[static_cast<std::size_t>(j)];
      if (s == 0) x[j] = box.lower[j];
      else if (s == 1) x[j] = box.upper[j];
      else free.push_back(j);
    }
    if (!free.empty()) {
      const auto nf = static_cast<Eigen::Index>(free.size());
      Matrix A(nf, nf);
      Vector rhs(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        rhs[a] = -q[free[static_cast<std::size_t>(a)]];
        for (Eigen::Index j = 0; j < n; ++j) {
          if (state[static_cast<std::size_t>(j)] != 2) rhs[a] -= M(free[static_cast<std::size_t>(a)], j) * x[j];
        }
        for (Eigen::Index b = 0; b < nf; ++b) {
          A(a, b) = M(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
        }
      }
      const Vector sol = A.completeOrthogonalDecomposition().solve(rhs);
      for (Eigen::Index a = 0; a < nf; ++a) x[free[static_cast<std::size_t>(a)]] = sol[a];
    }
    const Vector F = M * x + q;
    bool ok = true;
    for (Eigen::Index j = 0; j < n && ok; ++j) {
      if (x[j] < box.lower[j] - tol || x[j] > box.upper[j] + tol) ok = false;
      const bool at_lower = std::abs(x[j] - box.lower[j]) <= tol;
      const bool at_upper = std::abs(x[j] - box.upper[j]) <= tol;
      // Optimality: F_j >= 0 where only increases are feasible, F_j <= 0 where
      // only decreases are, F_j = 0 in the interior.
      if (at_lower && at_upper) continue;
      if (at_lower) ok = ok && F[j] >= -tol;
      else if (at_upper) ok = ok && F[j] <= tol;
      else ok = ok && std::abs(F[j]) <= tol;
    }
    if (!ok) continue;
    x = x.cwiseMax(box.lower).cwiseMin(box.upper);
    if (!best || x.norm() < best->norm() - tol) best = x;
  }
  if (!best) throw NumericalError("brute_force_affine_vi: no admissible face pattern");
  return *best;
}

}  // namespace pairig
