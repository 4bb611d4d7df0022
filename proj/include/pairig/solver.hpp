#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pairig/errors.hpp"
#include "pairig/geometry.hpp"
#include "pairig/problem.hpp"
#include "pairig/schedule.hpp"

namespace pairig {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  explicit CompensatedSum(double initial = 0.0) : sum_(initial) {}
  void add(double v);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// State of the m-agent cycle at the start of (or during) epoch k.
///
/// local[i] holds x_{k,i+1} for i = 0..m, so local[0] is x_{k,1} and
/// local[m] is x_{k,m+1}. averaged[i] holds the averaged iterate of agent i+1.
struct SolverState {
  std::size_t epoch = 0;
  double r = 0.0;
  std::vector<Vector> local;
  std::vector<Vector> averaged;
  CompensatedSum weight_sum;       ///< S_k
  CompensatedSum next_weight_sum;  ///< S_{k+1}, valid after begin_epoch

  std::size_t agent_count() const { return averaged.size(); }
  /// x_k = x_{k,1} = x_{k-1,m+1}.
  const Vector& cycle_start() const { return local.front(); }
};

/// Fresh state at epoch 0. `averaged0` may be empty (every agent starts from
/// x0) or hold one point per agent.
SolverState make_initial_state(const VIConstrainedProblem& problem, const Schedule& schedule,
                               double r, const Vector& x0, const std::vector<Vector>& averaged0 = {});

/// x_{k,i+1} = P_X(x_{k,i} - gamma_k (F_i(x_{k,i}) + eta_k g_i(x_{k,i}))), where
/// `agent` is zero-based. Throws NumericalError on non-finite oracle output.
const Vector& step_agent(SolverState& state, std::size_t agent, const VIConstrainedProblem& problem,
                         const Schedule& schedule);

/// Sets S_{k+1} = S_k + gamma_{k+1}^r.
void begin_epoch(SolverState& state, const Schedule& schedule);

/// xbar_{k+1,i} = (S_k / S_{k+1}) xbar_{k,i} + (gamma_{k+1}^r / S_{k+1}) x_{k,i+1}.
/// Requires begin_epoch for the current epoch.
const Vector& update_average(SolverState& state, std::size_t agent, const Schedule& schedule);

/// x_{k+1,1} = x_{k,m+1}; S_k <- S_{k+1}; k <- k+1.
void end_epoch(SolverState& state);

/// lambda_{k,N} = gamma_k^r / sum_{j<=N} gamma_j^r for k = 0..N.
std::vector<double> averaging_weights(const Schedule& schedule, double r, std::size_t N);

// ---------------------------------------------------------------------------

struct LogStride {
  /// Every epoch up to `dense_until`, then epochs growing geometrically by
  /// `ratio`. The final epoch is always logged.
  std::size_t dense_until = 100;
  double ratio = 1.1;

  static LogStride every_epoch() { return {static_cast<std::size_t>(-1), 1.0}; }
};

/// Logged epochs in [0, N] for the given stride, strictly increasing.
std::vector<std::size_t> logged_epochs(const LogStride& stride, std::size_t N);

/// Bounds used by the instrumented invariant checks.
struct InvariantConstants {
  double C_f;
  double C_F;
};

struct RunOptions {
  std::size_t epochs = 0;
  double r = 0.0;
  Vector x0;
  std::vector<Vector> averaged0;
  LogStride stride;
  /// When set, the neighbor-distance bounds are checked at every step and the
  /// pseudo-bound inequality at every epoch for each probe point.
  std::optional<InvariantConstants> invariants;
  std::vector<Vector> probe_points;
  /// Keep every local iterate x_{k,1..m+1}, k = 0..N-1.
  bool keep_history = false;
  /// Copy the averaged iterates into every record.
  bool record_averages = false;
  /// Per-agent infeasibility metric evaluated at averaged iterates.
  std::function<double(const Vector&)> infeasibility;
};

struct EpochRecord {
  std::size_t epoch;
  double gamma;
  double eta;
  std::vector<double> objective;       ///< f(xbar_{k,i})
  std::vector<double> infeasibility;   ///< metric(xbar_{k,i}), NaN when no metric given
  std::vector<double> consensus_dist;  ///< ||xbar_{k,i} - xbar_{k,m}||
  /// Largest (lhs - rhs) over the invariant checks since the previous
  /// record; NaN when checks are off.
  double invariant_max_residual;
  std::vector<Vector> averaged;  ///< xbar_{k,i}, only with record_averages
};

struct InvariantSummary {
  double neighbor_a = -std::numeric_limits<double>::infinity();
  double neighbor_b = -std::numeric_limits<double>::infinity();
  double pseudo_bound = -std::numeric_limits<double>::infinity();
  std::size_t checks = 0;
};

struct RunTrace {
  std::vector<EpochRecord> records;
  std::optional<InvariantSummary> invariants;
  /// history[k][j] = x_{k,j+1}, j = 0..m (only with keep_history).
  std::vector<std::vector<Vector>> history;
  /// Initial averaged iterates, kept so the averaging identity can be checked.
  std::vector<Vector> averaged0;
};

/// Numerical failure in the middle of a run; carries the records logged
/// before the failure.
class TruncatedRunError : public NumericalError {
 public:
  TruncatedRunError(const std::string& message, RunTrace partial)
      : NumericalError(message), partial_(std::move(partial)) {}
  const RunTrace& partial() const { return partial_; }

 private:
  RunTrace partial_;
};

struct RunResult {
  RunTrace trace;
  SolverState state;
};

/// Runs N epochs of the cyclic pair-IG method. Throws ConfigurationError for an
/// invalid schedule or infeasible initial points before any step, and
/// NumericalError (mentioning epoch and agent) on non-finite values.
RunResult run(const VIConstrainedProblem& problem, const Schedule& schedule, const RunOptions& options);

}  // namespace pairig
