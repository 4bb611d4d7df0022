#include "pairig/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pairig/errors.hpp"

namespace pairig {

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    compensation_ += (sum_ - t) + v;
  } else {
    compensation_ += (v - t) + sum_;
  }
  sum_ = t;
}

namespace {

double weight(double gamma, double r) { return r == 0.0 ? 1.0 : std::pow(gamma, r); }

void check_r(double r) {
  if (!(r >= 0.0 && r < 1.0)) throw ConfigurationError("averaging exponent r must lie in [0, 1)");
}

void require_in_set(const SetSpec& set, const Vector& x, const std::string& what) {
  if (static_cast<std::size_t>(x.size()) != set.dim()) {
    throw ConfigurationError(what + ": dimension does not match the set");
  }
  if (!contains(set, x, 1e-9 * (1.0 + x.norm()))) {
    throw ConfigurationError(what + ": point lies outside X");
  }
}

}  // namespace

SolverState make_initial_state(const VIConstrainedProblem& problem, const Schedule& schedule,
                               double r, const Vector& x0, const std::vector<Vector>& averaged0) {
  schedule.validate();
  check_r(r);
  const std::size_t m = problem.agent_count();
  require_in_set(problem.set(), x0, "initial point x_{0,1}");
  if (!averaged0.empty() && averaged0.size() != m) {
    throw ConfigurationError("initial averaged iterates: expected one point per agent");
  }
  SolverState state;
  state.r = r;
  state.local.assign(m + 1, x0);
  if (averaged0.empty()) {
    state.averaged.assign(m, x0);
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      require_in_set(problem.set(), averaged0[i], "initial averaged iterate " + std::to_string(i + 1));
    }
    state.averaged = averaged0;
  }
  state.weight_sum = CompensatedSum(weight(schedule_values(schedule, 0).gamma, r));
  return state;
}

const Vector& step_agent(SolverState& state, std::size_t agent, const VIConstrainedProblem& problem,
                         const Schedule& schedule) {
  if (agent >= problem.agent_count()) throw ArgumentError("step_agent: agent index out of range");
  const auto [gamma, eta] = schedule_values(schedule, state.epoch);
  const Vector& x = state.local[agent];
  const auto& oracle = problem.agent(agent);
  const Vector direction = oracle.F(x) + eta * oracle.subgradient(x);
  if (!direction.allFinite()) {
    throw NumericalError("non-finite oracle output at epoch " + std::to_string(state.epoch) +
                         ", agent " + std::to_string(agent + 1));
  }
  state.local[agent + 1] = project(problem.set(), x - gamma * direction);
  return state.local[agent + 1];
}

void begin_epoch(SolverState& state, const Schedule& schedule) {
  state.next_weight_sum = state.weight_sum;
  state.next_weight_sum.add(weight(schedule_values(schedule, state.epoch + 1).gamma, state.r));
}

const Vector& update_average(SolverState& state, std::size_t agent, const Schedule& schedule) {
  const double s_k = state.weight_sum.value();
  const double s_next = state.next_weight_sum.value();
  const double w_next = weight(schedule_values(schedule, state.epoch + 1).gamma, state.r);
  Vector& avg = state.averaged.at(agent);
  avg = (s_k / s_next) * avg + (w_next / s_next) * state.local[agent + 1];
  return avg;
}

void end_epoch(SolverState& state) {
  state.local.front() = state.local.back();
  state.weight_sum = state.next_weight_sum;
  ++state.epoch;
}

std::vector<double> averaging_weights(const Schedule& schedule, double r, std::size_t N) {
  check_r(r);
  std::vector<double> w(N + 1);
  CompensatedSum total;
  for (std::size_t k = 0; k <= N; ++k) {
    w[k] = weight(schedule_values(schedule, k).gamma, r);
    total.add(w[k]);
  }
  const double s = total.value();
  for (double& v : w) v /= s;
  return w;
}

std::vector<std::size_t> logged_epochs(const LogStride& stride, std::size_t N) {
  std::vector<std::size_t> out;
  const std::size_t dense = std::min(stride.dense_until, N);
  for (std::size_t k = 0; k <= dense; ++k) out.push_back(k);
  if (dense < N && stride.ratio > 1.0) {
    double next = static_cast<double>(dense) * stride.ratio;
    while (next < static_cast<double>(N)) {
      const auto k = static_cast<std::size_t>(std::ceil(next));
      if (k > out.back() && k < N) out.push_back(k);
      next = static_cast<double>(std::max(k, out.back())) * stride.ratio;
    }
  }
  if (out.back() != N) out.push_back(N);
  return out;
}

namespace {

EpochRecord make_record(const VIConstrainedProblem& problem, const Schedule& schedule,
                        const SolverState& state, const RunOptions& options, double residual) {
  const std::size_t m = state.agent_count();
  const auto [gamma, eta] = schedule_values(schedule, state.epoch);
  EpochRecord rec{state.epoch, gamma, eta, {}, {}, {}, residual, {}};
  rec.objective.reserve(m);
  rec.infeasibility.reserve(m);
  rec.consensus_dist.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Vector& avg = state.averaged[i];
    rec.objective.push_back(eval_global_objective(problem, avg));
    rec.infeasibility.push_back(options.infeasibility ? options.infeasibility(avg)
                                                      : std::numeric_limits<double>::quiet_NaN());
    rec.consensus_dist.push_back((avg - state.averaged[m - 1]).norm());
  }
  if (options.record_averages) rec.averaged = state.averaged;
  return rec;
}

void check_finite(const SolverState& state) {
  for (std::size_t i = 0; i < state.averaged.size(); ++i) {
    if (!state.averaged[i].allFinite() || !state.local[i + 1].allFinite()) {
      throw NumericalError("non-finite iterate at epoch " + std::to_string(state.epoch) +
                           ", agent " + std::to_string(i + 1));
    }
  }
}

}  // namespace

RunResult run(const VIConstrainedProblem& problem, const Schedule& schedule, const RunOptions& options) {
  SolverState state = make_initial_state(problem, schedule, options.r, options.x0, options.averaged0);
  for (const auto& y : options.probe_points) require_in_set(problem.set(), y, "probe point");
  if (!options.probe_points.empty() && !options.invariants) {
    throw ConfigurationError("probe points require invariant constants");
  }

  const std::size_t m = problem.agent_count();
  const auto md = static_cast<double>(m);
  const auto log_at = logged_epochs(options.stride, options.epochs);
  auto next_log = log_at.begin();

  RunResult result;
  RunTrace& trace = result.trace;
  trace.averaged0 = state.averaged;
  if (options.invariants) trace.invariants = InvariantSummary{};
  if (options.keep_history) trace.history.reserve(options.epochs);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  double pending_residual = options.invariants ? -std::numeric_limits<double>::infinity() : nan;

  std::vector<double> probe_f;
  std::vector<Vector> probe_F;
  for (const auto& y : options.probe_points) {
    probe_f.push_back(eval_global_objective(problem, y));
    probe_F.push_back(eval_global_mapping(problem, y));
  }

  auto log_if_due = [&] {
    if (next_log != log_at.end() && *next_log == state.epoch) {
      trace.records.push_back(make_record(problem, schedule, state, options, pending_residual));
      if (options.invariants) pending_residual = -std::numeric_limits<double>::infinity();
      ++next_log;
    }
  };
  log_if_due();

  try {
  for (std::size_t k = 0; k < options.epochs; ++k) {
    const auto [gamma, eta] = schedule_values(schedule, k);
    begin_epoch(state, schedule);
    for (std::size_t i = 0; i < m; ++i) {
      step_agent(state, i, problem, schedule);
      update_average(state, i, schedule);
    }
    check_finite(state);

    if (options.invariants) {
      auto& summary = *trace.invariants;
      const double step = gamma * (options.invariants->C_F + eta * options.invariants->C_f) / md;
      const Vector& x_k = state.local.front();
      const Vector& x_next = state.local.back();
      for (std::size_t i = 1; i <= m; ++i) {
        // (a): ||x_k - x_{k,i}|| <= (i-1) step, (b): ||x_{k,i+1} - x_{k+1}|| <= (m-i) step.
        const double a = (x_k - state.local[i - 1]).norm() - static_cast<double>(i - 1) * step;
        const double b = (state.local[i] - x_next).norm() - static_cast<double>(m - i) * step;
        summary.neighbor_a = std::max(summary.neighbor_a, a);
        summary.neighbor_b = std::max(summary.neighbor_b, b);
        pending_residual = std::max({pending_residual, a, b});
        summary.checks += 2;
      }
      if (!options.probe_points.empty()) {
        const double f_k = eval_global_objective(problem, x_k);
        const double gr = weight(gamma, options.r);
        const double c = options.invariants->C_F + eta * options.invariants->C_f;
        for (std::size_t p = 0; p < options.probe_points.size(); ++p) {
          const Vector& y = options.probe_points[p];
          const double lhs = 2.0 * gr * (eta * (f_k - probe_f[p]) + probe_F[p].dot(x_k - y));
          const double rhs = (gr / gamma) * ((x_k - y).squaredNorm() - (x_next - y).squaredNorm()) +
                             gr * gamma * c * c;
          summary.pseudo_bound = std::max(summary.pseudo_bound, lhs - rhs);
          pending_residual = std::max(pending_residual, lhs - rhs);
          ++summary.checks;
        }
      }
    }
    if (options.keep_history) trace.history.push_back(state.local);

    end_epoch(state);
    log_if_due();
  }
  } catch (const NumericalError& e) {
    throw TruncatedRunError(e.what(), std::move(trace));
  }

  result.state = std::move(state);
  return result;
}

}  // namespace pairig
