#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pairig/baselines.hpp"
#include "pairig/geometry.hpp"
#include "pairig/metrics.hpp"
#include "pairig/problem.hpp"
#include "pairig/schedule.hpp"
#include "pairig/solver.hpp"

namespace pairig {

// ---------------------------------------------------------------------------
// Traffic equilibrium (Wardrop NCP) with sampled demands and costs.

struct TrafficNetworkSpec {
  Matrix C;
  Vector q;
  Matrix B;
  Vector demand_mean;
  Vector demand_std;
  double cost_std = 300.0;
  std::size_t samples = 1000;
  std::size_t agents = 10;
  /// Required: every draw must be reproducible.
  std::optional<std::uint64_t> seed;
  /// CellMean scales each agent's data by 1/|S_i|; Sum keeps raw sums.
  SampleAggregation aggregation = SampleAggregation::CellMean;

  /// Five-arc, two-OD-pair network with the published cost data.
  static TrafficNetworkSpec standard();
};

/// One draw xi_l = (d_l, q_l) of demand and arc-cost offsets.
struct TrafficSample {
  Vector demand;
  Vector cost_offset;
};

/// [[C, -B^T], [B, 0]]: the sample-independent linear part of F(., xi).
Matrix traffic_block_matrix(const Matrix& C, const Matrix& B);

/// Draws the samples in a fixed order: for each l, the two demands, then the
/// five cost offsets.
std::vector<TrafficSample> draw_traffic_samples(const TrafficNetworkSpec& spec);

/// NCP over R^7_+ in x = (h, u): F(x, xi) = [[C, -B^T], [B, 0]] x + (q_l, -d_l)
/// and f(x, xi) = (C h + q_l)^T 1_5, aggregated per agent.
VIConstrainedProblem build_traffic_problem(const TrafficNetworkSpec& spec);

// ---------------------------------------------------------------------------
// Distributed soft-margin SVM.

struct SvmDatasetSpec {
  std::size_t features = 50;  ///< n
  std::size_t samples = 100;  ///< |S|
  std::size_t agents = 20;    ///< m
  double lambda = 10.0;
  /// Cluster centres at +-separation * 1_n / sqrt(n), unit variance.
  double separation = 1.5;
  double box_radius = 1000.0;
  std::optional<std::uint64_t> seed;
};

struct SvmDataset {
  Matrix features;  ///< |S| x n, row j is u_j
  Vector labels;    ///< v_j in {-1, +1}
};

/// Draw order per sample: label (uniform < 0.5 gives +1), then n normals.
SvmDataset generate_synthetic_svm_data(const SvmDatasetSpec& spec);

/// Constraint block of agent i (zero-based) over x = (w, b, z):
/// g_j(x) = 1 - z_j - v_j (w^T u_j + b) <= 0 and -z_j <= 0 for j in S_i.
std::vector<ConstraintBlock> svm_constraint_blocks(const SvmDatasetSpec& spec, const SvmDataset& data);

/// Agent i: f_i = ||w||^2/(2m) + (1/lambda) sum_{j in S_i} z_j and F_i the
/// penalty mapping of its block; X = [-R, R]^{n+1+|S|}.
VIConstrainedProblem build_svm_problem(const SvmDatasetSpec& spec, const SvmDataset& data);

/// sum_i (||A x - b||^2 + sum_j max{0, g_j(x)}^2) over all agents' blocks.
double svm_constraint_residual(const std::vector<ConstraintBlock>& blocks, const Vector& x);

/// The SVM feasible set intersected with the bounding box, as a polyhedron
/// (used by baselines, which project onto the full constraint set).
SetSpec svm_feasible_set(const SvmDatasetSpec& spec, const SvmDataset& data);

// ---------------------------------------------------------------------------
// Configuration and orchestration.

enum class SolverKind { PairIG, ProjectedIG, ProximalIAG, SAGA };
enum class Instrumentation { MetricsOnly, FullInvariants };

/// Affine agents over a box, read from a JSON document:
/// {"set": {"lower": [...], "upper": [...]},
///  "agents": [{"Q": [[...]], "c": [...], "M": [[...]], "q": [...]}, ...],
///  "mu_min": 0.5, "name": "..."}
struct CustomProblemSpec {
  std::filesystem::path path;
};

using ProblemSelector = std::variant<TrafficNetworkSpec, SvmDatasetSpec, CustomProblemSpec>;

struct ExperimentConfig {
  ProblemSelector problem = TrafficNetworkSpec::standard();
  SolverKind solver = SolverKind::PairIG;
  Schedule schedule = RateSchedule{0.1, 0.1, 0.25};
  /// Baselines: Diminishing uses gamma0 / sqrt(k+1) from the rate schedule.
  StepRule step_rule = StepRule::Diminishing;
  double r = 0.0;
  std::size_t epochs = 1000;
  std::uint64_t seed = 1;
  std::filesystem::path output = "trace.csv";
  Instrumentation instrumentation = Instrumentation::MetricsOnly;
  LogStride stride;
};

inline constexpr const char* kConfigSchema = "pairig-config/1";

/// Parses a JSON config. Unknown keys, missing required keys and wrong types
/// raise ConfigurationError naming the offending path.
ExperimentConfig parse_config(const std::string& json_text);
/// Like parse_config; a relative custom problem path is resolved against the
/// directory holding the config file.
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON form (round-trips through parse_config).
std::string config_to_json(const ExperimentConfig& config);

VIConstrainedProblem load_custom_problem(const std::filesystem::path& path);

/// Builds the selected problem; SVM problems also return their blocks.
struct BuiltProblem {
  VIConstrainedProblem problem;
  std::vector<ConstraintBlock> blocks;  ///< SVM only
  std::optional<SvmDataset> svm_data;
  std::function<double(const Vector&)> infeasibility;
  std::string infeasibility_name;
};
BuiltProblem build_problem(const ExperimentConfig& config);

struct ExperimentOutcome {
  RunTrace trace;
  std::filesystem::path trace_path;
  std::filesystem::path sidecar_path;
  /// False when full-invariants instrumentation found a violation.
  bool invariants_ok = true;
  bool truncated = false;
  std::string message;
};

/// build -> validate -> solve -> metrics; writes the CSV trace and the JSON
/// sidecar (config echo, constants, bounds, elapsed time). A run that aborts
/// with a numerical error still writes the records gathered so far followed
/// by a "# truncated: ..." line, and reports truncated = true.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

inline constexpr const char* kTraceHeader =
    "epoch,agent,gamma,eta,objective,infeasibility,consensus_dist,invariant_max_residual";

/// Writes one row per (record, agent); numbers use 17 significant digits.
void write_trace_csv(std::ostream& out, const RunTrace& trace);

}  // namespace pairig
