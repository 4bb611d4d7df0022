// Command-line front end: run experiments, validate problems, evaluate the
// rate bounds and query the small affine VI oracle.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pairig/baselines.hpp"
#include "pairig/errors.hpp"
#include "pairig/experiments.hpp"
#include "pairig/metrics.hpp"

namespace {

constexpr int kUsageError = 2;
constexpr int kNumericalError = 3;
constexpr int kInvariantFailure = 1;

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw pairig::ArgumentError(what + ": cannot parse '" + item + "' as a number");
    }
  }
  if (out.empty()) throw pairig::ArgumentError(what + ": empty list");
  return out;
}

/// "identityN" or rows separated by ';' with comma-separated entries.
pairig::Matrix parse_matrix(const std::string& text) {
  if (text.rfind("identity", 0) == 0) {
    const int n = std::stoi(text.substr(8));
    if (n < 1) throw pairig::ArgumentError("--M: identity size must be positive");
    return pairig::Matrix::Identity(n, n);
  }
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(parse_list(row, "--M"));
  const auto n = static_cast<Eigen::Index>(rows.size());
  pairig::Matrix M(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n) {
      throw pairig::ArgumentError("--M: matrix must be square");
    }
    for (Eigen::Index c = 0; c < n; ++c) M(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return M;
}

std::string format_point(const pairig::Vector& x) {
  std::string out = "(";
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    char buf[32];
    double v = x[j];
    if (std::abs(v) < 1e-12) v = 0.0;
    std::snprintf(buf, sizeof buf, "%.10g", v);
    out += (j ? ", " : "") + std::string(buf);
  }
  return out + ")";
}

int cmd_run(const std::string& config_path, const std::string& out_path) {
  auto config = pairig::load_config(config_path);
  if (!out_path.empty()) config.output = out_path;
  const auto outcome = pairig::run_experiment(config);
  std::cout << "trace: " << outcome.trace_path.string() << "\n"
            << "sidecar: " << outcome.sidecar_path.string() << "\n"
            << "records: " << outcome.trace.records.size() << "\n";
  if (outcome.truncated) {
    std::cerr << "run truncated: " << outcome.message << "\n";
    return kNumericalError;
  }
  if (!outcome.invariants_ok) {
    std::cerr << "invariant checks failed (see sidecar)\n";
    return kInvariantFailure;
  }
  return 0;
}

int cmd_validate(const std::string& config_path, std::size_t samples, double box_radius) {
  const auto config = pairig::load_config(config_path);
  const auto built = pairig::build_problem(config);
  const auto& problem = built.problem;
  pairig::ValidationOptions options;
  options.sample_count = samples;
  options.seed = config.seed;
  if (!problem.set().is_bounded()) {
    const auto n = static_cast<Eigen::Index>(problem.dim());
    options.sampling_box = pairig::Box{pairig::Vector::Constant(n, -box_radius),
                                       pairig::Vector::Constant(n, box_radius)};
  }
  const auto report = pairig::validate_problem(problem, options);
  std::cout << "problem: " << problem.metadata().name << " (dim " << problem.dim() << ", "
            << problem.agent_count() << " agents)\n"
            << "pairs checked: " << report.pairs_checked << "\n";
  for (const auto& issue : report.issues) {
    std::cout << "  " << pairig::to_string(issue.kind) << " agent " << issue.agent << ": "
              << issue.detail << "\n";
  }
  std::cout << (report.passed() ? "validation passed" : "validation FAILED") << "\n";
  return report.passed() ? 0 : kInvariantFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pair-IG solver and experiment harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("--config", config_path, "Config file (schema pairig-config/1)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_path, "Trace CSV path (overrides the config's output)");

  std::size_t samples = 200;
  double box_radius = 1000.0;
  auto* validate = app.add_subcommand("validate", "Sampled convexity/monotonicity checks of a configured problem");
  validate->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  validate->add_option("--samples", samples, "Sample pairs")->capture_default_str();
  validate->add_option("--box-radius", box_radius, "Sampling box radius for unbounded sets")->capture_default_str();

  std::size_t N = 0;
  std::size_t m = 1;
  std::size_t agent = 0;
  pairig::RateBoundParams params{1.0, 1.0, 0.25, 0.0};
  pairig::ConstantsEstimate constants;
  pairig::InitializationTerms init;
  double eps = 0.0;
  auto* bounds = app.add_subcommand("bounds", "Evaluate the agent-wise rate bounds for given constants");
  bounds->add_option("--N", N, "Epoch count")->required();
  bounds->add_option("--gamma0", params.gamma0, "Initial stepsize")->capture_default_str();
  bounds->add_option("--eta0", params.eta0, "Initial regularization")->capture_default_str();
  bounds->add_option("--b", params.b, "Regularization decay exponent in (0, 0.5)")->capture_default_str();
  bounds->add_option("--r", params.r, "Averaging exponent in [0, 1)")->capture_default_str();
  bounds->add_option("--m", m, "Number of agents")->capture_default_str();
  bounds->add_option("--i", agent, "Agent index (default m)");
  bounds->add_option("--Cf", constants.C_f, "Subgradient bound C_f")->required();
  bounds->add_option("--CF", constants.C_F, "Mapping bound C_F")->required();
  bounds->add_option("--MX", constants.M_X, "Set norm bound M_X")->required();
  bounds->add_option("--Mf", constants.M_f, "Objective bound M_f")->required();
  bounds->add_option("--f-init", init.f_init_diff, "f(xbar_{0,m}) - f(x_{0,1})")->capture_default_str();
  bounds->add_option("--dist-im", init.dist_i_m, "||xbar_{0,i} - xbar_{0,m}||")->capture_default_str();
  bounds->add_option("--dist-mx0", init.dist_m_x0, "||xbar_{0,m} - x_{0,1}||")->capture_default_str();
  bounds->add_option("--eps", eps, "Also print the iteration complexity for this accuracy");

  std::string M_text;
  std::string q_text;
  std::string box_text;
  auto* oracle = app.add_subcommand("oracle", "Solve VI(box, Mx + q) with n <= 3 by face enumeration");
  oracle->add_option("--M", M_text, "identityN or rows 'a,b;c,d'")->required();
  oracle->add_option("--q", q_text, "Comma-separated offset")->required();
  oracle->add_option("--box", box_text, "lower,upper applied to every coordinate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*run) return cmd_run(config_path, out_path);
    if (*validate) return cmd_validate(config_path, samples, box_radius);
    if (*bounds) {
      const std::size_t i = agent == 0 ? m : agent;
      const double sub = pairig::rate_bound_suboptimality(constants, params, init, m, i, N);
      const double gap = pairig::rate_bound_gap(constants, params, init, m, i, N);
      std::cout << "suboptimality_bound " << sub << "\n"
                << "gap_bound " << gap << "\n";
      if (eps > 0.0) {
        std::cout << "iteration_complexity " << pairig::iteration_complexity(constants.C_f, constants.C_F, eps) << "\n";
      }
      return 0;
    }
    if (*oracle) {
      const pairig::Matrix M = parse_matrix(M_text);
      const auto q_list = parse_list(q_text, "--q");
      const auto box = parse_list(box_text, "--box");
      if (box.size() != 2) throw pairig::ArgumentError("--box: expected lower,upper");
      const auto n = static_cast<Eigen::Index>(q_list.size());
      const pairig::Vector q = Eigen::Map<const pairig::Vector>(q_list.data(), n);
      const pairig::Box set{pairig::Vector::Constant(n, box[0]), pairig::Vector::Constant(n, box[1])};
      std::cout << format_point(pairig::brute_force_affine_vi(M, q, set)) << "\n";
      return 0;
    }
  } catch (const pairig::PreconditionError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kUsageError;
  } catch (const pairig::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const pairig::ConfigurationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const pairig::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const pairig::UnsupportedError& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}
