#pragma once

// JSON configuration and result documents.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "irsac/harness.hpp"

namespace irsac {

/// Configuration problem. `line()` is 1-based, or 0 when no location applies.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// Parses "s" (M = N = K = s) or "MxNxK".
ProblemSize parse_problem_size(const std::string& text);

struct ExperimentSettings {
  std::vector<double> qos_grid_db;
  std::vector<Algorithm> algorithms{Algorithm::pdd_irs, Algorithm::random_irs,
                                    Algorithm::no_irs};
  int n_trials = 1;
  std::uint64_t base_seed = 0;
  int workers = 0;
  std::vector<double> convergence_rho0{0.1, 1.0, 10.0};
  std::vector<double> convergence_tau{1e-3, 1e-4};
  std::vector<ProblemSize> bench_sizes{{16, 16, 16}, {32, 32, 32}, {64, 64, 64}};
};

/// One JSON document with a required "scenario" block and optional "pdd" and
/// "experiment" blocks. Scenario powers are given in dB units: noise_dbm,
/// power_budget_dbm and qos_db (scalars or per-user arrays).
struct AppConfig {
  Scenario scenario;
  PddConfig pdd;
  ExperimentSettings experiment;
  /// qos_db / noise_dbm as written, echoed back in result files.
  std::vector<double> qos_db;
  std::vector<double> noise_dbm;
  double power_budget_dbm = 30.0;
};

AppConfig parse_config(const std::string& text, const std::string& source = "<config>");
AppConfig load_config(const std::string& path);

/// The fully defaulted configuration as JSON text (what was actually run).
std::string config_to_json(const AppConfig& cfg, int indent = 2);

ExperimentPlan make_plan(const AppConfig& cfg);

/// Solution document: admission mask, power, SINRs, phases, status, seed and config echo.
/// `deterministic` writes 0 for timing fields.
std::string solution_json(const AppConfig& cfg, std::uint64_t seed, const SolveResult& res,
                          bool deterministic);

std::string summary_json(const AppConfig& cfg, const std::vector<SummaryRow>& rows,
                         std::size_t n_records);

}  // namespace irsac
