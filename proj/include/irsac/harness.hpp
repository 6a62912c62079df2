#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "irsac/pdd.hpp"

namespace irsac {

enum class Algorithm { pdd_irs, random_irs, no_irs };

std::string to_string(Algorithm a);
/// Throws std::invalid_argument for unknown names.
Algorithm algorithm_from_string(const std::string& name);

/// Runs the PDD machinery on the direct channels obtained by folding a fixed phase vector
/// into the cascaded links, so only W, the gaps, E and c are optimised. The returned
/// result reports `theta_fixed` as its phase vector.
SolveResult solve_fixed_theta(const ChannelSet& ch, const Scenario& scenario,
                              const PddConfig& config, const VectorXcd& theta_fixed);

/// solve_fixed_theta with the IRS removed altogether (cascaded channels treated as zero).
SolveResult run_no_irs(const ChannelSet& ch, const Scenario& scenario, const PddConfig& config);

/// Uniform random unit-modulus phases, deterministic in `seed`.
VectorXcd random_phases(int n, std::uint64_t seed);

/// splitmix64 over (base, stream, index). Stream 0 draws channels, 1 the solver start,
/// 2 the random-IRS phases.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

inline constexpr std::uint64_t kChannelStream = 0;
inline constexpr std::uint64_t kSolverStream = 1;
inline constexpr std::uint64_t kPhaseStream = 2;

struct ExperimentPlan {
  Scenario scenario;
  PddConfig pdd;
  std::vector<double> qos_grid_db;
  std::vector<Algorithm> algorithms{Algorithm::pdd_irs, Algorithm::random_irs,
                                    Algorithm::no_irs};
  int n_trials = 1;
  std::uint64_t base_seed = 0;

  void validate() const;
};

struct MetricsRecord {
  Algorithm algorithm = Algorithm::pdd_irs;
  double gamma_db = 0.0;
  int trial = 0;
  int n_admitted = 0;
  double power_w = 0.0;
  double wall_time_s = 0.0;
  bool converged = false;
  int outer_iters = 0;
  std::string error;  // non-empty when the trial threw
};

/// One trial: channels from derive_seed(base_seed, kChannelStream, trial), shared by every
/// QoS point and algorithm so comparisons are paired.
MetricsRecord run_trial(const ExperimentPlan& plan, Algorithm algorithm, double gamma_db,
                        int trial);

/// All (gamma, algorithm, trial) combinations, ordered by that key regardless of which
/// worker finished first. `workers` <= 0 means hardware concurrency. Failed trials are
/// recorded with converged = false. `on_record` (optional) receives each finished trial
/// with its position in the returned vector; calls come from worker threads but are
/// serialised by the runner.
using RecordCallback = std::function<void(std::size_t, const MetricsRecord&)>;
std::vector<MetricsRecord> monte_carlo(const ExperimentPlan& plan, int workers = 0,
                                       const RecordCallback& on_record = {});

struct SummaryRow {
  Algorithm algorithm = Algorithm::pdd_irs;
  double gamma_db = 0.0;
  int n = 0;
  double mean_admitted = 0.0;
  double std_admitted = 0.0;  // sample standard deviation (n - 1), 0 for n = 1
  double mean_power_w = 0.0;
  double std_power_w = 0.0;
  double mean_time_s = 0.0;
  double std_time_s = 0.0;
  double convergence_rate = 0.0;
  int n_failed = 0;
};

/// Groups by (algorithm, gamma_db) in order of first appearance. Throws on empty input.
std::vector<SummaryRow> aggregate(const std::vector<MetricsRecord>& records);

// ---- convergence and timing studies ----------------------------------------------

/// One pdd_solve per (rho0, tau) pair on the same channels and start, rho0-major.
struct ConvergenceRun {
  double rho0 = 0.0;
  double tau = 0.0;
  SolveResult result;
};
std::vector<ConvergenceRun> convergence_study(const ChannelSet& ch, const Scenario& scenario,
                                              const PddConfig& config,
                                              const std::vector<double>& rho0_list,
                                              const std::vector<double>& tau_list);

struct ProblemSize {
  int M = 0;
  int N = 0;
  int K = 0;
};

struct BenchRow {
  ProblemSize size;
  double median_iter_time_s = 0.0;  // median over outer iterations
  double total_time_s = 0.0;
  int outer_iters = 0;
  bool converged = false;
};

/// Times one pdd_solve on `base` resized to `size` (per-user noise and QoS taken from user
/// 0 of `base`), channels from derive_seed(seed, kChannelStream, 0).
BenchRow bench_size(const Scenario& base, const PddConfig& config, ProblemSize size,
                    std::uint64_t seed);

// ---- file formats ------------------------------------------------------------

inline constexpr const char* kTraceHeader = "outer_iter,sigma,al_value,rho,eta,n_admitted,power_w";
inline constexpr const char* kRecordsHeader =
    "algorithm,gamma_db,trial,n_admitted,power_w,wall_time_s,converged,outer_iters";
inline constexpr const char* kConvergenceHeader = "rho0,tau,outer_iter,sigma,al_value";
inline constexpr const char* kBenchHeader = "M,N,K,median_iter_time_s,total_time_s";

/// Shortest round-trip decimal representation.
std::string format_double(double v);

void write_trace_csv(std::ostream& os, const std::vector<OuterRecord>& trace);
/// `deterministic` writes 0 in every timing column.
void write_records_csv(std::ostream& os, const std::vector<MetricsRecord>& records,
                       bool deterministic);
std::string records_csv_row(const MetricsRecord& r, bool deterministic);
/// Inverse of write_records_csv; throws std::runtime_error on a malformed line.
std::vector<MetricsRecord> read_records_csv(std::istream& is);

}  // namespace irsac
