// irsac: single solves, QoS sweeps, convergence traces and timing runs from a JSON config.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "irsac/harness.hpp"
#include "irsac/io.hpp"

namespace fs = std::filesystem;
using namespace irsac;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct CommonOptions {
  std::string config;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string output = ".";
  bool deterministic = false;
  int verbosity = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON configuration file")->required();
  cmd->add_option("--seed", o.seed, "Base seed (defaults to experiment.base_seed)");
  cmd->add_option("--workers", o.workers, "Worker threads (0 = machine parallelism)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--output", o.output, "Output directory (created if missing)");
  cmd->add_flag("--deterministic-output", o.deterministic,
                "Write 0 in timing fields so reruns are byte-identical");
  cmd->add_flag("-v,--verbose", o.verbosity, "Progress on stderr (repeat for more)");
}

std::ofstream open_output(const CommonOptions& o, const std::string& name) {
  fs::create_directories(o.output);
  const fs::path path = fs::path(o.output) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::uint64_t effective_seed(const CLI::App* cmd, const CommonOptions& o, const AppConfig& cfg) {
  return cmd->count("--seed") ? o.seed : cfg.experiment.base_seed;
}

int effective_workers(const CLI::App* cmd, const CommonOptions& o, const AppConfig& cfg) {
  const int w = cmd->count("--workers") ? o.workers : cfg.experiment.workers;
  return w > 0 ? w : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

int cmd_solve(const CLI::App* cmd, const CommonOptions& o) {
  AppConfig cfg = load_config(o.config);
  const std::uint64_t seed = effective_seed(cmd, o, cfg);
  const ChannelSet ch = generate_channels(cfg.scenario, derive_seed(seed, kChannelStream, 0));
  PddConfig pdd = cfg.pdd;
  pdd.seed = derive_seed(seed, kSolverStream, 0);
  const SolveResult res = pdd_solve(ch, cfg.scenario, pdd);

  open_output(o, "solution.json") << solution_json(cfg, seed, res, o.deterministic);
  {
    std::ofstream trace = open_output(o, "trace.csv");
    write_trace_csv(trace, res.outer_trace);
  }
  std::cout << "status=" << to_string(res.status) << " admitted=" << res.n_admitted << "/"
            << cfg.scenario.n_users << " power_w=" << format_double(res.power_w)
            << " outer_iters=" << res.outer_trace.size() << "\n";
  return kExitOk;
}

int cmd_sweep(const CLI::App* cmd, const CommonOptions& o) {
  AppConfig cfg = load_config(o.config);
  ExperimentPlan plan = make_plan(cfg);
  plan.base_seed = effective_seed(cmd, o, cfg);
  cfg.experiment.base_seed = plan.base_seed;
  const int workers = effective_workers(cmd, o, cfg);

  // Rows are written in (gamma, algorithm, trial) order as soon as every earlier row is done.
  std::ofstream csv = open_output(o, "records.csv");
  csv << kRecordsHeader << '\n';
  std::map<std::size_t, MetricsRecord> pending;
  std::size_t next_row = 0;
  std::size_t done = 0;
  const std::size_t total =
      plan.qos_grid_db.size() * plan.algorithms.size() * static_cast<std::size_t>(plan.n_trials);
  auto on_record = [&](std::size_t index, const MetricsRecord& r) {
    pending.emplace(index, r);
    for (auto it = pending.find(next_row); it != pending.end(); it = pending.find(next_row)) {
      csv << records_csv_row(it->second, o.deterministic) << '\n';
      pending.erase(it);
      ++next_row;
    }
    csv.flush();
    ++done;
    if (o.verbosity > 0)
      std::cerr << "[" << done << "/" << total << "] " << to_string(r.algorithm)
                << " gamma_db=" << format_double(r.gamma_db) << " trial=" << r.trial
                << " admitted=" << r.n_admitted << (r.error.empty() ? "" : " error: " + r.error)
                << "\n";
  };
  std::vector<MetricsRecord> records = monte_carlo(plan, workers, on_record);

  if (o.deterministic)
    for (MetricsRecord& r : records) r.wall_time_s = 0.0;
  const std::vector<SummaryRow> rows = aggregate(records);
  open_output(o, "summary.json") << summary_json(cfg, rows, records.size());

  for (const SummaryRow& r : rows)
    std::cout << to_string(r.algorithm) << " gamma_db=" << format_double(r.gamma_db)
              << " mean_admitted=" << format_double(r.mean_admitted)
              << " mean_power_w=" << format_double(r.mean_power_w)
              << " converged=" << format_double(r.convergence_rate) << "\n";
  return kExitOk;
}

int cmd_convergence(const CLI::App* cmd, const CommonOptions& o, std::vector<double> rho0,
                    std::vector<double> tau) {
  AppConfig cfg = load_config(o.config);
  if (!cmd->count("--rho")) rho0 = cfg.experiment.convergence_rho0;
  if (!cmd->count("--tau")) tau = cfg.experiment.convergence_tau;
  for (double v : rho0)
    if (!(v > 0.0)) throw std::invalid_argument("--rho values must be > 0");
  for (double v : tau)
    if (!(v > 0.0)) throw std::invalid_argument("--tau values must be > 0");

  const std::uint64_t seed = effective_seed(cmd, o, cfg);
  const ChannelSet ch = generate_channels(cfg.scenario, derive_seed(seed, kChannelStream, 0));
  PddConfig pdd = cfg.pdd;
  pdd.seed = derive_seed(seed, kSolverStream, 0);
  const std::vector<ConvergenceRun> runs = convergence_study(ch, cfg.scenario, pdd, rho0, tau);

  std::ofstream csv = open_output(o, "convergence.csv");
  csv << kConvergenceHeader << '\n';
  for (const ConvergenceRun& run : runs) {
    for (const OuterRecord& r : run.result.outer_trace)
      csv << format_double(run.rho0) << ',' << format_double(run.tau) << ',' << r.outer_iter
          << ',' << format_double(r.sigma) << ',' << format_double(r.al_value) << '\n';
    std::cout << "rho0=" << format_double(run.rho0) << " tau=" << format_double(run.tau)
              << " status=" << to_string(run.result.status)
              << " objective=" << format_double(run.result.objective)
              << " outer_iters=" << run.result.outer_trace.size() << "\n";
  }
  return kExitOk;
}

int cmd_bench(const CLI::App* cmd, const CommonOptions& o,
              const std::vector<std::string>& size_args) {
  AppConfig cfg = load_config(o.config);
  std::vector<ProblemSize> sizes = cfg.experiment.bench_sizes;
  if (cmd->count("--sizes")) {
    sizes.clear();
    for (const std::string& s : size_args) sizes.push_back(parse_problem_size(s));
  }
  const std::uint64_t seed = effective_seed(cmd, o, cfg);

  std::ofstream csv = open_output(o, "bench.csv");
  csv << kBenchHeader << '\n';
  for (const ProblemSize& z : sizes) {
    const BenchRow row = bench_size(cfg.scenario, cfg.pdd, z, seed);
    const double med = o.deterministic ? 0.0 : row.median_iter_time_s;
    const double tot = o.deterministic ? 0.0 : row.total_time_s;
    csv << z.M << ',' << z.N << ',' << z.K << ',' << format_double(med) << ','
        << format_double(tot) << '\n';
    csv.flush();
    std::cout << "M=" << z.M << " N=" << z.N << " K=" << z.K
              << " median_iter_time_s=" << format_double(row.median_iter_time_s)
              << " total_time_s=" << format_double(row.total_time_s)
              << " outer_iters=" << row.outer_iters << (row.converged ? "" : " (not converged)")
              << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint admission control and power minimisation for IRS-assisted downlinks"};
  app.require_subcommand(1);

  CommonOptions solve_o, sweep_o, conv_o, bench_o;
  auto* solve = app.add_subcommand("solve", "One solve; writes solution.json and trace.csv");
  add_common(solve, solve_o);
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo QoS sweep; writes records.csv and summary.json");
  add_common(sweep, sweep_o);
  auto* conv = app.add_subcommand("convergence", "Traces for each (rho0, tau) pair; writes convergence.csv");
  add_common(conv, conv_o);
  std::vector<double> rho_list, tau_list;
  conv->add_option("--rho", rho_list, "Initial penalty values (default from config)")->delimiter(',');
  conv->add_option("--tau", tau_list, "Stopping thresholds (default from config)")->delimiter(',');
  auto* bench = app.add_subcommand("bench", "Timing across problem sizes; writes bench.csv");
  add_common(bench, bench_o);
  std::vector<std::string> size_list;
  bench->add_option("--sizes", size_list, "Sizes as s or MxNxK, comma separated")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(solve, solve_o);
    if (*sweep) return cmd_sweep(sweep, sweep_o);
    if (*conv) return cmd_convergence(conv, conv_o, rho_list, tau_list);
    if (*bench) return cmd_bench(bench, bench_o, size_list);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure in " << e.block() << ": " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
