#include "irsac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace irsac {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::pdd_irs: return "pdd_irs";
    case Algorithm::random_irs: return "random_irs";
    case Algorithm::no_irs: return "no_irs";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "pdd_irs") return Algorithm::pdd_irs;
  if (name == "random_irs") return Algorithm::random_irs;
  if (name == "no_irs") return Algorithm::no_irs;
  throw std::invalid_argument("unknown algorithm '" + name +
                              "' (expected pdd_irs, random_irs or no_irs)");
}

SolveResult solve_fixed_theta(const ChannelSet& ch, const Scenario& scenario,
                              const PddConfig& config, const VectorXcd& theta_fixed) {
  if (theta_fixed.size() != ch.n_irs_elements())
    throw std::invalid_argument("solve_fixed_theta: theta has the wrong length");
  if (theta_fixed.size() > 0) require_unit_modulus(theta_fixed);
  Scenario flat = scenario;
  flat.n_irs_elements = 0;
  SolveResult res = pdd_solve(ch.folded(theta_fixed), flat, config);
  res.theta = theta_fixed;
  return res;
}

SolveResult run_no_irs(const ChannelSet& ch, const Scenario& scenario, const PddConfig& config) {
  Scenario flat = scenario;
  flat.n_irs_elements = 0;
  return pdd_solve(ch.without_irs(), flat, config);
}

VectorXcd random_phases(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  VectorXcd theta(n);
  for (int k = 0; k < n; ++k) theta(k) = std::polar(1.0, phase(rng));
  return theta;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index);
}

void ExperimentPlan::validate() const {
  scenario.validate();
  pdd.validate();
  if (n_trials < 1) throw std::invalid_argument("experiment.n_trials: must be >= 1");
  if (qos_grid_db.empty()) throw std::invalid_argument("experiment.qos_grid_db: must not be empty");
  for (std::size_t i = 1; i < qos_grid_db.size(); ++i)
    if (!(qos_grid_db[i - 1] < qos_grid_db[i]))
      throw std::invalid_argument("experiment.qos_grid_db: must be strictly increasing");
  if (algorithms.empty()) throw std::invalid_argument("experiment.algorithms: must not be empty");
}

MetricsRecord run_trial(const ExperimentPlan& plan, Algorithm algorithm, double gamma_db,
                        int trial) {
  MetricsRecord rec;
  rec.algorithm = algorithm;
  rec.gamma_db = gamma_db;
  rec.trial = trial;
  const auto idx = static_cast<std::uint64_t>(trial);
  try {
    Scenario sc = plan.scenario;
    sc.set_uniform_qos_db(gamma_db);
    const ChannelSet ch = generate_channels(sc, derive_seed(plan.base_seed, kChannelStream, idx));
    PddConfig cfg = plan.pdd;
    cfg.seed = derive_seed(plan.base_seed, kSolverStream, idx);

    SolveResult res;
    switch (algorithm) {
      case Algorithm::pdd_irs:
        res = pdd_solve(ch, sc, cfg);
        break;
      case Algorithm::random_irs:
        res = solve_fixed_theta(
            ch, sc, cfg,
            random_phases(ch.n_irs_elements(), derive_seed(plan.base_seed, kPhaseStream, idx)));
        break;
      case Algorithm::no_irs:
        res = run_no_irs(ch, sc, cfg);
        break;
    }
    rec.n_admitted = res.n_admitted;
    rec.power_w = res.power_w;
    rec.wall_time_s = res.wall_time_s;
    rec.converged = res.converged();
    rec.outer_iters = static_cast<int>(res.outer_trace.size());
  } catch (const std::exception& e) {
    rec.converged = false;
    rec.error = e.what();
  }
  return rec;
}

std::vector<MetricsRecord> monte_carlo(const ExperimentPlan& plan, int workers,
                                       const RecordCallback& on_record) {
  plan.validate();
  struct Task {
    Algorithm algorithm;
    double gamma_db;
    int trial;
  };
  std::vector<Task> tasks;
  for (double g : plan.qos_grid_db)
    for (Algorithm a : plan.algorithms)
      for (int t = 0; t < plan.n_trials; ++t) tasks.push_back({a, g, t});

  std::vector<MetricsRecord> out(tasks.size());
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, static_cast<int>(tasks.size()));

  std::atomic<std::size_t> next{0};
  std::mutex report;
  auto work = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      out[i] = run_trial(plan, tasks[i].algorithm, tasks[i].gamma_db, tasks[i].trial);
      if (on_record) {
        std::lock_guard lock(report);
        on_record(i, out[i]);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

namespace {

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

}  // namespace

std::vector<SummaryRow> aggregate(const std::vector<MetricsRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  struct Group {
    std::vector<double> admitted, power, time;
    int converged = 0;
    int failed = 0;
  };
  std::vector<std::pair<Algorithm, double>> keys;
  std::map<std::pair<int, double>, Group> groups;
  for (const MetricsRecord& r : records) {
    const auto key = std::make_pair(static_cast<int>(r.algorithm), r.gamma_db);
    if (!groups.contains(key)) keys.emplace_back(r.algorithm, r.gamma_db);
    Group& g = groups[key];
    g.admitted.push_back(r.n_admitted);
    g.power.push_back(r.power_w);
    g.time.push_back(r.wall_time_s);
    g.converged += r.converged;
    g.failed += !r.error.empty();
  }

  std::vector<SummaryRow> rows;
  for (const auto& [alg, gamma] : keys) {
    const Group& g = groups.at({static_cast<int>(alg), gamma});
    SummaryRow row;
    row.algorithm = alg;
    row.gamma_db = gamma;
    row.n = static_cast<int>(g.admitted.size());
    const Moments a = moments(g.admitted), p = moments(g.power), t = moments(g.time);
    row.mean_admitted = a.mean;
    row.std_admitted = a.sd;
    row.mean_power_w = p.mean;
    row.std_power_w = p.sd;
    row.mean_time_s = t.mean;
    row.std_time_s = t.sd;
    row.convergence_rate = static_cast<double>(g.converged) / row.n;
    row.n_failed = g.failed;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::vector<ConvergenceRun> convergence_study(const ChannelSet& ch, const Scenario& scenario,
                                              const PddConfig& config,
                                              const std::vector<double>& rho0_list,
                                              const std::vector<double>& tau_list) {
  if (rho0_list.empty() || tau_list.empty())
    throw std::invalid_argument("convergence_study: rho0 and tau lists must not be empty");
  std::vector<ConvergenceRun> runs;
  for (double rho0 : rho0_list) {
    for (double tau : tau_list) {
      PddConfig cfg = config;
      cfg.rho0 = rho0;
      cfg.tau = tau;
      runs.push_back({rho0, tau, pdd_solve(ch, scenario, cfg)});
    }
  }
  return runs;
}

BenchRow bench_size(const Scenario& base, const PddConfig& config, ProblemSize size,
                    std::uint64_t seed) {
  if (size.M < 1 || size.N < 1 || size.K < 0)
    throw std::invalid_argument("bench_size: sizes must be positive");
  Scenario sc = base;
  sc.n_users = size.M;
  sc.n_antennas = size.N;
  sc.n_irs_elements = size.K;
  sc.noise_power_w = VectorXd::Constant(size.M, base.noise_power_w(0));
  sc.qos_target = VectorXd::Constant(size.M, base.qos_target(0));
  const ChannelSet ch = generate_channels(sc, derive_seed(seed, kChannelStream, 0));
  PddConfig cfg = config;
  cfg.seed = derive_seed(seed, kSolverStream, 0);
  const SolveResult res = pdd_solve(ch, sc, cfg);

  std::vector<double> times;
  for (const OuterRecord& r : res.outer_trace) times.push_back(r.wall_time_s);
  std::sort(times.begin(), times.end());
  BenchRow row;
  row.size = size;
  const std::size_t n = times.size();
  row.median_iter_time_s = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  row.total_time_s = res.wall_time_s;
  row.outer_iters = static_cast<int>(n);
  row.converged = res.converged();
  return row;
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& os, const std::vector<OuterRecord>& trace) {
  os << kTraceHeader << '\n';
  for (const OuterRecord& r : trace)
    os << r.outer_iter << ',' << format_double(r.sigma) << ',' << format_double(r.al_value) << ','
       << format_double(r.rho) << ',' << format_double(r.eta) << ',' << r.n_admitted << ','
       << format_double(r.power_w) << '\n';
}

std::string records_csv_row(const MetricsRecord& r, bool deterministic) {
  std::ostringstream os;
  os << to_string(r.algorithm) << ',' << format_double(r.gamma_db) << ',' << r.trial << ','
     << r.n_admitted << ',' << format_double(r.power_w) << ','
     << format_double(deterministic ? 0.0 : r.wall_time_s) << ','
     << (r.converged ? "true" : "false") << ',' << r.outer_iters;
  return os.str();
}

void write_records_csv(std::ostream& os, const std::vector<MetricsRecord>& records,
                       bool deterministic) {
  os << kRecordsHeader << '\n';
  for (const MetricsRecord& r : records) os << records_csv_row(r, deterministic) << '\n';
}

namespace {

double parse_number(const std::string& s, int line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("records line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<MetricsRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kRecordsHeader)
    throw std::runtime_error("records line 1: unexpected header");
  std::vector<MetricsRecord> out;
  for (int ln = 2; std::getline(is, line); ++ln) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 8)
      throw std::runtime_error("records line " + std::to_string(ln) + ": expected 8 fields");
    MetricsRecord r;
    r.algorithm = algorithm_from_string(f[0]);
    r.gamma_db = parse_number(f[1], ln);
    r.trial = static_cast<int>(parse_number(f[2], ln));
    r.n_admitted = static_cast<int>(parse_number(f[3], ln));
    r.power_w = parse_number(f[4], ln);
    r.wall_time_s = parse_number(f[5], ln);
    if (f[6] != "true" && f[6] != "false")
      throw std::runtime_error("records line " + std::to_string(ln) + ": bad converged flag");
    r.converged = f[6] == "true";
    r.outer_iters = static_cast<int>(parse_number(f[7], ln));
    out.push_back(r);
  }
  return out;
}

}  // namespace irsac
