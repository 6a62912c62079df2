#include "irsac/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace irsac {

using nlohmann::json;

ConfigError::ConfigError(const std::string& source, int line, const std::string& what)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + what
                                  : source + ": " + what),
      line_(line) {}

ProblemSize parse_problem_size(const std::string& text) {
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty() || v < 1)
      throw std::invalid_argument("bad problem size '" + text + "' (expected s or MxNxK)");
    return v;
  };
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, 'x');) parts.push_back(p);
  if (parts.size() == 1) {
    const int s = to_int(parts[0]);
    return {s, s, s};
  }
  if (parts.size() == 3) return {to_int(parts[0]), to_int(parts[1]), to_int(parts[2])};
  throw std::invalid_argument("bad problem size '" + text + "' (expected s or MxNxK)");
}

namespace {

// Locates keys in the raw text so messages can point at a line; the DOM carries no
// positions. Falls back to the enclosing block, then to no line at all.
class Locator {
 public:
  Locator(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  int line_of(const std::string& block, const std::string& key = {}) const {
    const std::size_t b = text_.find('"' + block + '"');
    if (b == std::string::npos) return 0;
    if (key.empty()) return line_at(b);
    const std::size_t k = text_.find('"' + key + '"', b + block.size() + 2);
    return line_at(k == std::string::npos ? b : k);
  }

  [[noreturn]] void fail(const std::string& block, const std::string& key,
                         const std::string& what) const {
    throw ConfigError(source_, line_of(block, key), block + "." + key + ": " + what);
  }

  const std::string& source() const { return source_; }

 private:
  int line_at(std::size_t pos) const {
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(pos), '\n'));
  }

  const std::string& text_;
  std::string source_;
};

class Block {
 public:
  Block(const json& obj, std::string name, const Locator& loc)
      : obj_(obj), name_(std::move(name)), loc_(loc) {
    if (!obj_.is_object()) throw ConfigError(loc_.source(), loc_.line_of(name_), name_ + ": must be an object");
  }

  bool has(const std::string& key) const {
    used_.insert(key);
    return obj_.contains(key);
  }

  const json& require(const std::string& key) const {
    if (!has(key)) loc_.fail(name_, key, "missing required field");
    return obj_.at(key);
  }

  double number(const std::string& key) const {
    const json& v = require(key);
    if (!v.is_number()) loc_.fail(name_, key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) loc_.fail(name_, key, "must be finite");
    return d;
  }

  double number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  long long integer(const std::string& key) const {
    const json& v = require(key);
    if (!v.is_number_integer()) loc_.fail(name_, key, "expected an integer");
    return v.get<long long>();
  }

  long long integer_or(const std::string& key, long long fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  std::uint64_t unsigned_or(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_number_unsigned()) loc_.fail(name_, key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) loc_.fail(name_, key, "expected true or false");
    return v.get<bool>();
  }

  Point2 point_or(const std::string& key, Point2 fallback) const {
    if (!has(key)) return fallback;
    const json& v = obj_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      loc_.fail(name_, key, "expected [x, y] in meters");
    return {v[0].get<double>(), v[1].get<double>()};
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = require(key);
    if (!v.is_array()) loc_.fail(name_, key, "expected an array of numbers");
    std::vector<double> out;
    for (const json& x : v) {
      if (!x.is_number()) loc_.fail(name_, key, "expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  /// A scalar applied to every user or one value per user.
  std::vector<double> per_user(const std::string& key, int n_users) const {
    const json& v = require(key);
    if (v.is_number()) return std::vector<double>(static_cast<std::size_t>(n_users), v.get<double>());
    if (v.is_array()) {
      std::vector<double> out = numbers(key);
      if (static_cast<int>(out.size()) != n_users)
        loc_.fail(name_, key, "needs one value per user (" + std::to_string(n_users) + ")");
      return out;
    }
    loc_.fail(name_, key, "expected a number or an array with one value per user");
  }

  void reject_unknown() const {
    for (const auto& [k, v] : obj_.items())
      if (!used_.contains(k)) loc_.fail(name_, k, "unknown field");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    loc_.fail(name_, key, what);
  }

 private:
  const json& obj_;
  std::string name_;
  const Locator& loc_;
  mutable std::set<std::string> used_;
};

int positive_int(const Block& b, const std::string& key, long long v, long long min) {
  if (v < min || v > 1'000'000) b.fail(key, "must be >= " + std::to_string(min));
  return static_cast<int>(v);
}

void read_scenario(const Block& b, AppConfig& cfg) {
  Scenario& s = cfg.scenario;
  s.n_antennas = positive_int(b, "n_antennas", b.integer("n_antennas"), 1);
  s.n_users = positive_int(b, "n_users", b.integer("n_users"), 1);
  s.n_irs_elements = positive_int(b, "n_irs_elements", b.integer("n_irs_elements"), 0);
  cfg.noise_dbm = b.per_user("noise_dbm", s.n_users);
  cfg.qos_db = b.per_user("qos_db", s.n_users);
  cfg.power_budget_dbm = b.number("power_budget_dbm");

  s.bs_position = b.point_or("bs_position", s.bs_position);
  s.irs_position = b.point_or("irs_position", s.irs_position);
  s.user_center = b.point_or("user_center", s.user_center);
  s.user_radius = b.number_or("user_radius", s.user_radius);
  s.pl0_db = b.number_or("pl0_db", s.pl0_db);
  s.d0 = b.number_or("d0", s.d0);
  s.exp_bs_irs = b.number_or("exp_bs_irs", s.exp_bs_irs);
  s.exp_irs_user = b.number_or("exp_irs_user", s.exp_irs_user);
  s.exp_bs_user = b.number_or("exp_bs_user", s.exp_bs_user);
  b.reject_unknown();

  s.noise_power_w.resize(s.n_users);
  s.qos_target.resize(s.n_users);
  for (int m = 0; m < s.n_users; ++m) {
    s.noise_power_w(m) = dbm_to_watts(cfg.noise_dbm[static_cast<std::size_t>(m)]);
    s.qos_target(m) = db_to_linear(cfg.qos_db[static_cast<std::size_t>(m)]);
  }
  s.power_budget_w = dbm_to_watts(cfg.power_budget_dbm);
}

void read_pdd(const Block& b, PddConfig& p) {
  p.rho0 = b.number_or("rho0", p.rho0);
  p.b1 = b.number_or("b1", p.b1);
  p.b2 = b.number_or("b2", p.b2);
  p.eta0 = b.number_or("eta0", p.eta0);
  p.theta0_tol = b.number_or("theta0_tol", p.theta0_tol);
  p.tau = b.number_or("tau", p.tau);
  p.max_outer = positive_int(b, "max_outer", b.integer_or("max_outer", p.max_outer), 1);
  p.max_inner = positive_int(b, "max_inner", b.integer_or("max_inner", p.max_inner), 1);
  if (b.has("lambda")) p.lambda = b.number("lambda");
  if (b.has("gamma_smooth")) p.gamma_smooth = b.number("gamma_smooth");
  p.admit_sinr_slack = b.number_or("admit_sinr_slack", p.admit_sinr_slack);
  p.power_control = b.boolean_or("power_control", p.power_control);
  p.power_control_ratio = b.number_or("power_control_ratio", p.power_control_ratio);
  p.polish = b.boolean_or("polish", p.polish);
  b.reject_unknown();
}

void read_experiment(const Block& b, ExperimentSettings& e) {
  if (b.has("qos_grid_db")) e.qos_grid_db = b.numbers("qos_grid_db");
  if (b.has("algorithms")) {
    const json& v = b.require("algorithms");
    if (!v.is_array()) b.fail("algorithms", "expected an array of names");
    e.algorithms.clear();
    for (const json& x : v) {
      if (!x.is_string()) b.fail("algorithms", "expected an array of names");
      try {
        e.algorithms.push_back(algorithm_from_string(x.get<std::string>()));
      } catch (const std::invalid_argument& err) {
        b.fail("algorithms", err.what());
      }
    }
  }
  e.n_trials = positive_int(b, "n_trials", b.integer_or("n_trials", e.n_trials), 1);
  e.base_seed = b.unsigned_or("base_seed", e.base_seed);
  e.workers = positive_int(b, "workers", b.integer_or("workers", e.workers), 0);
  if (b.has("convergence_rho0")) e.convergence_rho0 = b.numbers("convergence_rho0");
  if (b.has("convergence_tau")) e.convergence_tau = b.numbers("convergence_tau");
  if (b.has("bench_sizes")) {
    const json& v = b.require("bench_sizes");
    if (!v.is_array()) b.fail("bench_sizes", "expected an array of sizes");
    e.bench_sizes.clear();
    for (const json& x : v) {
      try {
        if (x.is_number_integer()) {
          const int s = x.get<int>();
          if (s < 1) throw std::invalid_argument("sizes must be >= 1");
          e.bench_sizes.push_back({s, s, s});
        } else if (x.is_string()) {
          e.bench_sizes.push_back(parse_problem_size(x.get<std::string>()));
        } else {
          throw std::invalid_argument("expected an integer or an \"MxNxK\" string");
        }
      } catch (const std::exception& err) {
        b.fail("bench_sizes", err.what());
      }
    }
  }
  b.reject_unknown();
}

}  // namespace

AppConfig parse_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
    throw ConfigError(source, line, "invalid JSON");
  }
  const Locator loc(text, source);
  if (!doc.is_object()) throw ConfigError(source, 1, "top level must be an object");
  for (const auto& [k, v] : doc.items())
    if (k != "scenario" && k != "pdd" && k != "experiment")
      throw ConfigError(source, loc.line_of(k), k + ": unknown block");
  if (!doc.contains("scenario")) throw ConfigError(source, 0, "scenario: missing required block");

  AppConfig cfg;
  read_scenario(Block(doc.at("scenario"), "scenario", loc), cfg);
  if (doc.contains("pdd")) read_pdd(Block(doc.at("pdd"), "pdd", loc), cfg.pdd);
  if (doc.contains("experiment"))
    read_experiment(Block(doc.at("experiment"), "experiment", loc), cfg.experiment);
  if (cfg.experiment.qos_grid_db.empty()) cfg.experiment.qos_grid_db = {cfg.qos_db.front()};

  // Range checks reuse the library validators; map their "block.field: ..." messages to lines.
  auto relocate = [&](const std::string& block, const std::invalid_argument& e) {
    const std::string msg = e.what();
    const std::string prefix = block + ".";
    std::string key;
    if (msg.rfind(prefix, 0) == 0) key = msg.substr(prefix.size(), msg.find(':') - prefix.size());
    return ConfigError(source, loc.line_of(block, key), msg);
  };
  try {
    cfg.scenario.validate();
  } catch (const std::invalid_argument& e) {
    throw relocate("scenario", e);
  }
  try {
    cfg.pdd.validate();
  } catch (const std::invalid_argument& e) {
    throw relocate("pdd", e);
  }
  try {
    make_plan(cfg).validate();
  } catch (const std::invalid_argument& e) {
    throw relocate("experiment", e);
  }
  for (double v : cfg.experiment.convergence_rho0)
    if (!(v > 0.0))
      throw ConfigError(source, loc.line_of("experiment", "convergence_rho0"),
                        "experiment.convergence_rho0: values must be > 0");
  for (double v : cfg.experiment.convergence_tau)
    if (!(v > 0.0))
      throw ConfigError(source, loc.line_of("experiment", "convergence_tau"),
                        "experiment.convergence_tau: values must be > 0");
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

ExperimentPlan make_plan(const AppConfig& cfg) {
  ExperimentPlan plan;
  plan.scenario = cfg.scenario;
  plan.pdd = cfg.pdd;
  plan.qos_grid_db = cfg.experiment.qos_grid_db;
  plan.algorithms = cfg.experiment.algorithms;
  plan.n_trials = cfg.experiment.n_trials;
  plan.base_seed = cfg.experiment.base_seed;
  return plan;
}

namespace {

json per_user_json(const std::vector<double>& v) {
  const bool uniform = std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  return uniform ? json(v.front()) : json(v);
}

json point_json(Point2 p) { return json::array({p.x, p.y}); }

json config_json(const AppConfig& cfg) {
  const Scenario& s = cfg.scenario;
  const PddConfig& p = cfg.pdd;
  const ExperimentSettings& e = cfg.experiment;
  json out;
  out["scenario"] = {
      {"n_antennas", s.n_antennas},
      {"n_users", s.n_users},
      {"n_irs_elements", s.n_irs_elements},
      {"noise_dbm", per_user_json(cfg.noise_dbm)},
      {"qos_db", per_user_json(cfg.qos_db)},
      {"power_budget_dbm", cfg.power_budget_dbm},
      {"bs_position", point_json(s.bs_position)},
      {"irs_position", point_json(s.irs_position)},
      {"user_center", point_json(s.user_center)},
      {"user_radius", s.user_radius},
      {"pl0_db", s.pl0_db},
      {"d0", s.d0},
      {"exp_bs_irs", s.exp_bs_irs},
      {"exp_irs_user", s.exp_irs_user},
      {"exp_bs_user", s.exp_bs_user},
  };
  out["pdd"] = {
      {"rho0", p.rho0},
      {"b1", p.b1},
      {"b2", p.b2},
      {"eta0", p.eta0},
      {"theta0_tol", p.theta0_tol},
      {"tau", p.tau},
      {"max_outer", p.max_outer},
      {"max_inner", p.max_inner},
      {"admit_sinr_slack", p.admit_sinr_slack},
      {"power_control", p.power_control},
      {"power_control_ratio", p.power_control_ratio},
      {"polish", p.polish},
  };
  if (p.lambda) out["pdd"]["lambda"] = *p.lambda;
  if (p.gamma_smooth) out["pdd"]["gamma_smooth"] = *p.gamma_smooth;
  json algs = json::array();
  for (Algorithm a : e.algorithms) algs.push_back(to_string(a));
  json sizes = json::array();
  for (const ProblemSize& z : e.bench_sizes)
    sizes.push_back(std::to_string(z.M) + "x" + std::to_string(z.N) + "x" + std::to_string(z.K));
  out["experiment"] = {
      {"qos_grid_db", e.qos_grid_db},
      {"algorithms", algs},
      {"n_trials", e.n_trials},
      {"base_seed", e.base_seed},
      {"workers", e.workers},
      {"convergence_rho0", e.convergence_rho0},
      {"convergence_tau", e.convergence_tau},
      {"bench_sizes", sizes},
  };
  return out;
}

}  // namespace

std::string config_to_json(const AppConfig& cfg, int indent) {
  return config_json(cfg).dump(indent);
}

std::string solution_json(const AppConfig& cfg, std::uint64_t seed, const SolveResult& res,
                          bool deterministic) {
  const int M = static_cast<int>(res.admitted.size());
  json sinr_db = json::array();
  for (int m = 0; m < M; ++m)
    sinr_db.push_back(res.per_user_sinr(m) > 0.0 ? json(linear_to_db(res.per_user_sinr(m)))
                                                 : json(nullptr));
  json phases = json::array();
  for (Eigen::Index k = 0; k < res.theta.size(); ++k) phases.push_back(std::arg(res.theta(k)));
  json gaps = json::array();
  for (Eigen::Index m = 0; m < res.gaps.size(); ++m) gaps.push_back(res.gaps(m));

  json out;
  out["seed"] = seed;
  out["status"] = to_string(res.status);
  out["converged"] = res.converged();
  out["outer_iters"] = res.outer_trace.size();
  out["final_sigma"] = res.outer_trace.empty() ? 0.0 : res.outer_trace.back().sigma;
  out["admitted"] = res.admitted;
  out["n_admitted"] = res.n_admitted;
  out["power_w"] = res.power_w;
  out["objective"] = res.objective;
  out["lambda"] = res.lambda;
  out["gamma_smooth"] = res.gamma_smooth;
  out["per_user_sinr"] = std::vector<double>(res.per_user_sinr.data(),
                                             res.per_user_sinr.data() + res.per_user_sinr.size());
  out["per_user_sinr_db"] = sinr_db;
  out["gaps"] = gaps;
  out["theta_phase_rad"] = phases;
  out["power_controlled"] = res.power_controlled;
  out["polished"] = res.polished;
  out["wall_time_s"] = deterministic ? 0.0 : res.wall_time_s;
  out["config"] = config_json(cfg);
  return out.dump(2) + "\n";
}

std::string summary_json(const AppConfig& cfg, const std::vector<SummaryRow>& rows,
                         std::size_t n_records) {
  json table = json::array();
  for (const SummaryRow& r : rows) {
    table.push_back({
        {"algorithm", to_string(r.algorithm)},
        {"gamma_db", r.gamma_db},
        {"n", r.n},
        {"mean_admitted", r.mean_admitted},
        {"std_admitted", r.std_admitted},
        {"mean_power_w", r.mean_power_w},
        {"std_power_w", r.std_power_w},
        {"mean_wall_time_s", r.mean_time_s},
        {"std_wall_time_s", r.std_time_s},
        {"convergence_rate", r.convergence_rate},
        {"n_failed", r.n_failed},
    });
  }
  json out;
  out["n_records"] = n_records;
  out["std_convention"] = "sample (n - 1)";
  out["rows"] = table;
  out["config"] = config_json(cfg);
  return out.dump(2) + "\n";
}

}  // namespace irsac
