#include "irsac/pdd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

namespace irsac {

void PddConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("pdd.") + what); };
  if (!(rho0 > 0.0)) fail("rho0: must be > 0");
  if (!(b1 > 0.0 && b1 < 1.0)) fail("b1: must lie in (0, 1)");
  if (!(b2 > 0.0 && b2 < 1.0)) fail("b2: must lie in (0, 1)");
  if (!(eta0 > 0.0)) fail("eta0: must be > 0");
  if (!(theta0_tol > 0.0)) fail("theta0_tol: must be > 0");
  if (!(tau > 0.0)) fail("tau: must be > 0");
  if (max_outer < 1) fail("max_outer: must be >= 1");
  if (max_inner < 1) fail("max_inner: must be >= 1");
  if (lambda && !(*lambda >= 0.0)) fail("lambda: must be >= 0");
  if (gamma_smooth && !(*gamma_smooth > 0.0)) fail("gamma_smooth: must be > 0");
  if (!(admit_sinr_slack >= 0.0 && admit_sinr_slack < 1.0))
    fail("admit_sinr_slack: must lie in [0, 1)");
  if (!(power_control_ratio >= 0.0 && power_control_ratio <= 1.0))
    fail("power_control_ratio: must lie in [0, 1]");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_outer_reached: return "max_outer_reached";
    case SolveStatus::rho_floor_reached: return "rho_floor_reached";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

WorkingFrame WorkingFrame::for_scenario(const Scenario& s) {
  s.validate();
  WorkingFrame f;
  f.power_budget_w = s.power_budget_w;
  f.qos = s.qos_target;
  const VectorXd sqrt_gamma = s.qos_target.cwiseSqrt();
  f.row_scale = std::sqrt(s.power_budget_w) *
                (s.noise_power_w.cwiseSqrt().cwiseProduct(sqrt_gamma)).cwiseInverse();
  f.noise_col = sqrt_gamma.cwiseInverse();
  return f;
}

ChannelSet WorkingFrame::channels(const ChannelSet& physical) const {
  return physical.with_row_scaling(row_scale);
}

MatrixXcd WorkingFrame::to_physical_w(const MatrixXcd& W) const {
  return std::sqrt(power_budget_w) * W;
}

MatrixXcd WorkingFrame::to_working_w(const MatrixXcd& W) const {
  return W / std::sqrt(power_budget_w);
}

double WorkingFrame::to_physical_gap(double a, int m) const {
  // row m of the working problem is the physical row times row_scale(m) / sqrt(P)
  return a * std::sqrt(power_budget_w) / row_scale(m);
}

// ---------------------------------------------------------------------------

PrimalState init_primal(const ChannelSet& ch, const VectorXd& noise_col, const VectorXd& qos,
                        double power_budget, std::uint64_t seed) {
  const int N = ch.n_antennas();
  const int M = ch.n_users();
  const int K = ch.n_irs_elements();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  PrimalState s;
  s.theta.resize(K);
  for (int k = 0; k < K; ++k) s.theta(k) = std::polar(1.0, phase(rng));
  s.Psi = s.theta.replicate(1, M);

  const MatrixXcd P = stacked_rows(ch, s.Psi);
  s.W = MatrixXcd::Zero(N, M);
  for (int m = 0; m < M; ++m) {
    const double norm = P.row(m).norm();
    if (norm > 0.0) s.W.col(m) = P.row(m).adjoint() / norm;
  }
  const double fro2 = s.W.squaredNorm();
  if (fro2 > 0.0) s.W *= std::sqrt(0.5 * power_budget / fro2);

  s.E = equality_target(ch, s.Psi, s.W, noise_col);
  s.a.resize(M);
  for (int m = 0; m < M; ++m) {
    double others = 0.0;
    for (int j = 0; j <= M; ++j)
      if (j != m) others += std::norm(s.E(m, j));
    s.a(m) = std::max(0.0, std::sqrt(qos(m) * others) - s.E(m, m).real());
  }
  s.c = s.a;
  return s;
}

std::pair<PrimalState, DualState> init_state(const ChannelSet& ch, const Scenario& scenario,
                                             std::uint64_t seed) {
  scenario.validate();
  PrimalState p = init_primal(ch, scenario.noise_power_w.cwiseSqrt(), scenario.qos_target,
                              scenario.power_budget_w, seed);
  return {std::move(p), DualState::zeros(ch.n_irs_elements(), ch.n_users())};
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void require_finite(const T& x, const char* block) {
  if (!x.allFinite()) throw NumericalError(block, std::string("non-finite iterate in ") + block);
}

void update_rows(PrimalState& s, const DualState& d, const PenaltyParams& pp,
                 const ChannelSet& ch) {
  for (int m = 0; m < ch.n_users(); ++m) {
    const RowUpdate r = update_e_a(s, d, pp, ch, m);
    s.E.row(m) = r.e;
    s.a(m) = r.a;
  }
}

}  // namespace

BsumReport bsum_solve(PrimalState& s, const DualState& d, const PenaltyParams& pp,
                      const ChannelSet& ch, double tol, int max_inner) {
  if (!(tol > 0.0)) throw std::invalid_argument("bsum_solve: tolerance must be > 0");
  if (max_inner < 1) throw std::invalid_argument("bsum_solve: max_inner must be >= 1");
  const int M = ch.n_users();

  BsumReport report;
  double al_old = eval_al(s, d, pp, ch);
  if (!std::isfinite(al_old)) throw NumericalError("init", "non-finite augmented Lagrangian");
  report.al_start = al_old;

  for (int sweep = 0; sweep < max_inner; ++sweep) {
    s.W = update_w(s, d, pp, ch).W;
    require_finite(s.W, "W");
    if (ch.n_irs_elements() > 0) {
      s.theta = update_theta(s.Psi, d.Xi, pp.rho, s.theta);
      require_finite(s.theta, "theta");
      s.Psi = update_psi_all(s, d, pp, ch);
      require_finite(s.Psi, "Psi");
    }
    for (int m = 0; m < M; ++m) s.c(m) = update_c(s.a(m), d.zeta(m), s.c(m), pp);
    require_finite(s.c, "c");
    update_rows(s, d, pp, ch);
    require_finite(s.E, "E");
    require_finite(s.a, "a");

    const double al_new = eval_al(s, d, pp, ch);
    if (!std::isfinite(al_new)) throw NumericalError("AL", "non-finite augmented Lagrangian");
    report.al.push_back(al_new);
    ++report.sweeps;
    const double change = std::abs(al_old - al_new);
    const double ref = std::abs(al_old);
    if ((ref > 0.0 ? change / ref : change) < tol) break;
    al_old = al_new;
  }
  return report;
}

namespace {

struct CoreRun {
  PrimalState state;
  DualState dual;
  std::vector<OuterRecord> trace;
  std::vector<int> inner_counts;
  std::vector<std::vector<double>> sweep_al;
  SolveStatus status = SolveStatus::max_outer_reached;
};

int count_admitted(const ChannelSet& chw, const PrimalState& s, const PenaltyParams& pp,
                   double slack) {
  const VectorXd sinr = sinr_all(chw, s.theta, s.W, pp.noise_col.cwiseAbs2());
  int n = 0;
  for (Eigen::Index m = 0; m < sinr.size(); ++m) n += sinr(m) >= pp.qos(m) * (1.0 - slack);
  return n;
}

// Algorithm body shared by the joint solve and the polish step; `chw` and `pp` are in the
// working frame and `power_scale` converts ||W||^2 and the AL back to watts.
CoreRun run_pdd(const ChannelSet& chw, PenaltyParams pp, const PddConfig& cfg,
                PrimalState init, double power_scale) {
  const int M = chw.n_users();
  CoreRun run;
  run.state = std::move(init);
  run.dual = DualState::zeros(chw.n_irs_elements(), M);
  PrimalState& s = run.state;
  DualState& d = run.dual;

  double rho = cfg.rho0;
  double eta = cfg.eta0;
  double tol = cfg.theta0_tol;

  if (pp.fix_gap_zero) {
    pp.rho = rho;
    s.a.setZero();
    s.c.setZero();
    update_rows(s, d, pp, chw);
  }

  for (int t = 0; t < cfg.max_outer; ++t) {
    pp.rho = rho;
    const auto iter_start = std::chrono::steady_clock::now();
    BsumReport rep = bsum_solve(s, d, pp, chw, tol, cfg.max_inner);
    run.inner_counts.push_back(rep.sweeps);
    if (cfg.record_sweeps) {
      rep.al.insert(rep.al.begin(), rep.al_start);
      run.sweep_al.push_back(std::move(rep.al));
    }

    const double sigma = residual_sigma(s, chw, pp.noise_col);
    OuterRecord rec;
    rec.outer_iter = t;
    rec.sigma = sigma;
    rec.al_value = power_scale * eval_al(s, d, pp, chw);
    rec.rho = rho;
    rec.eta = eta;
    rec.inner_tol = tol;
    rec.n_admitted = count_admitted(chw, s, pp, cfg.admit_sinr_slack);
    rec.power_w = power_scale * s.W.squaredNorm();
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - iter_start).count();
    run.trace.push_back(rec);

    if (sigma <= cfg.tau) {
      run.status = SolveStatus::converged;
      break;
    }
    if (sigma < eta) {
      const MatrixXcd Y = equality_target(chw, s.Psi, s.W, pp.noise_col);
      for (int m = 0; m < M; ++m) d.Xi.col(m) += (s.Psi.col(m) - s.theta) / rho;
      d.Phi += (s.E - Y) / rho;
      d.zeta += (s.c - s.a) / rho;
    } else {
      if (cfg.b1 * rho < kRhoFloor) {
        run.status = SolveStatus::rho_floor_reached;
        break;
      }
      rho *= cfg.b1;
    }
    eta = cfg.b2 * sigma;
    tol = cfg.b2 * tol;
  }
  return run;
}

Scenario restrict_scenario(const Scenario& s, const std::vector<int>& users) {
  Scenario out = s;
  out.n_users = static_cast<int>(users.size());
  out.noise_power_w.resize(out.n_users);
  out.qos_target.resize(out.n_users);
  for (int i = 0; i < out.n_users; ++i) {
    out.noise_power_w(i) = s.noise_power_w(users[static_cast<std::size_t>(i)]);
    out.qos_target(i) = s.qos_target(users[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace

std::optional<MatrixXcd> power_control(const MatrixXcd& W, const VectorXcd& theta,
                                       const ChannelSet& ch, const Scenario& scenario,
                                       const std::vector<bool>& serve) {
  const int M = ch.n_users();
  std::vector<int> users;
  for (int m = 0; m < M; ++m)
    if (serve[static_cast<std::size_t>(m)] && W.col(m).norm() > 0.0) users.push_back(m);
  if (users.empty()) return std::nullopt;

  const auto U = static_cast<Eigen::Index>(users.size());
  MatrixXcd dirs(W.rows(), U);
  MatrixXcd H(U, W.rows());
  VectorXd noise(U);
  for (Eigen::Index i = 0; i < U; ++i) {
    const int m = users[static_cast<std::size_t>(i)];
    dirs.col(i) = W.col(m).normalized();
    H.row(i) = channel_row(ch, theta, m);
    noise(i) = scenario.noise_power_w(m);
  }
  // |h_i u_i|^2 p_i / gamma_i - sum_{j != i} |h_i u_j|^2 p_j = sigma_i^2
  const MatrixXcd gains = H * dirs;
  Eigen::MatrixXd A(U, U);
  for (Eigen::Index i = 0; i < U; ++i)
    for (Eigen::Index j = 0; j < U; ++j)
      A(i, j) = i == j ? std::norm(gains(i, i)) / scenario.qos_target(users[static_cast<std::size_t>(i)])
                       : -std::norm(gains(i, j));
  const VectorXd p = A.partialPivLu().solve(noise);
  if (!p.allFinite() || (p.array() <= 0.0).any() || p.sum() > scenario.power_budget_w)
    return std::nullopt;

  MatrixXcd out = MatrixXcd::Zero(W.rows(), W.cols());
  for (Eigen::Index i = 0; i < U; ++i)
    out.col(users[static_cast<std::size_t>(i)]) = std::sqrt(p(i)) * dirs.col(i);
  return out;
}

std::vector<bool> decide_admission(const MatrixXcd& W, const VectorXcd& theta,
                                   const ChannelSet& ch, const Scenario& scenario, double slack) {
  const VectorXd sinr = sinr_all(ch, theta, W, scenario.noise_power_w);
  std::vector<bool> admitted(static_cast<std::size_t>(ch.n_users()));
  for (int m = 0; m < ch.n_users(); ++m)
    admitted[static_cast<std::size_t>(m)] = sinr(m) >= scenario.qos_target(m) * (1.0 - slack);
  return admitted;
}

PolishResult polish(const ChannelSet& ch, const Scenario& scenario,
                    const std::vector<bool>& admitted, const VectorXcd& theta_init,
                    const MatrixXcd& W_init, const PddConfig& config) {
  config.validate();
  std::vector<int> users;
  for (std::size_t m = 0; m < admitted.size(); ++m)
    if (admitted[m]) users.push_back(static_cast<int>(m));
  if (users.empty()) throw std::invalid_argument("polish: admitted set is empty");
  if (static_cast<int>(admitted.size()) != ch.n_users())
    throw std::invalid_argument("polish: admission mask must have M entries");

  const Scenario sub_sc = restrict_scenario(scenario, users);
  const ChannelSet sub_ch = ch.subset(users);
  const WorkingFrame frame = WorkingFrame::for_scenario(sub_sc);
  const ChannelSet chw = frame.channels(sub_ch);

  PrimalState init;
  init.theta = theta_init;
  init.Psi = theta_init.replicate(1, static_cast<Eigen::Index>(users.size()));
  init.W.resize(ch.n_antennas(), static_cast<Eigen::Index>(users.size()));
  for (std::size_t i = 0; i < users.size(); ++i)
    init.W.col(static_cast<Eigen::Index>(i)) = frame.to_working_w(W_init.col(users[i]));
  init.E = equality_target(chw, init.Psi, init.W, frame.noise_col);
  init.a = VectorXd::Zero(static_cast<Eigen::Index>(users.size()));
  init.c = init.a;

  PenaltyParams pp;
  pp.lambda = 0.0;
  pp.gamma_smooth = 1.0;
  pp.qos = frame.qos;
  pp.power_budget = 1.0;
  pp.noise_col = frame.noise_col;
  pp.fix_gap_zero = true;

  PolishResult out;
  CoreRun run;
  try {
    run = run_pdd(chw, pp, config, std::move(init), scenario.power_budget_w);
  } catch (const NumericalError& e) {
    out.message = e.what();
    return out;
  }

  out.theta = run.state.theta;
  out.W = MatrixXcd::Zero(ch.n_antennas(), ch.n_users());
  for (std::size_t i = 0; i < users.size(); ++i)
    out.W.col(users[i]) = frame.to_physical_w(run.state.W.col(static_cast<Eigen::Index>(i)));
  out.power_w = total_power(out.W);

  const std::vector<bool> still = decide_admission(out.W, out.theta, ch, scenario,
                                                   config.admit_sinr_slack);
  bool all_met = true;
  for (int m : users) all_met = all_met && still[static_cast<std::size_t>(m)];
  if (!all_met)
    out.message = "refined point misses a QoS target";
  else if (out.power_w > scenario.power_budget_w * (1.0 + 1e-9))
    out.message = "refined point exceeds the power budget";
  else
    out.ok = true;
  return out;
}

SolveResult pdd_solve(const ChannelSet& ch, const Scenario& scenario, const PddConfig& config) {
  scenario.validate();
  config.validate();
  if (ch.n_users() != scenario.n_users || ch.n_antennas() != scenario.n_antennas)
    throw std::invalid_argument("pdd_solve: channels do not match the scenario");
  const auto start = std::chrono::steady_clock::now();
  const int M = ch.n_users();
  const double P = scenario.power_budget_w;

  SolveResult res;
  res.frame = WorkingFrame::for_scenario(scenario);
  const ChannelSet chw = res.frame.channels(ch);

  PrimalState init = init_primal(chw, res.frame.noise_col, res.frame.qos, 1.0, config.seed);

  PenaltyParams pp;
  res.lambda = config.lambda.value_or(10.0 * P);
  pp.lambda = res.lambda / P;
  pp.gamma_smooth = config.gamma_smooth.value_or(kDefaultGammaSmooth);
  res.gamma_smooth = pp.gamma_smooth;
  pp.qos = res.frame.qos;
  pp.power_budget = 1.0;
  pp.noise_col = res.frame.noise_col;

  CoreRun run = run_pdd(chw, pp, config, std::move(init), P);
  res.status = run.status;
  res.outer_trace = std::move(run.trace);
  res.inner_counts = std::move(run.inner_counts);
  res.sweep_al = std::move(run.sweep_al);

  res.theta = run.state.theta;
  res.W = res.frame.to_physical_w(run.state.W);
  res.gaps.resize(M);
  for (int m = 0; m < M; ++m) res.gaps(m) = res.frame.to_physical_gap(run.state.a(m), m);

  if (config.power_control) {
    // Candidates in decreasing order of target attainment; drop the weakest until the
    // exact allocation fits, and keep it only if it serves at least as many users as the
    // plain SINR test would.
    const VectorXd ratio =
        sinr_all(ch, res.theta, res.W, scenario.noise_power_w).cwiseQuotient(scenario.qos_target);
    std::vector<int> order;
    for (int m = 0; m < M; ++m)
      if (ratio(m) >= config.power_control_ratio) order.push_back(m);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return ratio(i) > ratio(j); });
    const auto plain = static_cast<std::size_t>(
        (ratio.array() >= 1.0 - config.admit_sinr_slack).count());
    for (; !order.empty() && order.size() >= plain; order.pop_back()) {
      std::vector<bool> serve(static_cast<std::size_t>(M), false);
      for (int m : order) serve[static_cast<std::size_t>(m)] = true;
      if (auto refined = power_control(res.W, res.theta, ch, scenario, serve)) {
        res.W = *refined;
        res.power_controlled = true;
        break;
      }
    }
  }
  res.admitted = decide_admission(res.W, res.theta, ch, scenario, config.admit_sinr_slack);
  for (int m = 0; m < M; ++m)
    if (!res.admitted[static_cast<std::size_t>(m)]) res.W.col(m).setZero();
  res.working_state = std::move(run.state);
  res.working_dual = std::move(run.dual);

  if (config.polish && std::find(res.admitted.begin(), res.admitted.end(), true) !=
                           res.admitted.end()) {
    const PolishResult pol = polish(ch, scenario, res.admitted, res.theta, res.W, config);
    if (pol.ok && pol.power_w <= total_power(res.W)) {
      res.W = pol.W;
      res.theta = pol.theta;
      res.polished = true;
    }
  }

  res.power_w = total_power(res.W);
  res.per_user_sinr = sinr_all(ch, res.theta, res.W, scenario.noise_power_w);
  res.n_admitted =
      static_cast<int>(std::count(res.admitted.begin(), res.admitted.end(), true));
  res.objective = res.power_w + res.lambda * (M - res.n_admitted);
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace irsac
