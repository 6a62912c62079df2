#include <algorithm>
#include <cmath>
#include <iostream>

#include "doctest.h"
#include "irsac/harness.hpp"
#include "irsac/oracles.hpp"
#include "irsac/pdd.hpp"
#include "support.hpp"

using namespace irsac;
using namespace irsac::testing;
using doctest::Approx;

namespace {

Scenario small_scenario(int N, int M, int K, double qos_db) {
  Scenario s = Scenario::desk_default();
  s.n_antennas = N;
  s.n_users = M;
  s.n_irs_elements = K;
  s.set_uniform_noise_dbm(-20.0);
  s.set_uniform_qos_db(qos_db);
  return s;
}

void check_trace_invariants(const SolveResult& r, const PddConfig& cfg) {
  REQUIRE(!r.outer_trace.empty());
  for (std::size_t t = 0; t < r.outer_trace.size(); ++t) {
    const OuterRecord& rec = r.outer_trace[t];
    CHECK(rec.outer_iter == static_cast<int>(t));
    CHECK(rec.inner_tol == Approx(cfg.theta0_tol * std::pow(cfg.b2, static_cast<double>(t))).epsilon(1e-12));
    if (t + 1 < r.outer_trace.size()) {
      const OuterRecord& next = r.outer_trace[t + 1];
      CHECK(next.rho <= rec.rho);
      // The penalty shrinks exactly when the violation did not beat the threshold.
      if (rec.sigma >= rec.eta)
        CHECK(next.rho == Approx(cfg.b1 * rec.rho).epsilon(1e-15));
      else
        CHECK(next.rho == rec.rho);
      CHECK(next.eta == Approx(cfg.b2 * rec.sigma).epsilon(1e-15));
    }
  }
  if (r.converged()) CHECK(r.outer_trace.back().sigma <= cfg.tau);
  CHECK(r.inner_counts.size() == r.outer_trace.size());
}

}  // namespace

TEST_CASE("PddConfig validation") {
  PddConfig c;
  CHECK_NOTHROW(c.validate());
  c.b1 = 1.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("b1"), std::invalid_argument);
  c = {};
  c.tau = 0.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("tau"), std::invalid_argument);
  c = {};
  c.max_outer = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("max_outer"), std::invalid_argument);
  c = {};
  c.gamma_smooth = -1.0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("gamma_smooth"), std::invalid_argument);
}

TEST_CASE("init_state") {
  const Scenario s = Scenario::desk_default();
  const ChannelSet ch = generate_channels(s, 17);
  const auto [p, d] = init_state(ch, s, 3);
  CHECK(residual_sigma(p, ch, s.noise_power_w.cwiseSqrt()) == 0.0);
  CHECK(p.W.squaredNorm() == Approx(0.5 * s.power_budget_w).epsilon(1e-12));
  CHECK(d.Xi.norm() == 0.0);
  CHECK(d.Phi.norm() == 0.0);
  CHECK(d.zeta.norm() == 0.0);
  for (int k = 0; k < s.n_irs_elements; ++k) CHECK(std::abs(std::abs(p.theta(k)) - 1.0) <= 1e-15);
  // Gap recomputed from the SINR constraint in its SOC form at the initial point.
  for (int m = 0; m < s.n_users; ++m) {
    const RowVectorXcd row = effective_channel(ch, p.theta, m);
    const double signal = std::abs((row * p.W.col(m))(0));
    double others = s.noise_power_w(m);
    for (int j = 0; j < s.n_users; ++j)
      if (j != m) others += std::norm((row * p.W.col(j))(0));
    const double need = std::sqrt(s.qos_target(m) * others) - signal;
    CHECK(p.a(m) >= need - 1e-12 * std::sqrt(others));
    CHECK(p.a(m) == Approx(std::max(0.0, need)).epsilon(1e-9));
    CHECK(p.c(m) == p.a(m));
  }
  const auto [p2, d2] = init_state(ch, s, 3);
  CHECK(p2.theta == p.theta);
  CHECK(p2.W == p.W);
}

TEST_CASE("bsum_solve") {
  Rng rng(1);
  const Scenario s = small_scenario(4, 4, 8, -25.0);
  const ChannelSet ch = generate_channels(s, 2);
  auto [p, d] = init_state(ch, s, 4);
  PenaltyParams pp;
  pp.rho = 1e-3;
  pp.lambda = 1.0;
  pp.gamma_smooth = 1e3;
  pp.qos = s.qos_target;
  pp.power_budget = s.power_budget_w;
  pp.noise_col = s.noise_power_w.cwiseSqrt();

  SUBCASE("AL is non-increasing across sweeps") {
    const BsumReport rep = bsum_solve(p, d, pp, ch, 1e-14, 100);
    double prev = rep.al_start;
    for (double v : rep.al) {
      CHECK(v <= prev + 1e-9 * (1.0 + std::abs(prev)));
      prev = v;
    }
    CHECK(rep.sweeps == static_cast<int>(rep.al.size()));
  }
  SUBCASE("a single sweep when capped") {
    const BsumReport rep = bsum_solve(p, d, pp, ch, 1e-14, 1);
    CHECK(rep.sweeps == 1);
  }
  SUBCASE("one sweep from a coordinate-wise minimum") {
    bsum_solve(p, d, pp, ch, 1e-15, 5000);
    const BsumReport rep = bsum_solve(p, d, pp, ch, 1e-6, 100);
    CHECK(rep.sweeps == 1);
  }
  SUBCASE("argument checks") {
    CHECK_THROWS_AS(bsum_solve(p, d, pp, ch, 0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(bsum_solve(p, d, pp, ch, 1e-3, 0), std::invalid_argument);
  }
}

TEST_CASE("single strong user reaches the matched-filter power") {
  Scenario s = small_scenario(4, 1, 0, 0.0);
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const ChannelSet ch(MatrixXcd(0, 4), {VectorXcd(0)}, {rng.cvec(4)});
    PddConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(i);
    const SolveResult r = pdd_solve(ch, s, cfg);
    REQUIRE(r.admitted[0]);
    const double optimum = s.qos_target(0) * s.noise_power_w(0) / ch.g(0).squaredNorm();
    CHECK(r.power_w == Approx(optimum).epsilon(1e-3));
    CHECK(feasibility_violation(r, ch, s) == "");
  }
}

TEST_CASE("decide_admission") {
  Rng rng(3);
  Scenario s = small_scenario(3, 3, 0, -10.0);
  const ChannelSet ch = random_channels(rng, 3, 3, 0);
  SUBCASE("strong beams admit everyone") {
    // Zero-forcing beams: no interference, SNR far above the target.
    MatrixXcd H(3, 3);
    for (int m = 0; m < 3; ++m) H.row(m) = ch.g(m).adjoint();
    const MatrixXcd W = H.inverse() * 0.1;
    const auto adm = decide_admission(W, VectorXcd(0), ch, s, 1e-3);
    CHECK(std::all_of(adm.begin(), adm.end(), [](bool b) { return b; }));
  }
  SUBCASE("a zero beam is rejected") {
    MatrixXcd H(3, 3);
    for (int m = 0; m < 3; ++m) H.row(m) = ch.g(m).adjoint();
    MatrixXcd W = H.inverse() * 0.1;
    W.col(1).setZero();
    const auto adm = decide_admission(W, VectorXcd(0), ch, s, 1e-3);
    CHECK(adm[0]);
    CHECK(!adm[1]);
    CHECK(adm[2]);
  }
}

TEST_CASE("power_control meets each target exactly") {
  Rng rng(4);
  Scenario s = small_scenario(4, 3, 2, -5.0);
  for (int i = 0; i < 20; ++i) {
    const ChannelSet ch = random_channels(rng, 4, 3, 2);
    const VectorXcd theta = rng.phases(2);
    const MatrixXcd W = rng.cmat(4, 3);
    const std::vector<bool> serve{true, false, true};
    const auto out = power_control(W, theta, ch, s, serve);
    if (!out) continue;
    CHECK(out->col(1).norm() == 0.0);
    CHECK(out->squaredNorm() <= s.power_budget_w);
    for (int m : {0, 2}) {
      CHECK(sinr(ch, theta, *out, m, s.noise_power_w(m)) == Approx(s.qos_target(m)).epsilon(1e-9));
      // same direction as the input beam
      const cplx ip = W.col(m).normalized().dot(out->col(m).normalized());
      CHECK(std::abs(ip) == Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(!power_control(MatrixXcd::Zero(4, 3), rng.phases(2), random_channels(rng, 4, 3, 2), s,
                       {true, true, true}));
}

TEST_CASE("desk-scale solves: convergence rate, feasibility and trace invariants") {
  const Scenario s = Scenario::desk_default();
  PddConfig cfg;
  cfg.max_outer = 200;
  int converged = 0, agree = 0, n_conv_checked = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const ChannelSet ch = generate_channels(s, derive_seed(77, kChannelStream, t));
    cfg.seed = derive_seed(77, kSolverStream, t);
    const SolveResult r = pdd_solve(ch, s, cfg);
    CHECK(feasibility_violation(r, ch, s) == "");
    check_trace_invariants(r, cfg);
    CHECK(r.n_admitted >= 0);
    CHECK(r.n_admitted <= s.n_users);
    if (r.converged()) {
      ++converged;
      ++n_conv_checked;
      bool same = true;
      for (int m = 0; m < s.n_users; ++m) {
        const bool small_gap =
            r.gaps(m) <= 1e-4 * std::sqrt(s.qos_target(m)) * std::sqrt(s.noise_power_w(m));
        same = same && (small_gap == r.admitted[static_cast<std::size_t>(m)]);
      }
      agree += same;
    }
  }
  MESSAGE("converged " << converged << "/" << trials << ", gap/SINR admission agreement "
                       << agree << "/" << n_conv_checked);
  CHECK(converged >= 95);
  CHECK(agree >= 0.9 * n_conv_checked);
}

TEST_CASE("pdd_solve is bit-reproducible") {
  const Scenario s = Scenario::desk_default();
  const ChannelSet ch = generate_channels(s, 5);
  PddConfig cfg;
  cfg.seed = 11;
  const SolveResult a = pdd_solve(ch, s, cfg);
  const SolveResult b = pdd_solve(ch, s, cfg);
  CHECK(a.W == b.W);
  CHECK(a.theta == b.theta);
  CHECK(a.power_w == b.power_w);
  CHECK(a.outer_trace.size() == b.outer_trace.size());
  for (std::size_t i = 0; i < a.outer_trace.size(); ++i) {
    CHECK(a.outer_trace[i].sigma == b.outer_trace[i].sigma);
    CHECK(a.outer_trace[i].al_value == b.outer_trace[i].al_value);
  }
}

TEST_CASE("AL sweeps recorded by the solver never increase") {
  const Scenario s = Scenario::desk_default();
  PddConfig cfg;
  cfg.record_sweeps = true;
  std::size_t sweeps = 0;
  for (int t = 0; t < 3; ++t) {
    cfg.seed = static_cast<std::uint64_t>(t);
    const SolveResult r = pdd_solve(generate_channels(s, 300 + t), s, cfg);
    REQUIRE(r.sweep_al.size() == r.outer_trace.size());
    for (std::size_t o = 0; o < r.sweep_al.size(); ++o) {
      const auto& al = r.sweep_al[o];
      CHECK(al.size() == static_cast<std::size_t>(r.inner_counts[o]) + 1);
      for (std::size_t k = 1; k < al.size(); ++k) {
        CHECK(al[k] <= al[k - 1] + 1e-9 * (1.0 + std::abs(al[k - 1])));
        ++sweeps;
      }
    }
  }
  CHECK(sweeps > 0);
}

TEST_CASE("polish never increases power and keeps feasibility") {
  const Scenario s = Scenario::desk_default();
  PddConfig plain;
  PddConfig pol;
  pol.polish = true;
  int polished = 0;
  for (int t = 0; t < 100; ++t) {
    const ChannelSet ch = generate_channels(s, 900 + t);
    plain.seed = pol.seed = static_cast<std::uint64_t>(t);
    const SolveResult a = pdd_solve(ch, s, plain);
    const SolveResult b = pdd_solve(ch, s, pol);
    CHECK(b.power_w <= a.power_w + 1e-6);
    CHECK(b.n_admitted == a.n_admitted);
    CHECK(feasibility_violation(b, ch, s) == "");
    polished += b.polished;
  }
  MESSAGE("polish accepted on " << polished << "/100 trials");
}

TEST_CASE("polish from a converged all-admitted point is stable") {
  Scenario s = Scenario::desk_default();
  s.set_uniform_qos_db(-30.0);
  int checked = 0;
  for (int t = 0; t < 20 && checked < 5; ++t) {
    const ChannelSet ch = generate_channels(s, 1200 + t);
    PddConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(t);
    const SolveResult r = pdd_solve(ch, s, cfg);
    if (!r.converged() || r.n_admitted != s.n_users) continue;
    // Polish once, then polish the polished point: the second pass must not move power.
    const PolishResult first = polish(ch, s, r.admitted, r.theta, r.W, cfg);
    REQUIRE(first.ok);
    const PolishResult second = polish(ch, s, r.admitted, first.theta, first.W, cfg);
    REQUIRE(second.ok);
    CHECK(std::abs(second.power_w - first.power_w) <= 1e-3 * first.power_w);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("polish rejects an empty admitted set") {
  const Scenario s = small_scenario(2, 2, 0, -25.0);
  const ChannelSet ch = generate_channels(s, 1);
  CHECK_THROWS_AS(polish(ch, s, {false, false}, VectorXcd(0), MatrixXcd::Zero(2, 2), PddConfig{}),
                  std::invalid_argument);
}

TEST_CASE("tiny instances against exhaustive admission") {
  const Scenario s = small_scenario(2, 2, 0, -25.0);
  double gap_sum = 0.0;
  const int n = 30;
  for (int t = 0; t < n; ++t) {
    const ChannelSet ch = generate_channels(s, 1000 + t);
    PddConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(t);
    const SolveResult r = pdd_solve(ch, s, cfg);
    CHECK(feasibility_violation(r, ch, s) == "");
    const auto o = oracle::exhaustive_admission(ch, s, r.lambda, cfg.admit_sinr_slack);
    CHECK(o.n_unknown == 0);
    CHECK(r.objective >= o.objective * (1.0 - 1e-9));
    gap_sum += (r.objective - o.objective) / o.objective;
  }
  CHECK(gap_sum / n <= 0.05);
}
