#pragma once

// Random instances and shared checks for the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "irsac/blocks.hpp"
#include "irsac/pdd.hpp"

namespace irsac::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  /// Log-uniform on [lo, hi].
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  /// CN(0, scale^2).
  cplx cn(double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale * std::sqrt(0.5));
    return {n(gen_), n(gen_)};
  }
  MatrixXcd cmat(Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    MatrixXcd A(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) A(i, j) = cn(scale);
    return A;
  }
  VectorXcd cvec(Eigen::Index n, double scale = 1.0) { return cmat(n, 1, scale).col(0); }
  VectorXcd phases(Eigen::Index n) {
    VectorXcd t(n);
    for (Eigen::Index k = 0; k < n; ++k) t(k) = std::polar(1.0, uniform(-M_PI, M_PI));
    return t;
  }
  VectorXd positive(Eigen::Index n, double lo, double hi) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = log_uniform(lo, hi);
    return v;
  }
  /// Non-negative entries, roughly a third of them exactly zero.
  VectorXd gaps(Eigen::Index n, double scale) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform() < 0.33 ? 0.0 : uniform(0.0, scale);
    return v;
  }

 private:
  std::mt19937_64 gen_;
};

inline ChannelSet random_channels(Rng& rng, int N, int M, int K) {
  std::vector<VectorXcd> h, g;
  for (int m = 0; m < M; ++m) {
    h.push_back(rng.cvec(K));
    g.push_back(rng.cvec(N));
  }
  return ChannelSet(rng.cmat(K, N), std::move(h), std::move(g));
}

/// Full random primal/dual/penalty triple for block-level tests.
struct BlockInstance {
  ChannelSet ch;
  PrimalState p;
  DualState d;
  PenaltyParams pp;
};

inline BlockInstance random_block_instance(Rng& rng, int N, int M, int K) {
  ChannelSet ch = random_channels(rng, N, M, K);
  PrimalState p;
  p.W = rng.cmat(N, M, rng.log_uniform(0.05, 2.0));
  p.theta = rng.phases(K);
  p.Psi = rng.cmat(K, M);
  for (int m = 0; m < M; ++m)
    if (rng.uniform() < 0.5) p.Psi.col(m) = p.theta + rng.cvec(K, 0.1);
  p.E = rng.cmat(M, M + 1, rng.log_uniform(0.1, 3.0));
  p.a = rng.gaps(M, 2.0);
  p.c = rng.gaps(M, 2.0);

  DualState d;
  const double dual_scale = rng.log_uniform(0.01, 3.0);
  d.Xi = rng.cmat(K, M, dual_scale);
  d.Phi = rng.cmat(M, M + 1, dual_scale);
  d.zeta = VectorXd(M);
  for (int m = 0; m < M; ++m) d.zeta(m) = rng.uniform(-2.0, 2.0) * dual_scale;

  PenaltyParams pp;
  pp.rho = rng.log_uniform(0.02, 20.0);
  pp.lambda = rng.log_uniform(0.1, 20.0);
  pp.gamma_smooth = rng.log_uniform(0.5, 50.0);
  pp.qos = rng.positive(M, 0.05, 10.0);
  pp.power_budget = rng.log_uniform(0.05, 5.0);
  pp.noise_col = rng.positive(M, 0.1, 2.0);

  // Start from a feasible point: W inside the budget, each row of (E, a) inside its cone.
  const double w2 = p.W.squaredNorm();
  if (w2 > pp.power_budget) p.W *= std::sqrt(pp.power_budget / w2) * rng.uniform(0.5, 1.0);
  for (int m = 0; m < M; ++m) {
    p.E(m, m) = std::abs(p.E(m, m));
    double other = 0.0;
    for (int j = 0; j <= M; ++j)
      if (j != m) other += std::norm(p.E(m, j));
    p.a(m) = std::max(p.a(m), std::sqrt(pp.qos(m) * other) - p.E(m, m).real());
  }
  return {std::move(ch), std::move(p), std::move(d), std::move(pp)};
}

inline double rel_gap(double value, double reference) {
  return (value - reference) / std::max(1.0, std::abs(reference));
}

/// Feasibility of a finished solve in physical units, recomputed from (W, theta) with the
/// model's SINR. Returns an empty string when feasible, otherwise the first violation.
inline std::string feasibility_violation(const SolveResult& res, const ChannelSet& ch,
                                         const Scenario& s, double slack = 1e-3) {
  const double power = total_power(res.W);
  if (power > s.power_budget_w * (1.0 + 1e-9))
    return "power " + std::to_string(power) + " exceeds budget";
  if (std::abs(power - res.power_w) > 1e-12 * std::max(1.0, power))
    return "reported power differs from ||W||^2";
  for (int m = 0; m < s.n_users; ++m) {
    if (!res.admitted[static_cast<std::size_t>(m)]) continue;
    const double v = sinr(ch, res.theta, res.W, m, s.noise_power_w(m));
    if (v < s.qos_target(m) * (1.0 - slack))
      return "admitted user " + std::to_string(m) + " has SINR " + std::to_string(v) +
             " below target " + std::to_string(s.qos_target(m));
  }
  return {};
}

}  // namespace irsac::testing
