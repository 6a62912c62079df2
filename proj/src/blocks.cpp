#include "irsac/blocks.hpp"

#include <algorithm>
#include <cmath>

namespace irsac {

DualState DualState::zeros(int n_irs, int n_users) {
  return {MatrixXcd::Zero(n_irs, n_users), MatrixXcd::Zero(n_users, n_users + 1),
          VectorXd::Zero(n_users)};
}

void PenaltyParams::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("penalty: rho must be > 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("penalty: lambda must be >= 0");
  if (!(gamma_smooth > 0.0)) throw std::invalid_argument("penalty: gamma_smooth must be > 0");
  if (!(power_budget > 0.0)) throw std::invalid_argument("penalty: power_budget must be > 0");
  if (qos.size() != noise_col.size())
    throw std::invalid_argument("penalty: qos and noise_col sizes differ");
}

double sigmoid_indicator(double a, double gamma_smooth) {
  if (a < 0.0) throw std::domain_error("sigmoid_indicator: gap must be >= 0");
  return -std::expm1(-gamma_smooth * a);
}

MatrixXcd stacked_rows(const ChannelSet& ch, const MatrixXcd& Psi) {
  const int M = ch.n_users();
  const int K = ch.n_irs_elements();
  MatrixXcd P(M, ch.n_antennas());
  for (int m = 0; m < M; ++m) P.row(m) = ch.g(m).adjoint();
  if (K > 0) {
    if (Psi.rows() != K || Psi.cols() != M) throw std::invalid_argument("Psi must be K x M");
    // psi_m^T q_m = (psi_m .* conj(h_m))^T G
    MatrixXcd V(M, K);
    for (int m = 0; m < M; ++m)
      V.row(m) = Psi.col(m).cwiseProduct(ch.h(m).conjugate()).transpose();
    P.noalias() += V * ch.G();
  }
  return P;
}

MatrixXcd equality_target(const ChannelSet& ch, const MatrixXcd& Psi, const MatrixXcd& W,
                          const VectorXd& noise_col) {
  const int M = ch.n_users();
  MatrixXcd Y(M, M + 1);
  Y.leftCols(M) = stacked_rows(ch, Psi) * W;
  Y.col(M) = noise_col.cast<cplx>();
  return Y;
}

namespace {

void check_shapes(const PrimalState& p, const ChannelSet& ch) {
  const int N = ch.n_antennas();
  const int M = ch.n_users();
  const int K = ch.n_irs_elements();
  if (p.W.rows() != N || p.W.cols() != M) throw std::invalid_argument("W must be N x M");
  if (p.theta.size() != K) throw std::invalid_argument("theta must have K entries");
  if (p.Psi.rows() != K || p.Psi.cols() != M) throw std::invalid_argument("Psi must be K x M");
  if (p.E.rows() != M || p.E.cols() != M + 1) throw std::invalid_argument("E must be M x (M+1)");
  if (p.a.size() != M || p.c.size() != M) throw std::invalid_argument("a, c must have M entries");
}

void check_shapes(const DualState& d, const ChannelSet& ch) {
  const int M = ch.n_users();
  const int K = ch.n_irs_elements();
  if (d.Xi.rows() != K || d.Xi.cols() != M) throw std::invalid_argument("Xi must be K x M");
  if (d.Phi.rows() != M || d.Phi.cols() != M + 1)
    throw std::invalid_argument("Phi must be M x (M+1)");
  if (d.zeta.size() != M) throw std::invalid_argument("zeta must have M entries");
}

}  // namespace

double eval_al(const PrimalState& p, const DualState& d, const PenaltyParams& pp,
               const ChannelSet& ch) {
  check_shapes(p, ch);
  check_shapes(d, ch);
  const int M = ch.n_users();
  const double inv2rho = 0.5 / pp.rho;

  double value = p.W.squaredNorm();
  for (int m = 0; m < M; ++m) value += pp.lambda * sigmoid_indicator(p.c(m), pp.gamma_smooth);

  for (int m = 0; m < M; ++m) {
    const VectorXcd r = p.Psi.col(m) - p.theta;
    value += d.Xi.col(m).dot(r).real() + inv2rho * r.squaredNorm();
  }

  const MatrixXcd R = p.E - equality_target(ch, p.Psi, p.W, pp.noise_col);
  value += (d.Phi.conjugate().cwiseProduct(R)).sum().real() + inv2rho * R.squaredNorm();

  const VectorXd rc = p.c - p.a;
  value += d.zeta.dot(rc) + inv2rho * rc.squaredNorm();
  return value;
}

double residual_sigma(const PrimalState& p, const ChannelSet& ch, const VectorXd& noise_col) {
  check_shapes(p, ch);
  double sigma = 0.0;
  for (int m = 0; m < ch.n_users(); ++m)
    if (p.theta.size() > 0)
      sigma = std::max(sigma, (p.Psi.col(m) - p.theta).cwiseAbs().maxCoeff());
  const MatrixXcd R = p.E - equality_target(ch, p.Psi, p.W, noise_col);
  sigma = std::max(sigma, R.cwiseAbs().maxCoeff());
  sigma = std::max(sigma, (p.a - p.c).cwiseAbs().maxCoeff());
  return sigma;
}

// ---------------------------------------------------------------------------

WUpdate update_w(const PrimalState& p, const DualState& d, const PenaltyParams& pp,
                 const ChannelSet& ch) {
  check_shapes(p, ch);
  const int M = ch.n_users();
  const MatrixXcd P = stacked_rows(ch, p.Psi);
  const MatrixXcd B = P.adjoint() * (pp.rho * d.Phi.leftCols(M) + p.E.leftCols(M));

  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(P.adjoint() * P);
  const VectorXd pi = eig.eigenvalues().cwiseMax(0.0);
  const MatrixXcd& U = eig.eigenvectors();
  const MatrixXcd Bt = U.adjoint() * B;
  const VectorXd delta = Bt.rowwise().squaredNorm();

  const double two_rho = 2.0 * pp.rho;
  auto power_at = [&](double alpha) {
    double s = 0.0;
    for (Eigen::Index n = 0; n < pi.size(); ++n) {
      const double den = pi(n) + two_rho * (1.0 + alpha);
      s += delta(n) / (den * den);
    }
    return s;
  };

  const double budget = pp.power_budget;
  double alpha = 0.0;
  if (power_at(0.0) > budget) {
    double lo = 0.0;
    double hi = 1.0;
    while (power_at(hi) > budget && hi < 1e300) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double s = power_at(mid);
      if (std::abs(s - budget) <= 1e-10 * budget) {
        hi = mid;
        break;
      }
      (s > budget ? lo : hi) = mid;
    }
    alpha = hi;
  }

  VectorXd scale(pi.size());
  for (Eigen::Index n = 0; n < pi.size(); ++n) scale(n) = 1.0 / (pi(n) + two_rho * (1.0 + alpha));
  return {U * (scale.asDiagonal() * Bt), alpha};
}

VectorXcd update_theta(const MatrixXcd& Psi, const MatrixXcd& Xi, double rho,
                       const VectorXcd& theta_prev) {
  if (Psi.rows() != Xi.rows() || Psi.cols() != Xi.cols())
    throw std::invalid_argument("update_theta: Psi and Xi shapes differ");
  if (theta_prev.size() != Psi.rows())
    throw std::invalid_argument("update_theta: theta_prev must have K entries");
  const VectorXcd v = (Psi + rho * Xi).rowwise().mean();
  VectorXcd theta(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k)
    theta(k) = (v(k) == cplx(0.0, 0.0)) ? theta_prev(k) : std::polar(1.0, std::arg(v(k)));
  return theta;
}

namespace {

struct PsiShared {
  MatrixXcd GW;    // K x M
  MatrixXcd gram;  // conj(GW) (GW)^T, K x K; only built when K <= M
};

PsiShared psi_shared(const PrimalState& p, const ChannelSet& ch) {
  PsiShared s;
  s.GW = ch.G() * p.W;
  if (ch.n_irs_elements() <= ch.n_users()) s.gram = s.GW.conjugate() * s.GW.transpose();
  return s;
}

VectorXcd solve_psi(const PrimalState& p, const DualState& d, const PenaltyParams& pp,
                    const ChannelSet& ch, const PsiShared& s, int m) {
  const int M = ch.n_users();
  const int K = ch.n_irs_elements();
  const VectorXcd& h = ch.h(m);

  const MatrixXcd A = h.conjugate().asDiagonal() * s.GW;  // q_m W
  const MatrixXcd Ac = A.conjugate();
  const VectorXcd phi = d.Phi.row(m).head(M).transpose();
  const VectorXcd r = p.E.row(m).head(M).transpose() - (ch.g(m).adjoint() * p.W).transpose();
  const VectorXcd rhs = p.theta - pp.rho * d.Xi.col(m) + Ac * (pp.rho * phi + r);

  if (K <= M) {
    MatrixXcd H = h.asDiagonal() * s.gram * h.conjugate().asDiagonal();
    H.diagonal().array() += 1.0;
    return H.llt().solve(rhs);
  }
  // I_K + Ac A^T has rank-M update; invert through the M x M capacitance matrix.
  MatrixXcd cap = A.transpose() * Ac;
  cap.diagonal().array() += 1.0;
  return rhs - Ac * cap.llt().solve(A.transpose() * rhs);
}

}  // namespace

VectorXcd update_psi(const PrimalState& p, const DualState& d, const PenaltyParams& pp,
                     const ChannelSet& ch, int m) {
  check_shapes(p, ch);
  if (m < 0 || m >= ch.n_users()) throw std::out_of_range("update_psi: user index out of range");
  if (ch.n_irs_elements() == 0) return VectorXcd(0);
  return solve_psi(p, d, pp, ch, psi_shared(p, ch), m);
}

MatrixXcd update_psi_all(const PrimalState& p, const DualState& d, const PenaltyParams& pp,
                         const ChannelSet& ch) {
  check_shapes(p, ch);
  const int M = ch.n_users();
  MatrixXcd Psi(ch.n_irs_elements(), M);
  if (ch.n_irs_elements() == 0) return Psi;
  const PsiShared s = psi_shared(p, ch);
  for (int m = 0; m < M; ++m) Psi.col(m) = solve_psi(p, d, pp, ch, s, m);
  return Psi;
}

double update_c(double a, double zeta, double c_prev, const PenaltyParams& pp) {
  if (pp.fix_gap_zero) return 0.0;
  const double lambda_hat = pp.gamma_smooth * pp.lambda * std::exp(-pp.gamma_smooth * c_prev);
  return std::max(0.0, a - pp.rho * (lambda_hat + zeta));
}

RowUpdate project_row(const RowVectorXcd& y, const RowVectorXcd& phi, double c, double zeta,
                      double rho, double gamma, int m, bool fix_gap_zero) {
  const Eigen::Index len = y.size();
  if (phi.size() != len || m < 0 || m >= len - 1)
    throw std::invalid_argument("project_row: inconsistent row data");

  const RowVectorXcd z = y - rho * phi;
  const double u = z(m).real();
  const double kappa = std::sqrt(gamma);
  double n2 = 0.0;
  for (Eigen::Index j = 0; j < len; ++j)
    if (j != m) n2 += std::norm(z(j));
  const double n = std::sqrt(n2);
  const double t = c + rho * zeta;

  double x = 0.0;        // e_m^m
  double a = 0.0;
  double shrink = 0.0;   // e_{-m}^m = shrink * z_{-m}
  bool done = false;

  if (!fix_gap_zero) {
    const double vertex = std::max(0.0, -u - t);
    if (n <= 0.5 * kappa * vertex) {
      x = u + 0.5 * vertex;
      a = t + 0.5 * vertex;
      shrink = 0.0;
    } else {
      const double beta = std::max(0.0, kappa * n - u - t) / (rho * (2.0 + gamma));
      x = u + rho * beta;
      a = t + rho * beta;
      shrink = (n - rho * beta * kappa) / n;
    }
    done = a >= 0.0;
  }

  if (!done) {
    // a pinned at zero: project (u, z_{-m}) onto {x >= kappa ||w||}.
    a = 0.0;
    if (kappa * n <= u) {
      x = u;
      shrink = 1.0;
    } else if (n <= -kappa * u) {
      x = 0.0;
      shrink = 0.0;
    } else {
      x = u + (kappa * n - u) / (1.0 + gamma);
      shrink = x / (kappa * n);
    }
  }

  RowUpdate out;
  out.e = shrink * z;
  out.e(m) = cplx(x, 0.0);
  out.a = a;
  return out;
}

RowUpdate update_e_a(const PrimalState& p, const DualState& d, const PenaltyParams& pp,
                     const ChannelSet& ch, int m) {
  check_shapes(p, ch);
  const int M = ch.n_users();
  if (m < 0 || m >= M) throw std::out_of_range("update_e_a: user index out of range");
  RowVectorXcd y(M + 1);
  const VectorXcd psi = ch.n_irs_elements() > 0 ? VectorXcd(p.Psi.col(m)) : VectorXcd(0);
  y.head(M) = channel_row(ch, psi, m) * p.W;
  y(M) = pp.noise_col(m);
  return project_row(y, d.Phi.row(m), p.c(m), d.zeta(m), pp.rho, pp.qos(m), m, pp.fix_gap_zero);
}

}  // namespace irsac
