#include "irsac/oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace irsac::oracle {

void OracleConfig::validate() const {
  if (!(w_tol > 0.0 && socp_tol > 0.0 && dykstra_tol > 0.0 && fixed_point_tol > 0.0))
    throw std::invalid_argument("oracle tolerances must be > 0");
  if (grid_n < 1000) throw std::invalid_argument("oracle grid needs >= 1000 points");
  if (w_max_iter < 1 || socp_max_iter < 1 || dykstra_max_iter < 1 || fixed_point_max_iter < 1)
    throw std::invalid_argument("oracle iteration caps must be >= 1");
}

// ---------------------------------------------------------------------------

double w_objective(const MatrixXcd& W, const MatrixXcd& P, const MatrixXcd& PhiM,
                   const MatrixXcd& EM, double rho) {
  const MatrixXcd PW = P * W;
  double lin = 0.0;
  for (Eigen::Index i = 0; i < PW.rows(); ++i)
    for (Eigen::Index j = 0; j < PW.cols(); ++j) lin += (std::conj(PhiM(i, j)) * PW(i, j)).real();
  return W.squaredNorm() - lin + (EM - PW).squaredNorm() / (2.0 * rho);
}

namespace {

MatrixXcd project_ball(const MatrixXcd& W, double budget) {
  const double n2 = W.squaredNorm();
  return n2 > budget ? MatrixXcd(W * std::sqrt(budget / n2)) : W;
}

}  // namespace

WOracleResult projected_gradient_w(const MatrixXcd& P, const MatrixXcd& PhiM,
                                   const MatrixXcd& EM, double rho, double budget,
                                   const OracleConfig& cfg) {
  cfg.validate();
  const Eigen::Index N = P.cols();
  const Eigen::Index M = P.rows();
  const MatrixXcd lin = P.adjoint() * PhiM + P.adjoint() * EM / rho;
  const MatrixXcd quad = P.adjoint() * P / rho;
  auto grad = [&](const MatrixXcd& W) -> MatrixXcd { return 2.0 * W + quad * W - lin; };

  const double L = 2.0 + P.squaredNorm() / rho;
  const double q = std::sqrt(2.0 / L);
  const double momentum = (1.0 - q) / (1.0 + q);
  const double scale = std::max(1.0, lin.norm());

  WOracleResult out;
  MatrixXcd W = MatrixXcd::Zero(N, M);
  MatrixXcd Y = W;
  for (int k = 0; k < cfg.w_max_iter; ++k) {
    const MatrixXcd Wn = project_ball(Y - grad(Y) / L, budget);
    Y = Wn + momentum * (Wn - W);
    W = Wn;
    out.iterations = k + 1;
    const double gm = L * (W - project_ball(W - grad(W) / L, budget)).norm();
    if (gm <= cfg.w_tol * scale) {
      out.converged = true;
      break;
    }
  }
  out.W = W;
  out.objective = w_objective(W, P, PhiM, EM, rho);
  return out;
}

// ---------------------------------------------------------------------------

PhaseGridResult phase_grid_theta(const MatrixXcd& Psi, const MatrixXcd& Xi, double rho,
                                 int grid_n) {
  if (grid_n < 1000) throw std::invalid_argument("phase_grid_theta: grid too coarse");
  const Eigen::Index K = Psi.rows();
  const MatrixXcd target = Psi + rho * Xi;
  PhaseGridResult out;
  out.best_phase.resize(K);
  out.best_objective.resize(K);
  out.resolution = 2.0 * std::numbers::pi / grid_n;
  for (Eigen::Index k = 0; k < K; ++k) {
    double best = std::numeric_limits<double>::infinity();
    double best_phi = 0.0;
    for (int i = 0; i < grid_n; ++i) {
      const double phi = out.resolution * i;
      const cplx u = std::polar(1.0, phi);
      double obj = 0.0;
      for (Eigen::Index m = 0; m < target.cols(); ++m) obj += std::norm(u - target(k, m));
      obj /= 2.0 * rho;
      if (obj < best) {
        best = obj;
        best_phi = phi;
      }
    }
    out.best_phase(k) = best_phi;
    out.best_objective(k) = best;
  }
  return out;
}

double theta_objective(const VectorXcd& theta, const MatrixXcd& Psi, const MatrixXcd& Xi,
                       double rho) {
  double obj = 0.0;
  for (Eigen::Index m = 0; m < Psi.cols(); ++m)
    obj += (theta - Psi.col(m) - rho * Xi.col(m)).squaredNorm();
  return obj / (2.0 * rho);
}

// ---------------------------------------------------------------------------

VectorXd finite_diff_gradient(const std::function<double(const VectorXd&)>& f,
                              const VectorXd& x, double step) {
  if (!(step >= 1e-8 && step <= 1e-4))
    throw std::invalid_argument("finite_diff_gradient: step must lie in [1e-8, 1e-4]");
  VectorXd g(x.size());
  VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + step;
    const double up = f(probe);
    probe(i) = x(i) - step;
    const double down = f(probe);
    probe(i) = x(i);
    if (!std::isfinite(up) || !std::isfinite(down))
      throw std::domain_error("finite_diff_gradient: non-finite evaluation");
    g(i) = (up - down) / (2.0 * step);
  }
  return g;
}

QuadMinResult minimize_quadratic_numeric(const std::function<double(const VectorXd&)>& f,
                                         const VectorXd& x0, double step, int max_steps) {
  if (!(step > 0.0)) throw std::invalid_argument("minimize_quadratic_numeric: step must be > 0");
  const Eigen::Index n = x0.size();
  auto gradient = [&](const VectorXd& x) {
    VectorXd g(n);
    VectorXd probe = x;
    for (Eigen::Index i = 0; i < n; ++i) {
      probe(i) = x(i) + step;
      const double up = f(probe);
      probe(i) = x(i) - step;
      const double down = f(probe);
      probe(i) = x(i);
      g(i) = (up - down) / (2.0 * step);
    }
    return g;
  };

  // The Hessian of a quadratic is constant, so it is estimated once at x0.
  Eigen::MatrixXd H(n, n);
  VectorXd probe = x0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      double v = 0.0;
      for (int si : {1, -1})
        for (int sj : {1, -1}) {
          probe = x0;
          probe(i) += si * step;
          probe(j) += sj * step;
          v += si * sj * f(probe);
        }
      H(i, j) = H(j, i) = v / (4.0 * step * step);
    }
  if (!H.allFinite()) throw std::domain_error("minimize_quadratic_numeric: non-finite Hessian");
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);

  QuadMinResult out;
  out.x = x0;
  VectorXd g = gradient(out.x);
  out.gradient_norm = g.norm();
  for (int k = 0; k < max_steps; ++k) {
    const VectorXd next = out.x - ldlt.solve(g);
    const VectorXd gn = gradient(next);
    if (!(gn.norm() < out.gradient_norm)) break;
    out.x = next;
    g = gn;
    out.gradient_norm = gn.norm();
    out.newton_steps = k + 1;
  }
  out.objective = f(out.x);
  return out;
}

GridMinResult grid_minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                                   int n) {
  if (n < 1000) throw std::invalid_argument("grid_minimize_scalar: needs >= 1000 points");
  if (!(hi > lo)) throw std::invalid_argument("grid_minimize_scalar: empty interval");
  GridMinResult out;
  out.resolution = (hi - lo) / (n - 1);
  out.objective = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double x = lo + i * out.resolution;
    const double v = f(x);
    if (v < out.objective) {
      out.objective = v;
      out.x = x;
    }
  }
  return out;
}

VectorXd to_real(const VectorXcd& z) {
  VectorXd x(2 * z.size());
  x.head(z.size()) = z.real();
  x.tail(z.size()) = z.imag();
  return x;
}

VectorXcd to_complex(const VectorXd& x) {
  const Eigen::Index n = x.size() / 2;
  VectorXcd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = cplx(x(i), x(n + i));
  return z;
}

// ---------------------------------------------------------------------------

double row_objective(const RowData& row, const RowVectorXcd& e, double a) {
  double lin = 0.0;
  for (Eigen::Index j = 0; j < e.size(); ++j) lin += (std::conj(row.phi(j)) * e(j)).real();
  const double d = row.c - a;
  return lin - row.zeta * a + ((e - row.y).squaredNorm() + d * d) / (2.0 * row.rho);
}

namespace {

// (x, a, w): the real diagonal entry, the gap, and the remaining M entries.
struct ConePoint {
  double x = 0.0;
  double a = 0.0;
  VectorXcd w;

  double dist2(const ConePoint& o) const {
    return (x - o.x) * (x - o.x) + (a - o.a) * (a - o.a) + (w - o.w).squaredNorm();
  }
  ConePoint operator+(const ConePoint& o) const { return {x + o.x, a + o.a, w + o.w}; }
  ConePoint operator-(const ConePoint& o) const { return {x - o.x, a - o.a, w - o.w}; }
};

// {x + a >= kappa ||w||}: in s = (x + a)/sqrt2, d = (x - a)/sqrt2 it is {s >= (kappa/sqrt2)||w||}.
ConePoint project_rotated_cone(const ConePoint& p, double kappa) {
  const double r2 = std::numbers::sqrt2;
  const double s0 = (p.x + p.a) / r2;
  const double d0 = (p.x - p.a) / r2;
  const double alpha = kappa / r2;
  const double n0 = p.w.norm();
  double s = s0;
  VectorXcd w = p.w;
  if (alpha * n0 > s0) {
    const double r = (alpha * s0 + n0) / (1.0 + alpha * alpha);
    if (r <= 0.0) {
      s = 0.0;
      w.setZero();
    } else {
      s = alpha * r;
      w = p.w * (r / n0);
    }
  }
  return {(s + d0) / r2, (s - d0) / r2, w};
}

ConePoint project_halfspace(const ConePoint& p) { return {p.x, std::max(p.a, 0.0), p.w}; }

ConePoint project_feasible(const ConePoint& start, double kappa, const OracleConfig& cfg) {
  ConePoint pt = start;
  ConePoint inc1{0.0, 0.0, VectorXcd::Zero(start.w.size())};
  ConePoint inc2 = inc1;
  for (int it = 0; it < cfg.dykstra_max_iter; ++it) {
    const ConePoint y = project_rotated_cone(pt + inc1, kappa);
    inc1 = pt + inc1 - y;
    const ConePoint next = project_halfspace(y + inc2);
    inc2 = y + inc2 - next;
    const double change = next.dist2(pt);
    pt = next;
    if (change <= cfg.dykstra_tol * cfg.dykstra_tol) break;
  }
  return pt;
}

}  // namespace

RowOracleResult socp_projection_numeric(const RowData& row, const OracleConfig& cfg) {
  cfg.validate();
  const Eigen::Index len = row.y.size();
  if (row.phi.size() != len || row.m < 0 || row.m >= len - 1)
    throw std::invalid_argument("socp_projection_numeric: inconsistent row data");
  const double kappa = std::sqrt(row.gamma);
  const double step = 0.5 * row.rho;

  auto split = [&](const RowVectorXcd& e, double a) {
    ConePoint p;
    p.x = e(row.m).real();
    p.a = a;
    p.w.resize(len - 1);
    for (Eigen::Index j = 0, k = 0; j < len; ++j)
      if (j != row.m) p.w(k++) = e(j);
    return p;
  };
  auto join = [&](const ConePoint& p) {
    RowVectorXcd e(len);
    for (Eigen::Index j = 0, k = 0; j < len; ++j) e(j) = (j == row.m) ? cplx(p.x, 0.0) : p.w(k++);
    return e;
  };

  RowOracleResult out;
  RowVectorXcd e = RowVectorXcd::Zero(len);
  double a = 0.0;
  for (int it = 0; it < cfg.socp_max_iter; ++it) {
    const RowVectorXcd ge = row.phi + (e - row.y) / row.rho;
    const double ga = -row.zeta - (row.c - a) / row.rho;
    const ConePoint next = project_feasible(split(e - step * ge, a - step * ga), kappa, cfg);
    const RowVectorXcd en = join(next);
    const double change = std::sqrt((en - e).squaredNorm() + (next.a - a) * (next.a - a));
    e = en;
    a = next.a;
    out.iterations = it + 1;
    if (change <= cfg.socp_tol * (1.0 + e.norm() + std::abs(a))) {
      out.converged = true;
      break;
    }
  }
  out.e = e;
  out.a = a;
  out.objective = row_objective(row, e, a);
  return out;
}

// ---------------------------------------------------------------------------

PowerMinResult min_power_beamforming(const MatrixXcd& H, const VectorXd& noise_power,
                                     const VectorXd& targets, const OracleConfig& cfg) {
  cfg.validate();
  const Eigen::Index U = H.rows();
  const Eigen::Index N = H.cols();
  PowerMinResult out;
  out.W = MatrixXcd::Zero(N, U);
  if (U == 0) {
    out.status = PowerMinResult::Status::feasible;
    return out;
  }

  auto covariance = [&](const VectorXd& lam) {
    MatrixXcd S = MatrixXcd::Identity(N, N);
    for (Eigen::Index m = 0; m < U; ++m) S += lam(m) * H.row(m).adjoint() * H.row(m);
    return S;
  };

  VectorXd lam = VectorXd::Zero(U);
  bool converged = false;
  for (int it = 0; it < cfg.fixed_point_max_iter; ++it) {
    const Eigen::LLT<MatrixXcd> llt(covariance(lam));
    VectorXd next(U);
    for (Eigen::Index m = 0; m < U; ++m) {
      const VectorXcd h = H.row(m).adjoint();
      const double quad = h.dot(llt.solve(h)).real();
      next(m) = 1.0 / ((1.0 + 1.0 / targets(m)) * quad);
    }
    const double rel = ((next - lam).cwiseAbs().array() / next.array()).maxCoeff();
    lam = next;
    if (!lam.allFinite() || lam.maxCoeff() > 1e15) {
      out.status = PowerMinResult::Status::infeasible;
      return out;
    }
    if (rel <= cfg.fixed_point_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) return out;  // unknown

  const Eigen::LLT<MatrixXcd> llt(covariance(lam));
  MatrixXcd dirs(N, U);
  for (Eigen::Index m = 0; m < U; ++m) {
    const VectorXcd v = llt.solve(VectorXcd(H.row(m).adjoint()));
    dirs.col(m) = v / v.norm();
  }
  const MatrixXcd G = H * dirs;
  Eigen::MatrixXd D(U, U);
  for (Eigen::Index m = 0; m < U; ++m)
    for (Eigen::Index n = 0; n < U; ++n)
      D(m, n) = (m == n) ? std::norm(G(m, m)) / targets(m) : -std::norm(G(m, n));
  const VectorXd p = D.fullPivLu().solve(noise_power);
  if (!p.allFinite() || (p.array() <= 0.0).any()) {
    out.status = PowerMinResult::Status::infeasible;
    return out;
  }
  for (Eigen::Index m = 0; m < U; ++m) out.W.col(m) = std::sqrt(p(m)) * dirs.col(m);
  out.power = p.sum();
  out.status = PowerMinResult::Status::feasible;
  return out;
}

AdmissionOracleResult exhaustive_admission(const ChannelSet& ch, const Scenario& scenario,
                                           double lambda, double sinr_slack,
                                           const OracleConfig& cfg) {
  if (ch.n_irs_elements() != 0)
    throw std::invalid_argument("exhaustive_admission: fold the IRS phases into the channels");
  const int M = ch.n_users();
  if (M > 16) throw std::invalid_argument("exhaustive_admission: too many users to enumerate");
  if (scenario.n_users != M) throw std::invalid_argument("exhaustive_admission: size mismatch");

  AdmissionOracleResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << M); ++mask) {
    std::vector<int> users;
    for (int m = 0; m < M; ++m)
      if (mask & (1u << m)) users.push_back(m);
    const auto U = static_cast<Eigen::Index>(users.size());

    SubsetOutcome o;
    o.admitted.assign(static_cast<std::size_t>(M), false);
    for (int m : users) o.admitted[static_cast<std::size_t>(m)] = true;

    MatrixXcd H(U, ch.n_antennas());
    VectorXd noise(U);
    VectorXd target(U);
    for (Eigen::Index i = 0; i < U; ++i) {
      const int m = users[static_cast<std::size_t>(i)];
      H.row(i) = ch.g(m).adjoint();
      noise(i) = scenario.noise_power_w(m);
      target(i) = scenario.qos_target(m) * (1.0 - sinr_slack);
    }
    const PowerMinResult pm = min_power_beamforming(H, noise, target, cfg);
    o.status = pm.status;
    o.power = pm.power;
    const bool usable = pm.status == PowerMinResult::Status::feasible &&
                        pm.power <= scenario.power_budget_w * (1.0 + 1e-12);
    o.objective = usable ? pm.power + lambda * static_cast<double>(M - U)
                         : std::numeric_limits<double>::infinity();
    if (pm.status == PowerMinResult::Status::unknown) ++best.n_unknown;
    if (o.objective < best.objective) {
      best.objective = o.objective;
      best.best = o.admitted;
      best.power = o.power;
    }
    best.subsets.push_back(std::move(o));
  }
  return best;
}

}  // namespace irsac::oracle
