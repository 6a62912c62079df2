#pragma once

// Slow numerical references for certifying the closed-form block updates and small
// end-to-end solves. Nothing here calls into blocks.cpp or pdd.cpp.

#include <functional>
#include <vector>

#include "irsac/model.hpp"

namespace irsac::oracle {

struct OracleConfig {
  double w_tol = 1e-10;         // gradient-mapping norm for the W oracle
  int w_max_iter = 2'000'000;
  double socp_tol = 1e-13;      // step length for the row-projection descent
  int socp_max_iter = 200'000;
  int dykstra_max_iter = 20'000;
  double dykstra_tol = 1e-15;
  int grid_n = 100'000;
  double fixed_point_tol = 1e-14;
  int fixed_point_max_iter = 500'000;

  void validate() const;
};

// ---- W subproblem ------------------------------------------------------------

/// ||W||^2 - Re Tr(Phi_M^H P W) + ||E_M - P W||^2 / (2 rho).
double w_objective(const MatrixXcd& W, const MatrixXcd& P, const MatrixXcd& PhiM,
                   const MatrixXcd& EM, double rho);

struct WOracleResult {
  MatrixXcd W;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Accelerated projected gradient onto the Frobenius ball of radius sqrt(budget).
WOracleResult projected_gradient_w(const MatrixXcd& P, const MatrixXcd& PhiM,
                                   const MatrixXcd& EM, double rho, double budget,
                                   const OracleConfig& cfg = {});

// ---- theta subproblem --------------------------------------------------------

struct PhaseGridResult {
  VectorXd best_phase;      // per element
  VectorXd best_objective;  // per element, sum_m |e^{j phi} - (psi_mk + rho xi_mk)|^2 / (2 rho)
  double resolution = 0.0;  // grid spacing in radians
};

/// Exhaustive scan of grid_n equispaced phases per IRS element.
PhaseGridResult phase_grid_theta(const MatrixXcd& Psi, const MatrixXcd& Xi, double rho,
                                 int grid_n);

/// Total theta-subproblem objective sum_m ||theta - (psi_m + rho xi_m)||^2 / (2 rho).
double theta_objective(const VectorXcd& theta, const MatrixXcd& Psi, const MatrixXcd& Xi,
                       double rho);

// ---- finite differences ------------------------------------------------------

/// Central differences over each real coordinate of `x`. `step` must lie in [1e-8, 1e-4].
VectorXd finite_diff_gradient(const std::function<double(const VectorXd&)>& f,
                              const VectorXd& x, double step);

/// [Re(z); Im(z)] and back.
VectorXd to_real(const VectorXcd& z);
VectorXcd to_complex(const VectorXd& x);

/// Minimiser of a convex quadratic f over R^n from function values only: gradient and
/// Hessian by central differences with `step` (exact for quadratics up to rounding),
/// followed by Newton steps until the gradient stops shrinking.
struct QuadMinResult {
  VectorXd x;
  double objective = 0.0;
  double gradient_norm = 0.0;
  int newton_steps = 0;
};
QuadMinResult minimize_quadratic_numeric(const std::function<double(const VectorXd&)>& f,
                                         const VectorXd& x0, double step = 1e-2,
                                         int max_steps = 8);

/// Scalar minimiser by exhaustive scan of n equispaced points on [lo, hi] (n >= 1000).
struct GridMinResult {
  double x = 0.0;
  double objective = 0.0;
  double resolution = 0.0;
};
GridMinResult grid_minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                                   int n);

// ---- row (SOC) subproblem ----------------------------------------------------

struct RowData {
  RowVectorXcd y;    // row m of [P(Psi) W, s]
  RowVectorXcd phi;  // row m of Phi
  double c = 0.0;
  double zeta = 0.0;
  double rho = 1.0;
  double gamma = 1.0;
  int m = 0;
};

/// Re(phi^H e) - zeta a + (||e - y||^2 + (c - a)^2) / (2 rho).
double row_objective(const RowData& row, const RowVectorXcd& e, double a);

struct RowOracleResult {
  RowVectorXcd e;
  double a = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Projected gradient where each projection onto
/// {e_m + a >= sqrt(gamma) ||e_{-m}||, Im e_m = 0, a >= 0} is computed by Dykstra's
/// alternating projections between the rotated cone and the half-space.
RowOracleResult socp_projection_numeric(const RowData& row, const OracleConfig& cfg = {});

// ---- end-to-end ----------------------------------------------------------------

struct PowerMinResult {
  enum class Status { feasible, infeasible, unknown };
  Status status = Status::unknown;
  MatrixXcd W;  // N x |users|
  double power = 0.0;
};

/// Globally optimal downlink power minimisation with SINR targets (no budget) for the
/// rows of `H` (each row a user's effective channel), via the uplink-downlink duality
/// fixed point.
PowerMinResult min_power_beamforming(const MatrixXcd& H, const VectorXd& noise_power,
                                     const VectorXd& targets, const OracleConfig& cfg = {});

struct SubsetOutcome {
  std::vector<bool> admitted;
  PowerMinResult::Status status = PowerMinResult::Status::unknown;
  double power = 0.0;
  double objective = 0.0;  // power + lambda * #rejected; +inf when not usable
};

struct AdmissionOracleResult {
  double objective = 0.0;
  std::vector<bool> best;
  double power = 0.0;
  int n_unknown = 0;
  std::vector<SubsetOutcome> subsets;
};

/// min over all 2^M admission sets of (power + lambda * #rejected) subject to the budget
/// and SINR >= gamma_m (1 - sinr_slack) for admitted users. `ch` must have no IRS
/// (fold fixed phases first). Intended for M <= 3.
AdmissionOracleResult exhaustive_admission(const ChannelSet& ch, const Scenario& scenario,
                                           double lambda, double sinr_slack,
                                           const OracleConfig& cfg = {});

}  // namespace irsac::oracle
