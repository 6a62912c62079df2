#pragma once

#include "irsac/model.hpp"

namespace irsac {

/// The six primal blocks of the split problem.
///
/// `Psi` holds one copy of the IRS phases per user (column m); `E` holds the
/// received-signal surrogates, row m being user m's responses to every beam plus
/// a last column that tracks the noise scale.
struct PrimalState {
  MatrixXcd W;      // N x M beamformers
  VectorXcd theta;  // K, unit modulus
  VectorXd a;       // M, QoS gaps (>= 0)
  MatrixXcd Psi;    // K x M
  MatrixXcd E;      // M x (M+1)
  VectorXd c;       // M, sigmoid-side copy of a (>= 0)
};

struct DualState {
  MatrixXcd Xi;   // K x M, for psi_m = theta
  MatrixXcd Phi;  // M x (M+1), for E = [P(Psi) W, s]
  VectorXd zeta;  // M, for c = a

  static DualState zeros(int n_irs, int n_users);
};

struct PenaltyParams {
  double rho = 1.0;
  double lambda = 10.0;
  double gamma_smooth = 10.0;
  VectorXd qos;          // linear SINR thresholds
  double power_budget = 1.0;
  VectorXd noise_col;    // last column target of E, amplitude units
  /// Pins a = c = 0 (pure power minimisation over a fixed user set).
  bool fix_gap_zero = false;

  void validate() const;
};

/// 1 - exp(-gamma_smooth * a), the smooth stand-in for the indicator a != 0.
double sigmoid_indicator(double a, double gamma_smooth);

/// P(Psi): row m is g_m^H + psi_m^T q_m.
MatrixXcd stacked_rows(const ChannelSet& ch, const MatrixXcd& Psi);

/// [P(Psi) W, s], the value E is constrained to.
MatrixXcd equality_target(const ChannelSet& ch, const MatrixXcd& Psi, const MatrixXcd& W,
                          const VectorXd& noise_col);

double eval_al(const PrimalState& p, const DualState& d, const PenaltyParams& pp,
               const ChannelSet& ch);

/// Largest modulus over all scalar equality violations (psi_m - theta, E - [P W, s], a - c).
double residual_sigma(const PrimalState& p, const ChannelSet& ch, const VectorXd& noise_col);

struct WUpdate {
  MatrixXcd W;
  double alpha = 0.0;  // multiplier of the power constraint
};

/// Exact minimiser of the W subproblem under ||W||_F^2 <= P.
///
/// Diagonalises P(Psi)^H P(Psi) once, so the power multiplier is found by bisection on a
/// scalar function; the bisection stops at |‖W‖² - P| <= 1e-10 P or 200 steps.
WUpdate update_w(const PrimalState& p, const DualState& d, const PenaltyParams& pp,
                 const ChannelSet& ch);

/// Unit-modulus projection of the averaged consensus targets. Elements whose average is
/// exactly zero keep `theta_prev`.
VectorXcd update_theta(const MatrixXcd& Psi, const MatrixXcd& Xi, double rho,
                       const VectorXcd& theta_prev);

/// Stationary point of user m's (strictly convex) consensus-copy subproblem.
///
/// Setting the Wirtinger derivative to zero gives
///   [I + conj(A) A^T] psi = theta - rho xi_m + conj(A) (rho phi + r),
/// with A = q_m W, phi the first M entries of row m of Phi (as a column) and
/// r = (e_M^m)^T - (g_m^H W)^T.
VectorXcd update_psi(const PrimalState& p, const DualState& d, const PenaltyParams& pp,
                     const ChannelSet& ch, int m);

/// All M copies at once; shares G W across users.
MatrixXcd update_psi_all(const PrimalState& p, const DualState& d, const PenaltyParams& pp,
                         const ChannelSet& ch);

/// Minimiser of the linearised sigmoid surrogate around c_prev.
double update_c(double a, double zeta, double c_prev, const PenaltyParams& pp);

struct RowUpdate {
  RowVectorXcd e;  // 1 x (M+1), e(m) real
  double a = 0.0;
};

/// Exact minimiser of user m's row problem over the rotated cone
/// e_m + a >= sqrt(gamma_m) ||e_{-m}||, Im e_m = 0, a >= 0.
RowUpdate update_e_a(const PrimalState& p, const DualState& d, const PenaltyParams& pp,
                     const ChannelSet& ch, int m);

/// Same closed form on explicit row data (y = row m of [P W, s], phi = row m of Phi).
RowUpdate project_row(const RowVectorXcd& y, const RowVectorXcd& phi, double c, double zeta,
                      double rho, double gamma, int m, bool fix_gap_zero = false);

}  // namespace irsac
