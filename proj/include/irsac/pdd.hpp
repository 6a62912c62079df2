#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "irsac/blocks.hpp"

namespace irsac {

/// Outer/inner loop controls. Defaults are the tuned desk values.
struct PddConfig {
  double rho0 = 1.0;
  double b1 = 0.6;            // penalty shrink
  double b2 = 0.9;            // eta / inner-tolerance shrink
  double eta0 = 1e-1;
  double theta0_tol = 1e-3;   // initial inner (BSUM) relative tolerance
  double tau = 1e-4;          // stop when the max equality violation is <= tau
  int max_outer = 300;
  int max_inner = 200;
  /// Watts per rejected user; defaults to 10 * P.
  std::optional<double> lambda;
  /// Sigmoid sharpness in the solver's noise-normalised gap units, where a gap of 1 means
  /// the user receives no useful signal at all. Defaults to kDefaultGammaSmooth.
  std::optional<double> gamma_smooth;
  double admit_sinr_slack = 1e-3;
  /// Before admission, re-solve the powers of every user whose SINR is at least
  /// power_control_ratio * gamma_m so that each meets its target exactly along the solver's
  /// beam directions. Kept only when the result fits the budget.
  bool power_control = true;
  double power_control_ratio = 0.8;
  bool polish = false;
  bool record_sweeps = false;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kRhoFloor = 1e-10;
inline constexpr double kDefaultGammaSmooth = 4.0;

/// The solver runs in a noise-normalised frame: user m's channels are scaled by
/// sqrt(P) / (sigma_m sqrt(gamma_m)), beamformers by 1 / sqrt(P), so the power budget is 1
/// and the last column of E targets 1 / sqrt(gamma_m). SINRs are unchanged.
struct WorkingFrame {
  VectorXd row_scale;
  VectorXd noise_col;
  VectorXd qos;
  double power_budget_w = 1.0;

  static WorkingFrame for_scenario(const Scenario& s);
  ChannelSet channels(const ChannelSet& physical) const;
  MatrixXcd to_physical_w(const MatrixXcd& W) const;
  MatrixXcd to_working_w(const MatrixXcd& W) const;
  /// Physical gap (amplitude units of sigma_m) from a working-frame gap.
  double to_physical_gap(double a, int m) const;
};

struct OuterRecord {
  int outer_iter = 0;
  double sigma = 0.0;
  double al_value = 0.0;  // augmented Lagrangian after the inner solve, in watts
  double rho = 0.0;
  double eta = 0.0;
  double inner_tol = 0.0;
  int n_admitted = 0;
  double power_w = 0.0;
  double wall_time_s = 0.0;  // inner solve plus bookkeeping for this iteration
};

enum class SolveStatus { converged, max_outer_reached, rho_floor_reached };
std::string to_string(SolveStatus s);

struct SolveResult {
  // Final iterates in the solver's working frame.
  PrimalState working_state;
  DualState working_dual;
  WorkingFrame frame;

  // Physical quantities. Rejected users' beamformer columns are zero.
  MatrixXcd W;
  VectorXcd theta;
  VectorXd gaps;
  std::vector<bool> admitted;
  int n_admitted = 0;
  double power_w = 0.0;
  VectorXd per_user_sinr;
  double objective = 0.0;  // power_w + lambda * (#rejected)
  double lambda = 0.0;
  double gamma_smooth = 0.0;

  std::vector<OuterRecord> outer_trace;
  std::vector<int> inner_counts;
  /// Only when PddConfig::record_sweeps: per outer iteration, the AL on entry to the inner
  /// solve followed by the AL after each sweep.
  std::vector<std::vector<double>> sweep_al;
  double wall_time_s = 0.0;
  SolveStatus status = SolveStatus::max_outer_reached;
  bool power_controlled = false;
  bool polished = false;

  bool converged() const { return status == SolveStatus::converged; }
};

/// Starting point in the frame of `ch`: random unit phases, matched-filter beams with
/// ||W||^2 = budget / 2, exact consensus copies and E, gaps from the SOC form of the
/// SINR constraint, c = a.
PrimalState init_primal(const ChannelSet& ch, const VectorXd& noise_col, const VectorXd& qos,
                        double power_budget, std::uint64_t seed);

/// Physical-frame initialisation (noise column sigma_m) with zero multipliers.
std::pair<PrimalState, DualState> init_state(const ChannelSet& ch, const Scenario& scenario,
                                             std::uint64_t seed);

struct BsumReport {
  int sweeps = 0;
  double al_start = 0.0;   // AL on entry
  std::vector<double> al;  // AL after each sweep
};

/// Cyclic block minimisation W -> theta -> {psi_m} -> c -> {(e^m, a_m)} until the relative
/// AL change drops below `tol` or `max_inner` sweeps. Throws NumericalError on non-finite
/// iterates.
BsumReport bsum_solve(PrimalState& state, const DualState& dual, const PenaltyParams& pp,
                      const ChannelSet& ch, double tol, int max_inner);

SolveResult pdd_solve(const ChannelSet& ch, const Scenario& scenario, const PddConfig& config);

/// Exact power allocation along the directions of W's columns for the users flagged in
/// `serve` (SINR_m = gamma_m for each of them, all other columns zero). Empty when that
/// allocation is infeasible or exceeds the budget.
std::optional<MatrixXcd> power_control(const MatrixXcd& W, const VectorXcd& theta,
                                       const ChannelSet& ch, const Scenario& scenario,
                                       const std::vector<bool>& serve);

/// User m is admitted iff its SINR under (W, theta) is at least gamma_m (1 - slack).
std::vector<bool> decide_admission(const MatrixXcd& W, const VectorXcd& theta,
                                   const ChannelSet& ch, const Scenario& scenario, double slack);

struct PolishResult {
  MatrixXcd W;
  VectorXcd theta;
  double power_w = 0.0;
  bool ok = false;
  std::string message;
};

/// Pure power minimisation (lambda = 0, gaps pinned at 0) over the admitted users,
/// warm-started from (W_init, theta_init). `ok` is false when the refined point misses a
/// target or the budget.
PolishResult polish(const ChannelSet& ch, const Scenario& scenario,
                    const std::vector<bool>& admitted, const VectorXcd& theta_init,
                    const MatrixXcd& W_init, const PddConfig& config);

}  // namespace irsac
