#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace irsac {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::RowVectorXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Raised when an iterate stops being finite. `block()` names the update that produced it.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string block, const std::string& what)
      : std::runtime_error(what), block_(std::move(block)) {}
  const std::string& block() const { return block_; }

 private:
  std::string block_;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point2 a, Point2 b);

double db_to_linear(double db);
double linear_to_db(double lin);
double dbm_to_watts(double dbm);

/// Downlink geometry and link budget.
///
/// Per-user quantities (`noise_power_w`, `qos_target`) are linear: noise in watts,
/// SINR thresholds as plain ratios. Use `set_uniform_noise_dbm` / `set_uniform_qos_db`
/// for the usual homogeneous setup.
struct Scenario {
  int n_antennas = 8;
  int n_users = 10;
  int n_irs_elements = 16;  // 0 disables the IRS

  Point2 bs_position{0.0, 0.0};
  Point2 irs_position{50.0, 10.0};
  Point2 user_center{70.0, 0.0};
  double user_radius = 5.0;

  double pl0_db = -30.0;
  double d0 = 1.0;
  double exp_bs_irs = 2.2;
  double exp_irs_user = 2.5;
  double exp_bs_user = 2.5;

  VectorXd noise_power_w;
  VectorXd qos_target;
  double power_budget_w = 1.0;

  void set_uniform_noise_dbm(double dbm);
  void set_uniform_qos_db(double db);

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;

  /// N=20, M=20, K=50, P=0 dBW, noise -20 dBm, QoS 6 dB.
  static Scenario full_default();
  /// N=8, M=10, K=16 with the same geometry and link budget.
  static Scenario desk_default();
};

/// One fading realization. Immutable once built; the cascaded matrices
/// q_m = Diag(conj(h_m)) G are derived in the constructor.
class ChannelSet {
 public:
  ChannelSet(MatrixXcd bs_irs, std::vector<VectorXcd> irs_user, std::vector<VectorXcd> bs_user);

  int n_antennas() const { return n_antennas_; }
  int n_users() const { return static_cast<int>(g_.size()); }
  int n_irs_elements() const { return static_cast<int>(G_.rows()); }

  const MatrixXcd& G() const { return G_; }
  const VectorXcd& h(int m) const { return h_.at(static_cast<std::size_t>(m)); }
  const VectorXcd& g(int m) const { return g_.at(static_cast<std::size_t>(m)); }
  const MatrixXcd& q(int m) const { return q_.at(static_cast<std::size_t>(m)); }

  /// Multiplies user m's direct and IRS-user channels by scale(m) (scale > 0).
  ChannelSet with_row_scaling(const VectorXd& scale) const;
  /// Folds fixed phases into the direct links: the result has K = 0 and g_m^H = p_m(theta).
  ChannelSet folded(const VectorXcd& theta) const;
  /// Drops the IRS; direct links only.
  ChannelSet without_irs() const;
  /// Keeps the listed users, in order.
  ChannelSet subset(const std::vector<int>& users) const;

 private:
  int n_antennas_ = 0;
  MatrixXcd G_;
  std::vector<VectorXcd> h_;
  std::vector<VectorXcd> g_;
  std::vector<MatrixXcd> q_;
};

/// Large-scale gain in dB: pl0_db - 10 * exponent * log10(d / d0).
double path_loss_db(double d, double exponent, double pl0_db, double d0);

/// Draws user drops uniformly in the user disk, then G, and per user h_m, g_m, each as
/// sqrt(large-scale gain) times i.i.d. CN(0, 1). Deterministic in `seed`.
ChannelSet generate_channels(const Scenario& scenario, std::uint64_t seed);

/// Row p_m(v) = g_m^H + v^T q_m for an arbitrary K-vector v (no modulus check).
RowVectorXcd channel_row(const ChannelSet& ch, const VectorXcd& v, int m);

/// p_m(theta); theta must be unit-modulus within 1e-9.
RowVectorXcd effective_channel(const ChannelSet& ch, const VectorXcd& theta, int m);

/// All effective rows stacked, M x N.
MatrixXcd effective_channels(const ChannelSet& ch, const VectorXcd& theta);

double sinr(const ChannelSet& ch, const VectorXcd& theta, const MatrixXcd& W, int m,
            double noise_power_w);
VectorXd sinr_all(const ChannelSet& ch, const VectorXcd& theta, const MatrixXcd& W,
                  const VectorXd& noise_power_w);

double total_power(const MatrixXcd& W);

void require_unit_modulus(const VectorXcd& theta, double tol = 1e-9);

}  // namespace irsac
