#include "irsac/model.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace irsac {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
double dbm_to_watts(double dbm) { return db_to_linear(dbm - 30.0); }

void Scenario::set_uniform_noise_dbm(double dbm) {
  noise_power_w = VectorXd::Constant(n_users, dbm_to_watts(dbm));
}

void Scenario::set_uniform_qos_db(double db) {
  qos_target = VectorXd::Constant(n_users, db_to_linear(db));
}

namespace {

void require(bool ok, const char* field, const char* rule) {
  if (!ok) throw std::invalid_argument(std::string("scenario.") + field + ": " + rule);
}

bool finite_point(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

}  // namespace

void Scenario::validate() const {
  require(n_antennas >= 1, "n_antennas", "must be >= 1");
  require(n_users >= 1, "n_users", "must be >= 1");
  require(n_irs_elements >= 0, "n_irs_elements", "must be >= 0");
  require(finite_point(bs_position), "bs_position", "must be finite");
  require(finite_point(irs_position), "irs_position", "must be finite");
  require(finite_point(user_center), "user_center", "must be finite");
  require(user_radius > 0.0, "user_radius", "must be > 0");
  require(std::isfinite(pl0_db), "pl0_db", "must be finite");
  require(d0 > 0.0, "d0", "must be > 0");
  require(exp_bs_irs > 0.0, "exp_bs_irs", "must be > 0");
  require(exp_irs_user > 0.0, "exp_irs_user", "must be > 0");
  require(exp_bs_user > 0.0, "exp_bs_user", "must be > 0");
  require(noise_power_w.size() == n_users, "noise_power_w", "needs one entry per user");
  require((noise_power_w.array() > 0.0).all() && noise_power_w.allFinite(), "noise_power_w",
          "must be > 0");
  require(qos_target.size() == n_users, "qos_target", "needs one entry per user");
  require((qos_target.array() > 0.0).all() && qos_target.allFinite(), "qos_target",
          "must be > 0");
  require(power_budget_w > 0.0 && std::isfinite(power_budget_w), "power_budget_w",
          "must be > 0");
}

Scenario Scenario::full_default() {
  Scenario s;
  s.n_antennas = 20;
  s.n_users = 20;
  s.n_irs_elements = 50;
  s.power_budget_w = 1.0;
  s.set_uniform_noise_dbm(-20.0);
  s.set_uniform_qos_db(6.0);
  return s;
}

Scenario Scenario::desk_default() {
  Scenario s;
  s.n_antennas = 8;
  s.n_users = 10;
  s.n_irs_elements = 16;
  s.power_budget_w = 1.0;
  s.set_uniform_noise_dbm(-20.0);
  s.set_uniform_qos_db(-25.0);
  return s;
}

// ---------------------------------------------------------------------------

ChannelSet::ChannelSet(MatrixXcd bs_irs, std::vector<VectorXcd> irs_user,
                       std::vector<VectorXcd> bs_user)
    : G_(std::move(bs_irs)), h_(std::move(irs_user)), g_(std::move(bs_user)) {
  if (g_.empty()) throw std::invalid_argument("ChannelSet: need at least one user");
  if (h_.size() != g_.size())
    throw std::invalid_argument("ChannelSet: h and g must have one entry per user");
  n_antennas_ = static_cast<int>(g_.front().size());
  if (n_antennas_ < 1) throw std::invalid_argument("ChannelSet: empty direct channel");
  const auto K = G_.rows();
  if (K > 0 && G_.cols() != n_antennas_)
    throw std::invalid_argument("ChannelSet: G must be K x N");
  if (!G_.allFinite()) throw std::invalid_argument("ChannelSet: non-finite entry in G");

  q_.reserve(g_.size());
  for (std::size_t m = 0; m < g_.size(); ++m) {
    if (g_[m].size() != n_antennas_ || h_[m].size() != K)
      throw std::invalid_argument("ChannelSet: inconsistent dimensions for user " +
                                  std::to_string(m));
    if (!g_[m].allFinite() || !h_[m].allFinite())
      throw std::invalid_argument("ChannelSet: non-finite channel for user " + std::to_string(m));
    if (K > 0)
      q_.push_back(h_[m].conjugate().asDiagonal() * G_);
    else
      q_.emplace_back(0, n_antennas_);
  }
  if (K == 0) G_.resize(0, n_antennas_);
}

ChannelSet ChannelSet::with_row_scaling(const VectorXd& scale) const {
  if (scale.size() != n_users()) throw std::invalid_argument("with_row_scaling: size mismatch");
  std::vector<VectorXcd> h = h_;
  std::vector<VectorXcd> g = g_;
  for (int m = 0; m < n_users(); ++m) {
    if (!(scale(m) > 0.0)) throw std::invalid_argument("with_row_scaling: scale must be > 0");
    h[static_cast<std::size_t>(m)] *= scale(m);
    g[static_cast<std::size_t>(m)] *= scale(m);
  }
  return ChannelSet(G_, std::move(h), std::move(g));
}

ChannelSet ChannelSet::folded(const VectorXcd& theta) const {
  if (theta.size() != n_irs_elements())
    throw std::invalid_argument("folded: theta must have K entries");
  std::vector<VectorXcd> h(g_.size(), VectorXcd(0));
  std::vector<VectorXcd> g;
  g.reserve(g_.size());
  for (int m = 0; m < n_users(); ++m) g.push_back(channel_row(*this, theta, m).adjoint());
  return ChannelSet(MatrixXcd(0, n_antennas_), std::move(h), std::move(g));
}

ChannelSet ChannelSet::without_irs() const {
  std::vector<VectorXcd> h(g_.size(), VectorXcd(0));
  return ChannelSet(MatrixXcd(0, n_antennas_), std::move(h), g_);
}

ChannelSet ChannelSet::subset(const std::vector<int>& users) const {
  if (users.empty()) throw std::invalid_argument("subset: empty user list");
  std::vector<VectorXcd> h;
  std::vector<VectorXcd> g;
  for (int m : users) {
    if (m < 0 || m >= n_users()) throw std::out_of_range("subset: user index out of range");
    h.push_back(h_[static_cast<std::size_t>(m)]);
    g.push_back(g_[static_cast<std::size_t>(m)]);
  }
  return ChannelSet(G_, std::move(h), std::move(g));
}

// ---------------------------------------------------------------------------

double path_loss_db(double d, double exponent, double pl0_db, double d0) {
  if (!(d > 0.0)) throw std::domain_error("path_loss_db: distance must be > 0");
  if (!(d0 > 0.0)) throw std::domain_error("path_loss_db: reference distance must be > 0");
  return pl0_db - 10.0 * exponent * std::log10(d / d0);
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

class ComplexGaussian {
 public:
  explicit ComplexGaussian(std::mt19937_64& rng) : rng_(rng) {}
  cplx operator()() {
    const double re = normal_(rng_);
    const double im = normal_(rng_);
    return {re * kInvSqrt2, im * kInvSqrt2};
  }

 private:
  std::mt19937_64& rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

double amplitude(double d, double exponent, const Scenario& s) {
  return std::sqrt(db_to_linear(path_loss_db(d, exponent, s.pl0_db, s.d0)));
}

}  // namespace

ChannelSet generate_channels(const Scenario& scenario, std::uint64_t seed) {
  scenario.validate();
  const int N = scenario.n_antennas;
  const int M = scenario.n_users;
  const int K = scenario.n_irs_elements;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ComplexGaussian cn(rng);

  std::vector<Point2> users(static_cast<std::size_t>(M));
  for (auto& u : users) {
    const double r = scenario.user_radius * std::sqrt(unif(rng));
    const double phi = 2.0 * std::numbers::pi * unif(rng);
    u = {scenario.user_center.x + r * std::cos(phi), scenario.user_center.y + r * std::sin(phi)};
  }

  MatrixXcd G(K, N);
  if (K > 0) {
    const double amp = amplitude(distance(scenario.bs_position, scenario.irs_position),
                                 scenario.exp_bs_irs, scenario);
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < K; ++k) G(k, j) = amp * cn();
  }

  std::vector<VectorXcd> h(static_cast<std::size_t>(M));
  std::vector<VectorXcd> g(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    const auto& pos = users[static_cast<std::size_t>(m)];
    VectorXcd hm(K);
    if (K > 0) {
      const double amp =
          amplitude(distance(scenario.irs_position, pos), scenario.exp_irs_user, scenario);
      for (int k = 0; k < K; ++k) hm(k) = amp * cn();
    }
    const double amp =
        amplitude(distance(scenario.bs_position, pos), scenario.exp_bs_user, scenario);
    VectorXcd gm(N);
    for (int n = 0; n < N; ++n) gm(n) = amp * cn();
    h[static_cast<std::size_t>(m)] = std::move(hm);
    g[static_cast<std::size_t>(m)] = std::move(gm);
  }
  return ChannelSet(std::move(G), std::move(h), std::move(g));
}

// ---------------------------------------------------------------------------

RowVectorXcd channel_row(const ChannelSet& ch, const VectorXcd& v, int m) {
  if (m < 0 || m >= ch.n_users()) throw std::out_of_range("user index out of range");
  RowVectorXcd row = ch.g(m).adjoint();
  if (ch.n_irs_elements() > 0) {
    if (v.size() != ch.n_irs_elements())
      throw std::invalid_argument("phase vector must have K entries");
    row += v.transpose() * ch.q(m);
  }
  return row;
}

void require_unit_modulus(const VectorXcd& theta, double tol) {
  for (Eigen::Index k = 0; k < theta.size(); ++k)
    if (std::abs(std::abs(theta(k)) - 1.0) > tol)
      throw std::invalid_argument("IRS coefficient " + std::to_string(k) + " is not unit-modulus");
}

RowVectorXcd effective_channel(const ChannelSet& ch, const VectorXcd& theta, int m) {
  require_unit_modulus(theta);
  return channel_row(ch, theta, m);
}

MatrixXcd effective_channels(const ChannelSet& ch, const VectorXcd& theta) {
  require_unit_modulus(theta);
  MatrixXcd P(ch.n_users(), ch.n_antennas());
  for (int m = 0; m < ch.n_users(); ++m) P.row(m) = channel_row(ch, theta, m);
  return P;
}

double sinr(const ChannelSet& ch, const VectorXcd& theta, const MatrixXcd& W, int m,
            double noise_power_w) {
  if (W.rows() != ch.n_antennas() || W.cols() != ch.n_users())
    throw std::invalid_argument("sinr: W must be N x M");
  const RowVectorXcd p = effective_channel(ch, theta, m);
  const RowVectorXcd r = p * W;
  double interference = 0.0;
  for (int n = 0; n < ch.n_users(); ++n)
    if (n != m) interference += std::norm(r(n));
  return std::norm(r(m)) / (interference + noise_power_w);
}

VectorXd sinr_all(const ChannelSet& ch, const VectorXcd& theta, const MatrixXcd& W,
                  const VectorXd& noise_power_w) {
  if (W.rows() != ch.n_antennas() || W.cols() != ch.n_users())
    throw std::invalid_argument("sinr: W must be N x M");
  const MatrixXcd R = effective_channels(ch, theta) * W;
  VectorXd out(ch.n_users());
  for (int m = 0; m < ch.n_users(); ++m) {
    double interference = 0.0;
    for (int n = 0; n < ch.n_users(); ++n)
      if (n != m) interference += std::norm(R(m, n));
    out(m) = std::norm(R(m, m)) / (interference + noise_power_w(m));
  }
  return out;
}

double total_power(const MatrixXcd& W) { return W.squaredNorm(); }

}  // namespace irsac
