#include <cmath>

#include "doctest.h"
#include "irsac/model.hpp"
#include "support.hpp"

using namespace irsac;
using namespace irsac::testing;
using doctest::Approx;

TEST_CASE("path_loss_db reference values") {
  CHECK(path_loss_db(1.0, 2.2, -30.0, 1.0) == Approx(-30.0).epsilon(1e-15));
  // Values evaluated independently in double precision.
  CHECK(path_loss_db(50.9902, 2.2, -30.0, 1.0) == Approx(-67.56470773910267).epsilon(1e-12));
  CHECK(path_loss_db(20.0, 2.5, -30.0, 1.0) == Approx(-62.52574989159953).epsilon(1e-12));
  CHECK(path_loss_db(50.9902, 2.2, -30.0, 1.0) == Approx(-67.565).epsilon(1e-5));
}

TEST_CASE("path_loss_db rejects non-positive distances") {
  CHECK_THROWS_AS(path_loss_db(0.0, 2.2, -30.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(path_loss_db(-1.0, 2.2, -30.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(path_loss_db(1.0, 2.2, -30.0, 0.0), std::domain_error);
}

TEST_CASE("path_loss_db is decreasing in distance and in exponent beyond d0") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const double d = rng.log_uniform(1.01, 500.0);
    const double e = rng.uniform(1.5, 4.0);
    CHECK(path_loss_db(d * 1.01, e, -30.0, 1.0) < path_loss_db(d, e, -30.0, 1.0));
    CHECK(path_loss_db(d, e + 0.1, -30.0, 1.0) < path_loss_db(d, e, -30.0, 1.0));
  }
}

TEST_CASE("unit conversions") {
  CHECK(db_to_linear(10.0) == Approx(10.0));
  CHECK(db_to_linear(6.0) == Approx(3.981071705534973));
  CHECK(linear_to_db(100.0) == Approx(20.0));
  CHECK(dbm_to_watts(-20.0) == Approx(1e-5));
  CHECK(dbm_to_watts(30.0) == Approx(1.0));
}

TEST_CASE("scenario validation names the offending field") {
  Scenario s = Scenario::desk_default();
  CHECK_NOTHROW(s.validate());
  s.n_antennas = 0;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("n_antennas"), std::invalid_argument);
  s = Scenario::desk_default();
  s.user_radius = 0.0;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("user_radius"), std::invalid_argument);
  s = Scenario::desk_default();
  s.qos_target(3) = -1.0;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("qos"), std::invalid_argument);
  s = Scenario::desk_default();
  s.n_users = 4;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("noise"), std::invalid_argument);
  s = Scenario::desk_default();
  s.n_irs_elements = 0;
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("generate_channels shapes and the cached cascaded matrices") {
  Scenario s = Scenario::desk_default();
  const ChannelSet ch = generate_channels(s, 5);
  CHECK(ch.n_antennas() == 8);
  CHECK(ch.n_users() == 10);
  CHECK(ch.n_irs_elements() == 16);
  for (int m = 0; m < ch.n_users(); ++m) {
    CHECK(ch.q(m).rows() == 16);
    CHECK(ch.q(m).cols() == 8);
    const MatrixXcd q = ch.h(m).conjugate().asDiagonal() * ch.G();
    CHECK((ch.q(m) - q).cwiseAbs().maxCoeff() == 0.0);
    CHECK(ch.g(m).allFinite());
  }
}

TEST_CASE("generate_channels without IRS only draws direct links") {
  Scenario s = Scenario::desk_default();
  s.n_irs_elements = 0;
  const ChannelSet ch = generate_channels(s, 9);
  CHECK(ch.n_irs_elements() == 0);
  CHECK(ch.G().size() == 0);
  for (int m = 0; m < ch.n_users(); ++m) {
    CHECK(ch.h(m).size() == 0);
    CHECK(ch.g(m).size() == 8);
  }
}

TEST_CASE("generate_channels is deterministic in the seed") {
  const Scenario s = Scenario::desk_default();
  const ChannelSet a = generate_channels(s, 42);
  const ChannelSet b = generate_channels(s, 42);
  const ChannelSet c = generate_channels(s, 43);
  CHECK(a.G() == b.G());
  for (int m = 0; m < s.n_users; ++m) {
    CHECK(a.g(m) == b.g(m));
    CHECK(a.h(m) == b.h(m));
  }
  CHECK(a.G() != c.G());
  CHECK(a.g(0) != c.g(0));
}

TEST_CASE("small-scale fading has unit variance") {
  // The BS-IRS distance is fixed, so G / sqrt(gain) is the small-scale matrix.
  Scenario s = Scenario::desk_default();
  s.n_antennas = 1;
  s.n_users = 1;
  s.n_irs_elements = 1;
  s.set_uniform_noise_dbm(-20.0);
  s.set_uniform_qos_db(0.0);
  const double gain =
      db_to_linear(path_loss_db(distance(s.bs_position, s.irs_position), s.exp_bs_irs,
                                s.pl0_db, s.d0));
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += std::norm(generate_channels(s, 1000 + i).G()(0, 0)) / gain;
  CHECK(sum / n == Approx(1.0).epsilon(0.02));
}

TEST_CASE("effective_channel degenerate cases") {
  Rng rng(3);
  ChannelSet ch = random_channels(rng, 3, 2, 4);
  SUBCASE("K = 0") {
    const ChannelSet flat = ch.without_irs();
    const RowVectorXcd p = effective_channel(flat, VectorXcd(0), 1);
    CHECK((p - ch.g(1).adjoint()).norm() == 0.0);
  }
  SUBCASE("zero IRS-user channel") {
    std::vector<VectorXcd> h{VectorXcd::Zero(4), VectorXcd::Zero(4)};
    std::vector<VectorXcd> g{ch.g(0), ch.g(1)};
    const ChannelSet z(ch.G(), h, g);
    const RowVectorXcd p = effective_channel(z, rng.phases(4), 0);
    CHECK((p - ch.g(0).adjoint()).norm() == 0.0);
  }
  SUBCASE("index and modulus checks") {
    CHECK_THROWS(effective_channel(ch, rng.phases(4), 2));
    CHECK_THROWS(effective_channel(ch, rng.phases(4), -1));
    VectorXcd bad = rng.phases(4);
    bad(2) *= 1.01;
    CHECK_THROWS_AS(effective_channel(ch, bad, 0), std::invalid_argument);
  }
}

TEST_CASE("effective_channel matches a scalar-loop expansion") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int K = 2, N = 2;
    const ChannelSet ch = random_channels(rng, N, 3, K);
    const VectorXcd theta = rng.phases(K);
    for (int m = 0; m < 3; ++m) {
      const RowVectorXcd p = effective_channel(ch, theta, m);
      for (int n = 0; n < N; ++n) {
        cplx ref = std::conj(ch.g(m)(n));
        for (int k = 0; k < K; ++k) ref += theta(k) * std::conj(ch.h(m)(k)) * ch.G()(k, n);
        CHECK(std::abs(p(n) - ref) <= 1e-13 * (1.0 + std::abs(ref)));
      }
    }
  }
}

TEST_CASE("sinr examples") {
  SUBCASE("single-user scalar") {
    std::vector<VectorXcd> g{VectorXcd::Ones(1)};
    const ChannelSet ch(MatrixXcd(0, 1), {VectorXcd(0)}, g);
    const MatrixXcd W = MatrixXcd::Ones(1, 1);
    CHECK(sinr(ch, VectorXcd(0), W, 0, 0.01) == Approx(100.0).epsilon(1e-14));
  }
  SUBCASE("zero beamformer") {
    Rng rng(5);
    const ChannelSet ch = random_channels(rng, 3, 3, 2);
    MatrixXcd W = rng.cmat(3, 3);
    W.col(1).setZero();
    CHECK(sinr(ch, rng.phases(2), W, 1, 0.1) == 0.0);
  }
}

TEST_CASE("sinr matches a scalar-loop recomputation") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int M = 3, N = 2, K = 3;
    const ChannelSet ch = random_channels(rng, N, M, K);
    const VectorXcd theta = rng.phases(K);
    const MatrixXcd W = rng.cmat(N, M);
    const VectorXd noise = rng.positive(M, 0.01, 1.0);
    const VectorXd all = sinr_all(ch, theta, W, noise);
    for (int m = 0; m < M; ++m) {
      std::vector<cplx> p(N);
      for (int n = 0; n < N; ++n) {
        p[n] = std::conj(ch.g(m)(n));
        for (int k = 0; k < K; ++k) p[n] += theta(k) * std::conj(ch.h(m)(k)) * ch.G()(k, n);
      }
      double sig = 0.0, den = noise(m);
      for (int j = 0; j < M; ++j) {
        cplx s = 0.0;
        for (int n = 0; n < N; ++n) s += p[n] * W(n, j);
        (j == m ? sig : den) += std::norm(s);
      }
      const double ref = sig / den;
      CHECK(std::abs(sinr(ch, theta, W, m, noise(m)) - ref) <= 1e-12 * ref);
      CHECK(std::abs(all(m) - ref) <= 1e-12 * ref);
    }
  }
}

TEST_CASE("sinr is invariant under a common phase rotation of the beams") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const ChannelSet ch = random_channels(rng, 4, 3, 4);
    const VectorXcd theta = rng.phases(4);
    const MatrixXcd W = rng.cmat(4, 3);
    const MatrixXcd R = W * std::polar(1.0, rng.uniform(-M_PI, M_PI));
    for (int m = 0; m < 3; ++m) {
      const double a = sinr(ch, theta, W, m, 0.3);
      const double b = sinr(ch, theta, R, m, 0.3);
      CHECK(a >= 0.0);
      CHECK(std::isfinite(a));
      CHECK(std::abs(a - b) <= 1e-12 * a);
    }
  }
}

TEST_CASE("total_power") {
  CHECK(total_power(MatrixXcd::Zero(3, 2)) == 0.0);
  CHECK(total_power(MatrixXcd::Identity(2, 2)) == 2.0);
  Rng rng(8);
  const MatrixXcd W = rng.cmat(4, 3);
  double ref = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) ref += W(i, j).real() * W(i, j).real() + W(i, j).imag() * W(i, j).imag();
  CHECK(std::abs(total_power(W) - ref) <= 1e-14 * ref);
}

TEST_CASE("ChannelSet transforms") {
  Rng rng(9);
  const ChannelSet ch = random_channels(rng, 3, 3, 4);
  const VectorXcd theta = rng.phases(4);
  SUBCASE("folded keeps the effective rows") {
    const ChannelSet f = ch.folded(theta);
    CHECK(f.n_irs_elements() == 0);
    for (int m = 0; m < 3; ++m)
      CHECK((effective_channel(f, VectorXcd(0), m) - effective_channel(ch, theta, m)).norm() <=
            1e-14);
  }
  SUBCASE("subset keeps users in order") {
    const ChannelSet s = ch.subset({2, 0});
    CHECK(s.n_users() == 2);
    CHECK(s.g(0) == ch.g(2));
    CHECK(s.h(1) == ch.h(0));
  }
  SUBCASE("row scaling scales SINR numerators and interference alike") {
    VectorXd scale(3);
    scale << 2.0, 0.5, 3.0;
    const ChannelSet s = ch.with_row_scaling(scale);
    for (int m = 0; m < 3; ++m)
      CHECK((effective_channel(s, theta, m) - scale(m) * effective_channel(ch, theta, m)).norm() <=
            1e-13);
  }
}
