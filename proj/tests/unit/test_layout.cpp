#include <doctest.h>

#include <cmath>
#include <limits>

#include "aoisched/error.hpp"
#include "aoisched/layout.hpp"
#include "common/helpers.hpp"

using namespace aoisched;

TEST_SUITE("layout") {
  TEST_CASE("single pair respects the geometry") {
    const DeviceLayout l = generate_layout(7, 1, 500.0, 2.0, 65.0);
    REQUIRE(l.n_links() == 1);
    CHECK(l.link_distance(0) >= 2.0);
    CHECK(l.link_distance(0) <= 65.0);
    CHECK_NOTHROW(l.validate());
  }

  TEST_CASE("generation law at N = 300") {
    const DeviceLayout l = generate_layout(11, 300, 500.0, 2.0, 65.0);
    double mean_d = 0.0;
    for (std::size_t i = 0; i < l.n_links(); ++i) {
      for (const Point& q : {l.tx[i], l.rx[i]}) {
        CHECK(q.x >= 0.0);
        CHECK(q.x <= 500.0);
        CHECK(q.y >= 0.0);
        CHECK(q.y <= 500.0);
      }
      CHECK(l.link_distance(i) >= 2.0);
      CHECK(l.link_distance(i) <= 65.0);
      mean_d += l.link_distance(i) / 300.0;
    }
    // U(2, 65) link lengths, mildly biased short by the in-plane redraw.
    CHECK(mean_d > 28.0);
    CHECK(mean_d < 37.0);
  }

  TEST_CASE("equal seeds give bit-identical layouts") {
    const DeviceLayout a = generate_layout(123, 40, 500.0, 2.0, 65.0);
    const DeviceLayout b = generate_layout(123, 40, 500.0, 2.0, 65.0);
    const DeviceLayout c = generate_layout(124, 40, 500.0, 2.0, 65.0);
    bool same = true, differs = false;
    for (std::size_t i = 0; i < a.n_links(); ++i) {
      same &= a.tx[i].x == b.tx[i].x && a.tx[i].y == b.tx[i].y && a.rx[i].x == b.rx[i].x && a.rx[i].y == b.rx[i].y;
      differs |= a.tx[i].x != c.tx[i].x;
    }
    CHECK(same);
    CHECK(differs);
  }

  TEST_CASE("bad geometry is rejected") {
    CHECK_THROWS_AS(generate_layout(1, 0, 500.0, 2.0, 65.0), ConfigError);
    CHECK_THROWS_AS(generate_layout(1, 3, 500.0, 70.0, 65.0), ConfigError);
    CHECK_THROWS_AS(generate_layout(1, 3, -1.0, 2.0, 65.0), ConfigError);
    DeviceLayout l = generate_layout(1, 2, 500.0, 2.0, 65.0);
    l.rx[1] = l.tx[0];
    CHECK_THROWS_AS(l.validate(), ConfigError);
  }

  TEST_CASE("power law gains") {
    ChannelConfig cfg = ChannelConfig::noiseless(3.0);
    cfg.antenna_gain = db_to_linear(2.5);
    const double g2 = cfg.antenna_gain * cfg.antenna_gain;
    CHECK(path_gain(1.0, cfg) == doctest::Approx(g2).epsilon(1e-15));
    CHECK(path_gain(10.0, cfg) == doctest::Approx(g2 * 1e-3).epsilon(1e-14));
    CHECK_THROWS_AS(path_gain(0.0, cfg), ConfigError);
  }

  // Reference values from an independent evaluation of the two-slope LOS
  // lower bound at 2.4 GHz with 1.5 m antennas (breakpoint about 72 m).
  TEST_CASE("ITU LOS lower bound reference values") {
    CHECK(itu1411_los_loss_db(20.0, 2.4e9, 1.5, 1.5) == doctest::Approx(60.0520080561155).epsilon(1e-12));
    CHECK(itu1411_los_loss_db(200.0, 2.4e9, 1.5, 1.5) == doctest::Approx(88.91994700493505).epsilon(1e-12));
  }

  TEST_CASE("path gain strictly decreases with distance") {
    for (const PathlossModel m : {PathlossModel::kPowerLaw, PathlossModel::kItu1411Los}) {
      ChannelConfig cfg = ChannelConfig::reference();
      cfg.pathloss_model = m;
      double prev = std::numeric_limits<double>::infinity();
      for (double d = 0.5; d < 800.0; d *= 1.07) {
        const double g = path_gain(d, cfg);
        CHECK(g < prev);
        prev = g;
      }
    }
  }

  TEST_CASE("unit conversions") {
    CHECK(dbm_to_watt(40.0) == doctest::Approx(10.0));
    CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0));
    CHECK(db_to_linear(3.0) == doctest::Approx(1.9952623149688795));
    const ChannelConfig ref = ChannelConfig::reference();
    CHECK(ref.tx_power_w == doctest::Approx(10.0));
    CHECK(ref.noise_power_w == doctest::Approx(6.29e-14).epsilon(0.002));
  }

  TEST_CASE("channel invariants on random layouts") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      for (const PathlossModel m : {PathlossModel::kPowerLaw, PathlossModel::kItu1411Los}) {
        ChannelConfig cfg = ChannelConfig::reference();
        cfg.pathloss_model = m;
        const ChannelParams ch = testutil::random_channel(seed, 15, cfg);
        for (Eigen::Index i = 0; i < ch.n(); ++i) {
          CHECK(ch.rho(i) > 0.0);
          CHECK(ch.rho(i) <= 1.0);
          CHECK(ch.B(i, i) == 0.0);
          CHECK(std::isinf(ch.D(i, i)));
          for (Eigen::Index j = 0; j < ch.n(); ++j) {
            if (i == j) continue;
            CHECK(ch.B(j, i) >= 0.0);
            CHECK(ch.B(j, i) < 1.0);
            CHECK(ch.B(j, i) * (1.0 + ch.D(j, i)) == doctest::Approx(1.0).epsilon(1e-15));
          }
        }
      }
    }
  }

  TEST_CASE("noiseless channel has rho = 1 and reference noise keeps rho inside (0, 1)") {
    const ChannelParams quiet = testutil::random_channel(5, 10, ChannelConfig::noiseless());
    CHECK((quiet.rho.array() == 1.0).all());
    const ChannelParams noisy = testutil::random_channel(5, 10);
    CHECK((noisy.rho.array() > 0.0).all());
    CHECK((noisy.rho.array() < 1.0).all());
  }

  TEST_CASE("symmetric square placement gives D12 = D21") {
    DeviceLayout l;
    l.region_size_m = 100.0;
    l.tx = {{10.0, 10.0}, {30.0, 30.0}};
    l.rx = {{10.0, 30.0}, {30.0, 10.0}};
    const ChannelParams ch = derive_channel(l, ChannelConfig::noiseless());
    CHECK(ch.D(0, 1) == doctest::Approx(ch.D(1, 0)).epsilon(1e-15));
    CHECK(ch.D(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("D orientation: tx_j to rx_i") {
    DeviceLayout l;
    l.region_size_m = 100.0;
    l.tx = {{0.0, 0.0}, {50.0, 0.0}};
    l.rx = {{10.0, 0.0}, {70.0, 0.0}};
    const ChannelConfig cfg = ChannelConfig::noiseless(3.0);
    const ChannelParams ch = derive_channel(l, cfg);
    // D(0,1) = g(d_11) / g(d_01) with d_11 = 20, d_01 = 70.
    CHECK(ch.D(0, 1) == doctest::Approx(std::pow(70.0 / 20.0, 3.0)).epsilon(1e-13));
    // D(1,0) = g(d_00) / g(d_10) with d_00 = 10, d_10 = 40.
    CHECK(ch.D(1, 0) == doctest::Approx(std::pow(40.0 / 10.0, 3.0)).epsilon(1e-13));
  }

  TEST_CASE("per-link thresholds scale D") {
    const DeviceLayout l = generate_layout(3, 4, 500.0, 2.0, 65.0);
    ChannelConfig cfg = ChannelConfig::noiseless();
    const ChannelParams base = derive_channel(l, cfg);
    cfg.beta = {1.0, 2.0, 4.0, 0.5};
    const ChannelParams scaled = derive_channel(l, cfg);
    for (Eigen::Index j = 0; j < 4; ++j)
      for (Eigen::Index i = 0; i < 4; ++i)
        if (i != j) CHECK(scaled.D(j, i) == doctest::Approx(base.D(j, i) / cfg.beta[i]).epsilon(1e-14));
    cfg.beta = {1.0, 2.0};
    CHECK_THROWS_AS(derive_channel(l, cfg), ConfigError);
  }

  TEST_CASE("permutation relabels consistently") {
    const DeviceLayout l = generate_layout(9, 6, 500.0, 2.0, 65.0);
    const auto perm = testutil::random_permutation(4, 6);
    const ChannelConfig cfg = ChannelConfig::reference();
    const ChannelParams a = derive_channel(l.permuted(perm), cfg);
    const ChannelParams b = derive_channel(l, cfg).permuted(perm);
    CHECK((a.rho - b.rho).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.B - b.B).cwiseAbs().maxCoeff() == 0.0);
  }
}
