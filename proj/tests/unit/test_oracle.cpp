#include <doctest.h>

#include <cmath>

#include "aoisched/error.hpp"
#include "aoisched/oracle.hpp"
#include "common/helpers.hpp"

using namespace aoisched;

TEST_SUITE("oracle") {
  TEST_CASE("single link chains") {
    const ChannelParams ch = ChannelParams::from_interference(Eigen::VectorXd::Constant(1, 0.7),
                                                              Eigen::MatrixXd::Zero(1, 1));
    ExactChainResult r = exact_buffer_chain(ch, Policy::uniform(1, 0.6), 1.0);
    CHECK(r.throughput(0) == doctest::Approx(0.6 * 0.7).epsilon(1e-13));

    const ChannelParams unit = ChannelParams::from_interference(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Zero(1, 1));
    r = exact_buffer_chain(unit, Policy::uniform(1, 1.0), 0.5);
    CHECK(r.throughput(0) == doctest::Approx(0.5).epsilon(1e-13));
    // No coupling: the mean-field throughput is exact for one link.
    for (const double xi : {0.2, 0.5, 0.9}) {
      const Policy pol = Policy::uniform(1, 0.4);
      const MeanFieldState mf = evaluate(ch, pol, xi, 1.0, {1e-14, 1000});
      CHECK(exact_buffer_chain(ch, pol, xi).throughput(0) == doctest::Approx(mf.thr_avg).epsilon(1e-12));
    }
  }

  TEST_CASE("stationary residual and stochastic rows") {
    for (const int n : {2, 3, 5}) {
      const ChannelParams ch = testutil::random_dense(n, n, 0.6, 0.8);
      const ExactChainResult r = exact_buffer_chain(ch, Policy(testutil::random_policy(n, n)), 0.45);
      CHECK(r.stationary_residual < 1e-12);
      CHECK(r.stationary.sum() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK((r.transition.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-13);
      CHECK((r.stationary.array() >= 0.0).all());
    }
  }

  TEST_CASE("xi = 1 chain equals the explicit product") {
    const ChannelParams ch = testutil::random_dense(4, 3);
    const Eigen::VectorXd p = testutil::random_policy(4, 3);
    const ExactChainResult r = exact_buffer_chain(ch, Policy(p), 1.0);
    const Eigen::VectorXd mu = explicit_success_xi1(ch, p);
    CHECK((r.throughput - p.cwiseProduct(mu)).cwiseAbs().maxCoeff() < 1e-13);
  }

  TEST_CASE("coupled pair: mean-field gap is small but nonzero") {
    const ChannelParams ch = testutil::symmetric_pair(0.95, 0.7);
    const Policy pol = Policy::uniform(2, 0.8);
    const double exact = exact_buffer_chain(ch, pol, 0.5).throughput(0);
    const double mf = evaluate(ch, pol, 0.5, 1.0, {1e-14, 1000}).thr_link(0);
    CHECK(std::abs(exact - mf) > 1e-6);
    CHECK(std::abs(exact - mf) / exact < 0.1);
  }

  TEST_CASE("size limits") {
    const ChannelParams big = testutil::random_dense(1, kMaxExactChainLinks + 1);
    CHECK_THROWS_AS(exact_buffer_chain(big, Policy::uniform(big.n(), 0.5), 0.5), ConfigError);
    CHECK_THROWS_AS(grid_search_policy(testutil::random_dense(1, 4), 1.0, 1.0, 0.1), ConfigError);
  }

  TEST_CASE("grid search: lone link wants p = 1") {
    const ChannelParams ch = ChannelParams::from_interference(Eigen::VectorXd::Constant(1, 0.8),
                                                              Eigen::MatrixXd::Zero(1, 1));
    const GridSearchResult g = grid_search_policy(ch, 1.0, 1.0, 1e-3);
    CHECK(g.policy[0] == 1.0);
    CHECK(g.objective == doctest::Approx(1.25));
  }

  TEST_CASE("grid refinement tightens the optimum") {
    const ChannelParams ch = testutil::symmetric_pair(0.9, 0.9);
    const double coarse = grid_search_policy(ch, 1.0, 1.0, 1e-1).objective;
    const double mid = grid_search_policy(ch, 1.0, 1.0, 1e-2).objective;
    const double fine = grid_search_policy(ch, 1.0, 1.0, 1e-3).objective;
    CHECK(mid <= coarse);
    CHECK(fine <= mid);
    CHECK(mid - fine <= 10.0 * (coarse - mid) + 1e-12);
  }

  TEST_CASE("symmetric grid is a restriction of the full grid") {
    const ChannelParams ch = testutil::symmetric_pair(0.9, 0.5);
    const GridSearchResult full = grid_search_policy(ch, 0.5, 0.6, 1e-2);
    const GridSearchResult sym = grid_search_symmetric(ch, 0.5, 0.6, 1e-2);
    CHECK(sym.objective >= full.objective);
    CHECK(sym.policy[0] == sym.policy[1]);
  }
}
