#include "aoisched/oracle.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "aoisched/error.hpp"

namespace aoisched {

namespace {

std::vector<double> grid_values(double resolution) {
  if (!(resolution >= 1e-3) || resolution > 1.0) throw ConfigError("grid search: resolution must be in [1e-3, 1]");
  const auto steps = static_cast<int>(std::llround(1.0 / resolution));
  std::vector<double> values{kPolicyFloor};
  for (int k = 1; k <= steps; ++k) values.push_back(std::min(1.0, k * resolution));
  if (values.back() < 1.0) values.push_back(1.0);
  return values;
}

double grid_objective(const ChannelParams& channel, const Eigen::VectorXd& p, double xi, double lambda) {
  try {
    return evaluate_objective_raw(channel, p, xi, lambda, {1e-12, 100000});
  } catch (const NumericError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

ExactChainResult exact_buffer_chain(const ChannelParams& channel, const Policy& policy, double xi) {
  const int n = static_cast<int>(channel.n());
  if (n > kMaxExactChainLinks) throw ConfigError("exact_buffer_chain: N must be <= 6");
  check_probability(xi, "xi");
  const int states = 1 << n;
  const Eigen::VectorXd& p = policy.p();

  auto pattern_prob = [n](int bits, auto prob_of) {
    double pr = 1.0;
    for (int i = 0; i < n; ++i) pr *= (bits >> i & 1) ? prob_of(i) : 1.0 - prob_of(i);
    return pr;
  };

  ExactChainResult out;
  out.transition = Eigen::MatrixXd::Zero(states, states);
  out.state_success = Eigen::MatrixXd::Zero(states, n);

  std::vector<bool> active(n), nonempty(n);
  for (int s = 0; s < states; ++s) {
    for (int e = 0; e < states; ++e) {
      const double pe = pattern_prob(e, [xi](int) { return xi; });
      if (pe == 0.0) continue;
      const int filled = s | e;
      for (int a = 0; a < states; ++a) {
        const double pa = pattern_prob(a, [&p](int i) { return p(i); });
        if (pa == 0.0) continue;
        const int sending = a & filled;
        for (int i = 0; i < n; ++i) {
          active[i] = a >> i & 1;
          nonempty[i] = filled >> i & 1;
        }
        const Eigen::VectorXd mu = conditional_success(channel, active, nonempty);
        for (int i = 0; i < n; ++i) {
          if (sending >> i & 1) out.state_success(s, i) += pe * pa * mu(i);
        }
        // Deliveries are conditionally independent given the sending set:
        // each receiver sees its own fading draws.
        for (int ok = sending;; ok = (ok - 1) & sending) {
          double pok = 1.0;
          for (int i = 0; i < n; ++i) {
            if (sending >> i & 1) pok *= (ok >> i & 1) ? mu(i) : 1.0 - mu(i);
          }
          out.transition(s, filled & ~ok) += pe * pa * pok;
          if (ok == 0) break;
        }
      }
    }
  }

  // Solve pi^T (T - I) = 0 with sum(pi) = 1 by replacing one balance equation.
  Eigen::MatrixXd A = out.transition.transpose() - Eigen::MatrixXd::Identity(states, states);
  A.row(states - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(states);
  rhs(states - 1) = 1.0;
  out.stationary = A.fullPivLu().solve(rhs);
  out.stationary_residual =
      (out.stationary.transpose() * (out.transition - Eigen::MatrixXd::Identity(states, states)))
          .cwiseAbs()
          .maxCoeff();
  out.throughput = out.state_success.transpose() * out.stationary;
  return out;
}

GridSearchResult grid_search_policy(const ChannelParams& channel, double lambda, double xi,
                                    double resolution) {
  const int n = static_cast<int>(channel.n());
  if (n > 3) throw ConfigError("grid_search_policy: N must be <= 3");
  check_probability(lambda, "lambda", true);
  const std::vector<double> values = grid_values(resolution);
  const auto m = static_cast<long long>(values.size());
  long long total = 1;
  for (int i = 0; i < n; ++i) total *= m;

  GridSearchResult best;
  double best_obj = std::numeric_limits<double>::infinity();
  double best_sum = -1.0;
  Eigen::VectorXd p(n), best_p = Eigen::VectorXd::Ones(n);
  for (long long code = 0; code < total; ++code) {
    long long c = code;
    for (int i = 0; i < n; ++i) {
      p(i) = values[static_cast<std::size_t>(c % m)];
      c /= m;
    }
    const double obj = grid_objective(channel, p, xi, lambda);
    const double sum = p.sum();
    if (obj < best_obj || (obj == best_obj && sum > best_sum)) {
      best_obj = obj;
      best_sum = sum;
      best_p = p;
    }
  }
  best.policy = Policy(best_p);
  best.objective = best_obj;
  best.evaluations = total;
  return best;
}

GridSearchResult grid_search_symmetric(const ChannelParams& channel, double lambda, double xi,
                                       double resolution) {
  check_probability(lambda, "lambda", true);
  const std::vector<double> values = grid_values(resolution);
  GridSearchResult best;
  double best_obj = std::numeric_limits<double>::infinity();
  double best_value = 1.0;
  for (double v : values) {
    const double obj = grid_objective(channel, Eigen::VectorXd::Constant(channel.n(), v), xi, lambda);
    if (obj < best_obj || (obj == best_obj && v > best_value)) {
      best_obj = obj;
      best_value = v;
    }
  }
  best.policy = Policy::uniform(channel.n(), best_value);
  best.objective = best_obj;
  best.evaluations = static_cast<long long>(values.size());
  return best;
}

}  // namespace aoisched
