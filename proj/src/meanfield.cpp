#include "aoisched/meanfield.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>

#include "aoisched/error.hpp"

namespace aoisched {

namespace {

double pairwise_sum(const double* data, Eigen::Index n) {
  if (n <= 64) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) s += data[k];
    return s;
  }
  const Eigen::Index half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

}  // namespace

void check_probability(double value, const char* name, bool allow_zero) {
  const bool ok = allow_zero ? (value >= 0.0 && value <= 1.0) : (value > 0.0 && value <= 1.0);
  if (!ok) {
    throw ConfigError(std::string(name) + " must lie in " + (allow_zero ? "[0, 1]" : "(0, 1]") +
                      ", got " + std::to_string(value));
  }
}

Policy::Policy(Eigen::VectorXd p) : p_(std::move(p)) {
  if (p_.size() == 0) throw ConfigError("policy: empty");
  for (Eigen::Index i = 0; i < p_.size(); ++i) {
    if (!(p_(i) >= kPolicyFloor && p_(i) <= 1.0)) {
      throw ConfigError("policy: p[" + std::to_string(i) + "] = " + std::to_string(p_(i)) +
                        " outside [1e-6, 1]");
    }
  }
}

Policy Policy::uniform(Eigen::Index n, double value) {
  return Policy(Eigen::VectorXd::Constant(n, value));
}

Policy Policy::clamped(const Eigen::VectorXd& p) {
  Eigen::VectorXd q = p;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    q(i) = std::isnan(q(i)) ? kPolicyFloor : std::clamp(q(i), kPolicyFloor, 1.0);
  }
  return Policy(std::move(q));
}

Eigen::VectorXd conditional_success(const ChannelParams& channel, const std::vector<bool>& active,
                                    const std::vector<bool>& nonempty) {
  const Eigen::Index n = channel.n();
  if (static_cast<Eigen::Index>(active.size()) != n || static_cast<Eigen::Index>(nonempty.size()) != n) {
    throw ConfigError("conditional_success: indicator vectors must have length N");
  }
  Eigen::VectorXd mu(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double prod = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i || !(active[j] && nonempty[j])) continue;
      prod *= 1.0 / (1.0 + 1.0 / channel.D(j, i));
    }
    mu(i) = channel.rho(i) * prod;
  }
  return mu;
}

Eigen::VectorXd buffer_nonempty(const Eigen::VectorXd& p, const Eigen::VectorXd& mu, double xi) {
  return (xi / (xi + (1.0 - xi) * p.array() * mu.array())).matrix();
}

Eigen::VectorXd success_update(const ChannelParams& channel, const Eigen::VectorXd& p,
                               const Eigen::VectorXd& nu) {
  const Eigen::Index n = channel.n();
  const Eigen::VectorXd load = p.cwiseProduct(nu);
  Eigen::VectorXd mu(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* column = channel.B.col(i).data();
    double prod = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) prod *= 1.0 - load(j) * column[j];  // B(i,i) = 0
    mu(i) = channel.rho(i) * prod;
  }
  return mu;
}

FixedPointResult fixed_point_raw(const ChannelParams& channel, const Eigen::VectorXd& p, double xi,
                                 const FixedPointOptions& opts) {
  check_probability(xi, "xi");
  if (!(opts.tol > 0.0)) throw ConfigError("fixed_point: tol must be positive");
  if (p.size() != channel.n()) throw ConfigError("fixed_point: policy length differs from channel size");

  FixedPointResult out;
  out.mu = Eigen::VectorXd::Zero(channel.n());
  out.residual = std::numeric_limits<double>::infinity();
  while (out.iterations < opts.max_iter) {
    const Eigen::VectorXd nu = buffer_nonempty(p, out.mu, xi);
    Eigen::VectorXd next = success_update(channel, p, nu);
    out.residual = (next - out.mu).cwiseAbs().maxCoeff();
    // Iterates rise monotonically from mu = 0; allow for rounding only.
    assert(((next - out.mu).array() >= -1e-12).all());
    out.mu = std::move(next);
    ++out.iterations;
    if (out.residual < opts.tol) {
      out.nu = buffer_nonempty(p, out.mu, xi);
      return out;
    }
  }
  throw ConvergenceError("fixed_point: no convergence after " + std::to_string(out.iterations) +
                             " iterations (residual " + std::to_string(out.residual) + ")",
                         out.iterations, out.residual);
}

FixedPointResult fixed_point(const ChannelParams& channel, const Policy& policy, double xi,
                             const FixedPointOptions& opts) {
  return fixed_point_raw(channel, policy.p(), xi, opts);
}

double fixed_point_residual(const ChannelParams& channel, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& mu, double xi) {
  const Eigen::VectorXd next = success_update(channel, p, buffer_nonempty(p, mu, xi));
  return (next - mu).cwiseAbs().maxCoeff();
}

Eigen::VectorXd explicit_success_xi1(const ChannelParams& channel, const Eigen::VectorXd& p) {
  const Eigen::Index n = channel.n();
  Eigen::VectorXd mu(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double prod = channel.rho(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) prod *= 1.0 - p(j) * channel.B(j, i);
    }
    mu(i) = prod;
  }
  return mu;
}

LinkMetrics link_metrics(const Eigen::VectorXd& mu, const Eigen::VectorXd& p, double xi) {
  check_probability(xi, "xi");
  if (mu.size() != p.size()) throw ConfigError("link_metrics: mu and p differ in length");
  LinkMetrics out;
  out.delta.resize(mu.size());
  out.thr.resize(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double rate = p(i) * mu(i);
    if (!(rate > 0.0)) {
      throw NumericError("link_metrics: p*mu = 0 on link " + std::to_string(i) + " (infinite AoI)");
    }
    out.delta(i) = 1.0 / xi + 1.0 / rate - 1.0;
    out.thr(i) = xi * rate / (xi + (1.0 - xi) * rate);
  }
  return out;
}

double mean_of(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 0.0;
  const double sum = v.size() > 1000 ? pairwise_sum(v.data(), v.size()) : v.sum();
  return sum * (1.0 / static_cast<double>(v.size()));
}

NetworkMetrics network_metrics(const LinkMetrics& links) {
  return {mean_of(links.delta), mean_of(links.thr)};
}

double objective(double lambda, double delta_avg, double thr_avg) {
  check_probability(lambda, "lambda", true);
  if (lambda < 1.0 && !(thr_avg > 0.0)) return std::numeric_limits<double>::infinity();
  if (lambda == 1.0) return delta_avg;
  return lambda * delta_avg + (1.0 - lambda) / thr_avg;
}

double explicit_objective_xi1(const ChannelParams& channel, const Eigen::VectorXd& p, double lambda) {
  const Eigen::Index n = channel.n();
  double inv_sum = 0.0;
  double rate_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double rate = p(i) * channel.rho(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) rate *= 1.0 - p(j) / (1.0 + channel.D(j, i));
    }
    inv_sum += 1.0 / rate;
    rate_sum += rate;
  }
  const double nn = static_cast<double>(n);
  return lambda / nn * inv_sum + (1.0 - lambda) / (rate_sum / nn);
}

double log5_weight(double u) { return std::pow(10.0, -5.0 * (1.0 - u)); }

MeanFieldState evaluate(const ChannelParams& channel, const Policy& policy, double xi, double lambda,
                        const FixedPointOptions& opts) {
  check_probability(lambda, "lambda", true);
  const FixedPointResult fp = fixed_point(channel, policy, xi, opts);
  const LinkMetrics links = link_metrics(fp.mu, policy.p(), xi);
  const NetworkMetrics net = network_metrics(links);

  MeanFieldState s;
  s.xi = xi;
  s.lambda = lambda;
  s.p = policy.p();
  s.mu = fp.mu;
  s.nu = fp.nu;
  s.delta_link = links.delta;
  s.thr_link = links.thr;
  s.delta_avg = net.delta_avg;
  s.thr_avg = net.thr_avg;
  s.objective = objective(lambda, net.delta_avg, net.thr_avg);
  s.iterations = fp.iterations;
  s.residual = fp.residual;
  return s;
}

double evaluate_objective_raw(const ChannelParams& channel, const Eigen::VectorXd& p, double xi,
                              double lambda, const FixedPointOptions& opts) {
  const FixedPointResult fp = fixed_point_raw(channel, p, xi, opts);
  const NetworkMetrics net = network_metrics(link_metrics(fp.mu, p, xi));
  return objective(lambda, net.delta_avg, net.thr_avg);
}

}  // namespace aoisched
