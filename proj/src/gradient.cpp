#include "aoisched/gradient.hpp"

#include <cmath>
#include <string>

#include "aoisched/error.hpp"

namespace aoisched {

PQSystem assemble_pq(const ChannelParams& channel, const Eigen::VectorXd& p, const Eigen::VectorXd& mu,
                     double xi, double consistency_tol) {
  check_probability(xi, "xi");
  const Eigen::Index n = channel.n();
  if (p.size() != n || mu.size() != n) throw ConfigError("assemble_pq: size mismatch");
  const double residual = fixed_point_residual(channel, p, mu, xi);
  if (!(residual <= consistency_tol)) {
    throw NumericError("assemble_pq: mu is not a converged fixed point (residual " +
                       std::to_string(residual) + ")");
  }

  PQSystem sys;
  sys.q = (1.0 - xi) / xi;
  sys.P.setZero(n, n);
  sys.Q.setZero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double load = 1.0 + sys.q * p(i) * mu(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double b = channel.B(i, j);
      const double denom = load * (load - b * p(i));
      sys.P(j, i) = sys.q * b * p(i) * p(i) / denom;
      sys.Q(j, i) = b / denom;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) sys.P(j, j) = -1.0 / mu(j);
  return sys;
}

Eigen::MatrixXd solve_dmu_dp(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q) {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(P);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw NumericError("solve_dmu_dp: P is singular or ill-conditioned (rcond estimate " +
                       std::to_string(rcond) + ")");
  }
  Eigen::MatrixXd M = lu.solve(Q);
  const double q_norm = Q.cwiseAbs().maxCoeff();
  const double res = (P * M - Q).cwiseAbs().maxCoeff();
  if (!(res <= 1e-8 * q_norm) && !(q_norm == 0.0 && res == 0.0)) {
    throw NumericError("solve_dmu_dp: residual " + std::to_string(res) + " exceeds 1e-8 * ||Q||");
  }
  return M;
}

GradientWorkspace grad_objective(const ChannelParams& channel, const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& mu, double xi, double lambda) {
  check_probability(lambda, "lambda", true);
  const Eigen::Index n = channel.n();

  GradientWorkspace ws;
  ws.system = assemble_pq(channel, p, mu, xi);
  ws.M = solve_dmu_dp(ws.system.P, ws.system.Q);

  // J(j,i) = d(p_j mu_j) / dp_i
  Eigen::MatrixXd J = p.asDiagonal() * ws.M;
  J.diagonal() += mu;

  const Eigen::ArrayXd rate = p.array() * mu.array();
  const Eigen::ArrayXd denom = xi + (1.0 - xi) * rate;
  const Eigen::VectorXd d_delta_d_rate = (-1.0 / rate.square()).matrix();
  const Eigen::VectorXd d_thr_d_rate = (xi * xi / denom.square()).matrix();

  const double inv_n = 1.0 / static_cast<double>(n);
  ws.grad_delta = inv_n * (J.transpose() * d_delta_d_rate);
  ws.grad_thr = inv_n * (J.transpose() * d_thr_d_rate);

  const NetworkMetrics net = network_metrics(link_metrics(mu, p, xi));
  ws.delta_avg = net.delta_avg;
  ws.thr_avg = net.thr_avg;
  ws.objective = objective(lambda, net.delta_avg, net.thr_avg);
  ws.grad_obj = lambda * ws.grad_delta;
  if (lambda < 1.0) ws.grad_obj -= (1.0 - lambda) / (net.thr_avg * net.thr_avg) * ws.grad_thr;
  return ws;
}

GradientWorkspace grad_objective_at(const ChannelParams& channel, const Eigen::VectorXd& p, double xi,
                                    double lambda, const FixedPointOptions& opts) {
  const FixedPointResult fp = fixed_point_raw(channel, p, xi, opts);
  return grad_objective(channel, p, fp.mu, xi, lambda);
}

Eigen::VectorXd fd_gradient(const ChannelParams& channel, const Eigen::VectorXd& p, double xi,
                            double lambda, double step, const FixedPointOptions& opts) {
  if (!(step > 0.0)) throw ConfigError("fd_gradient: step must be positive");
  Eigen::VectorXd g(p.size());
  Eigen::VectorXd shifted = p;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    shifted(i) = p(i) + step;
    const double up = evaluate_objective_raw(channel, shifted, xi, lambda, opts);
    shifted(i) = p(i) - step;
    const double down = evaluate_objective_raw(channel, shifted, xi, lambda, opts);
    shifted(i) = p(i);
    g(i) = (up - down) / (2.0 * step);
  }
  return g;
}

ErrorSummary relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& reference) {
  ErrorSummary out;
  const double scale = reference.size() ? reference.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < reference.size(); ++i) {
    const double denom = std::max({std::abs(reference(i)), 1e-3 * scale, 1e-300});
    const double err = std::abs(analytic(i) - reference(i)) / denom;
    if (err > out.max_rel_err || std::isnan(err)) {
      out.max_rel_err = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
      out.argmax_index = i;
    }
  }
  return out;
}

FdCheckReport finite_difference_check(const ChannelParams& channel, const Policy& policy, double xi,
                                      double lambda, double step, const FixedPointOptions& opts) {
  FdCheckReport rep;
  rep.n = channel.n();
  rep.xi = xi;
  rep.lambda = lambda;
  rep.fd_step = step;
  rep.analytic = grad_objective_at(channel, policy.p(), xi, lambda, opts).grad_obj;
  rep.finite_difference = fd_gradient(channel, policy.p(), xi, lambda, step, opts);
  const ErrorSummary err = relative_error(rep.analytic, rep.finite_difference);
  rep.max_rel_err = err.max_rel_err;
  rep.argmax_index = err.argmax_index;
  return rep;
}

}  // namespace aoisched
