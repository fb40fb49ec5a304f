#pragma once

// Gradient of the implicit objective with respect to the policy.
//
// Differentiating log mu_j = log rho_j + sum_{i != j} log(1 - p_i B(i,j) / (1 + q p_i mu_i))
// with q = (1 - xi) / xi gives the linear system P M = Q for M(j,i) = dmu_j/dp_i:
//
//   P(j,i) = q B(i,j) p_i^2 / [(1 + q p_i mu_i)(1 + q p_i mu_i - B(i,j) p_i)],  j != i
//   P(j,j) = -1 / mu_j
//   Q(j,i) =     B(i,j)     / [(1 + q p_i mu_i)(1 + q p_i mu_i - B(i,j) p_i)],  Q(j,j) = 0
//
// where B(i,j) is the interference of link i's transmitter on link j's
// receiver. The chain to the objective uses x_j = p_j mu_j with
// dx_j/dp_i = p_j M(j,i) + mu_j [i == j].

#include <Eigen/Dense>

#include "aoisched/layout.hpp"
#include "aoisched/meanfield.hpp"

namespace aoisched {

struct PQSystem {
  Eigen::MatrixXd P;
  Eigen::MatrixXd Q;
  double q = 0.0;
};

/// Throws NumericError if `mu` is not a fixed point of the mean-field map to
/// within `consistency_tol`.
PQSystem assemble_pq(const ChannelParams& channel, const Eigen::VectorXd& p, const Eigen::VectorXd& mu,
                     double xi, double consistency_tol = 1e-6);

/// M = P^{-1} Q by LU with partial pivoting. Throws NumericError when P is
/// numerically singular (reports the reciprocal condition estimate) or the
/// residual check fails.
Eigen::MatrixXd solve_dmu_dp(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q);

struct GradientWorkspace {
  PQSystem system;
  Eigen::MatrixXd M;  // M(j,i) = dmu_j / dp_i
  Eigen::VectorXd grad_delta;
  Eigen::VectorXd grad_thr;
  Eigen::VectorXd grad_obj;
  double delta_avg = 0.0;
  double thr_avg = 0.0;
  double objective = 0.0;
};

/// dP/dp at a converged fixed point `mu`. Bounds on p are not enforced here;
/// projection onto [floor, 1] is the optimizer's job.
GradientWorkspace grad_objective(const ChannelParams& channel, const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& mu, double xi, double lambda);

/// Solves the fixed point at `opts` tolerance, then differentiates.
GradientWorkspace grad_objective_at(const ChannelParams& channel, const Eigen::VectorXd& p, double xi,
                                    double lambda, const FixedPointOptions& opts = {});

/// Central differences of p -> fixed point -> objective.
Eigen::VectorXd fd_gradient(const ChannelParams& channel, const Eigen::VectorXd& p, double xi,
                            double lambda, double step, const FixedPointOptions& opts);

struct ErrorSummary {
  double max_rel_err = 0.0;
  Eigen::Index argmax_index = 0;
};

/// Componentwise |a - r| / max(|r|, 1e-3 * ||r||_inf); the floor keeps
/// near-zero components of the reference from dominating.
ErrorSummary relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& reference);

struct FdCheckReport {
  Eigen::Index n = 0;
  double xi = 1.0;
  double lambda = 1.0;
  double fd_step = 1e-6;
  double max_rel_err = 0.0;
  Eigen::Index argmax_index = 0;
  Eigen::VectorXd analytic;
  Eigen::VectorXd finite_difference;
};

FdCheckReport finite_difference_check(const ChannelParams& channel, const Policy& policy, double xi,
                                      double lambda, double step = 1e-6,
                                      const FixedPointOptions& opts = {1e-12, 100000});

}  // namespace aoisched
