#pragma once

// Steady-state analysis of the interfering LCFS-PR queues under a stationary
// randomized policy: the coupled fixed point between success probabilities
// mu and buffer non-empty probabilities nu, and the AoI / throughput metrics
// built on it.

#include <vector>

#include <Eigen/Dense>

#include "aoisched/layout.hpp"

namespace aoisched {

/// Lower bound on every activation probability. Keeps AoI finite.
inline constexpr double kPolicyFloor = 1e-6;

/// Per-link activation probabilities, each in [kPolicyFloor, 1].
class Policy {
 public:
  Policy() = default;
  /// Throws ConfigError if any entry is outside [kPolicyFloor, 1].
  explicit Policy(Eigen::VectorXd p);

  static Policy uniform(Eigen::Index n, double value);
  /// Projects arbitrary values onto [kPolicyFloor, 1].
  static Policy clamped(const Eigen::VectorXd& p);

  const Eigen::VectorXd& p() const { return p_; }
  double operator[](Eigen::Index i) const { return p_(i); }
  Eigen::Index n() const { return p_.size(); }

 private:
  Eigen::VectorXd p_;
};

struct FixedPointOptions {
  double tol = 1e-9;
  int max_iter = 10000;
};

struct FixedPointResult {
  Eigen::VectorXd mu;
  Eigen::VectorXd nu;
  int iterations = 0;
  double residual = 0.0;
};

/// mu_i(A, N) = rho_i prod_{j != i} 1 / (1 + a_j n_j / D(j,i)).
/// Computed for every link regardless of its own activation.
Eigen::VectorXd conditional_success(const ChannelParams& channel, const std::vector<bool>& active,
                                    const std::vector<bool>& nonempty);

/// nu_i = xi / (xi + (1 - xi) p_i mu_i)
Eigen::VectorXd buffer_nonempty(const Eigen::VectorXd& p, const Eigen::VectorXd& mu, double xi);

/// One application of mu_i = rho_i prod_{j != i} (1 - p_j nu_j B(j,i)).
Eigen::VectorXd success_update(const ChannelParams& channel, const Eigen::VectorXd& p,
                               const Eigen::VectorXd& nu);

/// Alternating iteration from mu = 0 (so nu = 1 first) until the sup-norm
/// change of mu drops below `tol`. Throws ConvergenceError after max_iter.
FixedPointResult fixed_point(const ChannelParams& channel, const Policy& policy, double xi,
                             const FixedPointOptions& opts = {});

/// Same iteration for an arbitrary positive p (no policy bounds); used by
/// finite-difference checks that step slightly outside [floor, 1].
FixedPointResult fixed_point_raw(const ChannelParams& channel, const Eigen::VectorXd& p, double xi,
                                 const FixedPointOptions& opts = {});

/// sup_i |F(mu)_i - mu_i| where F is one round of the alternating update.
double fixed_point_residual(const ChannelParams& channel, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& mu, double xi);

/// For xi = 1 every buffer is always full and mu has the closed form
/// rho_i prod_{j != i} (1 - p_j B(j,i)).
Eigen::VectorXd explicit_success_xi1(const ChannelParams& channel, const Eigen::VectorXd& p);

struct LinkMetrics {
  Eigen::VectorXd delta;  // average AoI per link, slots
  Eigen::VectorXd thr;    // throughput per link, packets/slot
};

/// delta_i = 1/xi + 1/(p_i mu_i) - 1,  T_i = xi p_i mu_i / (xi + (1 - xi) p_i mu_i).
LinkMetrics link_metrics(const Eigen::VectorXd& mu, const Eigen::VectorXd& p, double xi);

struct NetworkMetrics {
  double delta_avg = 0.0;
  double thr_avg = 0.0;
};

NetworkMetrics network_metrics(const LinkMetrics& links);

/// lambda * delta_avg + (1 - lambda) / thr_avg; +inf when lambda < 1 and
/// thr_avg is zero.
double objective(double lambda, double delta_avg, double thr_avg);

/// The xi = 1 objective written out in closed form, evaluated directly.
double explicit_objective_xi1(const ChannelParams& channel, const Eigen::VectorXd& p, double lambda);

/// Arithmetic mean; pairwise summation above 1000 entries.
double mean_of(const Eigen::VectorXd& v);

/// lambda in the loss/objective sense from u in [0, 1]: 10^(-5 (1 - u)).
double log5_weight(double u);

struct MeanFieldState {
  double xi = 1.0;
  double lambda = 1.0;
  Eigen::VectorXd p;
  Eigen::VectorXd mu;
  Eigen::VectorXd nu;
  Eigen::VectorXd delta_link;
  Eigen::VectorXd thr_link;
  double delta_avg = 0.0;
  double thr_avg = 0.0;
  double objective = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

MeanFieldState evaluate(const ChannelParams& channel, const Policy& policy, double xi, double lambda,
                        const FixedPointOptions& opts = {});

/// Objective of the full pipeline p -> fixed point -> metrics, without
/// policy bound checks.
double evaluate_objective_raw(const ChannelParams& channel, const Eigen::VectorXd& p, double xi,
                              double lambda, const FixedPointOptions& opts = {});

void check_probability(double value, const char* name, bool allow_zero = false);

}  // namespace aoisched
