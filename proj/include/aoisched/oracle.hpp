#pragma once

// Brute-force ground truth for tiny networks: the exact joint buffer chain
// (no mean-field decoupling) and exhaustive policy grids.

#include <Eigen/Dense>

#include "aoisched/layout.hpp"
#include "aoisched/meanfield.hpp"

namespace aoisched {

inline constexpr int kMaxExactChainLinks = 6;

struct ExactChainResult {
  /// Chain states are buffer occupancies at the end of a slot; bit i of the
  /// state index is link i.
  Eigen::MatrixXd transition;
  Eigen::VectorXd stationary;
  /// state_success(s, i) = P(b_i = 1 | previous end-of-slot state s)
  Eigen::MatrixXd state_success;
  Eigen::VectorXd throughput;
  double stationary_residual = 0.0;  // ||pi^T (T - I)||_inf
};

/// Throws ConfigError for N > kMaxExactChainLinks.
ExactChainResult exact_buffer_chain(const ChannelParams& channel, const Policy& policy, double xi);

struct GridSearchResult {
  Policy policy;
  double objective = 0.0;
  long long evaluations = 0;
};

/// Exhaustive minimisation of the mean-field objective on the grid
/// {floor, res, 2 res, ..., 1}^N. Ties go to the larger sum of p.
/// Throws ConfigError for N > 3 or resolution < 1e-3.
GridSearchResult grid_search_policy(const ChannelParams& channel, double lambda, double xi,
                                    double resolution);

/// Same grid restricted to p_1 = ... = p_N.
GridSearchResult grid_search_symmetric(const ChannelParams& channel, double lambda, double xi,
                                       double resolution);

}  // namespace aoisched
