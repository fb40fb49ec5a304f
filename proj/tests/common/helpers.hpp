#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "aoisched/layout.hpp"
#include "aoisched/rng.hpp"

namespace testutil {

using aoisched::ChannelParams;

/// Random layout of the default geometry pushed through the reference channel.
inline ChannelParams random_channel(std::uint64_t seed, int n,
                                    const aoisched::ChannelConfig& cfg = aoisched::ChannelConfig::reference()) {
  return aoisched::derive_channel(aoisched::generate_layout(seed, n, 500.0, 2.0, 65.0), cfg);
}

/// Dense random instance: rho in [rho_lo, 1], off-diagonal B in [0, b_hi].
inline ChannelParams random_dense(std::uint64_t seed, int n, double rho_lo = 0.7, double b_hi = 0.5) {
  aoisched::RngStream rng(seed, aoisched::stream_id(aoisched::StreamPurpose::kTest, 1));
  Eigen::VectorXd rho(n);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) rho(i) = rng.uniform(rho_lo, 1.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i != j) B(j, i) = rng.uniform(0.0, b_hi);
  return ChannelParams::from_interference(rho, B);
}

inline ChannelParams symmetric_pair(double rho, double b) {
  Eigen::MatrixXd B(2, 2);
  B << 0.0, b, b, 0.0;
  return ChannelParams::from_interference(Eigen::Vector2d(rho, rho), B);
}

inline Eigen::VectorXd random_policy(std::uint64_t seed, int n, double lo = 0.1, double hi = 1.0) {
  aoisched::RngStream rng(seed, aoisched::stream_id(aoisched::StreamPurpose::kTest, 2));
  Eigen::VectorXd p(n);
  for (int i = 0; i < n; ++i) p(i) = rng.uniform(lo, hi);
  return p;
}

inline std::vector<std::size_t> random_permutation(std::uint64_t seed, std::size_t n) {
  aoisched::RngStream rng(seed, aoisched::stream_id(aoisched::StreamPurpose::kTest, 3));
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(perm[i - 1], perm[k < i ? k : i - 1]);
  }
  return perm;
}

}  // namespace testutil
