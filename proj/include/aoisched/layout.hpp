#pragma once

// D2D layouts and the static channel quantities derived from them.
//
// Index convention used throughout the library: for an N x N matrix X,
// X(j, i) describes the effect of the transmitter of link j on the receiver
// of link i. d_cross(j, i) is the distance tx_j -> rx_i and D(j, i) is the
// signal-to-interference ratio of that pair scaled by the decoding threshold.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aoisched {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct DeviceLayout {
  std::uint64_t seed = 0;
  double region_size_m = 0.0;
  double d_min_m = 0.0;
  double d_max_m = 0.0;
  std::vector<Point> tx;
  std::vector<Point> rx;

  std::size_t n_links() const { return tx.size(); }
  double link_distance(std::size_t i) const { return distance(tx[i], rx[i]); }
  /// Distance from the transmitter of link j to the receiver of link i.
  double cross_distance(std::size_t j, std::size_t i) const { return distance(tx[j], rx[i]); }

  /// Throws ConfigError if coordinates leave the plane, sizes disagree or any
  /// transmitter coincides with a receiver.
  void validate() const;

  /// Relabels links: link k of the result is link perm[k] of this layout.
  DeviceLayout permuted(const std::vector<std::size_t>& perm) const;
};

/// Uniform transmitters on [0, L]^2; each receiver at distance U(d_min, d_max)
/// and angle U[0, 2pi) from its transmitter, redrawn until it lands inside
/// the plane. Deterministic in `seed`.
DeviceLayout generate_layout(std::uint64_t seed, int n_links, double region_size_m, double d_min_m,
                             double d_max_m);

enum class PathlossModel { kPowerLaw, kItu1411Los };

std::string to_string(PathlossModel model);
PathlossModel pathloss_model_from_string(const std::string& name);

/// Channel configuration in linear units. `beta` holds either one value for
/// all links or one per link.
struct ChannelConfig {
  double tx_power_w = 10.0;
  double noise_power_w = 0.0;
  std::vector<double> beta{1.0};
  PathlossModel pathloss_model = PathlossModel::kPowerLaw;
  double alpha = 3.0;
  double antenna_gain = 1.0;  // per device, linear
  double carrier_hz = 2.4e9;
  double bandwidth_hz = 5e6;
  double antenna_height_m = 1.5;

  double beta_for(std::size_t link) const { return beta.size() == 1 ? beta[0] : beta.at(link); }
  void validate() const;

  /// 40 dBm, -169 dBm/Hz over 5 MHz, beta 0 dB, 2.5 dBi, power law alpha = 3.
  static ChannelConfig reference();
  static ChannelConfig noiseless(double alpha = 3.0);
};

double dbm_to_watt(double dbm);
double db_to_linear(double db);

/// Linear power gain at `distance_m`, including both antenna gains.
/// Throws ConfigError for non-positive distance.
double path_gain(double distance_m, const ChannelConfig& cfg);

/// ITU-R P.1411 LOS lower-bound loss in dB (positive), two-slope around the
/// breakpoint distance 4 h_t h_r / wavelength.
double itu1411_los_loss_db(double distance_m, double carrier_hz, double tx_height_m,
                           double rx_height_m);

struct ChannelParams {
  Eigen::VectorXd rho;  // noise-only success probability per link
  Eigen::MatrixXd D;    // D(j,i) = g(d_ii) / (beta_i g(d_ji)); +inf on the diagonal
  Eigen::MatrixXd B;    // B(j,i) = 1 / (1 + D(j,i)); 0 on the diagonal

  Eigen::Index n() const { return rho.size(); }

  /// Builds parameters directly from rho and B (tests, hand-made instances).
  static ChannelParams from_interference(const Eigen::VectorXd& rho, const Eigen::MatrixXd& B);

  ChannelParams permuted(const std::vector<std::size_t>& perm) const;
};

ChannelParams derive_channel(const DeviceLayout& layout, const ChannelConfig& cfg);

}  // namespace aoisched
