#include "aoisched/layout.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "aoisched/error.hpp"
#include "aoisched/rng.hpp"

namespace aoisched {

namespace {

constexpr double kSpeedOfLight = 299792458.0;
constexpr int kMaxPlacementAttempts = 1 << 20;

bool inside(const Point& p, double size) {
  return p.x >= 0.0 && p.x <= size && p.y >= 0.0 && p.y <= size;
}

}  // namespace

void DeviceLayout::validate() const {
  if (tx.empty()) throw ConfigError("layout: n_links must be >= 1");
  if (tx.size() != rx.size()) throw ConfigError("layout: tx and rx have different lengths");
  if (!(region_size_m > 0.0)) throw ConfigError("layout: region_size_m must be positive");
  for (std::size_t i = 0; i < tx.size(); ++i) {
    if (!inside(tx[i], region_size_m) || !inside(rx[i], region_size_m)) {
      throw ConfigError("layout: link " + std::to_string(i) + " has coordinates outside [0, L]");
    }
  }
  for (std::size_t j = 0; j < tx.size(); ++j) {
    for (std::size_t i = 0; i < rx.size(); ++i) {
      if (cross_distance(j, i) <= 0.0) {
        throw ConfigError("layout: tx " + std::to_string(j) + " coincides with rx " + std::to_string(i));
      }
    }
  }
}

DeviceLayout DeviceLayout::permuted(const std::vector<std::size_t>& perm) const {
  DeviceLayout out = *this;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    out.tx[k] = tx.at(perm[k]);
    out.rx[k] = rx.at(perm[k]);
  }
  return out;
}

DeviceLayout generate_layout(std::uint64_t seed, int n_links, double region_size_m, double d_min_m,
                             double d_max_m) {
  if (n_links < 1) throw ConfigError("generate_layout: n_links must be >= 1");
  if (!(d_min_m > 0.0) || !(d_min_m <= d_max_m)) {
    throw ConfigError("generate_layout: need 0 < d_min <= d_max");
  }
  if (!(d_max_m < region_size_m)) {
    throw ConfigError("generate_layout: d_max must be smaller than the region size");
  }

  DeviceLayout layout;
  layout.seed = seed;
  layout.region_size_m = region_size_m;
  layout.d_min_m = d_min_m;
  layout.d_max_m = d_max_m;
  layout.tx.resize(n_links);
  layout.rx.resize(n_links);

  RngStream rng(seed, stream_id(StreamPurpose::kLayout));
  for (int i = 0; i < n_links; ++i) {
    layout.tx[i] = {rng.uniform(0.0, region_size_m), rng.uniform(0.0, region_size_m)};
  }
  for (int i = 0; i < n_links; ++i) {
    const Point& t = layout.tx[i];
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const double d = rng.uniform(d_min_m, d_max_m);
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Point r{t.x + d * std::cos(angle), t.y + d * std::sin(angle)};
      if (!inside(r, region_size_m)) continue;
      bool clash = false;
      for (int j = 0; j < n_links && !clash; ++j) clash = (r.x == layout.tx[j].x && r.y == layout.tx[j].y);
      if (clash) continue;
      layout.rx[i] = r;
      placed = true;
    }
    if (!placed) throw ConfigError("generate_layout: could not place receiver " + std::to_string(i));
  }
  return layout;
}

std::string to_string(PathlossModel model) {
  switch (model) {
    case PathlossModel::kPowerLaw:
      return "power_law";
    case PathlossModel::kItu1411Los:
      return "itu1411_los";
  }
  return "unknown";
}

PathlossModel pathloss_model_from_string(const std::string& name) {
  if (name == "power_law") return PathlossModel::kPowerLaw;
  if (name == "itu1411_los") return PathlossModel::kItu1411Los;
  throw ConfigError("pathloss_model: unknown model '" + name + "'");
}

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

void ChannelConfig::validate() const {
  if (!(tx_power_w > 0.0)) throw ConfigError("channel: tx power must be positive");
  if (!(noise_power_w >= 0.0)) throw ConfigError("channel: noise power must be non-negative");
  if (beta.empty()) throw ConfigError("channel: beta must not be empty");
  for (double b : beta) {
    if (!(b > 0.0)) throw ConfigError("channel: beta must be positive");
  }
  if (pathloss_model == PathlossModel::kPowerLaw && !(alpha > 2.0)) {
    throw ConfigError("channel: power-law exponent alpha must exceed 2");
  }
  if (!(antenna_gain > 0.0)) throw ConfigError("channel: antenna gain must be positive");
  if (pathloss_model == PathlossModel::kItu1411Los && (!(carrier_hz > 0.0) || !(antenna_height_m > 0.0))) {
    throw ConfigError("channel: ITU-1411 needs positive carrier frequency and antenna height");
  }
}

ChannelConfig ChannelConfig::reference() {
  ChannelConfig cfg;
  cfg.tx_power_w = dbm_to_watt(40.0);
  cfg.noise_power_w = dbm_to_watt(-169.0) * 5e6;
  cfg.beta = {db_to_linear(0.0)};
  cfg.pathloss_model = PathlossModel::kPowerLaw;
  cfg.alpha = 3.0;
  cfg.antenna_gain = db_to_linear(2.5);
  cfg.carrier_hz = 2.4e9;
  cfg.bandwidth_hz = 5e6;
  cfg.antenna_height_m = 1.5;
  return cfg;
}

ChannelConfig ChannelConfig::noiseless(double alpha) {
  ChannelConfig cfg = reference();
  cfg.noise_power_w = 0.0;
  cfg.alpha = alpha;
  return cfg;
}

double itu1411_los_loss_db(double distance_m, double carrier_hz, double tx_height_m,
                           double rx_height_m) {
  const double wavelength = kSpeedOfLight / carrier_hz;
  const double breakpoint = 4.0 * tx_height_m * rx_height_m / wavelength;
  const double loss_at_breakpoint = std::abs(
      20.0 * std::log10(wavelength * wavelength / (8.0 * std::numbers::pi * tx_height_m * rx_height_m)));
  const double slope = distance_m <= breakpoint ? 20.0 : 40.0;
  return loss_at_breakpoint + slope * std::log10(distance_m / breakpoint);
}

double path_gain(double distance_m, const ChannelConfig& cfg) {
  if (!(distance_m > 0.0)) throw ConfigError("path_gain: distance must be positive");
  const double antennas = cfg.antenna_gain * cfg.antenna_gain;
  switch (cfg.pathloss_model) {
    case PathlossModel::kPowerLaw:
      return antennas * std::pow(distance_m, -cfg.alpha);
    case PathlossModel::kItu1411Los: {
      const double loss_db =
          itu1411_los_loss_db(distance_m, cfg.carrier_hz, cfg.antenna_height_m, cfg.antenna_height_m);
      return antennas * std::pow(10.0, -loss_db / 10.0);
    }
  }
  return 0.0;
}

ChannelParams ChannelParams::from_interference(const Eigen::VectorXd& rho, const Eigen::MatrixXd& B) {
  const Eigen::Index n = rho.size();
  if (B.rows() != n || B.cols() != n) throw ConfigError("channel: B must be N x N");
  ChannelParams out;
  out.rho = rho;
  out.B = B;
  out.D.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) {
        out.B(j, i) = 0.0;
        out.D(j, i) = std::numeric_limits<double>::infinity();
      } else {
        const double b = B(j, i);
        if (!(b >= 0.0 && b < 1.0)) throw ConfigError("channel: B entries must lie in [0, 1)");
        out.D(j, i) = b == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / b - 1.0;
      }
    }
  }
  return out;
}

ChannelParams ChannelParams::permuted(const std::vector<std::size_t>& perm) const {
  const Eigen::Index n = this->n();
  ChannelParams out;
  out.rho.resize(n);
  out.D.resize(n, n);
  out.B.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    out.rho(a) = rho(perm[a]);
    for (Eigen::Index b = 0; b < n; ++b) {
      out.D(a, b) = D(perm[a], perm[b]);
      out.B(a, b) = B(perm[a], perm[b]);
    }
  }
  return out;
}

ChannelParams derive_channel(const DeviceLayout& layout, const ChannelConfig& cfg) {
  layout.validate();
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(layout.n_links());
  if (cfg.beta.size() != 1 && cfg.beta.size() != layout.n_links()) {
    throw ConfigError("channel: beta must have 1 or n_links entries");
  }

  Eigen::MatrixXd gain(n, n);  // gain(j, i): tx_j -> rx_i
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) gain(j, i) = path_gain(layout.cross_distance(j, i), cfg);
  }

  ChannelParams out;
  out.rho.resize(n);
  out.D.resize(n, n);
  out.B.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double beta = cfg.beta_for(static_cast<std::size_t>(i));
    out.rho(i) = std::exp(-beta * cfg.noise_power_w / (cfg.tx_power_w * gain(i, i)));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) {
        out.D(j, i) = std::numeric_limits<double>::infinity();
        out.B(j, i) = 0.0;
      } else {
        out.D(j, i) = gain(i, i) / (beta * gain(j, i));
        out.B(j, i) = 1.0 / (1.0 + out.D(j, i));
      }
    }
  }
  return out;
}

}  // namespace aoisched
