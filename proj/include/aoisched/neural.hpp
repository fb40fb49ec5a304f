#pragma once

// Learned scheduler working on geographic location information only.
//
// Each feedback round rasterizes the layout into two activation-weighted
// occupancy grids (transmitters, receivers), passes both through the same
// three same-size convolutions, and reads per link three values from the
// transmitter-path outputs at its receiver cell and three from the
// receiver-path outputs at its transmitter cell. Together with the previous
// activation probability, the link length, xi and lambda these ten features
// go through a shared 10 -> m1 -> m2 -> 1 network (ReLU, ReLU, sigmoid).
//
// Training is unsupervised: the loss is the mean-field objective at the
// inferred policy, and its gradient with respect to the policy comes from the
// implicit-gradient solver. Backpropagation covers the final feedback round;
// earlier rounds only supply the grids and the previous-probability feature.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aoisched/layout.hpp"
#include "aoisched/meanfield.hpp"

namespace aoisched {

inline constexpr int kFeatureCount = 10;
inline constexpr const char* kNetVersion = "aoisched-gli-net-v1";

enum class LambdaFeature {
  kLossWeight,  // feed the objective weight lambda itself
  kLogScale,    // feed u = 1 + log10(lambda) / 5, clamped to [0, 1]
};

std::string to_string(LambdaFeature f);
LambdaFeature lambda_feature_from_string(const std::string& name);

struct GridConfig {
  int grid_size = 32;
  std::array<int, 3> filter_sizes{5, 5, 5};
  std::array<int, 2> hidden_sizes{16, 16};
  int feedback_rounds = 5;
  double distance_scale_m = 65.0;  // d_TR feature is divided by this
  LambdaFeature lambda_feature = LambdaFeature::kLossWeight;

  void validate() const;

  static GridConfig desk();
  static GridConfig full_scale();  // 125 x 125 grid, 15 x 15 filters, 30 neurons
  static GridConfig tiny();         // 8 x 8 grid, 3 x 3 filters, 4 neurons
};

struct GliGrids {
  Eigen::MatrixXd tx;  // (x cell, y cell)
  Eigen::MatrixXd rx;
  std::vector<std::array<int, 2>> tx_cell;  // zero-based
  std::vector<std::array<int, 2>> rx_cell;
};

/// Cell of a coordinate: ceil(c * M / L) clamped to [1, M], stored zero-based.
int grid_cell(double coord, double region_size_m, int grid_size);

/// tx(x, y) = sum of p_i over transmitters in cell (x, y); rx likewise.
GliGrids rasterize(const DeviceLayout& layout, const Eigen::VectorXd& p, int grid_size);

/// Same-size 2-D correlation with zero padding; the filter is centred at
/// (n / 2, n / 2).
Eigen::MatrixXd conv_same(const Eigen::MatrixXd& input, const Eigen::MatrixXd& filter);

struct NetParams {
  std::array<Eigen::MatrixXd, 3> filters;
  Eigen::MatrixXd w1;  // m1 x 10
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // m2 x m1
  Eigen::VectorXd b2;
  Eigen::VectorXd w3;  // m2
  double b3 = 0.0;
  std::string version = kNetVersion;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  static NetParams init(const GridConfig& cfg, std::uint64_t seed);

  Eigen::Index parameter_count() const;
  /// Filters, then w1, b1, w2, b2, w3, b3; matrices column-major.
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  bool all_finite() const;
};

/// Per-sample inputs besides the layout.
struct Conditions {
  double xi = 1.0;
  double lambda = 1.0;  // objective weight used by the loss
};

struct ForwardCache {
  GliGrids grids;
  std::array<Eigen::MatrixXd, 3> tx_out;
  std::array<Eigen::MatrixXd, 3> rx_out;
  Eigen::MatrixXd features;  // N x 10
  Eigen::MatrixXd z1, h1, z2, h2;
  Eigen::VectorXd z3;
  Eigen::VectorXd p_hat;
};

/// One feedback round: previous probabilities in, sigmoid outputs in (0, 1) out.
Eigen::VectorXd forward(const DeviceLayout& layout, const Conditions& cond, const NetParams& params,
                        const GridConfig& cfg, const Eigen::VectorXd& p_prev, ForwardCache* cache = nullptr);

struct InferResult {
  Policy policy;
  Eigen::VectorXd p_prev_final;  // input of the last round
  double last_change = 0.0;      // sup-norm change produced by the last round
  std::vector<double> round_changes;
};

/// Starts from p = 1 and applies `forward` feedback_rounds times; the result
/// is clamped to [kPolicyFloor, 1].
InferResult infer(const DeviceLayout& layout, const Conditions& cond, const NetParams& params,
                  const GridConfig& cfg);

/// Gradient of sum_i dL/dp_hat_i * p_hat_i with respect to all parameters
/// (flat, same order as NetParams::flatten) given a cached forward pass.
Eigen::VectorXd backward(const ForwardCache& cache, const NetParams& params, const GridConfig& cfg,
                         const Eigen::VectorXd& dloss_dphat);

struct TrainingSample {
  DeviceLayout layout;
  ChannelParams channel;
  Conditions cond;
};

struct LossOptions {
  FixedPointOptions fixed_point{1e-10, 100000};
};

struct SampleLoss {
  double loss = 0.0;
  Eigen::VectorXd grad;  // flat parameter gradient
  Policy policy;
};

/// Loss and parameter gradient of one sample with the final round's input
/// `p_prev` held fixed.
SampleLoss sample_loss_given_prev(const TrainingSample& sample, const NetParams& params, const GridConfig& cfg,
                                  const Eigen::VectorXd& p_prev, const LossOptions& opts = {});

/// Loss only, same frozen-input convention (finite-difference checks).
double sample_loss_value_given_prev(const TrainingSample& sample, const NetParams& params,
                                    const GridConfig& cfg, const Eigen::VectorXd& p_prev,
                                    const LossOptions& opts = {});

struct BatchLoss {
  double mean_loss = 0.0;
  Eigen::VectorXd grad;
  int used = 0;
  int skipped = 0;
  std::vector<double> losses;  // per sample, NaN where skipped
};

/// Mean loss and gradient over the batch. Samples whose fixed point or
/// gradient solve fails are skipped with a warning; throws NumericError if
/// all fail. Samples are processed on `threads` workers and reduced in order.
BatchLoss loss_and_grad(const std::vector<TrainingSample>& batch, const NetParams& params,
                        const GridConfig& cfg, const LossOptions& opts = {}, int threads = 1);

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int steps = 2000;
  std::uint64_t seed = 1;
  int n_links = 10;
  double region_size_m = 500.0;
  double d_min_m = 2.0;
  double d_max_m = 65.0;
  ChannelConfig channel = ChannelConfig::reference();
  // Sampling law: a fixed value replaces the random draw of that condition.
  std::optional<double> fixed_xi;
  std::optional<double> fixed_lambda;
  int checkpoint_every = 0;  // 0: only the final checkpoint
  int monitor_every = 200;
  int monitor_samples = 64;
  int threads = 1;

  void validate() const;
};

/// Draws a sample: fresh layout, xi ~ U(0, 1], u ~ U(0, 1], lambda = 10^(-5 (1 - u)),
/// unless the config fixes xi or lambda.
TrainingSample draw_training_sample(const TrainConfig& cfg, std::uint64_t stream, std::uint64_t index);

TrainingSample make_sample(const DeviceLayout& layout, const ChannelConfig& channel, double xi, double lambda);

struct TrainState {
  NetParams params;
  int step = 0;
  std::vector<double> loss_trace;     // mean batch loss per step
  std::vector<double> monitor_trace;  // fixed monitoring set loss, every monitor_every steps
  std::vector<int> monitor_steps;
};

struct TrainHooks {
  std::function<void(const TrainState&)> on_step;
  std::function<void(const TrainState&)> on_checkpoint;  // every checkpoint_every steps and at the end
  std::function<void(const std::string&)> on_warning;
};

/// Adam on the batch loss, new layouts every step. Deterministic given the
/// seed (thread count does not change results). Throws NumericError on a
/// non-finite loss or gradient.
TrainState train(const NetParams& init, const TrainConfig& train_cfg, const GridConfig& grid_cfg,
                 const TrainHooks& hooks = {});

/// Mean loss of `params` on a fixed list of samples (inference through all rounds).
double evaluate_loss(const std::vector<TrainingSample>& samples, const NetParams& params, const GridConfig& cfg,
                     const LossOptions& opts = {});

}  // namespace aoisched
