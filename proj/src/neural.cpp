#include "aoisched/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "aoisched/error.hpp"
#include "aoisched/gradient.hpp"
#include "aoisched/parallel.hpp"
#include "aoisched/rng.hpp"

namespace aoisched {

namespace {

struct Shift {
  Eigen::Index out_row, out_col, in_row, in_col, rows, cols;
};

// Overlap of the output grid with the input grid shifted by (s, t).
Shift overlap(Eigen::Index m, Eigen::Index s, Eigen::Index t) {
  return {std::max<Eigen::Index>(0, -s), std::max<Eigen::Index>(0, -t), std::max<Eigen::Index>(0, s),
          std::max<Eigen::Index>(0, t),  m - std::abs(s),               m - std::abs(t)};
}

// dK(a, b) = sum_{x,y} dout(x, y) in(x + a - c, y + b - c)
Eigen::MatrixXd filter_grad(const Eigen::MatrixXd& input, const Eigen::MatrixXd& dout, Eigen::Index n) {
  const Eigen::Index m = input.rows();
  const Eigen::Index c = n / 2;
  Eigen::MatrixXd dk(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const Shift o = overlap(m, a - c, b - c);
      if (o.rows <= 0 || o.cols <= 0) {
        dk(a, b) = 0.0;
        continue;
      }
      dk(a, b) = dout.block(o.out_row, o.out_col, o.rows, o.cols)
                     .cwiseProduct(input.block(o.in_row, o.in_col, o.rows, o.cols))
                     .sum();
    }
  }
  return dk;
}

// Adjoint of conv_same with respect to its input.
Eigen::MatrixXd conv_same_adjoint(const Eigen::MatrixXd& dout, const Eigen::MatrixXd& filter) {
  const Eigen::Index m = dout.rows();
  const Eigen::Index n = filter.rows();
  const Eigen::Index c = n / 2;
  Eigen::MatrixXd din = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const Shift o = overlap(m, a - c, b - c);
      if (o.rows <= 0 || o.cols <= 0) continue;
      din.block(o.in_row, o.in_col, o.rows, o.cols) += filter(a, b) * dout.block(o.out_row, o.out_col, o.rows, o.cols);
    }
  }
  return din;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double lambda_feature_value(double lambda, LambdaFeature kind) {
  if (kind == LambdaFeature::kLossWeight) return lambda;
  if (lambda <= 0.0) return 0.0;
  return std::clamp(1.0 + std::log10(lambda) / 5.0, 0.0, 1.0);
}

NetParams zeros_like(const NetParams& p) {
  NetParams z;
  for (int l = 0; l < 3; ++l) z.filters[l] = Eigen::MatrixXd::Zero(p.filters[l].rows(), p.filters[l].cols());
  z.w1 = Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols());
  z.b1 = Eigen::VectorXd::Zero(p.b1.size());
  z.w2 = Eigen::MatrixXd::Zero(p.w2.rows(), p.w2.cols());
  z.b2 = Eigen::VectorXd::Zero(p.b2.size());
  z.w3 = Eigen::VectorXd::Zero(p.w3.size());
  z.b3 = 0.0;
  return z;
}

void check_shapes(const NetParams& params, const GridConfig& cfg) {
  bool ok = params.w1.rows() == cfg.hidden_sizes[0] && params.w1.cols() == kFeatureCount &&
            params.b1.size() == cfg.hidden_sizes[0] && params.w2.rows() == cfg.hidden_sizes[1] &&
            params.w2.cols() == cfg.hidden_sizes[0] && params.b2.size() == cfg.hidden_sizes[1] &&
            params.w3.size() == cfg.hidden_sizes[1];
  for (int l = 0; l < 3; ++l) {
    ok = ok && params.filters[l].rows() == cfg.filter_sizes[l] && params.filters[l].cols() == cfg.filter_sizes[l];
  }
  if (!ok) throw ConfigError("network parameters do not match the grid configuration");
}

// Input of the final feedback round.
Eigen::VectorXd final_round_input(const DeviceLayout& layout, const Conditions& cond, const NetParams& params,
                                  const GridConfig& cfg) {
  Eigen::VectorXd p = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(layout.n_links()));
  for (int r = 0; r + 1 < cfg.feedback_rounds; ++r) p = forward(layout, cond, params, cfg, p);
  return p;
}

}  // namespace

std::string to_string(LambdaFeature f) {
  return f == LambdaFeature::kLossWeight ? "loss_weight" : "log_scale";
}

LambdaFeature lambda_feature_from_string(const std::string& name) {
  if (name == "loss_weight") return LambdaFeature::kLossWeight;
  if (name == "log_scale") return LambdaFeature::kLogScale;
  throw ConfigError("unknown lambda feature '" + name + "' (expected loss_weight or log_scale)");
}

void GridConfig::validate() const {
  if (grid_size < 1) throw ConfigError("grid_size must be >= 1");
  for (int n : filter_sizes) {
    if (n < 1 || n % 2 == 0) throw ConfigError("filter sizes must be odd and positive");
  }
  for (int m : hidden_sizes) {
    if (m < 1) throw ConfigError("hidden sizes must be positive");
  }
  if (feedback_rounds < 1) throw ConfigError("feedback_rounds must be >= 1");
  if (!(distance_scale_m > 0.0)) throw ConfigError("distance_scale_m must be positive");
}

GridConfig GridConfig::desk() { return GridConfig{}; }

GridConfig GridConfig::full_scale() {
  GridConfig c;
  c.grid_size = 125;
  c.filter_sizes = {15, 15, 15};
  c.hidden_sizes = {30, 30};
  return c;
}

GridConfig GridConfig::tiny() {
  GridConfig c;
  c.grid_size = 8;
  c.filter_sizes = {3, 3, 3};
  c.hidden_sizes = {4, 4};
  c.feedback_rounds = 2;
  return c;
}

int grid_cell(double coord, double region_size_m, int grid_size) {
  const double scaled = std::ceil(coord * grid_size / region_size_m);
  return static_cast<int>(std::clamp(scaled, 1.0, static_cast<double>(grid_size))) - 1;
}

GliGrids rasterize(const DeviceLayout& layout, const Eigen::VectorXd& p, int grid_size) {
  const std::size_t n = layout.n_links();
  if (static_cast<std::size_t>(p.size()) != n) throw ConfigError("rasterize: policy length differs from layout");
  GliGrids g;
  g.tx = Eigen::MatrixXd::Zero(grid_size, grid_size);
  g.rx = Eigen::MatrixXd::Zero(grid_size, grid_size);
  g.tx_cell.resize(n);
  g.rx_cell.resize(n);
  const double L = layout.region_size_m;
  for (std::size_t i = 0; i < n; ++i) {
    g.tx_cell[i] = {grid_cell(layout.tx[i].x, L, grid_size), grid_cell(layout.tx[i].y, L, grid_size)};
    g.rx_cell[i] = {grid_cell(layout.rx[i].x, L, grid_size), grid_cell(layout.rx[i].y, L, grid_size)};
    const auto k = static_cast<Eigen::Index>(i);
    g.tx(g.tx_cell[i][0], g.tx_cell[i][1]) += p(k);
    g.rx(g.rx_cell[i][0], g.rx_cell[i][1]) += p(k);
  }
  return g;
}

Eigen::MatrixXd conv_same(const Eigen::MatrixXd& input, const Eigen::MatrixXd& filter) {
  const Eigen::Index m = input.rows();
  const Eigen::Index n = filter.rows();
  const Eigen::Index c = n / 2;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const Shift o = overlap(m, a - c, b - c);
      if (o.rows <= 0 || o.cols <= 0) continue;
      out.block(o.out_row, o.out_col, o.rows, o.cols) += filter(a, b) * input.block(o.in_row, o.in_col, o.rows, o.cols);
    }
  }
  return out;
}

NetParams NetParams::init(const GridConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  RngStream rng(seed, stream_id(StreamPurpose::kParamInit));
  auto fill = [&rng](Eigen::MatrixXd& m, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
    }
  };
  NetParams p;
  for (int l = 0; l < 3; ++l) {
    const int n = cfg.filter_sizes[l];
    p.filters[l].resize(n, n);
    fill(p.filters[l], n * n);
  }
  const int m1 = cfg.hidden_sizes[0];
  const int m2 = cfg.hidden_sizes[1];
  p.w1.resize(m1, kFeatureCount);
  fill(p.w1, kFeatureCount);
  p.b1 = Eigen::VectorXd::Zero(m1);
  p.w2.resize(m2, m1);
  fill(p.w2, m1);
  p.b2 = Eigen::VectorXd::Zero(m2);
  Eigen::MatrixXd w3(m2, 1);
  fill(w3, m2);
  p.w3 = w3.col(0);
  p.b3 = 0.0;
  return p;
}

Eigen::Index NetParams::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& f : filters) n += f.size();
  return n + w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + 1;
}

Eigen::VectorXd NetParams::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index k = 0;
  auto put = [&](const auto& m) {
    flat.segment(k, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    k += m.size();
  };
  for (const auto& f : filters) put(f);
  put(w1);
  put(b1);
  put(w2);
  put(b2);
  put(w3);
  flat(k) = b3;
  return flat;
}

void NetParams::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) throw ConfigError("NetParams::assign: wrong parameter count");
  Eigen::Index k = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = flat.segment(k, m.size());
    k += m.size();
  };
  for (auto& f : filters) take(f);
  take(w1);
  take(b1);
  take(w2);
  take(b2);
  take(w3);
  b3 = flat(k);
}

bool NetParams::all_finite() const { return flatten().allFinite(); }

Eigen::VectorXd forward(const DeviceLayout& layout, const Conditions& cond, const NetParams& params,
                        const GridConfig& cfg, const Eigen::VectorXd& p_prev, ForwardCache* cache) {
  check_shapes(params, cfg);
  const auto n = static_cast<Eigen::Index>(layout.n_links());
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;

  c.grids = rasterize(layout, p_prev, cfg.grid_size);
  const Eigen::MatrixXd* tx_in = &c.grids.tx;
  const Eigen::MatrixXd* rx_in = &c.grids.rx;
  for (int l = 0; l < 3; ++l) {
    c.tx_out[l] = conv_same(*tx_in, params.filters[l]);
    c.rx_out[l] = conv_same(*rx_in, params.filters[l]);
    tx_in = &c.tx_out[l];
    rx_in = &c.rx_out[l];
  }

  const double lam = lambda_feature_value(cond.lambda, cfg.lambda_feature);
  c.features.resize(n, kFeatureCount);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rc = c.grids.rx_cell[static_cast<std::size_t>(i)];
    const auto& tc = c.grids.tx_cell[static_cast<std::size_t>(i)];
    for (int l = 0; l < 3; ++l) {
      c.features(i, l) = c.tx_out[l](rc[0], rc[1]);
      c.features(i, 3 + l) = c.rx_out[l](tc[0], tc[1]);
    }
    c.features(i, 6) = p_prev(i);
    c.features(i, 7) = layout.link_distance(static_cast<std::size_t>(i)) / cfg.distance_scale_m;
    c.features(i, 8) = cond.xi;
    c.features(i, 9) = lam;
  }

  c.z1 = (c.features * params.w1.transpose()).rowwise() + params.b1.transpose();
  c.h1 = c.z1.cwiseMax(0.0);
  c.z2 = (c.h1 * params.w2.transpose()).rowwise() + params.b2.transpose();
  c.h2 = c.z2.cwiseMax(0.0);
  c.z3 = (c.h2 * params.w3).array() + params.b3;
  c.p_hat = c.z3.unaryExpr(&sigmoid);
  return c.p_hat;
}

InferResult infer(const DeviceLayout& layout, const Conditions& cond, const NetParams& params,
                  const GridConfig& cfg) {
  cfg.validate();
  InferResult out;
  Eigen::VectorXd p = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(layout.n_links()));
  for (int r = 0; r < cfg.feedback_rounds; ++r) {
    Eigen::VectorXd next = forward(layout, cond, params, cfg, p);
    out.round_changes.push_back((next - p).cwiseAbs().maxCoeff());
    out.p_prev_final = std::move(p);
    p = std::move(next);
  }
  out.last_change = out.round_changes.back();
  out.policy = Policy::clamped(p);
  return out;
}

Eigen::VectorXd backward(const ForwardCache& c, const NetParams& params, const GridConfig& cfg,
                         const Eigen::VectorXd& dloss_dphat) {
  const Eigen::Index n = c.p_hat.size();
  NetParams g = zeros_like(params);

  const Eigen::VectorXd dz3 = dloss_dphat.cwiseProduct(c.p_hat.cwiseProduct((1.0 - c.p_hat.array()).matrix()));
  g.w3 = c.h2.transpose() * dz3;
  g.b3 = dz3.sum();

  const Eigen::MatrixXd dz2 = (dz3 * params.w3.transpose()).cwiseProduct((c.z2.array() > 0.0).cast<double>().matrix());
  g.w2 = dz2.transpose() * c.h1;
  g.b2 = dz2.colwise().sum().transpose();

  const Eigen::MatrixXd dz1 = (dz2 * params.w2).cwiseProduct((c.z1.array() > 0.0).cast<double>().matrix());
  g.w1 = dz1.transpose() * c.features;
  g.b1 = dz1.colwise().sum().transpose();

  const Eigen::MatrixXd df = dz1 * params.w1;  // N x 10

  // Scatter feature gradients onto the conv outputs they were read from.
  const int m = cfg.grid_size;
  std::array<Eigen::MatrixXd, 3> dtx, drx;
  for (int l = 0; l < 3; ++l) {
    dtx[l] = Eigen::MatrixXd::Zero(m, m);
    drx[l] = Eigen::MatrixXd::Zero(m, m);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rc = c.grids.rx_cell[static_cast<std::size_t>(i)];
    const auto& tc = c.grids.tx_cell[static_cast<std::size_t>(i)];
    for (int l = 0; l < 3; ++l) {
      dtx[l](rc[0], rc[1]) += df(i, l);
      drx[l](tc[0], tc[1]) += df(i, 3 + l);
    }
  }

  // Reverse through the three convolutions of each path; the grids themselves
  // depend only on the frozen previous-round probabilities.
  for (int path = 0; path < 2; ++path) {
    const auto& outs = path == 0 ? c.tx_out : c.rx_out;
    const Eigen::MatrixXd& grid0 = path == 0 ? c.grids.tx : c.grids.rx;
    auto& seeds = path == 0 ? dtx : drx;
    Eigen::MatrixXd dout = seeds[2];
    for (int l = 2; l >= 0; --l) {
      const Eigen::MatrixXd& in = l == 0 ? grid0 : outs[l - 1];
      g.filters[l] += filter_grad(in, dout, params.filters[l].rows());
      if (l > 0) dout = seeds[l - 1] + conv_same_adjoint(dout, params.filters[l]);
    }
  }
  return g.flatten();
}

SampleLoss sample_loss_given_prev(const TrainingSample& sample, const NetParams& params, const GridConfig& cfg,
                                  const Eigen::VectorXd& p_prev, const LossOptions& opts) {
  ForwardCache cache;
  const Eigen::VectorXd p_hat = forward(sample.layout, sample.cond, params, cfg, p_prev, &cache);
  SampleLoss out;
  out.policy = Policy::clamped(p_hat);
  const GradientWorkspace ws =
      grad_objective_at(sample.channel, out.policy.p(), sample.cond.xi, sample.cond.lambda, opts.fixed_point);
  if (!std::isfinite(ws.objective) || !ws.grad_obj.allFinite()) {
    throw NumericError("sample loss: non-finite objective or policy gradient");
  }
  Eigen::VectorXd dl = ws.grad_obj;
  for (Eigen::Index i = 0; i < dl.size(); ++i) {
    if (p_hat(i) < kPolicyFloor) dl(i) = 0.0;  // clamped from below
  }
  out.loss = ws.objective;
  out.grad = backward(cache, params, cfg, dl);
  return out;
}

double sample_loss_value_given_prev(const TrainingSample& sample, const NetParams& params, const GridConfig& cfg,
                                    const Eigen::VectorXd& p_prev, const LossOptions& opts) {
  const Eigen::VectorXd p_hat = forward(sample.layout, sample.cond, params, cfg, p_prev);
  return evaluate(sample.channel, Policy::clamped(p_hat), sample.cond.xi, sample.cond.lambda, opts.fixed_point)
      .objective;
}

BatchLoss loss_and_grad(const std::vector<TrainingSample>& batch, const NetParams& params, const GridConfig& cfg,
                        const LossOptions& opts, int threads) {
  if (batch.empty()) throw ConfigError("loss_and_grad: empty batch");
  std::vector<SampleLoss> results(batch.size());
  std::vector<char> ok(batch.size(), 0);
  parallel_for(batch.size(), threads, [&](std::size_t k) {
    try {
      const Eigen::VectorXd prev = final_round_input(batch[k].layout, batch[k].cond, params, cfg);
      results[k] = sample_loss_given_prev(batch[k], params, cfg, prev, opts);
      ok[k] = 1;
    } catch (const NumericError&) {
      ok[k] = 0;
    }
  });

  BatchLoss out;
  out.grad = Eigen::VectorXd::Zero(params.parameter_count());
  double total = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (!ok[k]) {
      ++out.skipped;
      out.losses.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    ++out.used;
    total += results[k].loss;
    out.grad += results[k].grad;
    out.losses.push_back(results[k].loss);
  }
  if (out.used == 0) throw NumericError("loss_and_grad: every sample in the batch failed");
  out.mean_loss = total / out.used;
  out.grad /= out.used;
  return out;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (n_links < 1) throw ConfigError("n_links must be >= 1");
  if (checkpoint_every < 0 || monitor_every < 0 || monitor_samples < 0) {
    throw ConfigError("checkpoint_every, monitor_every and monitor_samples must be >= 0");
  }
  channel.validate();
}

TrainingSample make_sample(const DeviceLayout& layout, const ChannelConfig& channel, double xi, double lambda) {
  check_probability(xi, "xi");
  check_probability(lambda, "lambda", true);
  return TrainingSample{layout, derive_channel(layout, channel), Conditions{xi, lambda}};
}

TrainingSample draw_training_sample(const TrainConfig& cfg, std::uint64_t stream, std::uint64_t index) {
  const CounterRng rng(cfg.seed);
  const auto s = static_cast<std::uint32_t>(stream);
  const std::uint64_t layout_seed = rng.bits(stream_id(StreamPurpose::kTrainingLayout, s), index);
  const std::uint64_t cond_stream = stream_id(StreamPurpose::kTrainingConditions, s);
  const double xi = 1.0 - rng.uniform(cond_stream, 2 * index);
  const double u = 1.0 - rng.uniform(cond_stream, 2 * index + 1);
  const DeviceLayout layout = generate_layout(layout_seed, cfg.n_links, cfg.region_size_m, cfg.d_min_m, cfg.d_max_m);
  return make_sample(layout, cfg.channel, cfg.fixed_xi.value_or(xi),
                     cfg.fixed_lambda ? *cfg.fixed_lambda : log5_weight(u));
}

double evaluate_loss(const std::vector<TrainingSample>& samples, const NetParams& params, const GridConfig& cfg,
                     const LossOptions& opts) {
  if (samples.empty()) throw ConfigError("evaluate_loss: no samples");
  double total = 0.0;
  for (const TrainingSample& s : samples) {
    const InferResult r = infer(s.layout, s.cond, params, cfg);
    total += evaluate(s.channel, r.policy, s.cond.xi, s.cond.lambda, opts.fixed_point).objective;
  }
  return total / static_cast<double>(samples.size());
}

TrainState train(const NetParams& init, const TrainConfig& train_cfg, const GridConfig& grid_cfg,
                 const TrainHooks& hooks) {
  train_cfg.validate();
  grid_cfg.validate();
  check_shapes(init, grid_cfg);

  TrainState state;
  state.params = init;
  Eigen::VectorXd theta = init.flatten();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());

  std::vector<TrainingSample> monitor;
  for (int k = 0; k < train_cfg.monitor_samples; ++k) {
    monitor.push_back(draw_training_sample(train_cfg, 1, static_cast<std::uint64_t>(k)));
  }
  auto record_monitor = [&] {
    if (monitor.empty() || train_cfg.monitor_every == 0) return;
    state.monitor_trace.push_back(evaluate_loss(monitor, state.params, grid_cfg));
    state.monitor_steps.push_back(state.step);
  };
  record_monitor();

  const auto batch_size = static_cast<std::uint64_t>(train_cfg.batch_size);
  std::vector<TrainingSample> batch;
  for (int step = 1; step <= train_cfg.steps; ++step) {
    batch.clear();
    for (std::uint64_t k = 0; k < batch_size; ++k) {
      batch.push_back(draw_training_sample(train_cfg, 0, static_cast<std::uint64_t>(step - 1) * batch_size + k));
    }
    const BatchLoss bl = loss_and_grad(batch, state.params, grid_cfg, {}, train_cfg.threads);
    if (!std::isfinite(bl.mean_loss) || !bl.grad.allFinite()) {
      throw NumericError("train: non-finite loss or gradient at step " + std::to_string(step) + " (loss " +
                         std::to_string(bl.mean_loss) + ")");
    }
    if (bl.skipped > 0 && hooks.on_warning) {
      hooks.on_warning("step " + std::to_string(step) + ": skipped " + std::to_string(bl.skipped) +
                       " sample(s) whose fixed point or gradient solve failed");
    }

    const double b1 = train_cfg.adam_beta1;
    const double b2 = train_cfg.adam_beta2;
    m = b1 * m + (1.0 - b1) * bl.grad;
    v = b2 * v + (1.0 - b2) * bl.grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1, step);
    const double c2 = 1.0 - std::pow(b2, step);
    theta.array() -= train_cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + train_cfg.adam_eps);
    state.params.assign(theta);
    state.step = step;
    state.loss_trace.push_back(bl.mean_loss);
    if (hooks.on_step) hooks.on_step(state);

    if (train_cfg.monitor_every > 0 && step % train_cfg.monitor_every == 0) record_monitor();
    if (train_cfg.checkpoint_every > 0 && step % train_cfg.checkpoint_every == 0 && step != train_cfg.steps &&
        hooks.on_checkpoint) {
      hooks.on_checkpoint(state);
    }
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(state);
  return state;
}

}  // namespace aoisched
