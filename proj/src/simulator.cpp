#include "aoisched/simulator.hpp"

#include <cmath>
#include <limits>

#include "aoisched/error.hpp"
#include "aoisched/parallel.hpp"
#include "aoisched/rng.hpp"

namespace aoisched {

namespace {

// Accumulates per-slot AoI and delivery indicators into batch sums.
class BatchAccumulator {
 public:
  BatchAccumulator(int n_links, std::int64_t slots, int batches)
      : n_(n_links),
        slots_(slots),
        batches_(static_cast<int>(std::min<std::int64_t>(batches, slots))),
        g_sum_(Eigen::MatrixXd::Zero(n_links, batches_)),
        b_sum_(Eigen::MatrixXd::Zero(n_links, batches_)),
        batch_len_(Eigen::VectorXd::Zero(batches_)) {}

  int batch_of(std::int64_t window_slot) const {
    return static_cast<int>((window_slot * batches_) / slots_);
  }

  void add(std::int64_t window_slot, int link, double g, bool b) {
    const int k = batch_of(window_slot);
    g_sum_(link, k) += g;
    if (b) b_sum_(link, k) += 1.0;
  }

  void count_slot(std::int64_t window_slot) { batch_len_(batch_of(window_slot)) += 1.0; }

  SimStats finish() const {
    SimStats s;
    s.slots = slots_;
    const double total = static_cast<double>(slots_);
    s.delta_link = g_sum_.rowwise().sum() / total;
    s.thr_link = b_sum_.rowwise().sum() / total;
    s.delta_avg = mean_of(s.delta_link);
    s.thr_avg = mean_of(s.thr_link);

    const Eigen::RowVectorXd len = batch_len_.transpose();
    const Eigen::MatrixXd g_means = g_sum_.array().rowwise() / len.array();
    const Eigen::MatrixXd b_means = b_sum_.array().rowwise() / len.array();
    s.delta_link_se = row_se(g_means);
    s.thr_link_se = row_se(b_means);
    s.delta_avg_se = row_se(g_means.colwise().mean())(0);
    s.thr_avg_se = row_se(b_means.colwise().mean())(0);
    return s;
  }

 private:
  Eigen::VectorXd row_se(const Eigen::MatrixXd& means) const {
    const Eigen::Index k = means.cols();
    Eigen::VectorXd se = Eigen::VectorXd::Zero(means.rows());
    if (k < 2) return se;
    for (Eigen::Index r = 0; r < means.rows(); ++r) {
      const double m = means.row(r).mean();
      const double var = (means.row(r).array() - m).square().sum() / static_cast<double>(k - 1);
      se(r) = std::sqrt(var / static_cast<double>(k));
    }
    return se;
  }

  int n_;
  std::int64_t slots_;
  int batches_;
  Eigen::MatrixXd g_sum_;
  Eigen::MatrixXd b_sum_;
  Eigen::VectorXd batch_len_;
};

double sample_se(const std::vector<double>& x, double* mean_out) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  if (mean_out) *mean_out = m;
  if (x.size() < 2) return 0.0;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

}  // namespace

void SimConfig::validate() const {
  if (horizon_slots < 1) throw ConfigError("sim: horizon must be >= 1 slot");
  if (warmup_slots < 0 || warmup_slots >= horizon_slots) throw ConfigError("sim: need 0 <= warmup < horizon");
  if (batches < 1) throw ConfigError("sim: batches must be >= 1");
}

Eigen::VectorXd SimStats::success_frequency() const {
  Eigen::VectorXd f(successes.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    f(i) = transmissions(i) > 0 ? successes(i) / transmissions(i) : std::numeric_limits<double>::quiet_NaN();
  }
  return f;
}

SimStats simulate(const ChannelParams& channel, const Policy& policy, double xi, const SimConfig& cfg) {
  cfg.validate();
  check_probability(xi, "xi");
  const int n = static_cast<int>(channel.n());
  if (policy.n() != n) throw ConfigError("simulate: policy length differs from channel size");

  const CounterRng rng(cfg.seed);
  std::vector<std::uint64_t> arrival_stream(n), activation_stream(n);
  for (int i = 0; i < n; ++i) {
    arrival_stream[i] = stream_id(StreamPurpose::kArrival, i);
    activation_stream[i] = stream_id(StreamPurpose::kActivation, i);
  }
  // Noise term of the success condition and inverse SIR weights, per receiver.
  Eigen::VectorXd noise_term(n);
  for (int i = 0; i < n; ++i) noise_term(i) = -std::log(channel.rho(i));
  const Eigen::MatrixXd inv_d = channel.D.cwiseInverse();  // 0 on the diagonal

  std::vector<std::int64_t> delta(n, 0), g(n, 1);
  std::vector<char> nonempty(n, 0), active(n, 0);
  std::vector<int> transmitting;
  transmitting.reserve(n);

  const std::int64_t window = cfg.horizon_slots - cfg.warmup_slots;
  BatchAccumulator acc(n, window, cfg.batches);
  Eigen::VectorXd tx_count = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd ok_count = Eigen::VectorXd::Zero(n);
  SimTrace trace;
  trace.n_links = n;
  if (cfg.record_traces) trace.rows.reserve(static_cast<std::size_t>(window) * n);

  std::vector<char> success(n, 0);
  for (std::int64_t k = 1; k <= cfg.horizon_slots; ++k) {
    const auto idx = static_cast<std::uint64_t>(k);
    transmitting.clear();
    for (int i = 0; i < n; ++i) {
      if (rng.bernoulli(arrival_stream[i], idx, xi)) {
        delta[i] = 0;
        nonempty[i] = 1;
      } else {
        ++delta[i];
      }
      active[i] = rng.bernoulli(activation_stream[i], idx, policy[i]) ? 1 : 0;
      success[i] = 0;
      if (active[i] && nonempty[i]) transmitting.push_back(i);
    }
    for (int i : transmitting) {
      double threshold = noise_term(i);
      for (int j : transmitting) {
        if (j != i) threshold += rng.exponential(stream_id(StreamPurpose::kFading, j, i), idx) * inv_d(j, i);
      }
      const double own = rng.exponential(stream_id(StreamPurpose::kFading, i, i), idx);
      success[i] = own > threshold ? 1 : 0;
    }

    const bool in_window = k > cfg.warmup_slots;
    const std::int64_t wslot = k - cfg.warmup_slots - 1;
    if (in_window) acc.count_slot(wslot);
    for (int i = 0; i < n; ++i) {
      if (in_window) {
        acc.add(wslot, i, static_cast<double>(g[i]), success[i] != 0);
        if (active[i] && nonempty[i]) tx_count(i) += 1.0;
        if (success[i]) ok_count(i) += 1.0;
        if (cfg.record_traces) {
          trace.rows.push_back({k, i, g[i], delta[i], active[i] != 0, nonempty[i] != 0, success[i] != 0});
        }
      }
      if (success[i]) {
        g[i] = delta[i] + 1;
        nonempty[i] = 0;
      } else {
        ++g[i];
      }
    }
  }

  SimStats s = acc.finish();
  s.transmissions = tx_count;
  s.successes = ok_count;
  s.trace = std::move(trace);
  return s;
}

SimStats empirical_metrics(const SimTrace& trace, int batches) {
  if (trace.rows.empty() || trace.n_links < 1) throw ConfigError("empirical_metrics: empty trace");
  const std::int64_t first = trace.rows.front().slot;
  const std::int64_t last = trace.rows.back().slot;
  const std::int64_t slots = last - first + 1;
  if (static_cast<std::int64_t>(trace.rows.size()) != slots * trace.n_links) {
    throw ConfigError("empirical_metrics: trace must hold every link in every slot");
  }
  BatchAccumulator acc(trace.n_links, slots, batches);
  Eigen::VectorXd tx = Eigen::VectorXd::Zero(trace.n_links);
  Eigen::VectorXd ok = Eigen::VectorXd::Zero(trace.n_links);
  std::int64_t counted = first - 1;
  for (const TraceRow& r : trace.rows) {
    const std::int64_t w = r.slot - first;
    if (r.slot != counted) {
      acc.count_slot(w);
      counted = r.slot;
    }
    acc.add(w, r.link, static_cast<double>(r.g), r.b);
    if (r.a && r.n) tx(r.link) += 1.0;
    if (r.b) ok(r.link) += 1.0;
  }
  SimStats s = acc.finish();
  s.transmissions = tx;
  s.successes = ok;
  return s;
}

std::uint64_t replication_seed(std::uint64_t seed, int replication) {
  return CounterRng(seed).bits(stream_id(StreamPurpose::kTest, 0xA11), static_cast<std::uint64_t>(replication));
}

ReplicatedStats simulate_replications(const ChannelParams& channel, const Policy& policy, double xi,
                                      const SimConfig& cfg, int replications, int threads) {
  if (replications < 1) throw ConfigError("simulate: replications must be >= 1");
  ReplicatedStats out;
  out.runs.resize(replications);
  parallel_for(static_cast<std::size_t>(replications), threads, [&](std::size_t r) {
    SimConfig run_cfg = cfg;
    run_cfg.seed = replications == 1 ? cfg.seed : replication_seed(cfg.seed, static_cast<int>(r));
    out.runs[r] = simulate(channel, policy, xi, run_cfg);
  });

  std::vector<double> d, t;
  for (const SimStats& s : out.runs) {
    d.push_back(s.delta_avg);
    t.push_back(s.thr_avg);
  }
  out.delta_avg_se = sample_se(d, &out.delta_avg);
  out.thr_avg_se = sample_se(t, &out.thr_avg);
  if (replications == 1) {
    out.delta_avg_se = out.runs[0].delta_avg_se;
    out.thr_avg_se = out.runs[0].thr_avg_se;
  }

  const Eigen::Index n = channel.n();
  out.delta_link = Eigen::VectorXd::Zero(n);
  out.thr_link = Eigen::VectorXd::Zero(n);
  out.thr_link_se = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> ti, di;
    for (const SimStats& s : out.runs) {
      ti.push_back(s.thr_link(i));
      di.push_back(s.delta_link(i));
    }
    double m = 0.0;
    out.thr_link_se(i) = sample_se(ti, &m);
    out.thr_link(i) = m;
    sample_se(di, &m);
    out.delta_link(i) = m;
    if (replications == 1) out.thr_link_se(i) = out.runs[0].thr_link_se(i);
  }
  return out;
}

}  // namespace aoisched
