#pragma once

// Slot-level Monte Carlo of the real system: Bernoulli arrivals, unit LCFS-PR
// buffers, random activation, Rayleigh fading redrawn per slot and per
// ordered pair. No mean-field assumption anywhere.
//
// Per slot k:
//   1. e_i ~ Bern(xi). e_i = 1 puts a fresh packet in the buffer (delta_i = 0),
//      otherwise delta_i ages by one.
//   2. a_i ~ Bern(p_i); link i transmits iff a_i = 1 and its buffer is non-empty.
//   3. b_i = 1 iff SINR_i > beta_i, which for the channel parameters reads
//      h_ii > -ln rho_i + sum_{j transmitting, j != i} h_ji / D(j,i).
//   4. g_i(k+1) = delta_i(k) + 1 and the buffer empties on success,
//      otherwise g_i(k+1) = g_i(k) + 1.
// Averages use slots W+1..K.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "aoisched/layout.hpp"
#include "aoisched/meanfield.hpp"

namespace aoisched {

struct SimConfig {
  std::int64_t horizon_slots = 100000;
  std::int64_t warmup_slots = 10000;
  std::uint64_t seed = 1;
  bool record_traces = false;
  int batches = 50;

  void validate() const;
};

struct TraceRow {
  std::int64_t slot = 0;
  int link = 0;
  std::int64_t g = 0;      // receiver AoI at the start of the slot
  std::int64_t delta = 0;  // age of the freshest generated packet after arrivals
  bool a = false;          // activation draw
  bool n = false;          // buffer non-empty after arrivals
  bool b = false;          // successful delivery
};

/// Rows ordered by slot, then link.
struct SimTrace {
  int n_links = 0;
  std::vector<TraceRow> rows;
};

struct SimStats {
  std::int64_t slots = 0;
  double delta_avg = 0.0;
  double thr_avg = 0.0;
  double delta_avg_se = 0.0;
  double thr_avg_se = 0.0;
  Eigen::VectorXd delta_link;
  Eigen::VectorXd thr_link;
  Eigen::VectorXd delta_link_se;
  Eigen::VectorXd thr_link_se;
  Eigen::VectorXd transmissions;  // count of transmitting slots per link
  Eigen::VectorXd successes;      // count of successful slots per link
  SimTrace trace;                 // filled when record_traces is set

  /// successes / transmissions per link (NaN where a link never transmitted)
  Eigen::VectorXd success_frequency() const;
};

SimStats simulate(const ChannelParams& channel, const Policy& policy, double xi, const SimConfig& cfg);

/// Time averages and batch-means standard errors (50 batches, or one per slot
/// when the trace is shorter) of a recorded trace. Throws ConfigError when empty.
SimStats empirical_metrics(const SimTrace& trace, int batches = 50);

struct ReplicatedStats {
  std::vector<SimStats> runs;
  double delta_avg = 0.0;
  double thr_avg = 0.0;
  double delta_avg_se = 0.0;  // across replications
  double thr_avg_se = 0.0;
  Eigen::VectorXd delta_link;
  Eigen::VectorXd thr_link;
  Eigen::VectorXd thr_link_se;
};

/// Independent replications with seeds derived from cfg.seed; runs in
/// parallel over `threads` workers, merged in replication order.
ReplicatedStats simulate_replications(const ChannelParams& channel, const Policy& policy, double xi,
                                      const SimConfig& cfg, int replications, int threads = 1);

std::uint64_t replication_seed(std::uint64_t seed, int replication);

}  // namespace aoisched
