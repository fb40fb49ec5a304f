#pragma once

// File formats. JSON for layouts, channel configs, policies, reports and
// checkpoints; CSV for Pareto fronts, loss traces and simulator traces.
// Readers reject unknown or ill-typed fields and name the offending one.
// Writers are deterministic: same values, same bytes.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "aoisched/gradient.hpp"
#include "aoisched/layout.hpp"
#include "aoisched/meanfield.hpp"
#include "aoisched/neural.hpp"
#include "aoisched/optimize.hpp"
#include "aoisched/simulator.hpp"

namespace aoisched::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
void write_json_file(const std::string& path, const Json& j);
std::string read_text_file(const std::string& path);

/// 64-bit FNV-1a of the file bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string file_hash(const std::string& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

Json layout_to_json(const DeviceLayout& layout);
DeviceLayout layout_from_json(const Json& j);

/// Units in field names: tx_power_dbm, noise_psd_dbm_per_hz (null: noiseless),
/// bandwidth_hz, beta_db (number or per-link array), alpha, pathloss_model,
/// antenna_gain_dbi, carrier_hz, antenna_height_m. Missing fields take the
/// reference values.
Json channel_config_to_json(const ChannelConfig& cfg);
ChannelConfig channel_config_from_json(const Json& j);

Json policy_to_json(const Policy& policy);
/// Accepts {"schema_version", "p"} plus optional "optimizer" or "inference" blocks.
Policy policy_from_json(const Json& j);

Json eval_report_to_json(const MeanFieldState& s);
Json sim_stats_to_json(const ReplicatedStats& r, const SimConfig& cfg, double xi);
Json grad_check_to_json(const FdCheckReport& r);
Json opt_result_to_json(const OptResult& r);

std::string pareto_csv(const std::vector<ParetoPoint>& points);
std::string trace_csv(const SimTrace& trace);

Json grid_config_to_json(const GridConfig& cfg);
/// {"preset": "desk" | "full_scale" | "tiny", ...overrides}
GridConfig grid_config_from_json(const Json& j);

Json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j);

struct Checkpoint {
  GridConfig grid;
  TrainConfig train;
  std::uint64_t init_seed = 0;
  TrainState state;
};

Json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const Json& j);

/// Provenance record written next to every primary output as
/// `<output>.manifest.json`. Only `created_utc` and `wall_seconds` vary
/// between reruns.
struct RunManifest {
  std::string tool_version;
  std::string command;
  std::vector<std::string> argv;
  Json config;  // fully resolved options
  std::map<std::string, std::string> input_hashes;
  std::map<std::string, std::string> output_hashes;
  std::map<std::string, std::uint64_t> seeds;
  int threads = 1;
  double wall_seconds = 0.0;
};

Json manifest_to_json(const RunManifest& m);
void write_manifest(const std::string& output_path, const RunManifest& m);

}  // namespace aoisched::io
