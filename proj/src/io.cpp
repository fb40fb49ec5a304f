#include "aoisched/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <set>
#include <sstream>

#include "aoisched/error.hpp"

namespace aoisched::io {

namespace {

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw ConfigError(ctx + ": unknown field '" + it.key() + "'");
  }
}

const Json& field(const Json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError(ctx + ": missing field '" + key + "'");
  return j.at(key);
}

double number(const Json& v, const char* key, const std::string& ctx) {
  if (!v.is_number()) throw ConfigError(ctx + ": field '" + key + "' must be a number");
  return v.get<double>();
}

double number_or(const Json& j, const char* key, double fallback, const std::string& ctx) {
  return j.contains(key) ? number(j.at(key), key, ctx) : fallback;
}

std::int64_t integer(const Json& v, const char* key, const std::string& ctx) {
  if (!v.is_number_integer()) throw ConfigError(ctx + ": field '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

int int_or(const Json& j, const char* key, int fallback, const std::string& ctx) {
  return j.contains(key) ? static_cast<int>(integer(j.at(key), key, ctx)) : fallback;
}

std::uint64_t unsigned_integer(const Json& v, const char* key, const std::string& ctx) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(ctx + ": field '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string string_field(const Json& v, const char* key, const std::string& ctx) {
  if (!v.is_string()) throw ConfigError(ctx + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

void check_schema(const Json& j, const std::string& ctx) {
  if (!j.contains("schema_version")) return;
  const auto v = integer(j.at("schema_version"), "schema_version", ctx);
  if (v != kSchemaVersion) {
    throw ConfigError(ctx + ": unsupported schema_version " + std::to_string(v) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
}

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from(const Json& v, const char* key, const std::string& ctx) {
  if (!v.is_array()) throw ConfigError(ctx + ": field '" + key + "' must be an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ConfigError(ctx + ": field '" + key + "[" + std::to_string(i) + "]' must be a number");
    }
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

std::vector<Point> points_from(const Json& v, const char* key, const std::string& ctx) {
  if (!v.is_array()) throw ConfigError(ctx + ": field '" + key + "' must be an array of [x, y] pairs");
  std::vector<Point> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Json& e = v[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw ConfigError(ctx + ": field '" + key + "[" + std::to_string(i) + "]' must be an [x, y] pair");
    }
    out.push_back({e[0].get<double>(), e[1].get<double>()});
  }
  return out;
}

Json points_json(const std::vector<Point>& pts) {
  Json a = Json::array();
  for (const Point& p : pts) a.push_back(Json::array({p.x, p.y}));
  return a;
}

// dB values are written with 12 significant digits so that a written config
// reads back to the value it was written from (2.5 dBi, not 2.4999999999999996).
double round_db(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

double watt_to_dbm(double w) { return round_db(10.0 * std::log10(w * 1000.0)); }
double linear_to_db(double x) { return round_db(10.0 * std::log10(x)); }

Json tensor_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index k = 0; k < m.size(); ++k) data.push_back(m.data()[k]);
  return Json{{"shape", Json::array({m.rows(), m.cols()})}, {"data", data}};
}

Eigen::MatrixXd tensor_from(const Json& tensors, const char* name, Eigen::Index rows, Eigen::Index cols) {
  const std::string ctx = std::string("checkpoint tensor '") + name + "'";
  const Json& t = field(tensors, name, "checkpoint tensors");
  reject_unknown(t, {"shape", "data"}, ctx);
  const Json& shape = field(t, "shape", ctx);
  if (!shape.is_array() || shape.size() != 2 || shape[0] != rows || shape[1] != cols) {
    throw ConfigError(ctx + ": shape does not match the grid configuration (expected [" + std::to_string(rows) +
                      ", " + std::to_string(cols) + "])");
  }
  const Eigen::VectorXd data = vector_from(field(t, "data", ctx), "data", ctx);
  if (data.size() != rows * cols) throw ConfigError(ctx + ": data length does not match shape");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string file_hash(const std::string& path) { return fnv1a_hex(read_text_file(path)); }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json layout_to_json(const DeviceLayout& layout) {
  return Json{{"schema_version", kSchemaVersion},
              {"seed", layout.seed},
              {"n_links", layout.n_links()},
              {"region_size_m", layout.region_size_m},
              {"d_min_m", layout.d_min_m},
              {"d_max_m", layout.d_max_m},
              {"tx", points_json(layout.tx)},
              {"rx", points_json(layout.rx)}};
}

DeviceLayout layout_from_json(const Json& j) {
  const std::string ctx = "layout";
  reject_unknown(j, {"schema_version", "seed", "n_links", "region_size_m", "d_min_m", "d_max_m", "tx", "rx"}, ctx);
  check_schema(j, ctx);
  DeviceLayout l;
  l.seed = j.contains("seed") ? unsigned_integer(j.at("seed"), "seed", ctx) : 0;
  l.region_size_m = number(field(j, "region_size_m", ctx), "region_size_m", ctx);
  l.d_min_m = number_or(j, "d_min_m", 0.0, ctx);
  l.d_max_m = number_or(j, "d_max_m", 0.0, ctx);
  l.tx = points_from(field(j, "tx", ctx), "tx", ctx);
  l.rx = points_from(field(j, "rx", ctx), "rx", ctx);
  const auto n = integer(field(j, "n_links", ctx), "n_links", ctx);
  if (n < 1 || static_cast<std::size_t>(n) != l.tx.size() || l.tx.size() != l.rx.size()) {
    throw ConfigError(ctx + ": field 'n_links' must be positive and equal the lengths of 'tx' and 'rx'");
  }
  l.validate();
  return l;
}

Json channel_config_to_json(const ChannelConfig& cfg) {
  Json beta;
  if (cfg.beta.size() == 1) {
    beta = linear_to_db(cfg.beta[0]);
  } else {
    beta = Json::array();
    for (double b : cfg.beta) beta.push_back(linear_to_db(b));
  }
  Json noise = cfg.noise_power_w > 0.0 ? Json(watt_to_dbm(cfg.noise_power_w / cfg.bandwidth_hz)) : Json(nullptr);
  return Json{{"schema_version", kSchemaVersion},
              {"tx_power_dbm", watt_to_dbm(cfg.tx_power_w)},
              {"noise_psd_dbm_per_hz", noise},
              {"bandwidth_hz", cfg.bandwidth_hz},
              {"beta_db", beta},
              {"alpha", cfg.alpha},
              {"pathloss_model", to_string(cfg.pathloss_model)},
              {"antenna_gain_dbi", linear_to_db(cfg.antenna_gain)},
              {"carrier_hz", cfg.carrier_hz},
              {"antenna_height_m", cfg.antenna_height_m}};
}

ChannelConfig channel_config_from_json(const Json& j) {
  const std::string ctx = "channel config";
  reject_unknown(j,
                 {"schema_version", "tx_power_dbm", "noise_psd_dbm_per_hz", "bandwidth_hz", "beta_db", "alpha",
                  "pathloss_model", "antenna_gain_dbi", "carrier_hz", "antenna_height_m"},
                 ctx);
  check_schema(j, ctx);
  const ChannelConfig ref = ChannelConfig::reference();
  ChannelConfig cfg = ref;
  if (j.contains("tx_power_dbm")) cfg.tx_power_w = dbm_to_watt(number(j.at("tx_power_dbm"), "tx_power_dbm", ctx));
  cfg.bandwidth_hz = number_or(j, "bandwidth_hz", ref.bandwidth_hz, ctx);
  if (j.contains("noise_psd_dbm_per_hz")) {
    const Json& v = j.at("noise_psd_dbm_per_hz");
    cfg.noise_power_w = v.is_null() ? 0.0 : dbm_to_watt(number(v, "noise_psd_dbm_per_hz", ctx)) * cfg.bandwidth_hz;
  } else {
    cfg.noise_power_w = ref.noise_power_w / ref.bandwidth_hz * cfg.bandwidth_hz;
  }
  if (j.contains("beta_db")) {
    const Json& b = j.at("beta_db");
    cfg.beta.clear();
    if (b.is_array()) {
      const Eigen::VectorXd db = vector_from(b, "beta_db", ctx);
      for (Eigen::Index i = 0; i < db.size(); ++i) cfg.beta.push_back(db_to_linear(db(i)));
    } else {
      cfg.beta.push_back(db_to_linear(number(b, "beta_db", ctx)));
    }
  }
  cfg.alpha = number_or(j, "alpha", ref.alpha, ctx);
  if (j.contains("pathloss_model")) {
    cfg.pathloss_model = pathloss_model_from_string(string_field(j.at("pathloss_model"), "pathloss_model", ctx));
  }
  if (j.contains("antenna_gain_dbi")) {
    cfg.antenna_gain = db_to_linear(number(j.at("antenna_gain_dbi"), "antenna_gain_dbi", ctx));
  }
  cfg.carrier_hz = number_or(j, "carrier_hz", ref.carrier_hz, ctx);
  cfg.antenna_height_m = number_or(j, "antenna_height_m", ref.antenna_height_m, ctx);
  cfg.validate();
  return cfg;
}

Json policy_to_json(const Policy& policy) {
  return Json{{"schema_version", kSchemaVersion}, {"p", vector_json(policy.p())}};
}

Policy policy_from_json(const Json& j) {
  const std::string ctx = "policy";
  reject_unknown(j, {"schema_version", "p", "optimizer", "inference"}, ctx);
  check_schema(j, ctx);
  return Policy(vector_from(field(j, "p", ctx), "p", ctx));
}

Json eval_report_to_json(const MeanFieldState& s) {
  return Json{{"schema_version", kSchemaVersion},
              {"n_links", s.p.size()},
              {"xi", s.xi},
              {"lambda", s.lambda},
              {"delta_avg", s.delta_avg},
              {"thr_avg", s.thr_avg},
              {"objective", s.objective},
              {"fixed_point_iterations", s.iterations},
              {"fixed_point_residual", s.residual},
              {"p", vector_json(s.p)},
              {"mu", vector_json(s.mu)},
              {"nu", vector_json(s.nu)},
              {"delta_link", vector_json(s.delta_link)},
              {"thr_link", vector_json(s.thr_link)}};
}

Json sim_stats_to_json(const ReplicatedStats& r, const SimConfig& cfg, double xi) {
  Json runs = Json::array();
  for (const SimStats& s : r.runs) {
    runs.push_back(Json{{"delta_avg", s.delta_avg},
                        {"thr_avg", s.thr_avg},
                        {"delta_avg_se", s.delta_avg_se},
                        {"thr_avg_se", s.thr_avg_se},
                        {"success_frequency", vector_json(s.success_frequency())}});
  }
  return Json{{"schema_version", kSchemaVersion},
              {"xi", xi},
              {"horizon_slots", cfg.horizon_slots},
              {"warmup_slots", cfg.warmup_slots},
              {"seed", cfg.seed},
              {"replications", r.runs.size()},
              {"delta_avg", r.delta_avg},
              {"thr_avg", r.thr_avg},
              {"delta_avg_se", r.delta_avg_se},
              {"thr_avg_se", r.thr_avg_se},
              {"delta_link", vector_json(r.delta_link)},
              {"thr_link", vector_json(r.thr_link)},
              {"thr_link_se", vector_json(r.thr_link_se)},
              {"runs", runs}};
}

Json grad_check_to_json(const FdCheckReport& r) {
  return Json{{"schema_version", kSchemaVersion},
              {"n_links", r.n},
              {"xi", r.xi},
              {"lambda", r.lambda},
              {"fd_step", r.fd_step},
              {"max_rel_err", r.max_rel_err},
              {"argmax_index", r.argmax_index},
              {"analytic", vector_json(r.analytic)},
              {"finite_difference", vector_json(r.finite_difference)}};
}

Json opt_result_to_json(const OptResult& r) {
  Json trace = Json::array();
  for (double v : r.objective_trace) trace.push_back(v);
  Json opt{{"method", to_string(r.method)},
           {"xi", r.xi},
           {"lambda", r.lambda},
           {"delta_avg", r.delta_avg},
           {"thr_avg", r.thr_avg},
           {"objective", r.objective},
           {"iterations", r.iterations},
           {"objective_trace", trace}};
  if (!r.scan.empty()) {
    Json scan = Json::array();
    for (const auto& [p, f] : r.scan) scan.push_back(Json::array({p, std::isfinite(f) ? Json(f) : Json(nullptr)}));
    opt["scan"] = scan;
  }
  Json j = policy_to_json(r.policy);
  j["optimizer"] = opt;
  return j;
}

std::string pareto_csv(const std::vector<ParetoPoint>& points) {
  std::string out = "lambda,delta_avg,thr_avg,objective,method,iterations\n";
  for (const ParetoPoint& p : points) {
    out += format_double(p.lambda) + "," + format_double(p.delta_avg) + "," + format_double(p.thr_avg) + "," +
           format_double(p.objective) + "," + to_string(p.method) + "," + std::to_string(p.iterations) + "\n";
  }
  return out;
}

std::string trace_csv(const SimTrace& trace) {
  std::string out = "slot,link,g,delta,a,n,b\n";
  for (const TraceRow& r : trace.rows) {
    out += std::to_string(r.slot) + "," + std::to_string(r.link) + "," + std::to_string(r.g) + "," +
           std::to_string(r.delta) + "," + (r.a ? "1" : "0") + "," + (r.n ? "1" : "0") + "," + (r.b ? "1" : "0") +
           "\n";
  }
  return out;
}

Json grid_config_to_json(const GridConfig& cfg) {
  return Json{{"grid_size", cfg.grid_size},
              {"filter_sizes", cfg.filter_sizes},
              {"hidden_sizes", cfg.hidden_sizes},
              {"feedback_rounds", cfg.feedback_rounds},
              {"distance_scale_m", cfg.distance_scale_m},
              {"lambda_feature", to_string(cfg.lambda_feature)}};
}

GridConfig grid_config_from_json(const Json& j) {
  const std::string ctx = "grid config";
  reject_unknown(j,
                 {"preset", "grid_size", "filter_sizes", "hidden_sizes", "feedback_rounds", "distance_scale_m",
                  "lambda_feature"},
                 ctx);
  GridConfig cfg = GridConfig::desk();
  if (j.contains("preset")) {
    const std::string preset = string_field(j.at("preset"), "preset", ctx);
    if (preset == "desk") {
      cfg = GridConfig::desk();
    } else if (preset == "full_scale") {
      cfg = GridConfig::full_scale();
    } else if (preset == "tiny") {
      cfg = GridConfig::tiny();
    } else {
      throw ConfigError(ctx + ": field 'preset' must be desk, full_scale or tiny");
    }
  }
  cfg.grid_size = int_or(j, "grid_size", cfg.grid_size, ctx);
  auto int_array = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    const Json& a = j.at(key);
    if (!a.is_array() || a.size() != target.size()) {
      throw ConfigError(ctx + ": field '" + key + "' must be an array of " + std::to_string(target.size()) +
                        " integers");
    }
    for (std::size_t k = 0; k < target.size(); ++k) target[k] = static_cast<int>(integer(a[k], key, ctx));
  };
  int_array("filter_sizes", cfg.filter_sizes);
  int_array("hidden_sizes", cfg.hidden_sizes);
  cfg.feedback_rounds = int_or(j, "feedback_rounds", cfg.feedback_rounds, ctx);
  cfg.distance_scale_m = number_or(j, "distance_scale_m", cfg.distance_scale_m, ctx);
  if (j.contains("lambda_feature")) {
    cfg.lambda_feature = lambda_feature_from_string(string_field(j.at("lambda_feature"), "lambda_feature", ctx));
  }
  cfg.validate();
  return cfg;
}

Json train_config_to_json(const TrainConfig& c) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return Json{{"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"steps", c.steps},
              {"seed", c.seed},
              {"n_links", c.n_links},
              {"region_size_m", c.region_size_m},
              {"d_min_m", c.d_min_m},
              {"d_max_m", c.d_max_m},
              {"channel", channel_config_to_json(c.channel)},
              {"fixed_xi", opt(c.fixed_xi)},
              {"fixed_lambda", opt(c.fixed_lambda)},
              {"checkpoint_every", c.checkpoint_every},
              {"monitor_every", c.monitor_every},
              {"monitor_samples", c.monitor_samples}};
}

TrainConfig train_config_from_json(const Json& j) {
  const std::string ctx = "train config";
  reject_unknown(j,
                 {"batch_size", "learning_rate", "adam_beta1", "adam_beta2", "adam_eps", "steps", "seed", "n_links",
                  "region_size_m", "d_min_m", "d_max_m", "channel", "fixed_xi", "fixed_lambda", "checkpoint_every",
                  "monitor_every", "monitor_samples", "threads"},
                 ctx);
  TrainConfig c;
  c.batch_size = int_or(j, "batch_size", c.batch_size, ctx);
  c.learning_rate = number_or(j, "learning_rate", c.learning_rate, ctx);
  c.adam_beta1 = number_or(j, "adam_beta1", c.adam_beta1, ctx);
  c.adam_beta2 = number_or(j, "adam_beta2", c.adam_beta2, ctx);
  c.adam_eps = number_or(j, "adam_eps", c.adam_eps, ctx);
  c.steps = int_or(j, "steps", c.steps, ctx);
  if (j.contains("seed")) c.seed = unsigned_integer(j.at("seed"), "seed", ctx);
  c.n_links = int_or(j, "n_links", c.n_links, ctx);
  c.region_size_m = number_or(j, "region_size_m", c.region_size_m, ctx);
  c.d_min_m = number_or(j, "d_min_m", c.d_min_m, ctx);
  c.d_max_m = number_or(j, "d_max_m", c.d_max_m, ctx);
  if (j.contains("channel")) c.channel = channel_config_from_json(j.at("channel"));
  auto opt = [&](const char* key, std::optional<double>& target) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    target = number(j.at(key), key, ctx);
  };
  opt("fixed_xi", c.fixed_xi);
  opt("fixed_lambda", c.fixed_lambda);
  c.checkpoint_every = int_or(j, "checkpoint_every", c.checkpoint_every, ctx);
  c.monitor_every = int_or(j, "monitor_every", c.monitor_every, ctx);
  c.monitor_samples = int_or(j, "monitor_samples", c.monitor_samples, ctx);
  c.threads = int_or(j, "threads", c.threads, ctx);
  c.validate();
  return c;
}

Json checkpoint_to_json(const Checkpoint& ckpt) {
  const NetParams& p = ckpt.state.params;
  Json tensors{{"conv1", tensor_json(p.filters[0])},
               {"conv2", tensor_json(p.filters[1])},
               {"conv3", tensor_json(p.filters[2])},
               {"fc1_weight", tensor_json(p.w1)},
               {"fc1_bias", tensor_json(p.b1)},
               {"fc2_weight", tensor_json(p.w2)},
               {"fc2_bias", tensor_json(p.b2)},
               {"fc3_weight", tensor_json(p.w3.transpose())},
               {"fc3_bias", tensor_json(Eigen::MatrixXd::Constant(1, 1, p.b3))}};
  Json loss = Json::array();
  for (double v : ckpt.state.loss_trace) loss.push_back(v);
  Json monitor_loss = Json::array();
  for (double v : ckpt.state.monitor_trace) monitor_loss.push_back(v);
  return Json{{"format", "aoisched-checkpoint"},
              {"schema_version", kSchemaVersion},
              {"net_version", p.version},
              {"step", ckpt.state.step},
              {"init_seed", ckpt.init_seed},
              {"grid_config", grid_config_to_json(ckpt.grid)},
              {"train_config", train_config_to_json(ckpt.train)},
              {"tensor_layout", "column_major"},
              {"tensors", tensors},
              {"loss_trace", loss},
              {"monitor", Json{{"steps", ckpt.state.monitor_steps}, {"loss", monitor_loss}}}};
}

Checkpoint checkpoint_from_json(const Json& j) {
  const std::string ctx = "checkpoint";
  reject_unknown(j,
                 {"format", "schema_version", "net_version", "step", "init_seed", "grid_config", "train_config",
                  "tensor_layout", "tensors", "loss_trace", "monitor"},
                 ctx);
  check_schema(j, ctx);
  if (string_field(field(j, "format", ctx), "format", ctx) != "aoisched-checkpoint") {
    throw ConfigError(ctx + ": field 'format' must be 'aoisched-checkpoint'");
  }
  const std::string version = string_field(field(j, "net_version", ctx), "net_version", ctx);
  if (version != kNetVersion) {
    throw ConfigError(ctx + ": net_version '" + version + "' is not supported (expected '" + kNetVersion + "')");
  }
  if (j.contains("tensor_layout") && j.at("tensor_layout") != "column_major") {
    throw ConfigError(ctx + ": field 'tensor_layout' must be 'column_major'");
  }
  Checkpoint c;
  c.grid = grid_config_from_json(field(j, "grid_config", ctx));
  c.train = train_config_from_json(field(j, "train_config", ctx));
  c.init_seed = j.contains("init_seed") ? unsigned_integer(j.at("init_seed"), "init_seed", ctx) : 0;
  c.state.step = static_cast<int>(integer(field(j, "step", ctx), "step", ctx));

  const Json& t = field(j, "tensors", ctx);
  reject_unknown(t,
                 {"conv1", "conv2", "conv3", "fc1_weight", "fc1_bias", "fc2_weight", "fc2_bias", "fc3_weight",
                  "fc3_bias"},
                 "checkpoint tensors");
  const int m1 = c.grid.hidden_sizes[0];
  const int m2 = c.grid.hidden_sizes[1];
  NetParams& p = c.state.params;
  const char* conv[3] = {"conv1", "conv2", "conv3"};
  for (int l = 0; l < 3; ++l) {
    p.filters[l] = tensor_from(t, conv[l], c.grid.filter_sizes[l], c.grid.filter_sizes[l]);
  }
  p.w1 = tensor_from(t, "fc1_weight", m1, kFeatureCount);
  p.b1 = tensor_from(t, "fc1_bias", m1, 1).col(0);
  p.w2 = tensor_from(t, "fc2_weight", m2, m1);
  p.b2 = tensor_from(t, "fc2_bias", m2, 1).col(0);
  p.w3 = tensor_from(t, "fc3_weight", 1, m2).row(0).transpose();
  p.b3 = tensor_from(t, "fc3_bias", 1, 1)(0, 0);
  p.version = version;

  if (j.contains("loss_trace")) {
    const Eigen::VectorXd lt = vector_from(j.at("loss_trace"), "loss_trace", ctx);
    c.state.loss_trace.assign(lt.data(), lt.data() + lt.size());
  }
  if (j.contains("monitor")) {
    const Json& m = j.at("monitor");
    reject_unknown(m, {"steps", "loss"}, "checkpoint monitor");
    const Eigen::VectorXd ml = vector_from(field(m, "loss", "checkpoint monitor"), "loss", "checkpoint monitor");
    c.state.monitor_trace.assign(ml.data(), ml.data() + ml.size());
    for (const Json& s : field(m, "steps", "checkpoint monitor")) {
      c.state.monitor_steps.push_back(static_cast<int>(integer(s, "steps", "checkpoint monitor")));
    }
  }
  return c;
}

Json manifest_to_json(const RunManifest& m) {
  Json inputs = Json::object();
  for (const auto& [k, v] : m.input_hashes) inputs[k] = v;
  Json outputs = Json::object();
  for (const auto& [k, v] : m.output_hashes) outputs[k] = v;
  Json seeds = Json::object();
  for (const auto& [k, v] : m.seeds) seeds[k] = v;
  return Json{{"schema_version", kSchemaVersion},
              {"tool", "aoisched"},
              {"tool_version", m.tool_version},
              {"command", m.command},
              {"argv", m.argv},
              {"config", m.config},
              {"threads", m.threads},
              {"seeds", seeds},
              {"inputs_fnv1a64", inputs},
              {"outputs_fnv1a64", outputs},
              {"created_utc", utc_now()},
              {"wall_seconds", m.wall_seconds}};
}

void write_manifest(const std::string& output_path, const RunManifest& m) {
  write_json_file(output_path + ".manifest.json", manifest_to_json(m));
}

}  // namespace aoisched::io
