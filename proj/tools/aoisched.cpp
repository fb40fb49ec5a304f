// Command-line front end. Every primary output gets a `<out>.manifest.json`.
// Exit codes: 0 ok, 2 configuration or usage error, 3 numeric failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aoisched/error.hpp"
#include "aoisched/gradient.hpp"
#include "aoisched/io.hpp"
#include "aoisched/layout.hpp"
#include "aoisched/meanfield.hpp"
#include "aoisched/neural.hpp"
#include "aoisched/optimize.hpp"
#include "aoisched/simulator.hpp"

#ifndef AOISCHED_VERSION
#define AOISCHED_VERSION "0.0.0"
#endif

namespace {

using namespace aoisched;
using io::Json;

struct Globals {
  int threads = 1;
  bool quiet = false;
  bool json_logs = false;
  std::vector<std::string> argv;
};

Globals g_globals;

void log(const std::string& level, const std::string& msg) {
  if (g_globals.quiet && level == "info") return;
  if (g_globals.json_logs) {
    std::cerr << Json{{"level", level}, {"msg", msg}}.dump() << "\n";
  } else {
    std::cerr << "[" << level << "] " << msg << "\n";
  }
}

class Run {
 public:
  explicit Run(std::string command) : start_(std::chrono::steady_clock::now()) {
    manifest_.tool_version = AOISCHED_VERSION;
    manifest_.command = std::move(command);
    manifest_.argv = g_globals.argv;
    manifest_.threads = g_globals.threads;
  }

  void input(const std::string& path) { manifest_.input_hashes[path] = io::file_hash(path); }
  void seed(const std::string& name, std::uint64_t value) { manifest_.seeds[name] = value; }
  Json& config() { return manifest_.config; }

  void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

  void write_text(const std::string& path, const std::string& text) {
    io::write_text_file(path, text);
    manifest_.output_hashes[path] = io::fnv1a_hex(text);
    outputs_.push_back(path);
  }

  /// Writes one manifest per output, each listing every output of the run.
  void finish() {
    manifest_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    for (const std::string& out : outputs_) io::write_manifest(out, manifest_);
    log("info", manifest_.command + ": wrote " + std::to_string(outputs_.size()) + " file(s)");
  }

 private:
  io::RunManifest manifest_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

struct ModelInputs {
  std::string layout_path;
  std::string channel_path;  // empty: reference channel
};

void add_model_options(CLI::App* sub, ModelInputs& m) {
  sub->add_option("--layout", m.layout_path, "layout JSON")->required()->check(CLI::ExistingFile);
  sub->add_option("--channel", m.channel_path, "channel config JSON (default: reference channel)")
      ->check(CLI::ExistingFile);
}

struct Loaded {
  DeviceLayout layout;
  ChannelConfig channel_cfg;
  ChannelParams channel;
};

Loaded load_model(const ModelInputs& m, Run& run) {
  Loaded l;
  l.layout = io::layout_from_json(io::read_json_file(m.layout_path));
  run.input(m.layout_path);
  l.channel_cfg = ChannelConfig::reference();
  if (!m.channel_path.empty()) {
    l.channel_cfg = io::channel_config_from_json(io::read_json_file(m.channel_path));
    run.input(m.channel_path);
  }
  l.channel = derive_channel(l.layout, l.channel_cfg);
  run.config()["layout"] = m.layout_path;
  run.config()["channel"] = io::channel_config_to_json(l.channel_cfg);
  return l;
}

struct PolicyInput {
  std::string path;
  std::optional<double> p_all;
};

void add_policy_options(CLI::App* sub, PolicyInput& p) {
  auto* file = sub->add_option("--policy", p.path, "policy JSON")->check(CLI::ExistingFile);
  auto* all = sub->add_option("--p-all", p.p_all, "same activation probability on every link");
  file->excludes(all);
  all->excludes(file);
}

Policy load_policy(const PolicyInput& in, std::size_t n, Run& run, double fallback) {
  Policy pol;
  if (!in.path.empty()) {
    pol = io::policy_from_json(io::read_json_file(in.path));
    run.input(in.path);
  } else {
    pol = Policy::uniform(static_cast<Eigen::Index>(n), in.p_all.value_or(fallback));
  }
  if (static_cast<std::size_t>(pol.n()) != n) throw ConfigError("policy length differs from the layout's link count");
  run.config()["p"] = io::policy_to_json(pol)["p"];
  return pol;
}

// gen ------------------------------------------------------------------------

struct GenOpts {
  std::uint64_t seed = 1;
  int n = 10;
  double region = 500.0;
  double dmin = 2.0;
  double dmax = 65.0;
  std::string out;
};

void run_gen(const GenOpts& o) {
  Run run("gen");
  run.seed("layout", o.seed);
  run.config() = Json{{"seed", o.seed}, {"n", o.n}, {"region_m", o.region}, {"dmin_m", o.dmin}, {"dmax_m", o.dmax}};
  const DeviceLayout layout = generate_layout(o.seed, o.n, o.region, o.dmin, o.dmax);
  run.write_json(o.out, io::layout_to_json(layout));
  run.finish();
}

// eval -----------------------------------------------------------------------

struct EvalOpts {
  ModelInputs model;
  PolicyInput policy;
  double xi = 1.0;
  double lambda = 1.0;
  std::string out;
};

void run_eval(const EvalOpts& o) {
  Run run("eval");
  const Loaded m = load_model(o.model, run);
  const Policy pol = load_policy(o.policy, m.layout.n_links(), run, 1.0);
  run.config()["xi"] = o.xi;
  run.config()["lambda"] = o.lambda;
  const MeanFieldState s = evaluate(m.channel, pol, o.xi, o.lambda);
  log("info", "delta_avg " + io::format_double(s.delta_avg) + ", thr_avg " + io::format_double(s.thr_avg));
  run.write_json(o.out, io::eval_report_to_json(s));
  run.finish();
}

// simulate ---------------------------------------------------------------------

struct SimOpts {
  ModelInputs model;
  PolicyInput policy;
  double xi = 1.0;
  std::int64_t slots = 100000;
  std::optional<std::int64_t> warmup;
  std::uint64_t seed = 1;
  int reps = 1;
  std::string trace;
  std::string out;
};

void run_simulate(const SimOpts& o) {
  Run run("simulate");
  const Loaded m = load_model(o.model, run);
  const Policy pol = load_policy(o.policy, m.layout.n_links(), run, 1.0);
  SimConfig cfg;
  cfg.horizon_slots = o.slots;
  cfg.warmup_slots = o.warmup.value_or(o.slots / 10);
  cfg.seed = o.seed;
  cfg.record_traces = !o.trace.empty();
  if (cfg.record_traces && o.reps != 1) throw ConfigError("--trace needs --reps 1");
  if (o.reps < 1) throw ConfigError("--reps must be >= 1");
  run.seed("simulation", o.seed);
  run.config()["xi"] = o.xi;
  run.config()["slots"] = cfg.horizon_slots;
  run.config()["warmup"] = cfg.warmup_slots;
  run.config()["reps"] = o.reps;
  const ReplicatedStats r = simulate_replications(m.channel, pol, o.xi, cfg, o.reps, g_globals.threads);
  log("info", "delta_avg " + io::format_double(r.delta_avg) + ", thr_avg " + io::format_double(r.thr_avg));
  run.write_json(o.out, io::sim_stats_to_json(r, cfg, o.xi));
  if (cfg.record_traces) run.write_text(o.trace, io::trace_csv(r.runs.front().trace));
  run.finish();
}

// optimize ---------------------------------------------------------------------

struct OptOpts {
  ModelInputs model;
  std::string method = "itermin";
  double xi = 1.0;
  double lambda = 1.0;
  std::string init;
  int iters = 20;
  int steps = 500;
  double lr0 = 0.1;
  std::string out;
};

void run_optimize(const OptOpts& o) {
  Run run("optimize");
  const Loaded m = load_model(o.model, run);
  std::optional<Policy> init;
  if (!o.init.empty()) {
    init = io::policy_from_json(io::read_json_file(o.init));
    run.input(o.init);
  }
  const Method method = method_from_string(o.method);
  run.config()["method"] = o.method;
  run.config()["xi"] = o.xi;
  run.config()["lambda"] = o.lambda;
  OptResult r;
  switch (method) {
    case Method::kIterMin: {
      BlockCoordinateOptions bo;
      bo.n_iters = o.iters;
      run.config()["iters"] = o.iters;
      r = block_coordinate_min(m.channel, o.lambda, o.xi, bo, init);
      break;
    }
    case Method::kPgd: {
      PgdOptions po;
      po.steps = o.steps;
      po.lr0 = o.lr0;
      run.config()["steps"] = o.steps;
      run.config()["lr0"] = o.lr0;
      r = projected_gradient(m.channel, o.lambda, o.xi, po, init);
      break;
    }
    case Method::kAloha:
      r = optimal_aloha(m.channel, o.lambda, o.xi);
      break;
  }
  log("info", o.method + ": objective " + io::format_double(r.objective) + " after " +
                  std::to_string(r.iterations) + " iteration(s)");
  run.write_json(o.out, io::opt_result_to_json(r));
  run.finish();
}

// sweep-pareto -----------------------------------------------------------------

struct SweepOpts {
  ModelInputs model;
  std::string method = "itermin";
  double xi = 1.0;
  std::string grid = "log5";
  int points = 11;
  bool no_warm_start = false;
  std::string out;
};

void run_sweep(const SweepOpts& o) {
  Run run("sweep-pareto");
  const Loaded m = load_model(o.model, run);
  const Method method = method_from_string(o.method);
  const std::vector<double> lambdas = lambda_grid(lambda_grid_from_string(o.grid), o.points);
  SweepOptions so;
  so.warm_start = !o.no_warm_start;
  so.threads = g_globals.threads;
  run.config()["method"] = o.method;
  run.config()["xi"] = o.xi;
  run.config()["lambda_grid"] = o.grid;
  run.config()["points"] = o.points;
  run.config()["warm_start"] = so.warm_start;
  const std::vector<ParetoPoint> pts = pareto_sweep(m.channel, o.xi, lambdas, method, so);
  const auto kept = pareto_filter(pts);
  if (kept.size() != pts.size()) {
    log("warn", std::to_string(pts.size() - kept.size()) + " sweep point(s) are dominated by other points");
  }
  run.write_text(o.out, io::pareto_csv(pts));
  run.finish();
}

// grad-check -------------------------------------------------------------------

struct GradOpts {
  ModelInputs model;
  PolicyInput policy;
  double xi = 1.0;
  double lambda = 1.0;
  double step = 1e-6;
  std::string out;
};

void run_grad_check(const GradOpts& o) {
  Run run("grad-check");
  const Loaded m = load_model(o.model, run);
  const Policy pol = load_policy(o.policy, m.layout.n_links(), run, 0.5);
  run.config()["xi"] = o.xi;
  run.config()["lambda"] = o.lambda;
  run.config()["step"] = o.step;
  const FdCheckReport r = finite_difference_check(m.channel, pol, o.xi, o.lambda, o.step);
  log("info", "max relative error " + io::format_double(r.max_rel_err) + " at link " +
                  std::to_string(r.argmax_index));
  run.write_json(o.out, io::grad_check_to_json(r));
  run.finish();
}

// train-nn ---------------------------------------------------------------------

struct TrainOpts {
  std::string config;
  std::string out;
};

void run_train(const TrainOpts& o) {
  Run run("train-nn");
  const Json cfg_json = io::read_json_file(o.config);
  run.input(o.config);
  const std::string ctx = "train-nn config";
  for (auto it = cfg_json.begin(); it != cfg_json.end(); ++it) {
    if (it.key() != "schema_version" && it.key() != "grid" && it.key() != "train" && it.key() != "init_seed") {
      throw ConfigError(ctx + ": unknown field '" + it.key() + "'");
    }
  }
  io::Checkpoint ckpt;
  ckpt.grid = io::grid_config_from_json(cfg_json.value("grid", Json::object()));
  ckpt.train = io::train_config_from_json(cfg_json.value("train", Json::object()));
  ckpt.train.threads = g_globals.threads;
  if (cfg_json.contains("init_seed")) {
    if (!cfg_json["init_seed"].is_number_unsigned()) throw ConfigError(ctx + ": field 'init_seed' must be a non-negative integer");
    ckpt.init_seed = cfg_json["init_seed"].get<std::uint64_t>();
  } else {
    ckpt.init_seed = ckpt.train.seed;
  }
  run.seed("train", ckpt.train.seed);
  run.seed("init", ckpt.init_seed);
  run.config() = Json{{"grid", io::grid_config_to_json(ckpt.grid)},
                      {"train", io::train_config_to_json(ckpt.train)},
                      {"init_seed", ckpt.init_seed}};

  std::filesystem::create_directories(o.out);
  const std::filesystem::path dir(o.out);
  TrainHooks hooks;
  hooks.on_warning = [](const std::string& w) { log("warn", w); };
  hooks.on_step = [](const TrainState& s) {
    if (s.step % 100 == 0) log("info", "step " + std::to_string(s.step) + " loss " + io::format_double(s.loss_trace.back()));
  };
  const int total = ckpt.train.steps;
  hooks.on_checkpoint = [&](const TrainState& s) {
    io::Checkpoint c = ckpt;
    c.state = s;
    const std::string name = s.step == total ? "checkpoint.json" : "checkpoint_step_" + std::to_string(s.step) + ".json";
    run.write_json((dir / name).string(), io::checkpoint_to_json(c));
  };
  const TrainState final_state = train(NetParams::init(ckpt.grid, ckpt.init_seed), ckpt.train, ckpt.grid, hooks);

  std::string loss_csv = "step,loss\n";
  for (std::size_t k = 0; k < final_state.loss_trace.size(); ++k) {
    loss_csv += std::to_string(k + 1) + "," + io::format_double(final_state.loss_trace[k]) + "\n";
  }
  run.write_text((dir / "loss_trace.csv").string(), loss_csv);
  std::string mon_csv = "step,monitor_loss\n";
  for (std::size_t k = 0; k < final_state.monitor_trace.size(); ++k) {
    mon_csv += std::to_string(final_state.monitor_steps[k]) + "," + io::format_double(final_state.monitor_trace[k]) + "\n";
  }
  run.write_text((dir / "monitor_loss.csv").string(), mon_csv);
  run.finish();
}

// infer-nn ---------------------------------------------------------------------

struct InferOpts {
  std::string ckpt;
  std::string layout;
  double xi = 1.0;
  double lambda = 1.0;
  std::string out;
};

void run_infer(const InferOpts& o) {
  Run run("infer-nn");
  const io::Checkpoint ckpt = io::checkpoint_from_json(io::read_json_file(o.ckpt));
  run.input(o.ckpt);
  const DeviceLayout layout = io::layout_from_json(io::read_json_file(o.layout));
  run.input(o.layout);
  run.config() = Json{{"xi", o.xi}, {"lambda", o.lambda}, {"grid", io::grid_config_to_json(ckpt.grid)}};
  check_probability(o.xi, "xi");
  check_probability(o.lambda, "lambda", true);
  const InferResult r = infer(layout, Conditions{o.xi, o.lambda}, ckpt.state.params, ckpt.grid);
  Json j = io::policy_to_json(r.policy);
  Json changes = Json::array();
  for (double c : r.round_changes) changes.push_back(c);
  j["inference"] = Json{{"xi", o.xi},
                        {"lambda", o.lambda},
                        {"feedback_rounds", ckpt.grid.feedback_rounds},
                        {"last_round_change", r.last_change},
                        {"round_changes", changes},
                        {"checkpoint_step", ckpt.state.step}};
  run.write_json(o.out, j);
  run.finish();
}

}  // namespace

int main(int argc, char** argv) {
  for (int k = 0; k < argc; ++k) g_globals.argv.emplace_back(argv[k]);

  CLI::App app{"AoI/throughput scheduling for random-access D2D networks"};
  app.set_version_flag("--version", AOISCHED_VERSION);
  app.add_option("--threads", g_globals.threads, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g_globals.quiet, "suppress info logs");
  app.add_flag("--json-logs", g_globals.json_logs, "log as JSON lines on stderr");
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GenOpts gen;
  auto* s_gen = app.add_subcommand("gen", "generate a random layout");
  s_gen->add_option("--seed", gen.seed, "layout seed")->required();
  s_gen->add_option("--n", gen.n, "number of links")->required();
  s_gen->add_option("--region", gen.region, "side of the square region in meters");
  s_gen->add_option("--dmin", gen.dmin, "minimum link length in meters");
  s_gen->add_option("--dmax", gen.dmax, "maximum link length in meters");
  s_gen->add_option("--out", gen.out, "output layout JSON")->required();
  s_gen->callback([&] { run_gen(gen); });

  EvalOpts ev;
  auto* s_eval = app.add_subcommand("eval", "mean-field evaluation of a policy");
  add_model_options(s_eval, ev.model);
  add_policy_options(s_eval, ev.policy);
  s_eval->add_option("--xi", ev.xi, "packet arrival probability")->required();
  s_eval->add_option("--lambda", ev.lambda, "AoI weight in the objective");
  s_eval->add_option("--out", ev.out, "output report JSON")->required();
  s_eval->callback([&] { run_eval(ev); });

  SimOpts sim;
  auto* s_sim = app.add_subcommand("simulate", "slotted Monte-Carlo simulation");
  add_model_options(s_sim, sim.model);
  add_policy_options(s_sim, sim.policy);
  s_sim->add_option("--xi", sim.xi, "packet arrival probability")->required();
  s_sim->add_option("--slots", sim.slots, "horizon in slots");
  s_sim->add_option("--warmup", sim.warmup, "discarded slots (default slots/10)");
  s_sim->add_option("--seed", sim.seed, "simulation seed");
  s_sim->add_option("--reps", sim.reps, "independent replications");
  s_sim->add_option("--trace", sim.trace, "per-slot trace CSV (single replication)");
  s_sim->add_option("--out", sim.out, "output statistics JSON")->required();
  s_sim->callback([&] { run_simulate(sim); });

  OptOpts opt;
  auto* s_opt = app.add_subcommand("optimize", "optimize a policy");
  add_model_options(s_opt, opt.model);
  s_opt->add_option("--method", opt.method, "itermin, pgd or aloha");
  s_opt->add_option("--xi", opt.xi, "packet arrival probability");
  s_opt->add_option("--lambda", opt.lambda, "AoI weight in the objective");
  s_opt->add_option("--init", opt.init, "starting policy JSON")->check(CLI::ExistingFile);
  s_opt->add_option("--iters", opt.iters, "itermin sweeps");
  s_opt->add_option("--steps", opt.steps, "pgd steps");
  s_opt->add_option("--lr0", opt.lr0, "pgd initial step size");
  s_opt->add_option("--out", opt.out, "output result JSON")->required();
  s_opt->callback([&] { run_optimize(opt); });

  SweepOpts sw;
  auto* s_sw = app.add_subcommand("sweep-pareto", "objective-weight sweep of the AoI/throughput trade-off");
  add_model_options(s_sw, sw.model);
  s_sw->add_option("--method", sw.method, "itermin, pgd or aloha");
  s_sw->add_option("--xi", sw.xi, "packet arrival probability");
  s_sw->add_option("--lambda-grid", sw.grid, "uniform or log5");
  s_sw->add_option("--points", sw.points, "grid points");
  s_sw->add_flag("--no-warm-start", sw.no_warm_start, "solve every point from all ones");
  s_sw->add_option("--out", sw.out, "output CSV")->required();
  s_sw->callback([&] { run_sweep(sw); });

  GradOpts gc;
  auto* s_gc = app.add_subcommand("grad-check", "analytic versus finite-difference policy gradient");
  add_model_options(s_gc, gc.model);
  add_policy_options(s_gc, gc.policy);
  s_gc->add_option("--xi", gc.xi, "packet arrival probability");
  s_gc->add_option("--lambda", gc.lambda, "AoI weight in the objective");
  s_gc->add_option("--step", gc.step, "central-difference step");
  s_gc->add_option("--out", gc.out, "output report JSON")->required();
  s_gc->callback([&] { run_grad_check(gc); });

  TrainOpts tr;
  auto* s_tr = app.add_subcommand("train-nn", "train the location-based scheduler");
  s_tr->add_option("--config", tr.config, "training config JSON")->required()->check(CLI::ExistingFile);
  s_tr->add_option("--out", tr.out, "checkpoint directory")->required();
  s_tr->callback([&] { run_train(tr); });

  InferOpts inf;
  auto* s_inf = app.add_subcommand("infer-nn", "policy from a trained checkpoint");
  s_inf->add_option("--ckpt", inf.ckpt, "checkpoint JSON")->required()->check(CLI::ExistingFile);
  s_inf->add_option("--layout", inf.layout, "layout JSON")->required()->check(CLI::ExistingFile);
  s_inf->add_option("--xi", inf.xi, "packet arrival probability");
  s_inf->add_option("--lambda", inf.lambda, "AoI weight");
  s_inf->add_option("--out", inf.out, "output policy JSON")->required();
  s_inf->callback([&] { run_infer(inf); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    log("error", e.what());
    return 2;
  } catch (const NumericError& e) {
    log("error", e.what());
    return 3;
  } catch (const std::exception& e) {
    log("error", e.what());
    return 3;
  }
  return 0;
}
