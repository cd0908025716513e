#include "scoreflow/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "scoreflow/config.hpp"
#include "scoreflow/diagnostics.hpp"
#include "scoreflow/ftle.hpp"
#include "scoreflow/generators.hpp"
#include "scoreflow/gmm.hpp"
#include "scoreflow/pm_filter.hpp"
#include "scoreflow/sampler.hpp"

namespace scoreflow {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct GlobalFlags {
  std::string config_path;
  std::string out_dir;
  long seed = -1;  // -1: keep config value
  int threads = 0; // 0: config / env fallback
};

int env_threads() {
  const char* env = std::getenv("SCOREFLOW_THREADS");
  if (!env) return 0;
  const int n = std::atoi(env);
  return n > 0 ? n : 0;
}

RunConfig load_config(const GlobalFlags& flags) {
  json j;
  if (!flags.config_path.empty()) {
    std::ifstream is(flags.config_path);
    if (!is) throw IoError(IoError::Code::Os, "cannot open config '" + flags.config_path + "'");
    try {
      is >> j;
    } catch (const json::parse_error& e) {
      throw ConfigError("config '" + flags.config_path + "' is not valid JSON: " + e.what());
    }
  } else {
    j = json::object();
  }
  if (flags.seed >= 0) j["seed"] = flags.seed;
  if (!flags.out_dir.empty()) j["out"] = flags.out_dir;
  if (flags.threads > 0) {
    j["threads"] = flags.threads;
  } else if (!j.contains("threads") && env_threads() > 0) {
    j["threads"] = env_threads();
  }
  return parse_run_config(j);
}

fs::path require_out_dir(const RunConfig& cfg) {
  if (cfg.out_dir.empty()) throw ConfigError("an output directory is required (--out)", "out");
  fs::create_directories(cfg.out_dir);
  return cfg.out_dir;
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const RunConfig& cfg, const std::vector<std::string>& outputs,
                    double wall_seconds, const json& extra = json::object()) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["seed"] = cfg.seed;
  m["config"] = cfg.raw;
  m["outputs"] = outputs;
  m["extra"] = extra;
  m["wall_time_s"] = wall_seconds;  // exempt from byte-reproducibility
  std::ofstream os(out_dir / "manifest.json");
  os << m.dump(2) << "\n";
}

void write_samples_csv(const std::vector<double>& samples, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError(IoError::Code::Os, "cannot open '" + path.string() + "'");
  os << "value\n";
  os.precision(17);
  for (double v : samples) os << v << "\n";
}

std::vector<double> read_samples_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError(IoError::Code::Os, "cannot open '" + path.string() + "'");
  std::vector<double> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line == "value") continue;
    out.push_back(std::stod(line));
  }
  if (out.empty()) throw IoError(IoError::Code::CorruptFrame, "no samples in '" + path.string() + "'");
  return out;
}

std::vector<double> json_vector(const json& j, const std::string& key) {
  std::vector<double> out;
  if (!j.contains(key) || !j[key].is_array()) {
    throw ConfigError("key 'gen." + key + "' must be an array", "gen." + key);
  }
  for (const auto& v : j[key]) out.push_back(v.get<double>());
  return out;
}

// ---- gen ----

int cmd_gen(const GlobalFlags& flags) {
  const auto start = Clock::now();
  RunConfig cfg = load_config(flags);
  if (cfg.gen.is_null()) throw ConfigError("gen command needs a 'gen' config section", "gen");
  const fs::path out = require_out_dir(cfg);
  const std::string kind = cfg.gen["kind"].get<std::string>();
  std::vector<std::string> outputs;

  if (kind == "gmm") {
    const auto samples = make_gaussian_mixture_dataset(
        json_vector(cfg.gen, "weights"), json_vector(cfg.gen, "means"),
        json_vector(cfg.gen, "stds"), cfg.gen.value("n_samples", 10000), cfg.seed);
    write_samples_csv(samples, out / "samples.csv");
    outputs.push_back("samples.csv");
  } else if (kind == "blob") {
    Grid2 grid{cfg.gen.value("nx", 32), cfg.gen.value("ny", 16), cfg.gen.value("dx", 1.0),
               cfg.gen.value("dy", 1.0), Boundary::Periodic};
    const Sequence seq = make_advected_blob_sequence(
        grid, cfg.gen.value("cx", 1.0), cfg.gen.value("cy", 0.0),
        cfg.gen.value("n_steps", 20), cfg.seed, cfg.gen.value("noise_amp", 0.01));
    write_sequence(seq, (out / "sequence").string());
    outputs.push_back("sequence");
  } else {  // spectral
    Grid2 grid{cfg.gen.value("nx", 128), cfg.gen.value("ny", 128), cfg.gen.value("dx", 1.0),
               cfg.gen.value("dy", 1.0), Boundary::Periodic};
    const Frame field = make_spectral_field(grid, cfg.gen.value("slope", -5.0 / 3.0),
                                            cfg.gen.value("k_min", 4),
                                            cfg.gen.value("k_max", 32), cfg.seed);
    write_frame(field, (out / "field.sfld").string());
    outputs.push_back("field.sfld");
  }
  write_manifest(out, "gen", cfg, outputs,
                 std::chrono::duration<double>(Clock::now() - start).count());
  return kExitOk;
}

// ---- train ----

int cmd_train(const GlobalFlags& flags) {
  const auto start = Clock::now();
  RunConfig cfg = load_config(flags);
  if (!cfg.sde) throw ConfigError("train command needs an 'sde' config section", "sde");
  if (cfg.dataset.empty()) throw ConfigError("train command needs 'dataset'", "dataset");
  const fs::path out = require_out_dir(cfg);

  Checkpoint ckpt;
  ckpt.spec = *cfg.sde;
  TrainHistory hist;

  if (fs::is_directory(cfg.dataset)) {
    const Sequence seq = read_sequence(cfg.dataset);
    const Frame& f0 = seq.frames.front();
    const int width = f0.width();
    ckpt.net = make_score_net(width, width, cfg.net_hidden, cfg.train.seed, cfg.net_t_emb_dim);
    hist = train_sequence(ckpt.net, ckpt.spec, seq, cfg.train);
    FrameLayout layout;
    layout.grid = f0.grid;
    for (const auto& c : f0.channels) layout.channel_names.push_back(c.name);
    for (const auto& name : seq.velocity_channels()) {
      const int idx = f0.channel_index(name);
      if (idx >= 0) layout.velocity_channels.push_back(idx);
    }
    ckpt.layout = layout;
  } else {
    const auto values = read_samples_csv(cfg.dataset);
    std::vector<std::vector<double>> samples;
    samples.reserve(values.size());
    for (double v : values) samples.push_back({v});
    ckpt.net = make_score_net(1, 0, cfg.net_hidden, cfg.train.seed, cfg.net_t_emb_dim);
    hist = train_samples(ckpt.net, ckpt.spec, samples, cfg.train);
  }

  save_checkpoint(ckpt, (out / "model.snet").string());
  write_loss_history_csv(hist, (out / "loss_history.csv").string());
  write_manifest(out, "train", cfg, {"model.snet", "loss_history.csv"},
                 std::chrono::duration<double>(Clock::now() - start).count());
  return kExitOk;
}

// ---- sample ----

int cmd_sample(const GlobalFlags& flags, const std::string& model_path) {
  const auto start = Clock::now();
  RunConfig cfg = load_config(flags);
  const fs::path out = require_out_dir(cfg);
  std::string path = model_path;
  if (path.empty() && cfg.sample.contains("model")) path = cfg.sample["model"];
  if (path.empty()) throw ConfigError("sample command needs --model", "sample.model");
  const Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.net.cond_dim != 0) {
    throw ConfigError("sample draws unconditionally; use rollout for conditional models");
  }
  const int n_samples = cfg.sample.value("n_samples", 10000);

  const ScoreNet& net = ckpt.net;
  ScoreFn score = [&](std::span<const double> x, double t, std::span<double> s_out) {
    thread_local NetWorkspace ws;
    forward_ws(net, x, {}, t, ws, s_out);
  };
  const auto states =
      sample_many(score, ckpt.spec, net.data_dim, cfg.sampler, n_samples, cfg.threads);
  std::vector<double> flat;
  flat.reserve(states.size());
  for (const auto& s : states) flat.push_back(s[0]);
  write_samples_csv(flat, out / "samples.csv");
  write_manifest(out, "sample", cfg, {"samples.csv"},
                 std::chrono::duration<double>(Clock::now() - start).count());
  return kExitOk;
}

// ---- rollout ----

Frame load_initial_frame(const std::string& path) {
  if (fs::is_directory(path)) {
    const Sequence seq = read_sequence(path);
    return seq.frames.front();
  }
  return read_frame(path);
}

int cmd_rollout(const GlobalFlags& flags, const std::string& model_path,
                const std::string& initial_path, int steps_flag) {
  const auto start = Clock::now();
  RunConfig cfg = load_config(flags);
  const fs::path out = require_out_dir(cfg);

  std::string model = model_path;
  if (model.empty() && cfg.rollout.contains("model")) model = cfg.rollout["model"];
  if (model.empty()) throw ConfigError("rollout command needs --model", "rollout.model");
  std::string initial = initial_path;
  if (initial.empty() && cfg.rollout.contains("initial")) initial = cfg.rollout["initial"];
  if (initial.empty()) throw ConfigError("rollout command needs --initial", "rollout.initial");
  const int steps = steps_flag > 0 ? steps_flag : cfg.rollout.value("steps", 20);

  const Checkpoint ckpt = load_checkpoint(model);
  if (!ckpt.layout) throw ConfigError("model has no frame layout; train it on a sequence");
  Frame init = load_initial_frame(initial);
  init.grid = ckpt.layout->grid;

  std::vector<StepHook> hooks;
  std::vector<std::vector<double>> lgd_histories;
  if (cfg.physics_enabled) {
    hooks.push_back([&](int, Frame& pred, const Frame& prev) {
      PhysicsCorrResult res = physics_correct(pred, prev, cfg.physics);
      pred = std::move(res.corrected);
      lgd_histories.push_back(std::move(res.lgd_history));
    });
  }
  if (cfg.filter_enabled) {
    hooks.push_back([&](int, Frame& pred, const Frame&) {
      pred = pm_filter(pred, cfg.filter_channels, cfg.filter);
    });
  }

  const RolloutResult result = rollout(ckpt.net, ckpt.spec, init, steps, cfg.sampler, hooks);
  write_sequence(result.sequence, (out / "rollout").string());

  json extra;
  extra["step_seconds"] = result.step_seconds;
  extra["aborted"] = result.aborted;
  if (result.aborted) extra["abort_step"] = result.abort_step;
  if (!lgd_histories.empty()) extra["lgd_history"] = lgd_histories;
  write_manifest(out, "rollout", cfg, {"rollout"},
                 std::chrono::duration<double>(Clock::now() - start).count(), extra);
  return result.aborted ? kExitNumeric : kExitOk;
}

// ---- metrics / spectrum ----

int cmd_metrics(const GlobalFlags& flags, const std::string& pred_dir,
                const std::string& gt_dir) {
  const auto start = Clock::now();
  RunConfig cfg = load_config(flags);
  const fs::path out = require_out_dir(cfg);
  const Sequence pred = read_sequence(pred_dir);
  const Sequence gt = read_sequence(gt_dir);
  MetricsReport report = sequence_metrics(pred, gt);
  write_metrics_report(report, (out / "metrics.txt").string());

  // Spectrum comparison on the same run when grids are periodic.
  json extra;
  if (pred.frames.front().grid.boundary == Boundary::Periodic) {
    const SpectrumResult sp = energy_spectrum(pred);
    const SpectrumResult sg = energy_spectrum(gt);
    extra["log_mse"] = log_mse(sg, sp);
  }
  write_manifest(out, "metrics", cfg, {"metrics.txt"},
                 std::chrono::duration<double>(Clock::now() - start).count(), extra);
  return kExitOk;
}

int cmd_spectrum(const GlobalFlags& flags, const std::string& seq_dir) {
  const auto start = Clock::now();
  RunConfig cfg = load_config(flags);
  const fs::path out = require_out_dir(cfg);
  fs::path input(seq_dir);
  SpectrumResult spec;
  if (fs::is_directory(input)) {
    spec = energy_spectrum(read_sequence(seq_dir));
  } else {
    const Frame frame = read_frame(seq_dir);
    std::vector<std::string> vel;
    for (const char* cand : {"u", "v"}) {
      if (frame.channel_index(cand) >= 0) vel.emplace_back(cand);
    }
    spec = energy_spectrum_frame(frame, vel);
  }
  write_spectrum_csv(spec, (out / "spectrum.csv").string());
  write_manifest(out, "spectrum", cfg, {"spectrum.csv"},
                 std::chrono::duration<double>(Clock::now() - start).count());
  return kExitOk;
}

// ---- filter ----

int cmd_filter(const GlobalFlags& flags, const std::string& in_path,
               const std::string& out_path, const PmConfig& pm,
               const std::string& channels_csv) {
  const auto start = Clock::now();
  RunConfig cfg = load_config(flags);
  std::vector<std::string> channels;
  std::stringstream ss(channels_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) channels.push_back(item);
  }
  if (channels.empty()) channels = cfg.filter_channels;
  const Frame frame = read_frame(in_path);
  const Frame filtered = pm_filter(frame, channels, pm);
  write_frame(filtered, out_path);
  if (!cfg.out_dir.empty()) {
    write_manifest(require_out_dir(cfg), "filter", cfg, {out_path},
                   std::chrono::duration<double>(Clock::now() - start).count());
  }
  return kExitOk;
}

// ---- ftle ----

int cmd_ftle(const GlobalFlags& flags, const std::string& flow_name, double tau0,
             double dtau, int grid_nx, int grid_ny, const std::string& out_csv,
             double h_fd, int rk_steps, std::vector<double> domain) {
  const auto start = Clock::now();
  RunConfig cfg = load_config(flags);
  FlowField flow = fs::is_directory(flow_name)
                       ? FlowField::from_sequence(read_sequence(flow_name))
                       : FlowField::builtin(flow_name);
  SeedGrid grid;
  grid.nx = grid_nx;
  grid.ny = grid_ny;
  if (domain.size() == 4) {
    grid.x0 = domain[0];
    grid.x1 = domain[1];
    grid.y0 = domain[2];
    grid.y1 = domain[3];
  } else if (fs::is_directory(flow_name)) {
    const Sequence seq = read_sequence(flow_name);
    const Grid2& g = seq.frames.front().grid;
    grid.x0 = 0.0;
    grid.x1 = (g.nx - 1) * g.dx;
    grid.y0 = 0.0;
    grid.y1 = (g.ny - 1) * g.dy;
  } else if (flow_name == "double-gyre") {
    grid.x0 = 0.0;
    grid.x1 = 2.0;
    grid.y0 = 0.0;
    grid.y1 = 1.0;
  } else {
    grid.x0 = -1.0;
    grid.x1 = 1.0;
    grid.y0 = -1.0;
    grid.y1 = 1.0;
  }
  const FtleField field = ftle_field(flow, grid, tau0, dtau, h_fd, rk_steps, cfg.threads);
  write_ftle_csv(field, out_csv);
  const GlobalLyapunov gl = global_lyapunov_time(field);
  if (gl.chaotic) {
    std::cout << "global_lyapunov_time=" << gl.tau_l << "\n";
  } else {
    std::cout << "no chaotic stretching\n";
  }
  if (!cfg.out_dir.empty()) {
    json extra;
    extra["global_lyapunov_time"] = gl.chaotic ? json(gl.tau_l) : json("none");
    write_manifest(require_out_dir(cfg), "ftle", cfg, {out_csv},
                   std::chrono::duration<double>(Clock::now() - start).count(), extra);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"score-based diffusion surrogate toolkit"};
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "JSON run configuration");
  app.add_option("--seed", flags.seed, "master seed (overrides config)");
  app.add_option("--out", flags.out_dir, "output directory (overrides config)");
  app.add_option("--threads", flags.threads, "worker cap (or SCOREFLOW_THREADS)");

  auto* gen = app.add_subcommand("gen", "generate synthetic datasets");
  auto* train = app.add_subcommand("train", "train a score model");
  auto* sample = app.add_subcommand("sample", "draw unconditional samples");
  std::string model_path, initial_path;
  sample->add_option("--model", model_path, "checkpoint path");
  auto* rollout_cmd = app.add_subcommand("rollout", "autoregressive frame prediction");
  std::string ro_model, ro_initial;
  int ro_steps = 0;
  rollout_cmd->add_option("--model", ro_model, "checkpoint path");
  rollout_cmd->add_option("--initial", ro_initial, "initial frame or sequence dir");
  rollout_cmd->add_option("--steps", ro_steps, "number of predicted steps");

  auto* metrics = app.add_subcommand("metrics", "compare two sequences");
  std::string pred_dir, gt_dir;
  metrics->add_option("pred", pred_dir, "predicted sequence dir")->required();
  metrics->add_option("gt", gt_dir, "ground-truth sequence dir")->required();

  auto* spectrum = app.add_subcommand("spectrum", "energy spectrum of a sequence");
  std::string seq_dir;
  spectrum->add_option("input", seq_dir, "sequence dir or frame file")->required();

  auto* filter = app.add_subcommand("filter", "anisotropic diffusion filtering");
  std::string f_in, f_out, f_channels = "u,v";
  PmConfig pm;
  filter->add_option("--in", f_in, "input frame")->required();
  filter->add_option("--output", f_out, "output frame")->required();
  filter->add_option("--gamma", pm.gamma, "edge threshold");
  filter->add_option("--eta", pm.eta, "step size");
  filter->add_option("--epsilon", pm.epsilon, "gradient-norm floor");
  filter->add_option("--iters", pm.n_iters, "iterations")->required();
  filter->add_option("--channels", f_channels, "comma-separated channels");

  auto* ftle = app.add_subcommand("ftle", "finite-time Lyapunov exponent field");
  std::string flow_name = "double-gyre", ftle_out = "ftle.csv";
  double tau0 = 0.0, dtau = 1.0, h_fd = 1e-4;
  int rk_steps = 50;
  std::vector<int> seed_grid = {32, 32};
  std::vector<double> domain;
  ftle->add_option("--flow", flow_name, "builtin name or sequence dir");
  ftle->add_option("--tau0", tau0, "start time");
  ftle->add_option("--dtau", dtau, "integration lapse (either sign)");
  ftle->add_option("--grid", seed_grid, "seed grid NX NY")->expected(2);
  ftle->add_option("--out", ftle_out, "output CSV");
  ftle->add_option("--hfd", h_fd, "finite-difference seed offset");
  ftle->add_option("--steps", rk_steps, "RK4 substeps");
  ftle->add_option("--domain", domain, "x0 x1 y0 y1")->expected(4);

  for (auto* sub : {gen, train, sample, rollout_cmd, metrics, spectrum, filter, ftle}) {
    sub->fallthrough();
  }

  std::vector<std::string> argv_vec = args;
  try {
    std::vector<const char*> argv;
    argv.push_back("scoreflow");
    for (const auto& a : argv_vec) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());

    if (gen->parsed()) return cmd_gen(flags);
    if (train->parsed()) return cmd_train(flags);
    if (sample->parsed()) return cmd_sample(flags, model_path);
    if (rollout_cmd->parsed()) return cmd_rollout(flags, ro_model, ro_initial, ro_steps);
    if (metrics->parsed()) return cmd_metrics(flags, pred_dir, gt_dir);
    if (spectrum->parsed()) return cmd_spectrum(flags, seq_dir);
    if (filter->parsed()) return cmd_filter(flags, f_in, f_out, pm, f_channels);
    if (ftle->parsed()) {
      return cmd_ftle(flags, flow_name, tau0, dtau, seed_grid[0], seed_grid[1], ftle_out,
                      h_fd, rk_steps, domain);
    }
    return kExitOther;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

}  // namespace scoreflow
