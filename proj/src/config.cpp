#include "scoreflow/config.hpp"

#include <fstream>
#include <set>

namespace scoreflow {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& scope,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      const std::string path = scope.empty() ? key : scope + "." + key;
      throw ConfigError("unknown key '" + path + "'", path);
    }
  }
}

std::string dotted(const std::string& scope, const std::string& key) {
  return scope.empty() ? key : scope + "." + key;
}

double get_number(const json& j, const std::string& scope, const std::string& key,
                  double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    throw ConfigError("key '" + dotted(scope, key) + "' must be a number", dotted(scope, key));
  }
  return j[key].get<double>();
}

long get_integer(const json& j, const std::string& scope, const std::string& key,
                 long fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer() && !j[key].is_number_unsigned()) {
    throw ConfigError("key '" + dotted(scope, key) + "' must be an integer",
                      dotted(scope, key));
  }
  return j[key].get<long>();
}

std::string get_string(const json& j, const std::string& scope, const std::string& key,
                       const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) {
    throw ConfigError("key '" + dotted(scope, key) + "' must be a string", dotted(scope, key));
  }
  return j[key].get<std::string>();
}

bool get_bool(const json& j, const std::string& scope, const std::string& key,
              bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) {
    throw ConfigError("key '" + dotted(scope, key) + "' must be a boolean", dotted(scope, key));
  }
  return j[key].get<bool>();
}

SdeSpec parse_sde(const json& j) {
  reject_unknown(j, "sde",
                 {"preset", "kind", "beta_min", "beta_max", "sigma_min", "sigma_max",
                  "n_steps"});
  if (j.contains("preset")) {
    SdeSpec spec = SdeSpec::preset(get_string(j, "sde", "preset", ""));
    spec.n_steps = static_cast<int>(get_integer(j, "sde", "n_steps", spec.n_steps));
    return spec;
  }
  const std::string kind = get_string(j, "sde", "kind", "");
  const int n_steps = static_cast<int>(get_integer(j, "sde", "n_steps", 1000));
  try {
    if (kind == "vp") {
      return SdeSpec::vp(get_number(j, "sde", "beta_min", 0.0),
                         get_number(j, "sde", "beta_max", 0.0), n_steps);
    }
    if (kind == "subvp") {
      return SdeSpec::subvp(get_number(j, "sde", "beta_min", 0.0),
                            get_number(j, "sde", "beta_max", 0.0), n_steps);
    }
    if (kind == "ve") {
      return SdeSpec::ve(get_number(j, "sde", "sigma_min", 0.0),
                         get_number(j, "sde", "sigma_max", 0.0), n_steps);
    }
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " (key 'sde')", "sde");
  }
  throw ConfigError("key 'sde.kind' must be one of vp, subvp, ve", "sde.kind");
}

SamplerMethod parse_method(const std::string& name) {
  if (name == "em") return SamplerMethod::EulerMaruyama;
  if (name == "ode") return SamplerMethod::PfOde;
  if (name == "pc") return SamplerMethod::PredictorCorrector;
  throw ConfigError("key 'sampler.method' must be one of em, ode, pc", "sampler.method");
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  reject_unknown(j, "",
                 {"seed", "threads", "out", "dataset", "sde", "net", "train", "sampler",
                  "physics", "filter", "gen", "rollout", "sample"});
  RunConfig cfg;
  cfg.raw = j;
  cfg.seed = static_cast<std::uint64_t>(get_integer(j, "", "seed", 0));
  cfg.threads = static_cast<int>(get_integer(j, "", "threads", 1));
  if (cfg.threads < 1) throw ConfigError("key 'threads' must be >= 1", "threads");
  cfg.out_dir = get_string(j, "", "out", "");
  cfg.dataset = get_string(j, "", "dataset", "");

  if (j.contains("sde")) cfg.sde = parse_sde(j["sde"]);

  if (j.contains("net")) {
    const json& n = j["net"];
    reject_unknown(n, "net", {"hidden", "t_emb_dim"});
    if (n.contains("hidden")) {
      if (!n["hidden"].is_array()) {
        throw ConfigError("key 'net.hidden' must be an array of integers", "net.hidden");
      }
      cfg.net_hidden.clear();
      for (const auto& h : n["hidden"]) {
        if (!h.is_number_integer() || h.get<long>() < 1) {
          throw ConfigError("key 'net.hidden' must contain positive integers", "net.hidden");
        }
        cfg.net_hidden.push_back(h.get<int>());
      }
    }
    cfg.net_t_emb_dim = static_cast<int>(get_integer(n, "net", "t_emb_dim", 16));
  }

  if (j.contains("train")) {
    const json& t = j["train"];
    reject_unknown(t, "train",
                   {"batch_size", "epochs", "lr", "beta1", "beta2", "eps", "lambda_w",
                    "weighting", "seed"});
    cfg.train.batch_size = static_cast<int>(get_integer(t, "train", "batch_size", 32));
    cfg.train.epochs = static_cast<int>(get_integer(t, "train", "epochs", 100));
    cfg.train.lr = get_number(t, "train", "lr", 1e-3);
    cfg.train.beta1 = get_number(t, "train", "beta1", 0.9);
    cfg.train.beta2 = get_number(t, "train", "beta2", 0.999);
    cfg.train.eps = get_number(t, "train", "eps", 1e-8);
    cfg.train.lambda_w = get_number(t, "train", "lambda_w", 0.0);
    cfg.train.seed = static_cast<std::uint64_t>(
        get_integer(t, "train", "seed", static_cast<long>(cfg.seed)));
    const std::string mode = get_string(t, "train", "weighting", "variance");
    if (mode == "variance") {
      cfg.train.lambda_mode = LambdaMode::Variance;
    } else if (mode == "likelihood") {
      cfg.train.lambda_mode = LambdaMode::Likelihood;
    } else {
      throw ConfigError("key 'train.weighting' must be variance or likelihood",
                        "train.weighting");
    }
    cfg.train.validate();
  } else {
    cfg.train.seed = cfg.seed;
  }

  if (j.contains("sampler")) {
    const json& s = j["sampler"];
    reject_unknown(s, "sampler", {"method", "n_steps", "n_corr", "snr", "seed"});
    cfg.sampler.method = parse_method(get_string(s, "sampler", "method", "em"));
    cfg.sampler.n_steps = static_cast<int>(get_integer(s, "sampler", "n_steps", 1000));
    cfg.sampler.n_corr = static_cast<int>(get_integer(s, "sampler", "n_corr", 0));
    cfg.sampler.snr = get_number(s, "sampler", "snr", 0.16);
    cfg.sampler.seed = static_cast<std::uint64_t>(
        get_integer(s, "sampler", "seed", static_cast<long>(cfg.seed)));
    cfg.sampler.validate();
  } else {
    cfg.sampler.seed = cfg.seed;
  }

  if (j.contains("physics")) {
    const json& p = j["physics"];
    reject_unknown(p, "physics",
                   {"enabled", "n_gd", "eta_u", "eta_rho", "eta_p", "lambda1", "lambda2",
                    "lambda3", "tau_cool", "dtau"});
    cfg.physics_enabled = get_bool(p, "physics", "enabled", true);
    cfg.physics.n_gd = static_cast<int>(get_integer(p, "physics", "n_gd", 20));
    cfg.physics.eta_u = get_number(p, "physics", "eta_u", 1e-3);
    cfg.physics.eta_rho = get_number(p, "physics", "eta_rho", 1e-3);
    cfg.physics.eta_p = get_number(p, "physics", "eta_p", 1e-3);
    cfg.physics.lambda1 = get_number(p, "physics", "lambda1", 1.0);
    cfg.physics.lambda2 = get_number(p, "physics", "lambda2", 1.0);
    cfg.physics.lambda3 = get_number(p, "physics", "lambda3", 1.0);
    cfg.physics.tau_cool = get_number(p, "physics", "tau_cool", 0.06);
    cfg.physics.dtau = get_number(p, "physics", "dtau", 1.0);
    cfg.physics.validate();
  }

  if (j.contains("filter")) {
    const json& f = j["filter"];
    reject_unknown(f, "filter", {"enabled", "gamma", "eta", "epsilon", "iters", "channels"});
    cfg.filter_enabled = get_bool(f, "filter", "enabled", true);
    cfg.filter.gamma = get_number(f, "filter", "gamma", 0.05);
    cfg.filter.eta = get_number(f, "filter", "eta", 0.03);
    cfg.filter.epsilon = get_number(f, "filter", "epsilon", 1e-8);
    cfg.filter.n_iters = static_cast<int>(get_integer(f, "filter", "iters", 20));
    if (f.contains("channels")) {
      if (!f["channels"].is_array()) {
        throw ConfigError("key 'filter.channels' must be an array", "filter.channels");
      }
      cfg.filter_channels.clear();
      for (const auto& c : f["channels"]) {
        if (!c.is_string()) {
          throw ConfigError("key 'filter.channels' must contain strings", "filter.channels");
        }
        cfg.filter_channels.push_back(c.get<std::string>());
      }
    }
  }

  if (j.contains("gen")) {
    const json& g = j["gen"];
    reject_unknown(g, "gen",
                   {"kind", "weights", "means", "stds", "n_samples", "nx", "ny", "dx", "dy",
                    "cx", "cy", "n_steps", "noise_amp", "slope", "k_min", "k_max"});
    if (!g.contains("kind") || !g["kind"].is_string()) {
      throw ConfigError("key 'gen.kind' is required", "gen.kind");
    }
    const std::string kind = g["kind"].get<std::string>();
    if (kind != "gmm" && kind != "blob" && kind != "spectral") {
      throw ConfigError("key 'gen.kind' must be one of gmm, blob, spectral", "gen.kind");
    }
    cfg.gen = g;
  }

  if (j.contains("rollout")) {
    const json& r = j["rollout"];
    reject_unknown(r, "rollout", {"steps", "initial", "model"});
    if (r.contains("steps") && (!r["steps"].is_number_integer() || r["steps"].get<long>() < 0)) {
      throw ConfigError("key 'rollout.steps' must be a nonnegative integer", "rollout.steps");
    }
    cfg.rollout = r;
  }

  if (j.contains("sample")) {
    const json& s = j["sample"];
    reject_unknown(s, "sample", {"n_samples", "model"});
    if (s.contains("n_samples") &&
        (!s["n_samples"].is_number_integer() || s["n_samples"].get<long>() < 1)) {
      throw ConfigError("key 'sample.n_samples' must be a positive integer",
                        "sample.n_samples");
    }
    cfg.sample = s;
  }

  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(IoError::Code::Os, "cannot open config '" + path + "'");
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

}  // namespace scoreflow
