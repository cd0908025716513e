#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scoreflow/pm_filter.hpp"
#include "scoreflow/sampler.hpp"
#include "scoreflow/score_net.hpp"
#include "scoreflow/sde.hpp"

namespace scoreflow {

// Structured run configuration, schema-validated on load: unknown keys are
// rejected with the offending dotted key path in the message.
struct RunConfig {
  nlohmann::json raw;

  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir;
  std::string dataset;

  std::optional<SdeSpec> sde;

  std::vector<int> net_hidden = {64, 64};
  int net_t_emb_dim = 16;

  TrainConfig train;

  SamplerConfig sampler;

  bool physics_enabled = false;
  PhysicsCorrConfig physics;

  bool filter_enabled = false;
  PmConfig filter;
  std::vector<std::string> filter_channels = {"u", "v"};

  nlohmann::json gen;      // generator section, kind-specific
  nlohmann::json rollout;  // rollout section (steps, initial)
  nlohmann::json sample;   // sampling section (n_samples)
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

}  // namespace scoreflow
