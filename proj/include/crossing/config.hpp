#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "crossing/trainer.hpp"

namespace crossing {

/// The union of every knob one run needs, resolvable entirely from defaults.
/// A resolved copy is stored beside every run's outputs and its hash is
/// embedded in checkpoints.
struct RunConfig {
  std::string run_name = "run";
  std::uint64_t seed = 1;
  EpisodeConfig sim;
  ControllerGains controller;
  RewardParams reward;
  NetworkConfig network;
  TrainConfig trainer;
  OptimizerConfig optimizer;

  TrainInputs train_inputs() const;
  void validate() const;
};

/// Defaults for the full task (four-vehicle maximum, paper reward values).
RunConfig default_config();

nlohmann::json to_json(const RunConfig& cfg);

/// Strict parse: unknown keys at any level are hard errors naming the key.
RunConfig config_from_json(const nlohmann::json& j);

/// Defaults overlaid with the file's contents.
RunConfig load_config(const std::filesystem::path& path);

/// Applies one `section.key=value` override; the value is parsed as JSON
/// (bare words fall back to strings).
void apply_override(RunConfig& cfg, const std::string& assignment);

/// FNV-1a of the canonical (sorted-key) JSON dump.
std::uint64_t config_hash(const RunConfig& cfg);

void save_resolved_config(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace crossing
