#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "crossing/eval.hpp"
#include "crossing/network.hpp"

namespace crossing {

struct EpsilonSchedule {
  Scalar start = 1.0;
  Scalar end = 0.05;
  Scalar decay_fraction = 0.4;  // linear decay over this share of the episodes

  Scalar value(int episode_index, int total_episodes) const {
    const int horizon = std::max(1, static_cast<int>(decay_fraction * total_episodes));
    if (episode_index >= horizon) return end;
    return start + (end - start) * static_cast<Scalar>(episode_index) / horizon;
  }
};

struct TrainConfig {
  Scalar gamma = 0.95;
  EpsilonSchedule epsilon;
  int batch_size = 32;        // sequences per update
  int burn_in = 3;            // LSTM warm-up steps, no loss
  int trained_steps = 1;      // loss-bearing steps per sequence
  int updates_per_episode = 8;
  int target_sync_interval = 500;  // updates between target snapshots; 0 = no target net
  std::size_t replay_capacity = 50000;
  int n_episodes = 30000;
  int eval_interval = 300;
  int eval_episodes = 300;
  bool use_replay = true;
  bool use_dropout = true;
  bool randomize_n_vehicles = true;  // per episode, uniform in [1, sim.n_other_vehicles]

  int sequence_length() const { return burn_in + trained_steps; }
  void validate() const;
};

/// Everything one training run depends on.
struct TrainInputs {
  EpisodeConfig sim;
  ControllerGains gains;
  RewardParams reward;
  NetworkConfig network;
  TrainConfig train;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  std::uint64_t config_hash = 0;  // embedded in checkpoints
};

struct EvalPoint {
  int episode = 0;
  EvalReport report;
  Scalar epsilon = 0.0;
  Scalar loss_moving_avg = 0.0;
};

struct TrainResult {
  NetworkParams params;
  std::vector<EvalPoint> eval_points;
  std::filesystem::path log_path;
  std::uint64_t updates = 0;
};

struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The learning loop: epsilon-greedy rollouts, episode-aware replay,
/// Bellman targets from the target snapshot, BPTT updates, periodic greedy
/// evaluation with CSV logging and checkpoints. Deterministic for a given
/// TrainInputs. Throws TrainingDiverged (after writing an abort checkpoint)
/// when the loss stops being finite.
TrainResult train(const TrainInputs& inputs, const std::filesystem::path& out_dir,
                  bool write_checkpoints = true);

}  // namespace crossing
