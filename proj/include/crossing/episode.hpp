#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "crossing/network.hpp"
#include "crossing/replay.hpp"
#include "crossing/reward.hpp"
#include "crossing/sim.hpp"

namespace crossing {

/// Per-episode config derivation: a namespaced seed plus, when requested,
/// a vehicle count drawn uniformly from [1, base.n_other_vehicles]. Training
/// and evaluation use disjoint namespaces so their seed sets never collide.
EpisodeConfig episode_config_for(const EpisodeConfig& base, std::uint64_t root_seed,
                                 std::string_view ns, std::uint64_t index, bool randomize_n);

struct EpisodeOptions {
  Scalar epsilon = 0.0;  // 0 runs the deterministic greedy policy
  Scalar gamma = 0.95;
  bool collect_transitions = false;
  TraceWriter* trace = nullptr;  // when set, rows gain action/Q/reward columns
  bool trace_observations = false;  // raise verbosity: append the observation vector
};

struct EpisodeStats {
  Status status = Status::Running;
  Scalar elapsed = 0.0;
  int steps = 0;
  Scalar reward_sum = 0.0;        // undiscounted episodic reward
  Scalar discounted_return = 0.0; // sum of gamma^(t-1) r_t
  std::vector<Experience> transitions;
};

/// Trace columns appended by run_episode when a TraceWriter is supplied.
/// The observation block comes last so default-column consumers are
/// unaffected when verbosity is raised.
std::vector<std::string> rollout_extra_columns(bool with_observations = false);

/// Rolls one episode: builds observations, queries the network (no dropout),
/// picks epsilon-greedy actions, actuates through the short-term-goal
/// controllers (invalid selections fall back to keep-set-speed), steps the
/// simulator and scores rewards. The recurrent state starts at zero and is
/// carried across the episode.
EpisodeStats run_episode(const NetworkParams& params, const EpisodeConfig& cfg,
                         const ControllerGains& gains, const RewardParams& reward,
                         const EpisodeOptions& opts, Rng* explore_rng,
                         std::uint64_t episode_id = 0);

}  // namespace crossing
