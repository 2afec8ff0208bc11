#pragma once

#include <cstdint>

#include "crossing/episode.hpp"

namespace crossing {

/// Counts and rates over one evaluation batch. CTR is the collision share
/// among failed episodes, defined as 0 when nothing failed.
struct EvalReport {
  int n_episodes = 0;
  int successes = 0;
  int collisions = 0;
  int timeouts = 0;
  Scalar success_rate = 0.0;
  Scalar collision_rate = 0.0;
  Scalar timeout_rate = 0.0;
  Scalar ctr = 0.0;
  Scalar avg_reward = 0.0;  // mean undiscounted episodic reward
};

inline Scalar collision_rate(const EvalReport& report) {
  return report.n_episodes > 0
             ? static_cast<Scalar>(report.collisions) / static_cast<Scalar>(report.n_episodes)
             : Scalar{0};
}

/// Counts-based rates; the one place the rate identities are computed.
EvalReport make_report(int n_episodes, int successes, int collisions, int timeouts,
                       Scalar reward_total);

/// Greedy (epsilon = 0, no dropout) evaluation over n episodes with seeds
/// derived from `seed` under the "eval-episode" namespace. Bit-exactly
/// reproducible for the same arguments.
EvalReport evaluate(const NetworkParams& params, const EpisodeConfig& base,
                    const ControllerGains& gains, const RewardParams& reward, int n_episodes,
                    std::uint64_t seed, bool randomize_n = true);

}  // namespace crossing
