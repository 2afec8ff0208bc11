#include "crossing/eval.hpp"

namespace crossing {

EvalReport make_report(int n_episodes, int successes, int collisions, int timeouts,
                       Scalar reward_total) {
  EvalReport report;
  report.n_episodes = n_episodes;
  report.successes = successes;
  report.collisions = collisions;
  report.timeouts = timeouts;
  if (n_episodes > 0) {
    const Scalar n = static_cast<Scalar>(n_episodes);
    report.success_rate = successes / n;
    report.collision_rate = collisions / n;
    report.timeout_rate = timeouts / n;
    const int failures = collisions + timeouts;
    report.ctr = failures > 0 ? static_cast<Scalar>(collisions) / failures : Scalar{0};
    report.avg_reward = reward_total / n;
  }
  return report;
}

EvalReport evaluate(const NetworkParams& params, const EpisodeConfig& base,
                    const ControllerGains& gains, const RewardParams& reward, int n_episodes,
                    std::uint64_t seed, bool randomize_n) {
  int successes = 0, collisions = 0, timeouts = 0;
  Scalar reward_total = 0.0;

  EpisodeOptions opts;
  opts.epsilon = 0.0;

  for (int k = 0; k < n_episodes; ++k) {
    const EpisodeConfig cfg = episode_config_for(base, seed, "eval-episode",
                                                 static_cast<std::uint64_t>(k), randomize_n);
    const EpisodeStats stats = run_episode(params, cfg, gains, reward, opts, nullptr);
    switch (stats.status) {
      case Status::Success: ++successes; break;
      case Status::Collision: ++collisions; break;
      case Status::Timeout: ++timeouts; break;
      case Status::Running: break;  // unreachable: episodes always terminate
    }
    reward_total += stats.reward_sum;
  }

  return make_report(n_episodes, successes, collisions, timeouts, reward_total);
}

}  // namespace crossing
