#include "crossing/episode.hpp"

#include <stdexcept>

namespace crossing {

EpisodeConfig episode_config_for(const EpisodeConfig& base, std::uint64_t root_seed,
                                 std::string_view ns, std::uint64_t index, bool randomize_n) {
  EpisodeConfig cfg = base;
  cfg.seed = derive_seed(root_seed, ns, index);
  if (randomize_n) {
    Rng draw(derive_seed(cfg.seed, "n-vehicles"));
    cfg.n_other_vehicles = 1 + draw.uniform_int(base.n_other_vehicles);
  }
  return cfg;
}

std::vector<std::string> rollout_extra_columns(bool with_observations) {
  std::vector<std::string> cols{"action_index", "action_valid"};
  for (int k = 1; k <= kNumActions; ++k) cols.push_back("q" + std::to_string(k));
  cols.push_back("reward");
  if (with_observations) {
    for (int slot = 1; slot <= kMaxOtherVehicles; ++slot)
      for (int r = 0; r < kVehicleFeatureDim; ++r)
        cols.push_back("xi" + std::to_string(slot) + "_" + std::to_string(r));
    for (int k = 1; k <= kNumActions; ++k) cols.push_back("xi5_" + std::to_string(k));
  }
  return cols;
}

EpisodeStats run_episode(const NetworkParams& params, const EpisodeConfig& cfg,
                         const ControllerGains& gains, const RewardParams& reward,
                         const EpisodeOptions& opts, Rng* explore_rng,
                         std::uint64_t episode_id) {
  if (opts.epsilon > 0 && explore_rng == nullptr)
    throw std::invalid_argument("run_episode: epsilon > 0 requires an exploration rng");
  Rng greedy_rng(0);
  Rng& rng = explore_rng != nullptr ? *explore_rng : greedy_rng;

  Simulation sim(cfg, gains);
  const Scalar jerk_max = reward.resolved_jerk_max(cfg);

  EpisodeStats stats;
  StepOutcome current = sim.outcome();
  RecurrentState rstate = initial_state(params.cfg);

  auto others_of = [](const StepOutcome& o) {
    return std::vector<VehicleState>(o.states.begin() + 1, o.states.end());
  };
  std::vector<VehicleState> others = others_of(current);
  Observation obs =
      build_observation(current.states, predict_next_accel(current.ego(), others, gains, cfg), cfg);

  Scalar prev_accel = 0.0;
  Scalar discount = 1.0;

  while (!current.terminal()) {
    const ForwardResult fw = forward(params, obs, rstate);
    const int action_index = select_action(fw.q, opts.epsilon, rng);
    const StgAction action{action_index};
    const bool valid = stg_action_valid(action, others, cfg);
    const StgAction actuated = valid ? action : StgAction{StgAction::kKeepSetSpeed};
    const Scalar request = stg_accel(actuated, current.ego(), others, gains, cfg.v_max);

    const StepOutcome next = sim.step(request);
    const Scalar applied = next.ego().acceleration;
    const Scalar jerk = stats.steps == 0 ? Scalar{0} : (applied - prev_accel) / cfg.dt;
    prev_accel = applied;

    RewardContext ctx;
    ctx.status = next.status;
    ctx.elapsed = next.elapsed;
    ctx.dt = cfg.dt;
    ctx.timeout = cfg.timeout;
    ctx.jerk = jerk;
    ctx.jerk_max = jerk_max;
    ctx.action_valid = valid;
    const Scalar r = compute_reward(ctx, reward);

    stats.reward_sum += r;
    stats.discounted_return += discount * r;
    discount *= opts.gamma;

    std::vector<VehicleState> next_others = others_of(next);
    Observation next_obs = build_observation(
        next.states, predict_next_accel(next.ego(), next_others, gains, cfg), cfg);

    if (opts.collect_transitions) {
      Experience e;
      e.obs = obs;
      e.action = action_index;
      e.reward = r;
      e.next_obs = next_obs;
      e.terminal = next.terminal();
      e.episode_id = episode_id;
      e.step_index = stats.steps;
      stats.transitions.push_back(std::move(e));
    }

    if (opts.trace != nullptr) {
      std::vector<std::string> extra;
      extra.push_back(std::to_string(action_index));
      extra.push_back(valid ? "1" : "0");
      for (int k = 0; k < kNumActions; ++k) extra.push_back(format_number(fw.q[k]));
      extra.push_back(format_number(r));
      if (opts.trace_observations) {  // the observation this action was chosen from
        for (int slot = 0; slot < kMaxOtherVehicles; ++slot)
          for (int row = 0; row < kVehicleFeatureDim; ++row)
            extra.push_back(format_number(obs.xi(row, slot)));
        for (int k = 0; k < kNumActions; ++k) extra.push_back(format_number(obs.xi5[k]));
      }
      opts.trace->append(sim.step_count(), next, extra);
    }

    obs = std::move(next_obs);
    others = std::move(next_others);
    rstate = fw.state;
    current = next;
    ++stats.steps;
  }

  stats.status = current.status;
  stats.elapsed = current.elapsed;
  return stats;
}

}  // namespace crossing
