#pragma once

#include <stdexcept>

#include "crossing/types.hpp"

namespace crossing {

/// Reward constants. The terminal values are the published ones; jerk_max
/// defaults to the largest one-step jerk the acceleration cap allows,
/// 2*a_max/dt, so the per-step jerk penalty never exceeds dt/timeout.
struct RewardParams {
  Scalar collision = -2.0;
  Scalar timeout = -0.1;
  Scalar invalid_action = -1.0;
  Scalar jerk_max = 0.0;  // <= 0 means derive 2*a_max/dt at resolve time

  Scalar resolved_jerk_max(const EpisodeConfig& cfg) const {
    return jerk_max > 0 ? jerk_max : 2 * cfg.a_max / cfg.dt;
  }
};

/// Everything the reward of one completed step depends on.
struct RewardContext {
  Status status = Status::Running;
  Scalar elapsed = 0.0;   // tau, at the end of the step [s]
  Scalar dt = 0.25;       // delta tau [s]
  Scalar timeout = 30.0;  // tau_m [s]
  Scalar jerk = 0.0;      // (a_t - a_{t-1}) / dt of the applied ego acceleration
  Scalar jerk_max = 40.0;
  bool action_valid = true;
};

/// r = r_hat + branch: r_hat is the invalid-action penalty; the branch pays
/// 1 - tau/tau_m on success, fixed penalties on collision/timeout, and a
/// quadratic jerk penalty on non-terminal steps.
inline Scalar compute_reward(const RewardContext& ctx, const RewardParams& params = {}) {
  if (!(ctx.jerk_max > 0)) throw std::invalid_argument("reward: jerk_max must be > 0");
  const Scalar invalid = ctx.action_valid ? Scalar{0} : params.invalid_action;
  switch (ctx.status) {
    case Status::Success: return invalid + (Scalar{1} - ctx.elapsed / ctx.timeout);
    case Status::Collision: return invalid + params.collision;
    case Status::Timeout: return invalid + params.timeout;
    case Status::Running: {
      const Scalar scaled = ctx.jerk / ctx.jerk_max;
      return invalid - scaled * scaled * (ctx.dt / ctx.timeout);
    }
  }
  return invalid;
}

}  // namespace crossing
