#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "crossing/types.hpp"

namespace crossing {

struct ControllerGains {
  Scalar gain_p = 0.8;         // K [1/s]
  Scalar c1 = 1.0;             // sliding surface position coefficient
  Scalar c2 = 2.0;             // sliding surface velocity coefficient
  Scalar mu = 6.0;             // switching magnitude [m/s^2]
  Scalar standoff = 8.0;       // regulation point offset behind the target [m]
  Scalar boundary_layer = 1.0; // phi: saturation width replacing sign()

  void validate() const {
    if (!(gain_p > 0)) throw std::invalid_argument("controller.gain_p must be > 0");
    if (!(c2 > 0)) throw std::invalid_argument("controller.c2 must be > 0");
    if (!(mu > 0)) throw std::invalid_argument("controller.mu must be > 0");
    if (!(boundary_layer > 0)) throw std::invalid_argument("controller.boundary_layer must be > 0");
  }
};

/// One of the six short-term goals. Index 0 keeps set speed, 1 stops at the
/// intersection, 2..5 keep distance to the vehicle in that observation slot.
struct StgAction {
  int index = 0;

  static constexpr int kKeepSetSpeed = 0;
  static constexpr int kStopAtIntersection = 1;

  bool is_follow() const { return index >= 2; }
  int target_slot() const { return index - 2; }
};

/// Saturated sign: linear inside the boundary layer, +-1 outside. Odd.
inline Scalar sgn_smooth(Scalar sigma, Scalar boundary_layer) {
  return std::clamp(sigma / boundary_layer, Scalar{-1}, Scalar{1});
}

inline Scalar p_control(Scalar velocity, Scalar set_speed, Scalar gain) {
  return gain * (set_speed - velocity);
}

/// Sliding-mode acceleration toward the surface sigma = c1*x1 + c2*x2 = 0,
/// with x1 = p^t - p^e - standoff and x2 = v^t - v^e computed by the caller.
inline Scalar sliding_mode_accel(Scalar x1, Scalar x2, const ControllerGains& g) {
  const Scalar sigma = g.c1 * x1 + g.c2 * x2;
  return (g.c1 * x2 + g.mu * sgn_smooth(sigma, g.boundary_layer)) / g.c2;
}

/// Acceleration that regulates `follower` to `standoff` meters behind a
/// target point moving at `target_velocity`, min-combined with keeping the
/// set speed.
inline Scalar tracking_accel(const VehicleState& follower, Scalar target_position,
                             Scalar target_velocity, Scalar standoff, Scalar set_speed,
                             const ControllerGains& g) {
  const Scalar x1 = target_position - follower.position - standoff;
  const Scalar x2 = target_velocity - follower.velocity;
  return std::min(sliding_mode_accel(x1, x2, g),
                  p_control(follower.velocity, set_speed, g.gain_p));
}

/// True when a follow action targets a vehicle that is present, visible and
/// has not crossed the intersection. Non-follow actions are always valid.
inline bool stg_action_valid(const StgAction& action,
                             const std::vector<VehicleState>& others,
                             const EpisodeConfig& cfg) {
  if (!action.is_follow()) return true;
  const int slot = action.target_slot();
  if (slot < 0 || slot >= static_cast<int>(others.size())) return false;
  const VehicleState& target = others[static_cast<std::size_t>(slot)];
  return vehicle_visible(target, cfg) && target.position <= cfg.collision_halfwidth;
}

/// Raw acceleration request for one action, unclamped. Follow actions with an
/// absent slot throw std::out_of_range; the episode layer substitutes
/// KeepSetSpeed for invalid selections before actuation.
inline Scalar stg_accel(const StgAction& action, const VehicleState& ego,
                        const std::vector<VehicleState>& others,
                        const ControllerGains& g, Scalar v_max) {
  switch (action.index) {
    case StgAction::kKeepSetSpeed:
      return p_control(ego.velocity, v_max, g.gain_p);
    case StgAction::kStopAtIntersection:
      // Past the start-of-intersection line there is no line left to stop at;
      // the goal degrades to keeping set speed.
      if (ego.position > ego.intersection_start)
        return p_control(ego.velocity, v_max, g.gain_p);
      return tracking_accel(ego, ego.intersection_start, Scalar{0}, g.standoff, v_max, g);
    default: {
      const int slot = action.target_slot();
      if (slot < 0 || slot >= static_cast<int>(others.size()))
        throw std::out_of_range("stg_accel: follow target slot " + std::to_string(slot + 1) +
                                " is not present");
      const VehicleState& target = others[static_cast<std::size_t>(slot)];
      return tracking_accel(ego, target.position, target.velocity, g.standoff, v_max, g);
    }
  }
}

/// Predicted applied acceleration for all six actions, clamped to +-a_max.
/// Invalid follow targets fall back to the KeepSetSpeed entry so the feature
/// never exposes the state of a vehicle the ego cannot see.
inline Vec6 predict_next_accel(const VehicleState& ego,
                               const std::vector<VehicleState>& others,
                               const ControllerGains& g, const EpisodeConfig& cfg) {
  Vec6 accels;
  const Scalar keep = std::clamp(p_control(ego.velocity, cfg.v_max, g.gain_p),
                                 -cfg.a_max, cfg.a_max);
  accels[StgAction::kKeepSetSpeed] = keep;
  accels[StgAction::kStopAtIntersection] =
      std::clamp(stg_accel(StgAction{StgAction::kStopAtIntersection}, ego, others, g, cfg.v_max),
                 -cfg.a_max, cfg.a_max);
  for (int k = 2; k < kNumActions; ++k) {
    const StgAction action{k};
    if (!stg_action_valid(action, others, cfg)) {
      accels[k] = keep;
      continue;
    }
    accels[k] = std::clamp(stg_accel(action, ego, others, g, cfg.v_max), -cfg.a_max, cfg.a_max);
  }
  return accels;
}

}  // namespace crossing
