#pragma once

#include <algorithm>
#include <array>

#include "crossing/types.hpp"

namespace crossing {

/// The agent's view of one step: four per-vehicle feature blocks
/// (p^e, v^e, a^e, delta^e, p^i, v^i, a^i, delta^i), the six predicted
/// accelerations, everything scaled to [-1, 1]. Slot k holds vehicle k for
/// the whole episode; a slot whose vehicle is absent or not visible carries
/// the all -1 sentinel.
struct Observation {
  Eigen::Matrix<Scalar, kVehicleFeatureDim, kMaxOtherVehicles> xi;
  Vec6 xi5;
  std::array<bool, kMaxOtherVehicles> visible{};

  Observation() {
    xi.setConstant(-1.0);
    xi5.setZero();
  }
};

namespace detail {
inline Scalar unit_clip(Scalar value) { return std::clamp(value, Scalar{-1}, Scalar{1}); }
}  // namespace detail

/// Packs and normalizes the network inputs. `predicted_accels` is the
/// already-clamped output of predict_next_accel for the same states.
inline Observation build_observation(const std::vector<VehicleState>& states,
                                     const Vec6& predicted_accels,
                                     const EpisodeConfig& cfg) {
  using detail::unit_clip;
  Observation obs;
  const VehicleState& ego = states.front();
  const Scalar ego_block[4] = {
      unit_clip(ego.position / cfg.sight_range), unit_clip(ego.velocity / cfg.v_max),
      unit_clip(ego.acceleration / cfg.a_max),
      unit_clip(ego.intersection_start / cfg.sight_range)};

  for (int slot = 0; slot < kMaxOtherVehicles; ++slot) {
    const std::size_t i = static_cast<std::size_t>(slot) + 1;
    if (i >= states.size() || !vehicle_visible(states[i], cfg)) continue;
    const VehicleState& v = states[i];
    obs.visible[static_cast<std::size_t>(slot)] = true;
    obs.xi(0, slot) = ego_block[0];
    obs.xi(1, slot) = ego_block[1];
    obs.xi(2, slot) = ego_block[2];
    obs.xi(3, slot) = ego_block[3];
    obs.xi(4, slot) = unit_clip(v.position / cfg.sight_range);
    obs.xi(5, slot) = unit_clip(v.velocity / cfg.v_max);
    obs.xi(6, slot) = unit_clip(v.acceleration / cfg.a_max);
    obs.xi(7, slot) = unit_clip(v.intersection_start / cfg.sight_range);
  }

  for (int k = 0; k < kNumActions; ++k) obs.xi5[k] = unit_clip(predicted_accels[k] / cfg.a_max);
  return obs;
}

}  // namespace crossing
