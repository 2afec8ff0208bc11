#pragma once

#include "crossing/network.hpp"
#include "crossing/observation.hpp"
#include "crossing/rng.hpp"

namespace testutil {

inline crossing::Observation random_observation(crossing::Rng& rng) {
  crossing::Observation obs;
  for (int slot = 0; slot < crossing::kMaxOtherVehicles; ++slot) {
    obs.visible[static_cast<std::size_t>(slot)] = rng.bernoulli(0.75);
    if (!obs.visible[static_cast<std::size_t>(slot)]) continue;  // stays at the sentinel
    for (int r = 0; r < crossing::kVehicleFeatureDim; ++r) obs.xi(r, slot) = rng.uniform(-1, 1);
  }
  for (int k = 0; k < crossing::kNumActions; ++k) obs.xi5[k] = rng.uniform(-1, 1);
  return obs;
}

inline crossing::RecurrentState random_state(const crossing::NetworkConfig& cfg,
                                             crossing::Rng& rng) {
  crossing::RecurrentState st = crossing::initial_state(cfg);
  for (int i = 0; i < cfg.recurrent; ++i) {
    st.hidden[i] = rng.uniform(-1, 1);
    st.cell[i] = rng.uniform(-2, 2);
  }
  return st;
}

/// Small widths keep finite-difference sweeps fast while exercising every
/// tensor of the architecture.
inline crossing::NetworkConfig small_config(bool use_lstm = true, bool share = true) {
  crossing::NetworkConfig cfg;
  cfg.h1 = 7;
  cfg.h2 = 5;
  cfg.h_ego = 4;
  cfg.h3 = 6;
  cfg.recurrent = 5;
  cfg.use_lstm = use_lstm;
  cfg.share_weights = share;
  return cfg;
}

}  // namespace testutil
