#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "crossing/control.hpp"
#include "crossing/types.hpp"

namespace crossing {

/// Scripted acceleration of one crossing vehicle (states[index], index >= 1)
/// from its hidden intention: take-way traffic holds its set speed, give-way
/// traffic stops at its line until the ego has cleared the collision zone,
/// cautious traffic slows while the ego approaches. All of them additionally
/// keep distance to a leader in their own lane.
Scalar behavior_accel(std::size_t index, const std::vector<VehicleState>& states,
                      const ControllerGains& gains, const EpisodeConfig& cfg);

/// True when the ego and a crossing vehicle occupy the collision zone at the
/// same time, or two same-lane vehicles overlap. Strict inequalities; a
/// vehicle past the exit threshold is no longer a candidate.
bool detect_collision(const std::vector<VehicleState>& states, const EpisodeConfig& cfg);

/// Deterministic, seedable simulation of one four-way crossing. The ego
/// drives the main road (lane 0); 1-4 scripted vehicles share the crossing
/// road (lane 1). Fixed-step semi-implicit Euler; termination is evaluated
/// collision -> success -> timeout and is sticky.
///
/// Single writer per instance; independent instances may run in parallel.
class Simulation {
 public:
  explicit Simulation(EpisodeConfig cfg, ControllerGains gains = {});

  /// Re-spawns everything from cfg.seed. Same seed, same config: bit-identical state.
  StepOutcome reset();
  StepOutcome reset(const EpisodeConfig& cfg);

  /// Starts an episode from explicit states (states[0] must be the ego).
  /// Bypasses the seeded spawn; used by tests and scenario tooling.
  StepOutcome reset_with_states(std::vector<VehicleState> states);

  /// Advances one dt with the ego acceleration request clamped to +-a_max.
  /// Throws std::logic_error once the episode is terminal.
  StepOutcome step(Scalar ego_accel_request);

  const StepOutcome& outcome() const { return outcome_; }
  const EpisodeConfig& config() const { return cfg_; }
  const ControllerGains& gains() const { return gains_; }
  int step_count() const { return step_count_; }

 private:
  void spawn_();

  EpisodeConfig cfg_;
  ControllerGains gains_;
  StepOutcome outcome_;
  int step_count_ = 0;
};

/// Shortest round-trip decimal form of a double; the one number format used
/// in every CSV the project writes, so logs are byte-identical across reruns
/// and parse back bit-exactly.
std::string format_number(Scalar value);

/// Episode trace export: header row, then one row per step with
/// step_index, elapsed_s, status and (id, lane, intention, p, v, a) per
/// vehicle. Extra columns (rollout action/Q-values/reward) are appended when
/// requested at construction.
class TraceWriter {
 public:
  TraceWriter(std::ostream& out, int n_vehicles,
              std::vector<std::string> extra_columns = {});
  void append(int step_index, const StepOutcome& outcome,
              const std::vector<std::string>& extra_values = {});

 private:
  std::ostream& out_;
  std::size_t n_columns_;
};

}  // namespace crossing
