#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace crossing {

using Scalar = double;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Vec6 = Eigen::Matrix<Scalar, 6, 1>;

/// Architectural constants fixed by the task: up to four crossing vehicles,
/// six short-term-goal actions, eight features per vehicle block.
inline constexpr int kMaxOtherVehicles = 4;
inline constexpr int kNumActions = 6;
inline constexpr int kVehicleFeatureDim = 8;

/// Stamped into every run directory so outputs stay traceable to the code.
inline constexpr char kVersionString[] = "1.0.0";

enum class Intention { TakeWay, GiveWay, Cautious, Ego };

enum class Status { Running, Success, Collision, Timeout };

const char* to_string(Intention intention);
const char* to_string(Status status);
Intention intention_from_string(const std::string& name);

/// Kinematic state of one vehicle along its predefined path. Positions are
/// signed distances to the crossing point (negative before it).
struct VehicleState {
  Scalar position = 0.0;
  Scalar velocity = 0.0;
  Scalar acceleration = 0.0;
  Scalar intersection_start = -6.0;  // delta, always before the crossing point
  Intention intention = Intention::Ego;
  int lane_id = 0;
};

struct EpisodeConfig {
  std::uint64_t seed = 0;
  int n_other_vehicles = 2;
  Scalar dt = 0.25;        // integration step [s]
  Scalar timeout = 30.0;   // tau_m [s]
  Scalar v_max = 15.0;     // set speed ceiling [m/s]
  Scalar a_max = 5.0;      // acceleration cap [m/s^2]
  Scalar sight_range = 100.0;        // p_max [m]
  Scalar collision_halfwidth = 2.5;  // half extent of the occupied zone [m]
  Scalar delta_ego = -6.0;           // ego start-of-intersection line [m]
  Scalar delta_other = -6.0;         // crossing-road start-of-intersection line [m]
  Scalar exit_threshold = 6.0;       // past this a vehicle has left the scene [m]
  Scalar ego_spawn_min = -60.0;
  Scalar ego_spawn_max = -30.0;
  Scalar other_spawn_min = -100.0;
  Scalar other_spawn_max = -10.0;
  Scalar spawn_v_min = 5.0;  // spawn speeds are drawn from [spawn_v_min, v_max]
  Scalar spawn_min_gap = 12.0;     // minimum same-lane separation at spawn [m]
  Scalar cautious_factor = 0.5;    // kappa: cautious set-speed fraction of v_max
  Scalar follow_standoff = 10.0;   // in-lane car-following distance [m]

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Snapshot returned by the simulator after reset() and every step().
/// states[0] is always the ego vehicle.
struct StepOutcome {
  Status status = Status::Running;
  Scalar elapsed = 0.0;
  std::vector<VehicleState> states;

  const VehicleState& ego() const { return states.front(); }
  bool terminal() const { return status != Status::Running; }
};

/// A vehicle is visible to the ego while it is inside sight range and has not
/// left the scene past the exit threshold.
inline bool vehicle_visible(const VehicleState& v, const EpisodeConfig& cfg) {
  return v.position >= -cfg.sight_range && v.position <= cfg.exit_threshold;
}

}  // namespace crossing
