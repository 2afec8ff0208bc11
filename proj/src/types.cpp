#include "crossing/types.hpp"

#include <stdexcept>

namespace crossing {

const char* to_string(Intention intention) {
  switch (intention) {
    case Intention::TakeWay: return "TakeWay";
    case Intention::GiveWay: return "GiveWay";
    case Intention::Cautious: return "Cautious";
    case Intention::Ego: return "Ego";
  }
  return "?";
}

const char* to_string(Status status) {
  switch (status) {
    case Status::Running: return "Running";
    case Status::Success: return "Success";
    case Status::Collision: return "Collision";
    case Status::Timeout: return "Timeout";
  }
  return "?";
}

Intention intention_from_string(const std::string& name) {
  if (name == "TakeWay") return Intention::TakeWay;
  if (name == "GiveWay") return Intention::GiveWay;
  if (name == "Cautious") return Intention::Cautious;
  if (name == "Ego") return Intention::Ego;
  throw std::invalid_argument("unknown intention: " + name);
}

void EpisodeConfig::validate() const {
  if (!(dt > 0)) throw std::invalid_argument("sim.dt must be > 0");
  if (!(timeout > dt)) throw std::invalid_argument("sim.timeout must be > dt");
  if (n_other_vehicles < 1 || n_other_vehicles > kMaxOtherVehicles)
    throw std::invalid_argument("sim.n_other_vehicles must be in [1,4]");
  if (!(v_max > 0)) throw std::invalid_argument("sim.v_max must be > 0");
  if (!(a_max > 0)) throw std::invalid_argument("sim.a_max must be > 0");
  if (!(sight_range > 0)) throw std::invalid_argument("sim.sight_range must be > 0");
  if (!(collision_halfwidth > 0))
    throw std::invalid_argument("sim.collision_halfwidth must be > 0");
  if (!(delta_ego < 0)) throw std::invalid_argument("sim.delta_ego must be < 0");
  if (!(delta_other < 0)) throw std::invalid_argument("sim.delta_other must be < 0");
  if (!(exit_threshold > collision_halfwidth))
    throw std::invalid_argument("sim.exit_threshold must exceed collision_halfwidth");
  if (!(ego_spawn_min <= ego_spawn_max) || !(ego_spawn_max < delta_ego))
    throw std::invalid_argument("sim.ego spawn window must lie before the delta line");
  if (!(other_spawn_min <= other_spawn_max) || !(other_spawn_max < 0))
    throw std::invalid_argument("sim.other spawn window must lie before the crossing point");
  if (!(spawn_v_min >= 0) || !(spawn_v_min <= v_max))
    throw std::invalid_argument("sim.spawn_v_min must be in [0, v_max]");
  if (!(cautious_factor > 0) || !(cautious_factor < 1))
    throw std::invalid_argument("sim.cautious_factor must be in (0,1)");
  if (!(follow_standoff > 0)) throw std::invalid_argument("sim.follow_standoff must be > 0");
}

}  // namespace crossing
