#include "crossing/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "crossing/rng.hpp"

namespace crossing {

namespace {

/// Nearest same-lane vehicle strictly ahead that is still in the scene;
/// nullptr when the lane is clear.
const VehicleState* lane_leader(std::size_t index, const std::vector<VehicleState>& states,
                                const EpisodeConfig& cfg) {
  const VehicleState& self = states[index];
  const VehicleState* leader = nullptr;
  for (std::size_t j = 1; j < states.size(); ++j) {
    if (j == index) continue;
    const VehicleState& other = states[j];
    if (other.lane_id != self.lane_id) continue;
    if (other.position <= self.position) continue;
    if (other.position > cfg.exit_threshold) continue;
    if (leader == nullptr || other.position < leader->position) leader = &other;
  }
  return leader;
}

}  // namespace

Scalar behavior_accel(std::size_t index, const std::vector<VehicleState>& states,
                      const ControllerGains& gains, const EpisodeConfig& cfg) {
  const VehicleState& self = states[index];
  const VehicleState& ego = states.front();

  Scalar set_speed = cfg.v_max;
  if (self.intention == Intention::Cautious) {
    const bool ego_approaching =
        std::abs(ego.position) <= cfg.sight_range && ego.position < 0;
    if (ego_approaching) set_speed = cfg.cautious_factor * cfg.v_max;
  }

  Scalar accel = p_control(self.velocity, set_speed, gains.gain_p);

  if (const VehicleState* leader = lane_leader(index, states, cfg)) {
    const Scalar x1 = leader->position - self.position - cfg.follow_standoff;
    const Scalar x2 = leader->velocity - self.velocity;
    accel = std::min(accel, sliding_mode_accel(x1, x2, gains));
  }

  if (self.intention == Intention::GiveWay) {
    const bool ego_cleared = ego.position > cfg.collision_halfwidth;
    if (!ego_cleared) {
      const Scalar x1 = self.intersection_start - self.position - gains.standoff;
      const Scalar x2 = -self.velocity;
      accel = std::min(accel, sliding_mode_accel(x1, x2, gains));
    }
  }

  return accel;
}

bool detect_collision(const std::vector<VehicleState>& states, const EpisodeConfig& cfg) {
  const Scalar hw = cfg.collision_halfwidth;
  for (std::size_t a = 0; a < states.size(); ++a) {
    if (states[a].position > cfg.exit_threshold) continue;
    for (std::size_t b = a + 1; b < states.size(); ++b) {
      if (states[b].position > cfg.exit_threshold) continue;
      if (states[a].lane_id == states[b].lane_id) {
        if (std::abs(states[a].position - states[b].position) < 2 * hw) return true;
      } else {
        if (std::abs(states[a].position) < hw && std::abs(states[b].position) < hw)
          return true;
      }
    }
  }
  return false;
}

Simulation::Simulation(EpisodeConfig cfg, ControllerGains gains)
    : cfg_(std::move(cfg)), gains_(gains) {
  cfg_.validate();
  gains_.validate();
  spawn_();
}

StepOutcome Simulation::reset() {
  spawn_();
  return outcome_;
}

StepOutcome Simulation::reset(const EpisodeConfig& cfg) {
  cfg.validate();
  cfg_ = cfg;
  spawn_();
  return outcome_;
}

void Simulation::spawn_() {
  Rng rng(cfg_.seed);
  outcome_ = StepOutcome{};
  step_count_ = 0;

  VehicleState ego;
  ego.position = rng.uniform(cfg_.ego_spawn_min, cfg_.ego_spawn_max);
  ego.velocity = rng.uniform(cfg_.spawn_v_min, cfg_.v_max);
  ego.acceleration = 0.0;
  ego.intersection_start = cfg_.delta_ego;
  ego.intention = Intention::Ego;
  ego.lane_id = 0;
  outcome_.states.push_back(ego);

  const int n = cfg_.n_other_vehicles;
  std::vector<Scalar> positions(static_cast<std::size_t>(n));
  bool spaced = false;
  for (int attempt = 0; attempt < 1000 && !spaced; ++attempt) {
    for (auto& p : positions) p = rng.uniform(cfg_.other_spawn_min, cfg_.other_spawn_max);
    spaced = true;
    for (int a = 0; a < n && spaced; ++a)
      for (int b = a + 1; b < n; ++b)
        if (std::abs(positions[a] - positions[b]) < cfg_.spawn_min_gap) {
          spaced = false;
          break;
        }
  }
  if (!spaced) {  // degenerate window: fall back to even spacing
    const Scalar span = cfg_.other_spawn_max - cfg_.other_spawn_min;
    for (int k = 0; k < n; ++k)
      positions[static_cast<std::size_t>(k)] =
          cfg_.other_spawn_min + span * (Scalar(k) + Scalar(0.5)) / Scalar(n);
  }

  // Spawn speeds are feasibility-capped: every vehicle must be able to stop
  // before the collision zone, and behind its lane leader, at the +-a_max
  // brake limit. Velocities are drawn front-most vehicle first.
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = k;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return positions[static_cast<std::size_t>(a)] > positions[static_cast<std::size_t>(b)];
  });

  std::vector<Scalar> velocities(static_cast<std::size_t>(n));
  Scalar leader_p = 0, leader_v = 0;
  bool has_leader = false;
  for (int idx : order) {
    const Scalar p = positions[static_cast<std::size_t>(idx)];
    Scalar cap = std::sqrt(2 * cfg_.a_max *
                           std::max(Scalar{0}, -p - cfg_.collision_halfwidth - Scalar{1}));
    if (has_leader) {
      const Scalar gap = leader_p - p;
      const Scalar margin = 2 * cfg_.collision_halfwidth + Scalar{3.5};
      cap = std::min(cap, std::sqrt(std::max(
                              Scalar{0}, leader_v * leader_v +
                                             2 * cfg_.a_max * std::max(Scalar{0}, gap - margin))));
    }
    cap = std::min(cap, cfg_.v_max);
    const Scalar v = cap <= cfg_.spawn_v_min ? cap : rng.uniform(cfg_.spawn_v_min, cap);
    velocities[static_cast<std::size_t>(idx)] = v;
    leader_p = p;
    leader_v = v;
    has_leader = true;
  }

  for (int k = 0; k < n; ++k) {
    VehicleState v;
    v.position = positions[static_cast<std::size_t>(k)];
    v.velocity = velocities[static_cast<std::size_t>(k)];
    v.acceleration = 0.0;
    v.intersection_start = cfg_.delta_other;
    v.lane_id = 1;
    switch (rng.uniform_int(3)) {
      case 0: v.intention = Intention::TakeWay; break;
      case 1: v.intention = Intention::GiveWay; break;
      default: v.intention = Intention::Cautious; break;
    }
    outcome_.states.push_back(v);
  }
}

StepOutcome Simulation::reset_with_states(std::vector<VehicleState> states) {
  if (states.empty() || states.front().intention != Intention::Ego)
    throw std::invalid_argument("reset_with_states: states[0] must be the ego vehicle");
  outcome_ = StepOutcome{};
  step_count_ = 0;
  outcome_.states = std::move(states);
  return outcome_;
}

StepOutcome Simulation::step(Scalar ego_accel_request) {
  if (outcome_.terminal())
    throw std::logic_error("Simulation::step called after terminal status");
  if (!std::isfinite(ego_accel_request))
    throw std::invalid_argument("Simulation::step: non-finite acceleration request");

  auto& states = outcome_.states;
  std::vector<Scalar> accel(states.size());
  accel[0] = std::clamp(ego_accel_request, -cfg_.a_max, cfg_.a_max);
  for (std::size_t i = 1; i < states.size(); ++i)
    accel[i] = std::clamp(behavior_accel(i, states, gains_, cfg_), -cfg_.a_max, cfg_.a_max);

  for (std::size_t i = 0; i < states.size(); ++i) {
    VehicleState& v = states[i];
    v.acceleration = accel[i];
    v.velocity = std::max(Scalar{0}, v.velocity + v.acceleration * cfg_.dt);
    v.position += v.velocity * cfg_.dt;
  }

  ++step_count_;
  outcome_.elapsed = static_cast<Scalar>(step_count_) * cfg_.dt;

  if (detect_collision(states, cfg_))
    outcome_.status = Status::Collision;
  else if (states.front().position > cfg_.exit_threshold)
    outcome_.status = Status::Success;
  else if (outcome_.elapsed >= cfg_.timeout)
    outcome_.status = Status::Timeout;

  return outcome_;
}

std::string format_number(Scalar value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

TraceWriter::TraceWriter(std::ostream& out, int n_vehicles,
                         std::vector<std::string> extra_columns)
    : out_(out), n_columns_(0) {
  out_ << "step_index,elapsed_s,status";
  n_columns_ = 3;
  for (int k = 0; k < n_vehicles; ++k) {
    out_ << ",veh" << k << "_id,veh" << k << "_lane,veh" << k << "_intention,veh" << k
         << "_p,veh" << k << "_v,veh" << k << "_a";
    n_columns_ += 6;
  }
  for (const auto& name : extra_columns) {
    out_ << ',' << name;
    ++n_columns_;
  }
  out_ << '\n';
}

void TraceWriter::append(int step_index, const StepOutcome& outcome,
                         const std::vector<std::string>& extra_values) {
  out_ << step_index << ',' << format_number(outcome.elapsed) << ','
       << to_string(outcome.status);
  for (std::size_t i = 0; i < outcome.states.size(); ++i) {
    const VehicleState& v = outcome.states[i];
    out_ << ',' << i << ',' << v.lane_id << ',' << to_string(v.intention) << ','
         << format_number(v.position) << ',' << format_number(v.velocity) << ','
         << format_number(v.acceleration);
  }
  for (const auto& value : extra_values) out_ << ',' << value;
  out_ << '\n';
}

}  // namespace crossing
