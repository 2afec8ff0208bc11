#include "crossing/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace crossing {

namespace {

using nlohmann::json;

/// Reads one section, tracking which keys were consumed so typos surface as
/// hard errors with the full dotted path.
class SectionReader {
 public:
  SectionReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument("config: " + path_ + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    consumed_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config: bad value for " + path_ + "." + key);
    }
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (consumed_.find(item.key()) == consumed_.end())
        throw std::invalid_argument("config: unknown key " + path_ + "." + item.key());
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> consumed_;
};

void read_sim(const json& j, EpisodeConfig& sim) {
  SectionReader r(j, "sim");
  r.read("n_other_vehicles", sim.n_other_vehicles);
  r.read("dt", sim.dt);
  r.read("timeout", sim.timeout);
  r.read("v_max", sim.v_max);
  r.read("a_max", sim.a_max);
  r.read("sight_range", sim.sight_range);
  r.read("collision_halfwidth", sim.collision_halfwidth);
  r.read("delta_ego", sim.delta_ego);
  r.read("delta_other", sim.delta_other);
  r.read("exit_threshold", sim.exit_threshold);
  r.read("ego_spawn_min", sim.ego_spawn_min);
  r.read("ego_spawn_max", sim.ego_spawn_max);
  r.read("other_spawn_min", sim.other_spawn_min);
  r.read("other_spawn_max", sim.other_spawn_max);
  r.read("spawn_v_min", sim.spawn_v_min);
  r.read("spawn_min_gap", sim.spawn_min_gap);
  r.read("cautious_factor", sim.cautious_factor);
  r.read("follow_standoff", sim.follow_standoff);
  r.finish();
}

void read_controller(const json& j, ControllerGains& g) {
  SectionReader r(j, "controller");
  r.read("gain_p", g.gain_p);
  r.read("c1", g.c1);
  r.read("c2", g.c2);
  r.read("mu", g.mu);
  r.read("standoff", g.standoff);
  r.read("boundary_layer", g.boundary_layer);
  r.finish();
}

void read_reward(const json& j, RewardParams& rw) {
  SectionReader r(j, "reward");
  r.read("collision", rw.collision);
  r.read("timeout", rw.timeout);
  r.read("invalid_action", rw.invalid_action);
  r.read("jerk_max", rw.jerk_max);
  r.finish();
}

void read_network(const json& j, NetworkConfig& n) {
  SectionReader r(j, "network");
  r.read("h1", n.h1);
  r.read("h2", n.h2);
  r.read("h_ego", n.h_ego);
  r.read("h3", n.h3);
  r.read("recurrent", n.recurrent);
  r.read("use_lstm", n.use_lstm);
  r.read("share_weights", n.share_weights);
  r.read("dropout_keep", n.dropout_keep);
  r.finish();
}

void read_trainer(const json& j, TrainConfig& t, NetworkConfig& n) {
  SectionReader r(j, "trainer");
  // The LSTM and weight-sharing ablations are architectural but belong to the
  // ablation flag set, so the trainer section accepts them as aliases.
  r.read("use_lstm", n.use_lstm);
  r.read("share_weights", n.share_weights);
  r.read("gamma", t.gamma);
  r.read("epsilon_start", t.epsilon.start);
  r.read("epsilon_end", t.epsilon.end);
  r.read("epsilon_decay_fraction", t.epsilon.decay_fraction);
  r.read("batch_size", t.batch_size);
  r.read("burn_in", t.burn_in);
  r.read("trained_steps", t.trained_steps);
  r.read("updates_per_episode", t.updates_per_episode);
  r.read("target_sync_interval", t.target_sync_interval);
  r.read("replay_capacity", t.replay_capacity);
  r.read("n_episodes", t.n_episodes);
  r.read("eval_interval", t.eval_interval);
  r.read("eval_episodes", t.eval_episodes);
  r.read("use_replay", t.use_replay);
  r.read("use_dropout", t.use_dropout);
  r.read("randomize_n_vehicles", t.randomize_n_vehicles);
  r.finish();
}

void read_optimizer(const json& j, OptimizerConfig& o) {
  SectionReader r(j, "optimizer");
  r.read("learning_rate", o.learning_rate);
  r.read("decay", o.decay);
  r.read("epsilon", o.epsilon);
  r.read("grad_clip", o.grad_clip);
  r.read("anneal_start", o.anneal_start);
  r.read("anneal_floor", o.anneal_floor);
  r.finish();
}

}  // namespace

TrainInputs RunConfig::train_inputs() const {
  TrainInputs in;
  in.sim = sim;
  in.gains = controller;
  in.reward = reward;
  in.network = network;
  in.train = trainer;
  in.optimizer = optimizer;
  in.seed = seed;
  in.config_hash = config_hash(*this);
  return in;
}

void RunConfig::validate() const {
  sim.validate();
  controller.validate();
  network.validate();
  trainer.validate();
  if (run_name.empty()) throw std::invalid_argument("config: run.name must not be empty");
}

RunConfig default_config() {
  RunConfig cfg;
  cfg.sim.n_other_vehicles = kMaxOtherVehicles;  // per-episode count drawn in [1, this]
  return cfg;
}

nlohmann::json to_json(const RunConfig& cfg) {
  json j;
  j["run"] = {{"name", cfg.run_name}, {"seed", cfg.seed}};
  j["sim"] = {{"n_other_vehicles", cfg.sim.n_other_vehicles},
              {"dt", cfg.sim.dt},
              {"timeout", cfg.sim.timeout},
              {"v_max", cfg.sim.v_max},
              {"a_max", cfg.sim.a_max},
              {"sight_range", cfg.sim.sight_range},
              {"collision_halfwidth", cfg.sim.collision_halfwidth},
              {"delta_ego", cfg.sim.delta_ego},
              {"delta_other", cfg.sim.delta_other},
              {"exit_threshold", cfg.sim.exit_threshold},
              {"ego_spawn_min", cfg.sim.ego_spawn_min},
              {"ego_spawn_max", cfg.sim.ego_spawn_max},
              {"other_spawn_min", cfg.sim.other_spawn_min},
              {"other_spawn_max", cfg.sim.other_spawn_max},
              {"spawn_v_min", cfg.sim.spawn_v_min},
              {"spawn_min_gap", cfg.sim.spawn_min_gap},
              {"cautious_factor", cfg.sim.cautious_factor},
              {"follow_standoff", cfg.sim.follow_standoff}};
  j["controller"] = {{"gain_p", cfg.controller.gain_p},
                     {"c1", cfg.controller.c1},
                     {"c2", cfg.controller.c2},
                     {"mu", cfg.controller.mu},
                     {"standoff", cfg.controller.standoff},
                     {"boundary_layer", cfg.controller.boundary_layer}};
  j["reward"] = {{"collision", cfg.reward.collision},
                 {"timeout", cfg.reward.timeout},
                 {"invalid_action", cfg.reward.invalid_action},
                 {"jerk_max", cfg.reward.jerk_max}};
  j["network"] = {{"h1", cfg.network.h1},
                  {"h2", cfg.network.h2},
                  {"h_ego", cfg.network.h_ego},
                  {"h3", cfg.network.h3},
                  {"recurrent", cfg.network.recurrent},
                  {"use_lstm", cfg.network.use_lstm},
                  {"share_weights", cfg.network.share_weights},
                  {"dropout_keep", cfg.network.dropout_keep}};
  j["trainer"] = {{"gamma", cfg.trainer.gamma},
                  {"epsilon_start", cfg.trainer.epsilon.start},
                  {"epsilon_end", cfg.trainer.epsilon.end},
                  {"epsilon_decay_fraction", cfg.trainer.epsilon.decay_fraction},
                  {"batch_size", cfg.trainer.batch_size},
                  {"burn_in", cfg.trainer.burn_in},
                  {"trained_steps", cfg.trainer.trained_steps},
                  {"updates_per_episode", cfg.trainer.updates_per_episode},
                  {"target_sync_interval", cfg.trainer.target_sync_interval},
                  {"replay_capacity", cfg.trainer.replay_capacity},
                  {"n_episodes", cfg.trainer.n_episodes},
                  {"eval_interval", cfg.trainer.eval_interval},
                  {"eval_episodes", cfg.trainer.eval_episodes},
                  {"use_replay", cfg.trainer.use_replay},
                  {"use_dropout", cfg.trainer.use_dropout},
                  {"randomize_n_vehicles", cfg.trainer.randomize_n_vehicles}};
  j["optimizer"] = {{"learning_rate", cfg.optimizer.learning_rate},
                    {"decay", cfg.optimizer.decay},
                    {"epsilon", cfg.optimizer.epsilon},
                    {"grad_clip", cfg.optimizer.grad_clip},
                    {"anneal_start", cfg.optimizer.anneal_start},
                    {"anneal_floor", cfg.optimizer.anneal_floor}};
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  RunConfig cfg = default_config();

  static const std::set<std::string> sections = {"run",     "sim",     "controller", "reward",
                                                 "network", "trainer", "optimizer"};
  for (const auto& item : j.items())
    if (sections.find(item.key()) == sections.end())
      throw std::invalid_argument("config: unknown section " + item.key());

  if (j.contains("run")) {
    SectionReader r(j.at("run"), "run");
    r.read("name", cfg.run_name);
    r.read("seed", cfg.seed);
    r.finish();
  }
  if (j.contains("sim")) read_sim(j.at("sim"), cfg.sim);
  if (j.contains("controller")) read_controller(j.at("controller"), cfg.controller);
  if (j.contains("reward")) read_reward(j.at("reward"), cfg.reward);
  if (j.contains("trainer")) read_trainer(j.at("trainer"), cfg.trainer, cfg.network);
  if (j.contains("network")) read_network(j.at("network"), cfg.network);
  if (j.contains("optimizer")) read_optimizer(j.at("optimizer"), cfg.optimizer);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& err) {
    throw std::runtime_error("config: " + path.string() + " is not valid JSON: " + err.what());
  }
  return config_from_json(j);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("override must look like section.key=value: " + assignment);
  std::string path = assignment.substr(0, eq);
  // Ablation-flag aliases; the resolved config always records them under network.
  if (path == "trainer.use_lstm") path = "network.use_lstm";
  if (path == "trainer.share_weights") path = "network.share_weights";
  const std::string raw = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // bare words are strings
  }

  json patch;
  json* node = &patch;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = path.find('.', begin);
    const std::string part = path.substr(begin, dot - begin);
    if (part.empty()) throw std::invalid_argument("override has an empty path segment: " + path);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    begin = dot + 1;
  }

  json merged = to_json(cfg);
  merged.merge_patch(patch);
  cfg = config_from_json(merged);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string dump = to_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void save_resolved_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("config: cannot write " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

}  // namespace crossing
