#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crossing/checkpoint.hpp"
#include "crossing/config.hpp"
#include "crossing/episode.hpp"
#include "crossing/eval.hpp"
#include "crossing/trainer.hpp"

namespace fs = std::filesystem;
using namespace crossing;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file (defaults apply when omitted)");
  cmd->add_option("--override", opts.overrides, "section.key=value, repeatable")
      ->take_all();
  cmd->add_option("--seed", opts.seed, "root seed, overrides the config");
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty() ? default_config() : load_config(opts.config_path);
  for (const std::string& o : opts.overrides) apply_override(cfg, o);
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.validate();
  return cfg;
}

/// Config for an existing checkpoint: explicit --config, or the
/// resolved_config.json written beside it by `train`. The --seed flag picks
/// evaluation/rollout seeds only; it never alters the config being hashed.
RunConfig config_for_checkpoint(const CommonOpts& opts, const fs::path& checkpoint) {
  CommonOpts no_seed = opts;
  no_seed.seed.reset();
  if (no_seed.config_path.empty()) {
    const fs::path sidecar = checkpoint.parent_path() / "resolved_config.json";
    if (!fs::exists(sidecar))
      throw std::runtime_error("no --config given and no resolved_config.json beside " +
                               checkpoint.string());
    no_seed.config_path = sidecar.string();
  }
  return resolve_config(no_seed);
}

NetworkParams load_checked(const fs::path& checkpoint, const RunConfig& cfg) {
  std::uint64_t stored_hash = 0;
  NetworkParams params = load_checkpoint(checkpoint, &stored_hash);
  if (stored_hash != config_hash(cfg))
    throw std::runtime_error("checkpoint " + checkpoint.string() +
                             " was produced under a different configuration "
                             "(config hash mismatch); refusing to run");
  return params;
}

/// Code/version stamp; with the resolved config and seed this makes a run
/// directory fully self-describing.
void write_run_info(const RunConfig& cfg, const fs::path& dir) {
  nlohmann::json info;
  info["tool"] = "crossing";
  info["version"] = kVersionString;
  info["config_hash"] = config_hash(cfg);
  info["seed"] = cfg.seed;
  std::ofstream out(dir / "run_info.json", std::ios::trunc);
  out << info.dump(2) << '\n';
}

int cmd_train(const CommonOpts& opts, const fs::path& out_dir) {
  const RunConfig cfg = resolve_config(opts);
  fs::create_directories(out_dir);
  save_resolved_config(cfg, out_dir / "resolved_config.json");
  write_run_info(cfg, out_dir);
  try {
    TrainResult result = train(cfg.train_inputs(), out_dir);
    std::cout << "training complete: " << result.eval_points.size() << " evaluation points, "
              << result.updates << " updates, log at " << result.log_path.string() << "\n";
  } catch (const TrainingDiverged& err) {
    std::cerr << "error: " << err.what() << " (abort checkpoint written)\n";
    return 2;
  }
  return 0;
}

int cmd_eval(const CommonOpts& opts, const fs::path& checkpoint, int episodes,
             const std::string& out_path) {
  const RunConfig cfg = config_for_checkpoint(opts, checkpoint);
  const NetworkParams params = load_checked(checkpoint, cfg);
  const std::uint64_t seed = opts.seed ? *opts.seed : cfg.seed;
  const EvalReport report = evaluate(params, cfg.sim, cfg.controller, cfg.reward, episodes,
                                     seed, cfg.trainer.randomize_n_vehicles);

  nlohmann::json j;
  j["counts"] = {{"n_episodes", report.n_episodes},
                 {"successes", report.successes},
                 {"collisions", report.collisions},
                 {"timeouts", report.timeouts}};
  j["rates"] = {{"success_rate", report.success_rate},
                {"collision_rate", report.collision_rate},
                {"timeout_rate", report.timeout_rate}};
  j["ctr"] = report.ctr;
  j["avg_reward"] = report.avg_reward;
  j["seed"] = seed;
  j["checkpoint_hash"] = hash_file(checkpoint);

  const std::string dump = j.dump(2);
  std::cout << dump << '\n';
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << dump << '\n';
  }
  return 0;
}

int cmd_rollout(const CommonOpts& opts, const fs::path& checkpoint, const fs::path& trace_path,
                bool with_observations) {
  const RunConfig cfg = config_for_checkpoint(opts, checkpoint);
  const NetworkParams params = load_checked(checkpoint, cfg);
  const std::uint64_t seed = opts.seed ? *opts.seed : cfg.seed;

  const EpisodeConfig ecfg =
      episode_config_for(cfg.sim, seed, "rollout", 0, cfg.trainer.randomize_n_vehicles);
  std::ofstream out(trace_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + trace_path.string());
  TraceWriter trace(out, 1 + ecfg.n_other_vehicles, rollout_extra_columns(with_observations));

  EpisodeOptions eopts;
  eopts.epsilon = 0.0;
  eopts.gamma = cfg.trainer.gamma;
  eopts.trace = &trace;
  eopts.trace_observations = with_observations;
  const EpisodeStats stats = run_episode(params, ecfg, cfg.controller, cfg.reward, eopts, nullptr);
  std::cout << "rollout: " << to_string(stats.status) << " after " << stats.steps << " steps, "
            << "reward " << format_number(stats.reward_sum) << ", trace at "
            << trace_path.string() << "\n";
  return 0;
}

int cmd_inspect(const fs::path& checkpoint) {
  const CheckpointInfo info = inspect_checkpoint(checkpoint);
  std::cout << "path: " << checkpoint.string() << "\n"
            << "version: " << info.version << "\n"
            << "config_hash: " << info.config_hash << "\n"
            << "file_hash: " << hash_file(checkpoint) << "\n"
            << "network: h1=" << info.network.h1 << " h2=" << info.network.h2
            << " h_ego=" << info.network.h_ego << " h3=" << info.network.h3
            << " recurrent=" << info.network.recurrent << " n_actions=" << info.network.n_actions
            << " use_lstm=" << (info.network.use_lstm ? "true" : "false")
            << " share_weights=" << (info.network.share_weights ? "true" : "false")
            << " dropout_keep=" << info.network.dropout_keep << "\n"
            << "tensors (" << info.tensors.size() << "):\n";
  std::uint64_t total = 0;
  for (const TensorInfo& t : info.tensors) {
    std::cout << "  " << t.name << "  " << t.rows << "x" << t.cols << "\n";
    total += t.rows * t.cols;
  }
  std::cout << "total parameters: " << total << "\n";
  return 0;
}

struct AblateVariant {
  const char* name;
  const char* override_kv;  // nullptr = the full default stack
};

int cmd_ablate(const CommonOpts& opts, const fs::path& out_dir, int jobs) {
  const RunConfig base = resolve_config(opts);
  fs::create_directories(out_dir);

  static const AblateVariant variants[] = {
      {"replay_on", nullptr},
      {"replay_off", "trainer.use_replay=false"},
      {"dropout_on", nullptr},
      {"dropout_off", "trainer.use_dropout=false"},
      {"lstm_on", nullptr},
      {"lstm_off", "network.use_lstm=false"},
      {"shared_on", nullptr},
      {"shared_off", "network.share_weights=false"},
  };
  constexpr int n_variants = static_cast<int>(std::size(variants));

  std::vector<TrainResult> results(n_variants);
  std::vector<std::exception_ptr> errors(n_variants);
  std::atomic<int> next{0};

  auto worker = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n_variants) return;
      try {
        RunConfig cfg = base;
        cfg.run_name = base.run_name + "-" + variants[i].name;
        if (variants[i].override_kv != nullptr) apply_override(cfg, variants[i].override_kv);
        const fs::path dir = out_dir / variants[i].name;
        fs::create_directories(dir);
        save_resolved_config(cfg, dir / "resolved_config.json");
        write_run_info(cfg, dir);
        results[static_cast<std::size_t>(i)] = train(cfg.train_inputs(), dir);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };

  jobs = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int j = 0; j < std::min(jobs, n_variants); ++j) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  for (int i = 0; i < n_variants; ++i)
    if (errors[static_cast<std::size_t>(i)]) std::rethrow_exception(errors[static_cast<std::size_t>(i)]);

  std::ofstream combined(out_dir / "ablation_summary.csv", std::ios::trunc);
  if (!combined) throw std::runtime_error("cannot write ablation_summary.csv");
  combined << "variant,episode,success_rate,collision_rate,timeout_rate,ctr,avg_reward,epsilon,"
              "loss_moving_avg\n";
  for (int i = 0; i < n_variants; ++i) {
    for (const EvalPoint& p : results[static_cast<std::size_t>(i)].eval_points) {
      combined << variants[i].name << ',' << p.episode << ','
               << format_number(p.report.success_rate) << ','
               << format_number(p.report.collision_rate) << ','
               << format_number(p.report.timeout_rate) << ',' << format_number(p.report.ctr)
               << ',' << format_number(p.report.avg_reward) << ',' << format_number(p.epsilon)
               << ',' << format_number(p.loss_moving_avg) << '\n';
    }
  }
  std::cout << "ablation complete: " << n_variants << " variant runs under " << out_dir.string()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intersection-crossing DRQN: simulator, trainer and evaluation tools"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  std::string train_out;
  CLI::App* train_cmd = app.add_subcommand("train", "train a policy and log evaluations");
  add_common(train_cmd, train_opts);
  train_cmd->add_option("--out-dir", train_out, "output directory")->required();

  CommonOpts eval_opts;
  std::string eval_ckpt, eval_out;
  int eval_episodes = 300;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint greedily");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--episodes", eval_episodes, "number of evaluation episodes");
  eval_cmd->add_option("--out", eval_out, "also write the JSON report here");

  CommonOpts ablate_opts;
  std::string ablate_out;
  int ablate_jobs = 1;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "run the four paired ablations with common seeds");
  add_common(ablate_cmd, ablate_opts);
  ablate_cmd->add_option("--out-dir", ablate_out, "output directory")->required();
  ablate_cmd->add_option("--jobs", ablate_jobs, "parallel variant runs");

  CommonOpts rollout_opts;
  std::string rollout_ckpt, rollout_trace;
  bool rollout_obs = false;
  CLI::App* rollout_cmd = app.add_subcommand("rollout", "trace one greedy episode");
  add_common(rollout_cmd, rollout_opts);
  rollout_cmd->add_option("--checkpoint", rollout_ckpt, "checkpoint file")->required();
  rollout_cmd->add_option("--trace", rollout_trace, "trace CSV output path")->required();
  rollout_cmd->add_flag("--with-observations", rollout_obs,
                        "append the normalized observation vector to every row");

  std::string inspect_ckpt;
  CLI::App* inspect_cmd = app.add_subcommand("inspect-checkpoint", "print checkpoint contents");
  inspect_cmd->add_option("--checkpoint", inspect_ckpt, "checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_opts, train_out);
    if (eval_cmd->parsed()) return cmd_eval(eval_opts, eval_ckpt, eval_episodes, eval_out);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_opts, ablate_out, ablate_jobs);
    if (rollout_cmd->parsed())
      return cmd_rollout(rollout_opts, rollout_ckpt, rollout_trace, rollout_obs);
    if (inspect_cmd->parsed()) return cmd_inspect(inspect_ckpt);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
