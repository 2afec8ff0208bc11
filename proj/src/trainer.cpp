#include "crossing/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "crossing/checkpoint.hpp"
#include "crossing/replay.hpp"
#include "crossing/sim.hpp"

namespace crossing {

namespace {

void add_in_place(Gradients& dst, const Gradients& src) {
  std::vector<Scalar*> dst_ptrs;
  for_each_tensor(dst, [&](const std::string&, auto& t) { dst_ptrs.push_back(t.data()); });
  std::size_t i = 0;
  for_each_tensor(const_cast<Gradients&>(src), [&](const std::string&, auto& t) {
    Scalar* d = dst_ptrs[i++];
    const Scalar* s = t.data();
    for (Eigen::Index n = 0; n < t.size(); ++n) d[n] += s[n];
  });
}

void scale_in_place(Gradients& g, Scalar factor) {
  for_each_tensor(g, [&](const std::string&, auto& t) { t *= factor; });
}

/// Bellman targets for the trained suffix of a sequence, bootstrapped from
/// the target snapshot warmed over the same prefix (zero initial state).
void fill_td_targets(std::vector<SequenceStep>& steps, const std::vector<Experience>& seq,
                     int burn_in, const NetworkParams& target, Scalar gamma) {
  RecurrentState state = initial_state(target.cfg);
  for (int t = 0; t < static_cast<int>(seq.size()); ++t) {
    const Experience& e = seq[static_cast<std::size_t>(t)];
    const ForwardResult fw = forward(target, e.obs, state);
    state = fw.state;
    if (t >= burn_in) {
      const ForwardResult next = forward(target, e.next_obs, state);
      steps[static_cast<std::size_t>(t)].td_target =
          td_target(e.reward, next.q, e.terminal, gamma);
    }
  }
}

struct UpdateContext {
  NetworkParams* params;
  const NetworkParams* target;
  OptimizerState* opt;
  OptimizerConfig opt_cfg;  // learning rate re-annealed per episode
  const TrainConfig* train;
  Rng* dropout_rng;
  Scalar loss_ema = 0.0;
  bool loss_ema_init = false;
  std::uint64_t updates = 0;
};

/// One optimizer step from a batch of sequences; returns the mean loss.
Scalar run_update(UpdateContext& ctx, const std::vector<std::vector<Experience>>& batch) {
  Gradients acc = zeros_like(*ctx.params);
  Scalar loss_sum = 0.0;
  for (const std::vector<Experience>& seq : batch) {
    const int len = static_cast<int>(seq.size());
    const int burn_in = std::max(0, len - ctx.train->trained_steps);

    std::vector<SequenceStep> steps(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t) {
      steps[static_cast<std::size_t>(t)].obs = seq[static_cast<std::size_t>(t)].obs;
      steps[static_cast<std::size_t>(t)].action = seq[static_cast<std::size_t>(t)].action;
    }
    fill_td_targets(steps, seq, burn_in, *ctx.target, ctx.train->gamma);

    DropoutMask mask;
    const DropoutMask* mask_ptr = nullptr;
    if (ctx.train->use_dropout) {
      mask = sample_dropout_mask(ctx.params->cfg, *ctx.dropout_rng);
      mask_ptr = &mask;
    }

    Scalar loss = 0.0;
    Gradients g = backward(*ctx.params, steps, initial_state(ctx.params->cfg), burn_in,
                           mask_ptr, &loss);
    if (!std::isfinite(loss)) throw TrainingDiverged("training loss is not finite");
    loss_sum += loss;
    add_in_place(acc, g);
  }

  const Scalar batch_loss = loss_sum / static_cast<Scalar>(batch.size());
  scale_in_place(acc, Scalar{1} / static_cast<Scalar>(batch.size()));
  apply_gradients(*ctx.params, acc, *ctx.opt, ctx.opt_cfg);
  ++ctx.updates;

  if (!ctx.loss_ema_init) {
    ctx.loss_ema = batch_loss;
    ctx.loss_ema_init = true;
  } else {
    ctx.loss_ema = Scalar{0.99} * ctx.loss_ema + Scalar{0.01} * batch_loss;
  }
  return batch_loss;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(gamma > 0) || !(gamma < 1)) throw std::invalid_argument("trainer.gamma must be in (0,1)");
  if (batch_size < 1) throw std::invalid_argument("trainer.batch_size must be >= 1");
  if (burn_in < 0) throw std::invalid_argument("trainer.burn_in must be >= 0");
  if (trained_steps < 1) throw std::invalid_argument("trainer.trained_steps must be >= 1");
  if (updates_per_episode < 0)
    throw std::invalid_argument("trainer.updates_per_episode must be >= 0");
  if (target_sync_interval < 0)
    throw std::invalid_argument("trainer.target_sync_interval must be >= 0");
  if (replay_capacity < 1) throw std::invalid_argument("trainer.replay_capacity must be >= 1");
  if (n_episodes < 1) throw std::invalid_argument("trainer.n_episodes must be >= 1");
  if (eval_interval < 1) throw std::invalid_argument("trainer.eval_interval must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("trainer.eval_episodes must be >= 1");
  if (!(epsilon.start >= 0) || epsilon.start > 1 || !(epsilon.end >= 0) || epsilon.end > 1)
    throw std::invalid_argument("trainer.epsilon bounds must be in [0,1]");
  if (!(epsilon.decay_fraction > 0) || epsilon.decay_fraction > 1)
    throw std::invalid_argument("trainer.epsilon_decay_fraction must be in (0,1]");
}

TrainResult train(const TrainInputs& inputs, const std::filesystem::path& out_dir,
                  bool write_checkpoints) {
  inputs.sim.validate();
  inputs.gains.validate();
  inputs.network.validate();
  inputs.train.validate();

  TrainConfig train_cfg = inputs.train;
  if (!inputs.network.use_lstm) {  // DQN ablation trains on single transitions
    train_cfg.burn_in = 0;
    train_cfg.trained_steps = 1;
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream log(out_dir / "training_log.csv", std::ios::trunc);
  if (!log) throw std::runtime_error("train: cannot write " + (out_dir / "training_log.csv").string());
  log << "episode,success_rate,collision_rate,timeout_rate,ctr,avg_reward,epsilon,"
         "loss_moving_avg\n";

  NetworkParams params = init_params(inputs.network, derive_seed(inputs.seed, "init"));
  NetworkParams target = params;
  OptimizerState opt;
  ReplayBuffer replay(train_cfg.replay_capacity);

  Rng explore_rng(derive_seed(inputs.seed, "explore"));
  Rng sample_rng(derive_seed(inputs.seed, "sample"));
  Rng dropout_rng(derive_seed(inputs.seed, "dropout"));

  UpdateContext ctx;
  ctx.params = &params;
  ctx.target = train_cfg.target_sync_interval > 0 ? &target : &params;
  ctx.opt = &opt;
  ctx.opt_cfg = inputs.optimizer;
  ctx.train = &train_cfg;
  ctx.dropout_rng = &dropout_rng;

  TrainResult result;
  auto write_abort_checkpoint = [&]() {
    if (write_checkpoints)
      save_checkpoint(out_dir / "ckpt_abort.bin", params, inputs.config_hash);
  };

  EpisodeOptions rollout;
  rollout.gamma = train_cfg.gamma;
  rollout.collect_transitions = true;

  const int seq_len = train_cfg.sequence_length();
  for (int ep = 0; ep < train_cfg.n_episodes; ++ep) {
    const Scalar eps = train_cfg.epsilon.value(ep, train_cfg.n_episodes);
    rollout.epsilon = eps;
    ctx.opt_cfg.learning_rate = inputs.optimizer.annealed_rate(
        static_cast<Scalar>(ep) / static_cast<Scalar>(train_cfg.n_episodes));
    const EpisodeConfig ecfg =
        episode_config_for(inputs.sim, inputs.seed, "train-episode",
                           static_cast<std::uint64_t>(ep), train_cfg.randomize_n_vehicles);
    EpisodeStats stats = run_episode(params, ecfg, inputs.gains, inputs.reward, rollout,
                                     &explore_rng, static_cast<std::uint64_t>(ep));

    try {
      if (train_cfg.use_replay) {
        replay.push_episode(std::move(stats.transitions));
        for (int u = 0; u < train_cfg.updates_per_episode; ++u) {
          auto batch = replay.sample_sequences(train_cfg.batch_size, seq_len, sample_rng);
          if (batch.empty()) break;
          run_update(ctx, batch);
          if (train_cfg.target_sync_interval > 0 &&
              ctx.updates % static_cast<std::uint64_t>(train_cfg.target_sync_interval) == 0)
            target = params;
        }
      } else {
        // No-replay baseline: the just-finished episode, in order.
        const auto& episode = stats.transitions;
        std::vector<std::vector<Experience>> batch;
        for (int t = 0; t < static_cast<int>(episode.size()); ++t) {
          const int begin = std::max(0, t - seq_len + 1);
          batch.emplace_back(episode.begin() + begin, episode.begin() + t + 1);
          if (static_cast<int>(batch.size()) == train_cfg.batch_size ||
              t + 1 == static_cast<int>(episode.size())) {
            run_update(ctx, batch);
            if (train_cfg.target_sync_interval > 0 &&
                ctx.updates % static_cast<std::uint64_t>(train_cfg.target_sync_interval) == 0)
              target = params;
            batch.clear();
          }
        }
      }
    } catch (const TrainingDiverged&) {
      write_abort_checkpoint();
      throw;
    } catch (const std::runtime_error& err) {
      write_abort_checkpoint();
      throw TrainingDiverged(std::string("training aborted: ") + err.what());
    }

    if ((ep + 1) % train_cfg.eval_interval == 0) {
      const std::uint64_t round = static_cast<std::uint64_t>((ep + 1) / train_cfg.eval_interval);
      EvalPoint point;
      point.episode = ep + 1;
      point.report = evaluate(params, inputs.sim, inputs.gains, inputs.reward,
                              train_cfg.eval_episodes, derive_seed(inputs.seed, "eval", round),
                              train_cfg.randomize_n_vehicles);
      point.epsilon = eps;
      point.loss_moving_avg = ctx.loss_ema;
      result.eval_points.push_back(point);

      log << point.episode << ',' << format_number(point.report.success_rate) << ','
          << format_number(point.report.collision_rate) << ','
          << format_number(point.report.timeout_rate) << ',' << format_number(point.report.ctr)
          << ',' << format_number(point.report.avg_reward) << ',' << format_number(point.epsilon)
          << ',' << format_number(point.loss_moving_avg) << '\n';
      log.flush();

      if (write_checkpoints) {
        char name[32];
        std::snprintf(name, sizeof name, "ckpt_ep%06d.bin", ep + 1);
        save_checkpoint(out_dir / name, params, inputs.config_hash);
      }
    }
  }

  if (write_checkpoints)
    save_checkpoint(out_dir / "ckpt_final.bin", params, inputs.config_hash);

  result.params = std::move(params);
  result.log_path = out_dir / "training_log.csv";
  result.updates = ctx.updates;
  return result;
}

}  // namespace crossing
