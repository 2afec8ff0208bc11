#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crossing/observation.hpp"
#include "crossing/rng.hpp"
#include "crossing/types.hpp"

namespace crossing {

/// Layer widths and mode switches of the Q-network. The input dimensions
/// (four 8-feature vehicle blocks, one 6-entry ego block) are fixed by the
/// observation layout; everything else is configurable.
struct NetworkConfig {
  int h1 = 32;         // first shared layer
  int h2 = 16;         // second shared layer
  int h_ego = 16;      // ego sub-network
  int h3 = 64;         // combining layer
  int recurrent = 64;  // LSTM width (or the stand-in feed-forward width)
  int n_actions = kNumActions;
  bool use_lstm = true;       // false: tanh feed-forward layer of equal width
  bool share_weights = true;  // false: independent per-slot copies of (W1, b1, W2, b2)
  Scalar dropout_keep = 0.8;

  void validate() const;
};

/// All weights and biases. W1/b1/W2/b2 hold one tensor when weights are
/// shared and four independent copies otherwise; sharing is structural, the
/// same tensor is applied to every slot. The LSTM block stacks the gates
/// row-wise in the order [input; forget; candidate; output].
struct NetworkParams {
  NetworkConfig cfg;

  std::vector<MatX> W1;  // h1 x 8
  std::vector<VecX> b1;
  std::vector<MatX> W2;  // h2 x h1
  std::vector<VecX> b2;
  MatX W_ego1;  // h_ego x 6
  VecX b_ego;
  MatX W_ego2;  // h3 x h_ego
  std::array<MatX, kMaxOtherVehicles> W3;  // h3 x h2, one per slot
  VecX b3;
  MatX lstm_Wx;  // 4*recurrent x h3
  MatX lstm_Wh;  // 4*recurrent x recurrent
  VecX lstm_b;   // 4*recurrent
  MatX ff_W;     // recurrent x h3 (DQN mode only)
  VecX ff_b;
  MatX W_Q;  // n_actions x recurrent
  VecX b_q;

  int slot_param_index(int slot) const { return cfg.share_weights ? 0 : slot; }
  std::size_t parameter_count() const;
};

/// Visits every active tensor in the fixed serialization order. Biases visit
/// as Nx1 columns. The same order is used by the optimizer, the checkpoint
/// format and the finite-difference tests.
template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn&& fn) {
  const int copies = p.cfg.share_weights ? 1 : kMaxOtherVehicles;
  for (int s = 0; s < copies; ++s) fn("W1." + std::to_string(s), p.W1[static_cast<std::size_t>(s)]);
  for (int s = 0; s < copies; ++s) fn("b1." + std::to_string(s), p.b1[static_cast<std::size_t>(s)]);
  for (int s = 0; s < copies; ++s) fn("W2." + std::to_string(s), p.W2[static_cast<std::size_t>(s)]);
  for (int s = 0; s < copies; ++s) fn("b2." + std::to_string(s), p.b2[static_cast<std::size_t>(s)]);
  fn("W_ego1", p.W_ego1);
  fn("b_ego", p.b_ego);
  fn("W_ego2", p.W_ego2);
  for (int s = 0; s < kMaxOtherVehicles; ++s) fn("W3." + std::to_string(s), p.W3[static_cast<std::size_t>(s)]);
  fn("b3", p.b3);
  if (p.cfg.use_lstm) {
    fn("lstm.Wx", p.lstm_Wx);
    fn("lstm.Wh", p.lstm_Wh);
    fn("lstm.b", p.lstm_b);
  } else {
    fn("ff.W", p.ff_W);
    fn("ff.b", p.ff_b);
  }
  fn("W_Q", p.W_Q);
  fn("b_q", p.b_q);
}

/// Glorot-uniform weights; zero biases except the LSTM forget gate at +1.
NetworkParams init_params(const NetworkConfig& cfg, std::uint64_t seed);

/// Same shapes as `params`, all zeros. Used for gradients and optimizer state.
NetworkParams zeros_like(const NetworkParams& params);

using Gradients = NetworkParams;

struct RecurrentState {
  VecX hidden;
  VecX cell;
};

/// Zero state; every episode and every training sequence starts here.
RecurrentState initial_state(const NetworkConfig& cfg);

/// Inverted-scaling dropout masks for the feed-forward activations
/// (h1, h2 per slot, h_ego, h3): entries are 0 or 1/keep.
struct DropoutMask {
  MatX m1;  // h1 x 4
  MatX m2;  // h2 x 4
  VecX m_ego;
  VecX m3;
};

DropoutMask sample_dropout_mask(const NetworkConfig& cfg, Rng& rng);

struct ForwardResult {
  VecX q;
  RecurrentState state;
};

/// One step of the full network. Passing a mask applies train-time dropout;
/// inference passes none.
ForwardResult forward(const NetworkParams& params, const Observation& obs,
                      const RecurrentState& state, const DropoutMask* mask = nullptr);

/// The LSTM cell on its own: gates [i; f; g; o], cell' = f.c + i.g,
/// hidden' = o.tanh(cell').
std::pair<VecX, RecurrentState> lstm_step(const NetworkParams& params, const VecX& input,
                                          const RecurrentState& state);

/// One transition inside a training sequence; td_target is read for trained
/// steps (index >= burn_in) only.
struct SequenceStep {
  Observation obs;
  int action = 0;
  Scalar td_target = 0.0;
};

/// Analytic gradients of the mean squared TD error over the trained steps,
/// backpropagated through time across the whole sequence. Burn-in steps
/// contribute no loss but their recurrent states carry gradient. The one
/// mask (when given) is reused at every step of the sequence, forward and
/// backward.
Gradients backward(const NetworkParams& params, const std::vector<SequenceStep>& sequence,
                   const RecurrentState& state0, int burn_in,
                   const DropoutMask* mask = nullptr, Scalar* loss_out = nullptr);

struct OptimizerConfig {
  Scalar learning_rate = 5e-4;
  Scalar decay = 0.95;   // RMS cache decay
  Scalar epsilon = 1e-6;
  Scalar grad_clip = 1.0;  // global-norm threshold
  // RMS steps stay ~learning_rate near a fixed point, so late training
  // anneals the rate log-linearly from anneal_start (fraction of the episode
  // budget) down to anneal_floor * learning_rate. anneal_floor = 1 disables.
  Scalar anneal_start = 0.5;
  Scalar anneal_floor = 0.1;

  Scalar annealed_rate(Scalar progress) const {
    if (anneal_floor >= 1 || progress <= anneal_start) return learning_rate;
    const Scalar span = (std::min(progress, Scalar{1}) - anneal_start) / (1 - anneal_start);
    return learning_rate * std::pow(anneal_floor, span);
  }
};

struct OptimizerState {
  NetworkParams cache;  // running mean of squared gradients
  std::uint64_t step = 0;
  bool initialized = false;
};

Scalar global_norm(const Gradients& grads);

/// Global-norm clipping followed by an RMS-adaptive step. Deterministic;
/// throws std::runtime_error on non-finite gradients.
void apply_gradients(NetworkParams& params, const Gradients& grads, OptimizerState& opt,
                     const OptimizerConfig& cfg);

}  // namespace crossing
