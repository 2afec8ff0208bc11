#include "crossing/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crossing {

namespace {

VecX sigmoid(const VecX& z) { return (Scalar{1} / (Scalar{1} + (-z.array()).exp())).matrix(); }

struct TensorView {
  Scalar* data;
  std::ptrdiff_t size;
};

std::vector<TensorView> tensor_views(NetworkParams& p) {
  std::vector<TensorView> views;
  for_each_tensor(p, [&](const std::string&, auto& t) {
    views.push_back({t.data(), static_cast<std::ptrdiff_t>(t.size())});
  });
  return views;
}

std::vector<TensorView> tensor_views(const NetworkParams& p) {
  return tensor_views(const_cast<NetworkParams&>(p));
}

MatX glorot(int rows, int cols, Rng& rng) {
  const Scalar limit = std::sqrt(Scalar{6} / static_cast<Scalar>(rows + cols));
  MatX m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
  return m;
}

/// Everything one step of the network computes, kept for the reverse pass.
struct StepCache {
  MatX h1, h1d;  // h1 x 4, post-tanh / post-dropout
  MatX h2, h2d;  // h2 x 4
  VecX hego, hegod;
  VecX h3, h3d;
  VecX gi, gf, gg, go;  // gate activations
  VecX cell_prev, hidden_prev;
  VecX cell, tanh_cell;
  VecX hidden;  // h4 (LSTM hidden or feed-forward output)
  VecX q;
};

void forward_step(const NetworkParams& p, const Observation& obs, const RecurrentState& state,
                  const DropoutMask* mask, StepCache& c) {
  const NetworkConfig& cfg = p.cfg;

  c.h1.resize(cfg.h1, kMaxOtherVehicles);
  c.h2.resize(cfg.h2, kMaxOtherVehicles);
  for (int slot = 0; slot < kMaxOtherVehicles; ++slot) {
    const std::size_t si = static_cast<std::size_t>(p.slot_param_index(slot));
    c.h1.col(slot) = (p.W1[si] * obs.xi.col(slot) + p.b1[si]).array().tanh().matrix();
  }
  c.h1d = mask ? MatX(c.h1.cwiseProduct(mask->m1)) : c.h1;
  for (int slot = 0; slot < kMaxOtherVehicles; ++slot) {
    const std::size_t si = static_cast<std::size_t>(p.slot_param_index(slot));
    c.h2.col(slot) = (p.W2[si] * c.h1d.col(slot) + p.b2[si]).array().tanh().matrix();
  }
  c.h2d = mask ? MatX(c.h2.cwiseProduct(mask->m2)) : c.h2;

  c.hego = (p.W_ego1 * obs.xi5 + p.b_ego).array().tanh().matrix();
  c.hegod = mask ? VecX(c.hego.cwiseProduct(mask->m_ego)) : c.hego;

  VecX pre3 = p.W_ego2 * c.hegod + p.b3;
  for (int slot = 0; slot < kMaxOtherVehicles; ++slot)
    pre3.noalias() += p.W3[static_cast<std::size_t>(slot)] * c.h2d.col(slot);
  c.h3 = pre3.array().tanh().matrix();
  c.h3d = mask ? VecX(c.h3.cwiseProduct(mask->m3)) : c.h3;

  if (cfg.use_lstm) {
    const int R = cfg.recurrent;
    if (state.hidden.size() != R || state.cell.size() != R)
      throw std::invalid_argument("forward: recurrent state width does not match the network");
    c.hidden_prev = state.hidden;
    c.cell_prev = state.cell;
    VecX z = p.lstm_b;
    z.noalias() += p.lstm_Wx * c.h3d;
    z.noalias() += p.lstm_Wh * state.hidden;
    c.gi = sigmoid(z.head(R));
    c.gf = sigmoid(z.segment(R, R));
    c.gg = z.segment(2 * R, R).array().tanh().matrix();
    c.go = sigmoid(z.tail(R));
    c.cell = c.gf.cwiseProduct(c.cell_prev) + c.gi.cwiseProduct(c.gg);
    c.tanh_cell = c.cell.array().tanh().matrix();
    c.hidden = c.go.cwiseProduct(c.tanh_cell);
  } else {
    c.hidden = (p.ff_W * c.h3d + p.ff_b).array().tanh().matrix();
  }

  c.q = p.W_Q * c.hidden + p.b_q;
}

}  // namespace

void NetworkConfig::validate() const {
  if (h1 < 1 || h2 < 1 || h_ego < 1 || h3 < 1 || recurrent < 1)
    throw std::invalid_argument("network: layer widths must be >= 1");
  if (n_actions < 1) throw std::invalid_argument("network.n_actions must be >= 1");
  if (!(dropout_keep > 0) || dropout_keep > 1)
    throw std::invalid_argument("network.dropout_keep must be in (0, 1]");
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const TensorView& v : tensor_views(*this)) n += static_cast<std::size_t>(v.size);
  return n;
}

NetworkParams init_params(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  NetworkParams p;
  p.cfg = cfg;

  const std::size_t copies = cfg.share_weights ? 1 : kMaxOtherVehicles;
  for (std::size_t s = 0; s < copies; ++s) {
    p.W1.push_back(glorot(cfg.h1, kVehicleFeatureDim, rng));
    p.b1.push_back(VecX::Zero(cfg.h1));
    p.W2.push_back(glorot(cfg.h2, cfg.h1, rng));
    p.b2.push_back(VecX::Zero(cfg.h2));
  }
  p.W_ego1 = glorot(cfg.h_ego, kNumActions, rng);
  p.b_ego = VecX::Zero(cfg.h_ego);
  p.W_ego2 = glorot(cfg.h3, cfg.h_ego, rng);
  for (auto& w : p.W3) w = glorot(cfg.h3, cfg.h2, rng);
  p.b3 = VecX::Zero(cfg.h3);

  if (cfg.use_lstm) {
    const int R = cfg.recurrent;
    p.lstm_Wx.resize(4 * R, cfg.h3);
    p.lstm_Wh.resize(4 * R, R);
    for (int gate = 0; gate < 4; ++gate) {
      p.lstm_Wx.middleRows(gate * R, R) = glorot(R, cfg.h3, rng);
      p.lstm_Wh.middleRows(gate * R, R) = glorot(R, R, rng);
    }
    p.lstm_b = VecX::Zero(4 * R);
    p.lstm_b.segment(R, R).setOnes();  // forget gate starts open
  } else {
    p.ff_W = glorot(cfg.recurrent, cfg.h3, rng);
    p.ff_b = VecX::Zero(cfg.recurrent);
  }

  p.W_Q = glorot(cfg.n_actions, cfg.recurrent, rng);
  p.b_q = VecX::Zero(cfg.n_actions);
  return p;
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams z = params;
  for (TensorView& v : tensor_views(z)) std::fill(v.data, v.data + v.size, Scalar{0});
  return z;
}

RecurrentState initial_state(const NetworkConfig& cfg) {
  return {VecX::Zero(cfg.recurrent), VecX::Zero(cfg.recurrent)};
}

DropoutMask sample_dropout_mask(const NetworkConfig& cfg, Rng& rng) {
  const Scalar keep = cfg.dropout_keep;
  const Scalar inv = Scalar{1} / keep;
  auto fill = [&](auto& m) {
    for (std::ptrdiff_t i = 0; i < m.size(); ++i)
      m.data()[i] = rng.bernoulli(keep) ? inv : Scalar{0};
  };
  DropoutMask mask;
  mask.m1.resize(cfg.h1, kMaxOtherVehicles);
  mask.m2.resize(cfg.h2, kMaxOtherVehicles);
  mask.m_ego.resize(cfg.h_ego);
  mask.m3.resize(cfg.h3);
  fill(mask.m1);
  fill(mask.m2);
  fill(mask.m_ego);
  fill(mask.m3);
  return mask;
}

ForwardResult forward(const NetworkParams& params, const Observation& obs,
                      const RecurrentState& state, const DropoutMask* mask) {
  StepCache c;
  forward_step(params, obs, state, mask, c);
  if (params.cfg.use_lstm) return {c.q, {c.hidden, c.cell}};
  return {c.q, state};
}

std::pair<VecX, RecurrentState> lstm_step(const NetworkParams& params, const VecX& input,
                                          const RecurrentState& state) {
  const int R = params.cfg.recurrent;
  if (input.size() != params.lstm_Wx.cols())
    throw std::invalid_argument("lstm_step: input width does not match the network");
  if (state.hidden.size() != R || state.cell.size() != R)
    throw std::invalid_argument("lstm_step: recurrent state width does not match the network");
  VecX z = params.lstm_b;
  z.noalias() += params.lstm_Wx * input;
  z.noalias() += params.lstm_Wh * state.hidden;
  const VecX gi = sigmoid(z.head(R));
  const VecX gf = sigmoid(z.segment(R, R));
  const VecX gg = z.segment(2 * R, R).array().tanh().matrix();
  const VecX go = sigmoid(z.tail(R));
  VecX cell = gf.cwiseProduct(state.cell) + gi.cwiseProduct(gg);
  VecX hidden = go.cwiseProduct(cell.array().tanh().matrix());
  RecurrentState next{hidden, std::move(cell)};
  return {std::move(hidden), std::move(next)};
}

Gradients backward(const NetworkParams& params, const std::vector<SequenceStep>& sequence,
                   const RecurrentState& state0, int burn_in, const DropoutMask* mask,
                   Scalar* loss_out) {
  const NetworkConfig& cfg = params.cfg;
  const int T = static_cast<int>(sequence.size());
  if (T < 1) throw std::invalid_argument("backward: empty sequence");
  if (burn_in < 0 || burn_in >= T)
    throw std::invalid_argument("backward: burn_in must be in [0, sequence length)");
  const int n_trained = T - burn_in;

  std::vector<StepCache> caches(static_cast<std::size_t>(T));
  RecurrentState state = state0;
  Scalar loss = 0;
  for (int t = 0; t < T; ++t) {
    StepCache& c = caches[static_cast<std::size_t>(t)];
    forward_step(params, sequence[static_cast<std::size_t>(t)].obs, state, mask, c);
    if (cfg.use_lstm) state = {c.hidden, c.cell};
    if (t >= burn_in) {
      const int a = sequence[static_cast<std::size_t>(t)].action;
      if (a < 0 || a >= cfg.n_actions)
        throw std::invalid_argument("backward: action index out of range");
      const Scalar residual = c.q[a] - sequence[static_cast<std::size_t>(t)].td_target;
      loss += residual * residual;
    }
  }
  loss /= static_cast<Scalar>(n_trained);
  if (loss_out != nullptr) *loss_out = loss;

  Gradients g = zeros_like(params);
  VecX dh_next = VecX::Zero(cfg.recurrent);
  VecX dc_next = VecX::Zero(cfg.recurrent);

  for (int t = T - 1; t >= 0; --t) {
    const StepCache& c = caches[static_cast<std::size_t>(t)];
    const SequenceStep& step = sequence[static_cast<std::size_t>(t)];

    VecX dh4 = VecX::Zero(cfg.recurrent);
    if (t >= burn_in) {
      const int a = step.action;
      const Scalar dq = 2 * (c.q[a] - step.td_target) / static_cast<Scalar>(n_trained);
      g.W_Q.row(a).noalias() += dq * c.hidden.transpose();
      g.b_q[a] += dq;
      dh4 = dq * params.W_Q.row(a).transpose();
    }

    VecX dx;  // gradient w.r.t. the (post-dropout) layer-3 output at this step
    if (cfg.use_lstm) {
      dh4 += dh_next;
      const VecX one_minus_tc2 =
          (Scalar{1} - c.tanh_cell.array().square()).matrix();
      VecX dc = dc_next + dh4.cwiseProduct(c.go).cwiseProduct(one_minus_tc2);
      const VecX dgo = dh4.cwiseProduct(c.tanh_cell);
      const VecX dgi = dc.cwiseProduct(c.gg);
      const VecX dgg = dc.cwiseProduct(c.gi);
      const VecX dgf = dc.cwiseProduct(c.cell_prev);
      dc_next = dc.cwiseProduct(c.gf);

      const int R = cfg.recurrent;
      VecX dz(4 * R);
      dz.head(R) = (dgi.array() * c.gi.array() * (Scalar{1} - c.gi.array())).matrix();
      dz.segment(R, R) = (dgf.array() * c.gf.array() * (Scalar{1} - c.gf.array())).matrix();
      dz.segment(2 * R, R) = (dgg.array() * (Scalar{1} - c.gg.array().square())).matrix();
      dz.tail(R) = (dgo.array() * c.go.array() * (Scalar{1} - c.go.array())).matrix();

      g.lstm_Wx.noalias() += dz * c.h3d.transpose();
      g.lstm_Wh.noalias() += dz * c.hidden_prev.transpose();
      g.lstm_b += dz;
      dx = params.lstm_Wx.transpose() * dz;
      dh_next.noalias() = params.lstm_Wh.transpose() * dz;
    } else {
      const VecX dz4 =
          (dh4.array() * (Scalar{1} - c.hidden.array().square())).matrix();
      g.ff_W.noalias() += dz4 * c.h3d.transpose();
      g.ff_b += dz4;
      dx = params.ff_W.transpose() * dz4;
    }

    VecX dh3 = mask ? VecX(dx.cwiseProduct(mask->m3)) : dx;
    VecX dpre3 = (dh3.array() * (Scalar{1} - c.h3.array().square())).matrix();
    g.W_ego2.noalias() += dpre3 * c.hegod.transpose();
    g.b3 += dpre3;

    VecX dhegod = params.W_ego2.transpose() * dpre3;
    VecX dhego = mask ? VecX(dhegod.cwiseProduct(mask->m_ego)) : dhegod;
    VecX dpre_ego = (dhego.array() * (Scalar{1} - c.hego.array().square())).matrix();
    g.W_ego1.noalias() += dpre_ego * step.obs.xi5.transpose();
    g.b_ego += dpre_ego;

    for (int slot = 0; slot < kMaxOtherVehicles; ++slot) {
      const std::size_t si = static_cast<std::size_t>(params.slot_param_index(slot));
      const std::size_t su = static_cast<std::size_t>(slot);
      g.W3[su].noalias() += dpre3 * c.h2d.col(slot).transpose();
      VecX dh2d = params.W3[su].transpose() * dpre3;
      VecX dh2 = mask ? VecX(dh2d.cwiseProduct(mask->m2.col(slot))) : dh2d;
      VecX dpre2 = (dh2.array() * (Scalar{1} - c.h2.col(slot).array().square())).matrix();
      g.W2[si].noalias() += dpre2 * c.h1d.col(slot).transpose();
      g.b2[si] += dpre2;
      VecX dh1d = params.W2[si].transpose() * dpre2;
      VecX dh1 = mask ? VecX(dh1d.cwiseProduct(mask->m1.col(slot))) : dh1d;
      VecX dpre1 = (dh1.array() * (Scalar{1} - c.h1.col(slot).array().square())).matrix();
      g.W1[si].noalias() += dpre1 * step.obs.xi.col(slot).transpose();
      g.b1[si] += dpre1;
    }
  }

  return g;
}

Scalar global_norm(const Gradients& grads) {
  Scalar sum = 0;
  for (const TensorView& v : tensor_views(grads))
    for (std::ptrdiff_t i = 0; i < v.size; ++i) sum += v.data[i] * v.data[i];
  return std::sqrt(sum);
}

void apply_gradients(NetworkParams& params, const Gradients& grads, OptimizerState& opt,
                     const OptimizerConfig& cfg) {
  const Scalar norm = global_norm(grads);
  if (!std::isfinite(norm))
    throw std::runtime_error("apply_gradients: non-finite gradient norm (diverged?)");
  const Scalar scale =
      (cfg.grad_clip > 0 && norm > cfg.grad_clip) ? cfg.grad_clip / norm : Scalar{1};

  if (!opt.initialized) {
    opt.cache = zeros_like(params);
    opt.initialized = true;
  }

  auto pv = tensor_views(params);
  auto gv = tensor_views(grads);
  auto cv = tensor_views(opt.cache);
  if (pv.size() != gv.size() || pv.size() != cv.size())
    throw std::runtime_error("apply_gradients: tensor layout mismatch");

  for (std::size_t k = 0; k < pv.size(); ++k) {
    if (pv[k].size != gv[k].size || pv[k].size != cv[k].size)
      throw std::runtime_error("apply_gradients: tensor shape mismatch");
    for (std::ptrdiff_t i = 0; i < pv[k].size; ++i) {
      const Scalar gi = gv[k].data[i] * scale;
      Scalar& cache = cv[k].data[i];
      cache = cfg.decay * cache + (Scalar{1} - cfg.decay) * gi * gi;
      pv[k].data[i] -= cfg.learning_rate * gi / (std::sqrt(cache) + cfg.epsilon);
    }
  }
  ++opt.step;
}

}  // namespace crossing
