#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "crossing/network.hpp"
#include "fd_check.hpp"
#include "helpers.hpp"

using namespace crossing;
using testutil::fd_report;
using testutil::random_sequence;
using testutil::tensor_refs;

TEST_SUITE("gradients") {

TEST_CASE("zero residuals produce zero gradients") {
  NetworkConfig cfg = testutil::small_config();
  const NetworkParams p = init_params(cfg, 42);
  Rng rng(43);
  std::vector<SequenceStep> seq = random_sequence(4, cfg, rng);
  // Set every trained target to the network's own output.
  RecurrentState st = initial_state(cfg);
  for (auto& step : seq) {
    const ForwardResult fw = forward(p, step.obs, st);
    st = fw.state;
    step.td_target = fw.q[step.action];
  }
  Scalar loss = 0;
  const Gradients g = backward(p, seq, initial_state(cfg), 0, nullptr, &loss);
  CHECK(loss == doctest::Approx(0.0));
  CHECK(global_norm(g) == doctest::Approx(0.0));
}

TEST_CASE("single-step head gradient matches the closed form") {
  NetworkConfig cfg = testutil::small_config();
  const NetworkParams p = init_params(cfg, 7);
  Rng rng(8);
  std::vector<SequenceStep> seq = random_sequence(1, cfg, rng);
  const ForwardResult fw = forward(p, seq[0].obs, initial_state(cfg));

  const Gradients g = backward(p, seq, initial_state(cfg), 0);
  const Scalar coeff = 2 * (fw.q[seq[0].action] - seq[0].td_target);
  const VecX expected = coeff * fw.state.hidden;  // h4 is the LSTM hidden
  for (int c = 0; c < cfg.recurrent; ++c)
    CHECK(g.W_Q(seq[0].action, c) == doctest::Approx(expected[c]).epsilon(1e-10));
  for (int a = 0; a < cfg.n_actions; ++a)
    if (a != seq[0].action) CHECK(g.W_Q.row(a).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("finite differences confirm the full BPTT gradient") {
  Rng rng(100);
  for (int seed = 0; seed < 2; ++seed) {
    NetworkConfig cfg = testutil::small_config(true, seed % 2 == 0);
    const NetworkParams p = init_params(cfg, rng.raw());
    const std::vector<SequenceStep> seq = random_sequence(4, cfg, rng);
    const auto report = fd_report(p, seq, 3, nullptr);
    CAPTURE(report.worst_tensor);
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_CASE("finite differences hold with dropout masks applied") {
  Rng rng(200);
  NetworkConfig cfg = testutil::small_config();
  const NetworkParams p = init_params(cfg, rng.raw());
  const std::vector<SequenceStep> seq = random_sequence(4, cfg, rng);
  const DropoutMask mask = sample_dropout_mask(cfg, rng);
  const auto report = fd_report(p, seq, 3, &mask);
  CAPTURE(report.worst_tensor);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("finite differences hold for single transitions and the DQN mode") {
  Rng rng(300);
  NetworkConfig drqn = testutil::small_config(true);
  CHECK(fd_report(init_params(drqn, rng.raw()), random_sequence(1, drqn, rng), 0, nullptr)
            .max_rel_error < 1e-4);

  NetworkConfig dqn = testutil::small_config(false);
  CHECK(fd_report(init_params(dqn, rng.raw()), random_sequence(1, dqn, rng), 0, nullptr)
            .max_rel_error < 1e-4);

  NetworkConfig unshared = testutil::small_config(true, false);
  CHECK(fd_report(init_params(unshared, rng.raw()), random_sequence(4, unshared, rng), 3, nullptr)
            .max_rel_error < 1e-4);
}

TEST_CASE("burn-in steps contribute state but no loss") {
  NetworkConfig cfg = testutil::small_config();
  const NetworkParams p = init_params(cfg, 17);
  Rng rng(18);
  std::vector<SequenceStep> seq = random_sequence(4, cfg, rng);

  Scalar loss_full = 0;
  (void)backward(p, seq, initial_state(cfg), 3, nullptr, &loss_full);

  // Burn-in targets are ignored entirely.
  for (int t = 0; t < 3; ++t) seq[static_cast<std::size_t>(t)].td_target = 1e9;
  Scalar loss_ignored = 0;
  (void)backward(p, seq, initial_state(cfg), 3, nullptr, &loss_ignored);
  CHECK(loss_full == doctest::Approx(loss_ignored));
}

TEST_CASE("the shared gradient is the sum of per-slot contributions") {
  NetworkConfig shared_cfg = testutil::small_config(true, true);
  const NetworkParams shared = init_params(shared_cfg, 23);

  NetworkConfig unshared_cfg = shared_cfg;
  unshared_cfg.share_weights = false;
  NetworkParams unshared = init_params(unshared_cfg, 23);
  for (int s = 0; s < kMaxOtherVehicles; ++s) {  // four exact copies
    unshared.W1[static_cast<std::size_t>(s)] = shared.W1[0];
    unshared.b1[static_cast<std::size_t>(s)] = shared.b1[0];
    unshared.W2[static_cast<std::size_t>(s)] = shared.W2[0];
    unshared.b2[static_cast<std::size_t>(s)] = shared.b2[0];
  }
  unshared.W_ego1 = shared.W_ego1;
  unshared.b_ego = shared.b_ego;
  unshared.W_ego2 = shared.W_ego2;
  unshared.W3 = shared.W3;
  unshared.b3 = shared.b3;
  unshared.lstm_Wx = shared.lstm_Wx;
  unshared.lstm_Wh = shared.lstm_Wh;
  unshared.lstm_b = shared.lstm_b;
  unshared.W_Q = shared.W_Q;
  unshared.b_q = shared.b_q;

  Rng rng(24);
  const std::vector<SequenceStep> seq = random_sequence(4, shared_cfg, rng);
  const Gradients gs = backward(shared, seq, initial_state(shared_cfg), 3);
  const Gradients gu = backward(unshared, seq, initial_state(unshared_cfg), 3);

  MatX sum_w1 = MatX::Zero(shared_cfg.h1, kVehicleFeatureDim);
  VecX sum_b1 = VecX::Zero(shared_cfg.h1);
  for (int s = 0; s < kMaxOtherVehicles; ++s) {
    sum_w1 += gu.W1[static_cast<std::size_t>(s)];
    sum_b1 += gu.b1[static_cast<std::size_t>(s)];
  }
  CHECK((gs.W1[0] - sum_w1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((gs.b1[0] - sum_b1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mismatched burn-in or an empty sequence is rejected") {
  NetworkConfig cfg = testutil::small_config();
  const NetworkParams p = init_params(cfg, 1);
  Rng rng(2);
  const std::vector<SequenceStep> seq = random_sequence(2, cfg, rng);
  CHECK_THROWS_AS((void)backward(p, seq, initial_state(cfg), 2), std::invalid_argument);
  CHECK_THROWS_AS((void)backward(p, {}, initial_state(cfg), 0), std::invalid_argument);
}

TEST_CASE("zero gradients leave parameters unchanged while the cache decays") {
  NetworkConfig cfg = testutil::small_config();
  NetworkParams p = init_params(cfg, 3);
  NetworkParams before = p;
  OptimizerState opt;
  OptimizerConfig ocfg;
  apply_gradients(p, zeros_like(p), opt, ocfg);
  auto va = tensor_refs(p);
  auto vb = tensor_refs(before);
  for (std::size_t k = 0; k < va.size(); ++k)
    for (std::ptrdiff_t i = 0; i < va[k].size; ++i) REQUIRE(va[k].data[i] == vb[k].data[i]);
  CHECK(opt.step == 1);
}

TEST_CASE("norm clipping is equivalent to pre-scaling the gradient") {
  NetworkConfig cfg = testutil::small_config();
  OptimizerConfig ocfg;
  Rng rng(9);
  NetworkParams a = init_params(cfg, 4);
  NetworkParams b = a;

  Gradients g = zeros_like(a);
  for_each_tensor(g, [&](const std::string&, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1, 1);
  });
  const Scalar norm = global_norm(g);
  Gradients big = g;
  // Scale so the norm is exactly 10x the clip threshold.
  for_each_tensor(big, [&](const std::string&, auto& t) { t *= 10 * ocfg.grad_clip / norm; });
  Gradients clipped = big;
  for_each_tensor(clipped, [&](const std::string&, auto& t) { t *= Scalar{0.1}; });

  OptimizerState oa, ob;
  apply_gradients(a, big, oa, ocfg);
  apply_gradients(b, clipped, ob, ocfg);

  auto va = tensor_refs(a);
  auto vb = tensor_refs(b);
  Scalar max_diff = 0;
  for (std::size_t k = 0; k < va.size(); ++k)
    for (std::ptrdiff_t i = 0; i < va[k].size; ++i)
      max_diff = std::max(max_diff, std::abs(va[k].data[i] - vb[k].data[i]));
  CHECK(max_diff < 1e-12);
}

TEST_CASE("identical optimizer calls from identical state give identical results") {
  NetworkConfig cfg = testutil::small_config();
  NetworkParams a = init_params(cfg, 6);
  NetworkParams b = a;
  Rng rng(7);
  Gradients g = zeros_like(a);
  for_each_tensor(g, [&](const std::string&, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1, 1);
  });
  OptimizerState oa, ob;
  OptimizerConfig ocfg;
  apply_gradients(a, g, oa, ocfg);
  apply_gradients(b, g, ob, ocfg);
  auto va = tensor_refs(a);
  auto vb = tensor_refs(b);
  for (std::size_t k = 0; k < va.size(); ++k)
    for (std::ptrdiff_t i = 0; i < va[k].size; ++i) REQUIRE(va[k].data[i] == vb[k].data[i]);
}

TEST_CASE("non-finite gradients abort with a training error") {
  NetworkConfig cfg = testutil::small_config();
  NetworkParams p = init_params(cfg, 6);
  Gradients g = zeros_like(p);
  g.b_q[0] = std::numeric_limits<Scalar>::quiet_NaN();
  OptimizerState opt;
  CHECK_THROWS_AS(apply_gradients(p, g, opt, OptimizerConfig{}), std::runtime_error);
}

}  // TEST_SUITE
