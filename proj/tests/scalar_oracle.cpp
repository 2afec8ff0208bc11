#include "scalar_oracle.hpp"

#include <cmath>

namespace oracle {

namespace {

using crossing::MatX;
using crossing::VecX;

std::vector<double> affine(const MatX& W, const VecX& b, const std::vector<double>& x) {
  std::vector<double> out(static_cast<std::size_t>(W.rows()));
  for (Eigen::Index r = 0; r < W.rows(); ++r) {
    double acc = b(r);
    for (Eigen::Index c = 0; c < W.cols(); ++c) acc += W(r, c) * x[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
  return out;
}

void tanh_inplace(std::vector<double>& v) {
  for (double& x : v) x = std::tanh(x);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void mask_inplace(std::vector<double>& v, const MatX& m, int col) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= m(static_cast<Eigen::Index>(i), col);
}

void mask_inplace(std::vector<double>& v, const VecX& m) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= m(static_cast<Eigen::Index>(i));
}

}  // namespace

State zero_state(const crossing::NetworkConfig& cfg) {
  return {std::vector<double>(static_cast<std::size_t>(cfg.recurrent), 0.0),
          std::vector<double>(static_cast<std::size_t>(cfg.recurrent), 0.0)};
}

Result lstm_cell(const crossing::NetworkParams& p, const std::vector<double>& input,
                 const State& state) {
  const std::size_t R = static_cast<std::size_t>(p.cfg.recurrent);
  std::vector<double> z(4 * R, 0.0);
  for (std::size_t r = 0; r < 4 * R; ++r) {
    double acc = p.lstm_b(static_cast<Eigen::Index>(r));
    for (std::size_t c = 0; c < input.size(); ++c)
      acc += p.lstm_Wx(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * input[c];
    for (std::size_t c = 0; c < R; ++c)
      acc += p.lstm_Wh(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) *
             state.hidden[c];
    z[r] = acc;
  }

  Result res;
  res.state.hidden.resize(R);
  res.state.cell.resize(R);
  for (std::size_t k = 0; k < R; ++k) {
    const double gi = logistic(z[k]);
    const double gf = logistic(z[R + k]);
    const double gg = std::tanh(z[2 * R + k]);
    const double go = logistic(z[3 * R + k]);
    const double cell = gf * state.cell[k] + gi * gg;
    res.state.cell[k] = cell;
    res.state.hidden[k] = go * std::tanh(cell);
  }
  res.q = res.state.hidden;
  return res;
}

Result forward(const crossing::NetworkParams& p, const crossing::Observation& obs,
               const State& state, const crossing::DropoutMask* mask) {
  const crossing::NetworkConfig& cfg = p.cfg;

  std::vector<double> h3_sum(static_cast<std::size_t>(cfg.h3), 0.0);
  for (int slot = 0; slot < crossing::kMaxOtherVehicles; ++slot) {
    const std::size_t si = static_cast<std::size_t>(p.slot_param_index(slot));
    std::vector<double> xi(crossing::kVehicleFeatureDim);
    for (int r = 0; r < crossing::kVehicleFeatureDim; ++r) xi[static_cast<std::size_t>(r)] = obs.xi(r, slot);

    std::vector<double> h1 = affine(p.W1[si], p.b1[si], xi);
    tanh_inplace(h1);
    if (mask != nullptr) mask_inplace(h1, mask->m1, slot);

    std::vector<double> h2 = affine(p.W2[si], p.b2[si], h1);
    tanh_inplace(h2);
    if (mask != nullptr) mask_inplace(h2, mask->m2, slot);

    const MatX& W3 = p.W3[static_cast<std::size_t>(slot)];
    for (Eigen::Index r = 0; r < W3.rows(); ++r) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < W3.cols(); ++c) acc += W3(r, c) * h2[static_cast<std::size_t>(c)];
      h3_sum[static_cast<std::size_t>(r)] += acc;
    }
  }

  std::vector<double> xi5(crossing::kNumActions);
  for (int r = 0; r < crossing::kNumActions; ++r) xi5[static_cast<std::size_t>(r)] = obs.xi5(r);
  std::vector<double> hego = affine(p.W_ego1, p.b_ego, xi5);
  tanh_inplace(hego);
  if (mask != nullptr) mask_inplace(hego, mask->m_ego);

  std::vector<double> h3(static_cast<std::size_t>(cfg.h3));
  for (Eigen::Index r = 0; r < cfg.h3; ++r) {
    double acc = p.b3(r) + h3_sum[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < cfg.h_ego; ++c)
      acc += p.W_ego2(r, c) * hego[static_cast<std::size_t>(c)];
    h3[static_cast<std::size_t>(r)] = std::tanh(acc);
  }
  if (mask != nullptr) mask_inplace(h3, mask->m3);

  std::vector<double> h4;
  Result res;
  if (cfg.use_lstm) {
    Result cell = lstm_cell(p, h3, state);
    h4 = cell.state.hidden;
    res.state = cell.state;
  } else {
    h4 = affine(p.ff_W, p.ff_b, h3);
    tanh_inplace(h4);
    res.state = state;
  }

  res.q = affine(p.W_Q, p.b_q, h4);
  return res;
}

}  // namespace oracle
