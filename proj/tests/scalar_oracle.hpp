#pragma once

#include <vector>

#include "crossing/network.hpp"

// Plain scalar-loop re-implementation of the Q-network forward pass, written
// directly from the layer definitions and kept free of any code shared with
// crossing::forward. Tests compare the two paths coefficient by coefficient.
namespace oracle {

struct State {
  std::vector<double> hidden;
  std::vector<double> cell;
};

struct Result {
  std::vector<double> q;
  State state;
};

State zero_state(const crossing::NetworkConfig& cfg);

Result forward(const crossing::NetworkParams& params, const crossing::Observation& obs,
               const State& state, const crossing::DropoutMask* mask = nullptr);

Result lstm_cell(const crossing::NetworkParams& params, const std::vector<double>& input,
                 const State& state);

}  // namespace oracle
