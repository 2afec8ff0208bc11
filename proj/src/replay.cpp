#include "crossing/replay.hpp"

#include <stdexcept>

namespace crossing {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
}

void ReplayBuffer::push_episode(std::vector<Experience> episode) {
  if (episode.empty()) return;
  total_ += episode.size();
  episodes_.push_back({std::move(episode)});
  while (total_ > capacity_ && episodes_.size() > 1) {
    total_ -= episodes_.front().transitions.size();
    episodes_.pop_front();
  }
}

const Experience& ReplayBuffer::at(std::size_t flat_index) const {
  if (flat_index >= total_) throw std::out_of_range("ReplayBuffer::at: index out of range");
  for (const StoredEpisode& ep : episodes_) {
    if (flat_index < ep.transitions.size()) return ep.transitions[flat_index];
    flat_index -= ep.transitions.size();
  }
  throw std::out_of_range("ReplayBuffer::at: index out of range");
}

std::vector<Experience> ReplayBuffer::sample_sequence(int sequence_length, Rng& rng) const {
  if (empty()) return {};
  if (sequence_length < 1)
    throw std::invalid_argument("ReplayBuffer: sequence_length must be >= 1");

  std::size_t flat = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(total_));
  if (flat >= total_) flat = total_ - 1;

  for (const StoredEpisode& ep : episodes_) {
    if (flat >= ep.transitions.size()) {
      flat -= ep.transitions.size();
      continue;
    }
    const int end = static_cast<int>(flat);  // sequence ends here, inclusive
    const int begin = std::max(0, end - sequence_length + 1);
    return std::vector<Experience>(ep.transitions.begin() + begin,
                                   ep.transitions.begin() + end + 1);
  }
  return {};
}

std::vector<std::vector<Experience>> ReplayBuffer::sample_sequences(int batch_size,
                                                                    int sequence_length,
                                                                    Rng& rng) const {
  std::vector<std::vector<Experience>> batch;
  if (empty()) return batch;  // not ready
  batch.reserve(static_cast<std::size_t>(batch_size));
  for (int k = 0; k < batch_size; ++k) batch.push_back(sample_sequence(sequence_length, rng));
  return batch;
}

int select_action(const VecX& q_values, Scalar epsilon, Rng& rng) {
  const int n = static_cast<int>(q_values.size());
  if (epsilon > 0 && rng.bernoulli(epsilon)) return rng.uniform_int(n);
  int best = 0;
  for (int a = 1; a < n; ++a)
    if (q_values[a] > q_values[best]) best = a;
  return best;
}

}  // namespace crossing
