#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "crossing/observation.hpp"
#include "crossing/rng.hpp"

namespace crossing {

/// One stored transition, with the episode bookkeeping recurrent sampling
/// needs. `terminal` marks the episode's last transition.
struct Experience {
  Observation obs;
  int action = 0;
  Scalar reward = 0.0;
  Observation next_obs;
  bool terminal = false;
  std::uint64_t episode_id = 0;
  int step_index = 0;
};

/// Episode-aware experience memory. Whole episodes go in and whole episodes
/// are evicted, oldest first, so a stored episode is never left partial.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push_episode(std::vector<Experience> episode);

  std::size_t size() const { return total_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t n_episodes() const { return episodes_.size(); }
  bool empty() const { return total_ == 0; }

  /// The k-th stored transition in age order (0 = oldest surviving).
  const Experience& at(std::size_t flat_index) const;

  /// One contiguous slice of one episode ending at a uniformly drawn
  /// transition. Slices near the episode start are shorter (burn-in shrinks);
  /// they never cross episode boundaries.
  std::vector<Experience> sample_sequence(int sequence_length, Rng& rng) const;

  std::vector<std::vector<Experience>> sample_sequences(int batch_size, int sequence_length,
                                                        Rng& rng) const;

 private:
  struct StoredEpisode {
    std::vector<Experience> transitions;
  };

  std::size_t capacity_;
  std::size_t total_ = 0;
  std::deque<StoredEpisode> episodes_;
};

/// Epsilon-greedy over the Q row: explore uniformly with probability epsilon,
/// otherwise argmax with ties broken toward the lowest action index.
int select_action(const VecX& q_values, Scalar epsilon, Rng& rng);

/// Bellman target y = r + gamma * max_a Q(s', a); terminal transitions cut
/// the bootstrap.
inline Scalar td_target(Scalar reward, const VecX& next_q, bool terminal, Scalar gamma) {
  if (terminal) return reward;
  return reward + gamma * next_q.maxCoeff();
}

}  // namespace crossing
