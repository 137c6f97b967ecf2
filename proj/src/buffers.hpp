#ifndef RPT_BUFFERS_HPP_
#define RPT_BUFFERS_HPP_

#include <cstdint>
#include <vector>

#include "numeric.hpp"
#include "rng.hpp"

namespace rpt {

struct Transition {
  Vector observation;
  int action = 0;
  double reward = 0.0;
  Vector next_observation;
  bool done = false;
  bool truncated = false;
  // On-policy extras; zero for Q-learners.
  double log_prob = 0.0;
  double value = 0.0;
};

// Fixed-capacity on-policy storage. Filled by record(), drained by clear()
// once a learner update has consumed it.
class RolloutBuffer {
 public:
  static constexpr int kDefaultCapacity = 512;

  explicit RolloutBuffer(int capacity = kDefaultCapacity);

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(items_.size()); }
  bool full() const { return size() == capacity_; }
  bool empty() const { return items_.empty(); }

  // Appends t; returns true once the buffer holds `capacity` transitions.
  // Throws UsageError when already full.
  bool record(Transition t);

  // Random permutation of [0, capacity) split into consecutive batches.
  // Requires a full buffer.
  std::vector<std::vector<int>> minibatches(int minibatch_size, Rng& rng) const;

  const Transition& operator[](int i) const { return items_[i]; }
  const std::vector<Transition>& items() const { return items_; }

  void clear() { items_.clear(); }

 private:
  int capacity_;
  std::vector<Transition> items_;
};

// Circular replay memory; a sliding window over the last `capacity` inserts.
class ReplayBuffer {
 public:
  static constexpr int kDefaultCapacity = 10000;

  explicit ReplayBuffer(int capacity = kDefaultCapacity);

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(items_.size()); }
  std::int64_t insertions() const { return insertions_; }

  void insert(Transition t);

  // Index 0 is the oldest retained transition.
  const Transition& at(int i) const;

  // Uniform with-replacement draw of chronological indices.
  std::vector<int> sample_indices(int batch, Rng& rng) const;
  std::vector<Transition> sample(int batch, Rng& rng) const;

  // Rebuilds the window from oldest-first contents and a total insert count.
  void restore(std::vector<Transition> oldest_first, std::int64_t insertions);

 private:
  int capacity_;
  std::vector<Transition> items_;
  std::int64_t insertions_ = 0;
};

}  // namespace rpt

#endif  // RPT_BUFFERS_HPP_
