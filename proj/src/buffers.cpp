#include "buffers.hpp"

#include <numeric>
#include <string>
#include <utility>

#include "error.hpp"

namespace rpt {

RolloutBuffer::RolloutBuffer(int capacity) : capacity_(capacity) {
  if (capacity <= 0) throw UsageError("rollout capacity must be positive");
  items_.reserve(capacity);
}

bool RolloutBuffer::record(Transition t) {
  if (full()) {
    throw UsageError("rollout buffer is full (" + std::to_string(capacity_) +
                     "); an update must drain it first");
  }
  items_.push_back(std::move(t));
  return full();
}

std::vector<std::vector<int>> RolloutBuffer::minibatches(int minibatch_size,
                                                         Rng& rng) const {
  if (!full()) {
    throw UsageError("minibatches requested from a partially filled rollout (" +
                     std::to_string(size()) + "/" + std::to_string(capacity_) +
                     ")");
  }
  if (minibatch_size <= 0) throw UsageError("minibatch size must be positive");
  std::vector<int> order(capacity_);
  std::iota(order.begin(), order.end(), 0);
  for (int i = capacity_ - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < capacity_; start += minibatch_size) {
    const int end = std::min(capacity_, start + minibatch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity <= 0) throw UsageError("replay capacity must be positive");
}

void ReplayBuffer::insert(Transition t) {
  if (size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[insertions_ % capacity_] = std::move(t);
  }
  ++insertions_;
}

const Transition& ReplayBuffer::at(int i) const {
  if (i < 0 || i >= size()) throw UsageError("replay index out of range");
  if (size() < capacity_) return items_[i];
  return items_[(insertions_ + i) % capacity_];
}

std::vector<int> ReplayBuffer::sample_indices(int batch, Rng& rng) const {
  if (batch <= 0) throw UsageError("replay batch must be positive");
  if (size() < batch) {
    throw UsageError("replay holds " + std::to_string(size()) +
                     " transitions, batch of " + std::to_string(batch) +
                     " requested");
  }
  std::vector<int> idx(batch);
  for (int& i : idx) i = static_cast<int>(rng.uniform_int(size()));
  return idx;
}

std::vector<Transition> ReplayBuffer::sample(int batch, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(batch);
  for (int i : sample_indices(batch, rng)) out.push_back(at(i));
  return out;
}

void ReplayBuffer::restore(std::vector<Transition> oldest_first,
                           std::int64_t insertions) {
  const auto n = static_cast<std::int64_t>(oldest_first.size());
  if (n > capacity_ || n != std::min<std::int64_t>(insertions, capacity_)) {
    throw FormatError("replay restore: size inconsistent with insert count");
  }
  items_.clear();
  items_.resize(oldest_first.size());
  insertions_ = insertions;
  // Place entries so that at(i) yields oldest_first[i].
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t slot = n < capacity_ ? i : (insertions + i) % capacity_;
    items_[slot] = std::move(oldest_first[i]);
  }
}

}  // namespace rpt
