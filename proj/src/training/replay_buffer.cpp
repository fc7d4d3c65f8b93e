#include "mbvd/training/replay_buffer.hpp"

#include <algorithm>
#include <numeric>

#include "mbvd/core/errors.hpp"

namespace mbvd::training {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw UsageError("ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::push(env::EpisodeRecord episode) {
  if (episodes_.size() == capacity_) episodes_.pop_front();
  episodes_.push_back(std::move(episode));
  ++inserted_;
}

std::vector<const env::EpisodeRecord*> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (!can_sample(batch_size) || batch_size == 0) {
    throw UsageError("ReplayBuffer: cannot sample " + std::to_string(batch_size) + " of " +
                     std::to_string(episodes_.size()) + " episodes");
  }
  // Partial Fisher-Yates over indices.
  std::vector<std::size_t> idx(episodes_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<const env::EpisodeRecord*> out;
  out.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(&episodes_[idx[i]]);
  }
  return out;
}

}  // namespace mbvd::training
