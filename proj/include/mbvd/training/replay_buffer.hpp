#pragma once

#include <deque>
#include <vector>

#include "mbvd/core/rng.hpp"
#include "mbvd/env/episode.hpp"

namespace mbvd::training {

// FIFO store of whole episodes.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 5000);

  void push(env::EpisodeRecord episode);
  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Total pushes, including evicted episodes.
  long long inserted() const { return inserted_; }
  bool can_sample(std::size_t batch_size) const { return episodes_.size() >= batch_size; }
  const env::EpisodeRecord& at(std::size_t i) const { return episodes_.at(i); }

  // Uniform without replacement. Throws UsageError if fewer than batch_size
  // episodes are stored.
  std::vector<const env::EpisodeRecord*> sample(std::size_t batch_size, Rng& rng) const;

 private:
  std::size_t capacity_;
  long long inserted_ = 0;
  std::deque<env::EpisodeRecord> episodes_;
};

}  // namespace mbvd::training
