#pragma once
// Time-major padded view of a set of episodes. Step t of episode b is valid
// when t < length[b]; observation-side entries (obs, states, avail) also
// exist at t == length[b]. Everything past that is zero padding with
// all-true masks.

#include <vector>

#include "mbvd/env/episode.hpp"

namespace mbvd::training {

struct Batch {
  env::EnvSpec spec;
  std::size_t batch = 0;
  std::size_t max_len = 0;  // T: steps 0..T-1, observations 0..T
  std::vector<std::size_t> length;

  std::vector<Matrix> obs;                            // T+1 x (B*n) x obs_dim
  std::vector<std::vector<int>> last_actions;         // T+1 x (B*n), -1 when none
  std::vector<std::vector<int>> actions;              // T x (B*n)
  std::vector<std::vector<std::uint8_t>> avail;       // T+1 x (B*n*A)
  std::vector<Matrix> states;                         // T+1 x B x state_dim
  std::vector<std::vector<double>> rewards;           // T x B
  std::vector<std::vector<std::uint8_t>> terminal;    // T x B

  bool valid(std::size_t t, std::size_t b) const { return t < length[b]; }
  // Observation-side entry exists (t <= length).
  bool observed(std::size_t t, std::size_t b) const { return t <= length[b]; }
  std::size_t valid_steps() const;

  // pad_to extends T beyond the longest episode with pure padding.
  static Batch from_episodes(const std::vector<const env::EpisodeRecord*>& episodes, std::size_t pad_to = 0);
};

}  // namespace mbvd::training
