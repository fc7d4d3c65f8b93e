#pragma once

#include <vector>

#include "mbvd/env/environment.hpp"

namespace mbvd::env {

// One stored trajectory of length T. Observations, states and masks hold
// T + 1 entries (the last is the post-terminal observation); actions,
// rewards and done flags hold T. Only the final step is terminal.
struct EpisodeRecord {
  EnvSpec spec;
  std::uint64_t seed = 0;
  std::vector<Matrix> obs;
  std::vector<std::vector<double>> states;
  std::vector<ActionMask> avail;
  std::vector<std::vector<int>> actions;
  std::vector<double> rewards;
  std::vector<bool> dones;

  std::size_t length() const { return actions.size(); }
  double total_return() const;

  // Throws UsageError when shapes, masks or the terminal flag are inconsistent.
  void validate() const;

  void begin(const EnvSpec& s, std::uint64_t episode_seed, const StepResult& first);
  void append(std::span<const int> joint_action, const StepResult& next);

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

}  // namespace mbvd::env
