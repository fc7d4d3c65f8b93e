#pragma once
// Versioned JSON archive: config snapshot, named parameter arrays for the live
// and target networks, optimizer state and counters.

#include <filesystem>
#include <memory>
#include <string>

#include "mbvd/harness/config.hpp"
#include "mbvd/training/learner.hpp"

namespace mbvd::harness {

inline constexpr const char* kCheckpointFormat = "mbvd-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Counters {
  long long env_steps = 0;
  long long episodes = 0;
  long long train_steps = 0;
};

// Written to a temporary sibling and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const Counters& counters,
                     training::Learner& learner);

struct LoadedCheckpoint {
  RunConfig config;
  Counters counters;
  std::unique_ptr<training::Learner> learner;
};

// Throws LoadError on a missing file, bad format tag or version, or any
// parameter whose name or shape disagrees with the rebuilt networks.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mbvd::harness
