#pragma once
// Episode files are JSON lines: a header record with the format tag, version,
// EnvSpec and seed, then one record per step (obs, state, avail, and for all
// but the final post-terminal record: actions, reward, done).

#include <filesystem>
#include <vector>

#include "mbvd/env/episode.hpp"

namespace mbvd::harness {

inline constexpr const char* kEpisodeFormat = "mbvd-episodes";
inline constexpr int kEpisodeVersion = 1;

void write_episodes(const std::filesystem::path& path, const std::vector<env::EpisodeRecord>& episodes);
// Throws LoadError on malformed input; each record is validated.
std::vector<env::EpisodeRecord> read_episodes(const std::filesystem::path& path);

}  // namespace mbvd::harness
