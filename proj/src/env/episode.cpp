#include "mbvd/env/episode.hpp"

#include <cmath>

#include "mbvd/core/errors.hpp"

namespace mbvd::env {

double EpisodeRecord::total_return() const {
  double r = 0.0;
  for (double x : rewards) r += x;
  return r;
}

void EpisodeRecord::begin(const EnvSpec& s, std::uint64_t episode_seed, const StepResult& first) {
  *this = EpisodeRecord{};
  spec = s;
  seed = episode_seed;
  obs.push_back(first.obs);
  states.push_back(first.state);
  avail.push_back(first.avail);
}

void EpisodeRecord::append(std::span<const int> joint_action, const StepResult& next) {
  actions.emplace_back(joint_action.begin(), joint_action.end());
  rewards.push_back(next.reward);
  dones.push_back(next.done);
  obs.push_back(next.obs);
  states.push_back(next.state);
  avail.push_back(next.avail);
}

void EpisodeRecord::validate() const {
  spec.validate();
  const std::size_t t = length();
  if (t == 0) throw UsageError("episode: empty trajectory");
  if (t > static_cast<std::size_t>(spec.episode_limit)) throw UsageError("episode: longer than episode_limit");
  if (obs.size() != t + 1 || states.size() != t + 1 || avail.size() != t + 1 || rewards.size() != t ||
      dones.size() != t) {
    throw UsageError("episode: inconsistent sequence lengths");
  }
  const auto n = static_cast<std::size_t>(spec.n_agents);
  for (std::size_t i = 0; i <= t; ++i) {
    if (obs[i].rows() != n || obs[i].cols() != static_cast<std::size_t>(spec.obs_dim)) {
      throw UsageError("episode: observation shape mismatch at step " + std::to_string(i));
    }
    if (states[i].size() != static_cast<std::size_t>(spec.state_dim)) {
      throw UsageError("episode: state size mismatch at step " + std::to_string(i));
    }
    if (avail[i].n_agents() != spec.n_agents || avail[i].n_actions() != spec.n_actions || !avail[i].rows_nonempty()) {
      throw UsageError("episode: malformed availability mask at step " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < t; ++i) {
    if (actions[i].size() != n) throw UsageError("episode: wrong joint action size at step " + std::to_string(i));
    for (std::size_t a = 0; a < n; ++a) {
      const int u = actions[i][a];
      if (u < 0 || u >= spec.n_actions || !avail[i](static_cast<int>(a), u)) {
        throw UsageError("episode: action violates availability mask at step " + std::to_string(i));
      }
    }
    if (!std::isfinite(rewards[i])) throw UsageError("episode: non-finite reward");
    if (dones[i] != (i + 1 == t)) throw UsageError("episode: exactly the final step must be terminal");
  }
}

}  // namespace mbvd::env
