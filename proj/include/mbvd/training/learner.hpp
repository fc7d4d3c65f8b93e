#pragma once
// Live and target networks, optimizer state and the interaction loop.

#include <optional>

#include "mbvd/env/environment.hpp"
#include "mbvd/training/losses.hpp"
#include "mbvd/training/optimizer.hpp"
#include "mbvd/training/replay_buffer.hpp"

namespace mbvd::training {

struct TrainConfig {
  LossConfig loss;
  RmsPropConfig optimizer;
  double grad_clip = 10.0;
  std::size_t batch_size = 32;
  long long target_update_episodes = 200;
};

class Learner {
 public:
  Learner(const ModelConfig& model, const TrainConfig& train, std::uint64_t seed);

  Networks& live() { return live_; }
  Networks& target() { return target_; }
  const Networks& live() const { return live_; }
  const Networks& target() const { return target_; }
  const TrainConfig& train_config() const { return train_; }
  RmsProp& optimizer() { return optim_; }
  long long train_steps() const { return train_steps_; }
  void set_train_steps(long long n) { train_steps_ = n; }

  // One gradient step on a batch drawn from buffer. Returns the pre-step
  // losses, or nullopt (no step, rng untouched) while the buffer holds fewer
  // than batch_size episodes.
  std::optional<LossBreakdown> train_step(const ReplayBuffer& buffer, Rng& rng);
  // Gradient step on an explicit batch.
  LossBreakdown train_on(const Batch& batch, std::uint64_t noise_key);

  // target := live when episode_counter is a positive multiple of the
  // target interval. Returns whether a copy happened.
  bool sync_target(long long episode_counter);
  void force_sync();

 private:
  TrainConfig train_;
  Networks live_;
  Networks target_;
  RmsProp optim_;
  long long train_steps_ = 0;
};

// Rolls out one episode with epsilon-greedy actions from the agent network
// alone and returns the full record.
env::EpisodeRecord run_episode(env::Environment& env, agent::AgentNet& agent, double epsilon, std::uint64_t env_seed,
                               Rng& rng);

}  // namespace mbvd::training
