#include "mbvd/training/learner.hpp"

#include "mbvd/core/errors.hpp"

namespace mbvd::training {

Learner::Learner(const ModelConfig& model, const TrainConfig& train, std::uint64_t seed)
    : train_(train), live_(make_networks(model, seed)), target_(live_), optim_(train.optimizer) {
  if (train.batch_size == 0) throw UsageError("batch_size must be >= 1");
  if (train.target_update_episodes < 1) throw UsageError("target_update_episodes must be >= 1");
  if (!(train.grad_clip > 0.0)) throw UsageError("grad_clip must be > 0");
  if (!(train.loss.alpha >= 0.0 && train.loss.alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
}

std::optional<LossBreakdown> Learner::train_step(const ReplayBuffer& buffer, Rng& rng) {
  if (!buffer.can_sample(train_.batch_size)) return std::nullopt;
  const auto episodes = buffer.sample(train_.batch_size, rng);
  // Drawn for every algorithm so the sampling stream never depends on it.
  const std::uint64_t noise_key = rng();
  return train_on(Batch::from_episodes(episodes), noise_key);
}

LossBreakdown Learner::train_on(const Batch& batch, std::uint64_t noise_key) {
  nn::ParamList params;
  live_.collect(params);
  for (auto* p : params) p->zero_grad();
  const LossGraph g = build_loss(live_, target_, batch, train_.loss, noise_key);
  ad::backward(g.total);
  clip_grad_norm(params, train_.grad_clip);
  optim_.step(params);
  ++train_steps_;
  return g.values;
}

bool Learner::sync_target(long long episode_counter) {
  if (episode_counter <= 0 || episode_counter % train_.target_update_episodes != 0) return false;
  force_sync();
  return true;
}

void Learner::force_sync() { copy_params(live_, target_); }

env::EpisodeRecord run_episode(env::Environment& env, agent::AgentNet& agent, double epsilon, std::uint64_t env_seed,
                               Rng& rng) {
  ad::NoGradGuard no_grad;
  const env::EnvSpec& spec = env.spec();
  env::EpisodeRecord rec;
  env::StepResult step = env.reset(env_seed);
  rec.begin(spec, env_seed, step);
  agent::AgentHidden hidden = agent.init_hidden(spec.n_agents);
  std::vector<int> last(static_cast<std::size_t>(spec.n_agents), -1);
  while (!step.done) {
    const auto out = agent.forward(ad::constant(agent.build_inputs(step.obs, last)), ad::constant(hidden.h));
    hidden.h = out.hidden.value();
    const std::vector<int> actions = agent::select_actions(out.q.value(), step.avail, epsilon, rng);
    step = env.step(actions);
    rec.append(actions, step);
    last = actions;
  }
  return rec;
}

}  // namespace mbvd::training
