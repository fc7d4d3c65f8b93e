#include "mbvd/env/environment.hpp"

#include <algorithm>
#include <cmath>

#include "mbvd/core/errors.hpp"

namespace mbvd::env {

void EnvSpec::validate() const {
  if (n_agents < 1 || n_actions < 1 || obs_dim < 1 || state_dim < 1 || episode_limit < 1) {
    throw UsageError("EnvSpec dimensions must all be >= 1");
  }
}

bool ActionMask::rows_nonempty() const {
  for (int a = 0; a < n_agents_; ++a) {
    auto r = row(a);
    if (std::none_of(r.begin(), r.end(), [](std::uint8_t b) { return b != 0; })) return false;
  }
  return true;
}

Environment::Environment(EnvSpec spec) : spec_(spec) { spec_.validate(); }

ActionMask Environment::feasible_actions() const { return ActionMask(spec_.n_agents, spec_.n_actions, true); }

StepResult Environment::snapshot(double reward) const {
  StepResult r;
  r.obs = observe();
  r.state = global_state();
  r.reward = reward;
  r.done = done_;
  r.avail = avail_;
  return r;
}

StepResult Environment::reset(std::uint64_t seed) {
  on_reset(seed);
  t_ = 0;
  done_ = false;
  avail_ = feasible_actions();
  return snapshot(0.0);
}

StepResult Environment::step(std::span<const int> joint_action) {
  if (done_) throw UsageError(name() + ": step() on a finished episode (call reset first)");
  if (joint_action.size() != static_cast<std::size_t>(spec_.n_agents)) {
    throw UsageError(name() + ": expected " + std::to_string(spec_.n_agents) + " actions, got " +
                     std::to_string(joint_action.size()));
  }
  for (int a = 0; a < spec_.n_agents; ++a) {
    const int u = joint_action[static_cast<std::size_t>(a)];
    if (u < 0 || u >= spec_.n_actions) throw UsageError(name() + ": action out of range for agent " + std::to_string(a));
    if (!avail_(a, u)) {
      throw UsageError(name() + ": agent " + std::to_string(a) + " chose unavailable action " + std::to_string(u));
    }
  }
  const Transition tr = on_step(joint_action);
  if (!std::isfinite(tr.reward)) throw std::logic_error(name() + ": non-finite reward");
  ++t_;
  done_ = tr.terminal || t_ >= spec_.episode_limit;
  avail_ = feasible_actions();
  return snapshot(tr.reward);
}

int encode_joint_action(std::span<const int> actions, int n_actions) {
  int index = 0;
  int base = 1;
  for (int u : actions) {
    index += u * base;
    base *= n_actions;
  }
  return index;
}

std::vector<int> decode_joint_action(int index, int n_agents, int n_actions) {
  std::vector<int> out(static_cast<std::size_t>(n_agents));
  for (int a = 0; a < n_agents; ++a) {
    out[static_cast<std::size_t>(a)] = index % n_actions;
    index /= n_actions;
  }
  return out;
}

}  // namespace mbvd::env
