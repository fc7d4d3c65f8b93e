#pragma once
// Decentralised POMDP interface: n agents act jointly, each sees only its own
// observation, and all share one reward.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mbvd/core/matrix.hpp"

namespace mbvd::env {

struct EnvSpec {
  int n_agents = 1;
  int n_actions = 1;
  int obs_dim = 1;
  int state_dim = 1;
  int episode_limit = 1;
  bool has_action_mask = false;

  void validate() const;
  friend bool operator==(const EnvSpec&, const EnvSpec&) = default;
};

// n_agents x n_actions feasibility bits.
class ActionMask {
 public:
  ActionMask() = default;
  ActionMask(int n_agents, int n_actions, bool fill = true)
      : n_agents_(n_agents), n_actions_(n_actions), bits_(static_cast<std::size_t>(n_agents * n_actions), fill ? 1 : 0) {}

  int n_agents() const { return n_agents_; }
  int n_actions() const { return n_actions_; }
  bool operator()(int agent, int action) const { return bits_[static_cast<std::size_t>(agent * n_actions_ + action)] != 0; }
  void set(int agent, int action, bool value) { bits_[static_cast<std::size_t>(agent * n_actions_ + action)] = value ? 1 : 0; }
  std::span<const std::uint8_t> row(int agent) const {
    return {bits_.data() + static_cast<std::size_t>(agent * n_actions_), static_cast<std::size_t>(n_actions_)};
  }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  // Every agent has at least one feasible action.
  bool rows_nonempty() const;

  friend bool operator==(const ActionMask&, const ActionMask&) = default;

 private:
  int n_agents_ = 0;
  int n_actions_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct StepResult {
  Matrix obs;  // n_agents x obs_dim
  std::vector<double> state;
  double reward = 0.0;
  bool done = false;
  ActionMask avail;
};

// Base class handles validation, the step counter and the episode limit;
// concrete environments implement on_reset/on_step.
class Environment {
 public:
  virtual ~Environment() = default;

  const EnvSpec& spec() const { return spec_; }
  virtual std::string name() const = 0;

  // Deterministic given seed.
  StepResult reset(std::uint64_t seed);
  // Throws UsageError if the episode is over, the action count is wrong, or
  // an action is masked out.
  StepResult step(std::span<const int> joint_action);

  bool done() const { return done_; }
  int t() const { return t_; }
  const ActionMask& avail() const { return avail_; }

 protected:
  explicit Environment(EnvSpec spec);

  struct Transition {
    double reward = 0.0;
    bool terminal = false;
  };

  virtual void on_reset(std::uint64_t seed) = 0;
  virtual Transition on_step(std::span<const int> joint_action) = 0;
  virtual Matrix observe() const = 0;
  virtual std::vector<double> global_state() const = 0;
  // Defaults to all actions feasible.
  virtual ActionMask feasible_actions() const;

 private:
  StepResult snapshot(double reward) const;

  EnvSpec spec_;
  int t_ = 0;
  bool done_ = true;
  ActionMask avail_;
};

// Joint actions are indexed little-endian: agent 0 is the least significant digit.
int encode_joint_action(std::span<const int> actions, int n_actions);
std::vector<int> decode_joint_action(int index, int n_agents, int n_actions);

}  // namespace mbvd::env
