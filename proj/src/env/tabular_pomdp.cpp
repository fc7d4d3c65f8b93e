#include "mbvd/env/tabular_pomdp.hpp"

#include "mbvd/core/errors.hpp"

namespace mbvd::env {
namespace {

constexpr int kNodes = 3;
constexpr int kActions = 2;

EnvSpec tabular_spec(const TabularPomdpParams& p) {
  if (p.horizon < 1) throw UsageError("tabular env: horizon must be >= 1");
  if (p.advance_prob < 0.0 || p.advance_prob > 1.0) throw UsageError("tabular env: advance_prob outside [0, 1]");
  EnvSpec s;
  s.n_agents = 2;
  s.n_actions = kActions;
  s.obs_dim = kNodes;
  s.state_dim = kNodes;
  s.episode_limit = p.horizon;
  s.has_action_mask = false;
  return s;
}

TabularModel build_model(const TabularPomdpParams& p) {
  using Outcome = TabularModel::Outcome;
  TabularModel m;
  m.n_states = kNodes;
  m.n_joint_actions = kActions * kActions;
  m.start_state = 0;
  m.reward.assign(kNodes, std::vector<double>(m.n_joint_actions, 0.0));
  m.transitions.assign(kNodes, std::vector<std::vector<Outcome>>(m.n_joint_actions));
  const double q = p.advance_prob;
  for (int ja = 0; ja < m.n_joint_actions; ++ja) {
    const auto u = decode_joint_action(ja, 2, kActions);
    const bool coordinated = u[0] == u[1];
    if (!coordinated) {
      for (int s = 0; s < kNodes; ++s) m.transitions[s][ja] = {{0, 1.0}};
      continue;
    }
    m.transitions[0][ja] = {{1, q}, {0, 1.0 - q}};
    if (u[0] == 0) {
      m.reward[1][ja] = 1.0;
      m.transitions[1][ja] = {{1, 1.0}};
    } else {
      m.transitions[1][ja] = {{2, q}, {1, 1.0 - q}};
    }
    m.reward[2][ja] = 5.0;
    m.transitions[2][ja] = {{0, 1.0}};
  }
  return m;
}

}  // namespace

TabularPomdp::TabularPomdp(TabularPomdpParams params)
    : TabularEnvironment(tabular_spec(params)), params_(params), model_(build_model(params)) {}

TabularModel TabularPomdp::model() const { return model_; }

void TabularPomdp::on_reset(std::uint64_t seed) {
  rng_.seed(seed);
  node_ = model_.start_state;
}

Environment::Transition TabularPomdp::on_step(std::span<const int> joint_action) {
  const int ja = encode_joint_action(joint_action, kActions);
  const double reward = model_.reward[node_][ja];
  const auto& outcomes = model_.transitions[node_][ja];
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double draw = u01(rng_);
  int next = outcomes.back().next_state;
  for (const auto& o : outcomes) {
    if (draw < o.probability) {
      next = o.next_state;
      break;
    }
    draw -= o.probability;
  }
  node_ = next;
  return {reward, false};
}

Matrix TabularPomdp::observe() const {
  Matrix obs(2, kNodes);
  obs(0, node_) = 1.0;
  obs(1, node_ == 2 ? 1 : 0) = 1.0;
  return obs;
}

std::vector<double> TabularPomdp::global_state() const {
  std::vector<double> s(kNodes, 0.0);
  s[node_] = 1.0;
  return s;
}

}  // namespace mbvd::env
