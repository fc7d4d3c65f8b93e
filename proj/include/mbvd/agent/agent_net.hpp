#pragma once
// Per-agent recurrent Q-network with parameters shared across agents.
//
//   x = obs (+) one_hot(last action) (+) one_hot(agent id)
//   h' = GRU(relu(x W1 + b1), h)
//   Q  = h' W2 + b2

#include <span>
#include <vector>

#include "mbvd/autodiff/var.hpp"
#include "mbvd/env/environment.hpp"
#include "mbvd/nn/layers.hpp"

namespace mbvd::agent {

// Large negative value written over unavailable actions before any max/argmax.
inline constexpr double kMaskedQ = -1e9;

struct AgentNetConfig {
  int n_agents = 1;
  int n_actions = 1;
  int obs_dim = 1;
  int hidden_dim = 64;
};

// n_agents x hidden_dim recurrent state (rows stacked per batch element).
struct AgentHidden {
  Matrix h;
};

struct AgentQOutput {
  Matrix q;  // n_agents x n_actions
  AgentHidden next_hidden;
};

class AgentNet {
 public:
  AgentNet() = default;
  AgentNet(const AgentNetConfig& config, Rng& rng);

  const AgentNetConfig& config() const { return config_; }
  int input_dim() const { return config_.obs_dim + config_.n_actions + config_.n_agents; }

  AgentHidden init_hidden(int n_agents) const;

  // Rows are (batch element, agent) pairs, agent fastest. Returns q and h'.
  struct Step {
    ad::Var q;
    ad::Var hidden;
  };
  Step forward(const ad::Var& inputs, const ad::Var& hidden);
  // Output layer alone: Q values for given hidden states.
  ad::Var q_head(const ad::Var& hidden);

  // Packs obs (+) last-action one-hot (+) agent-id one-hot. obs is
  // (batch * n_agents) x obs_dim; last_actions holds -1 where no previous
  // action exists (t = 0), which yields an all-zero one-hot.
  Matrix build_inputs(const Matrix& obs, std::span<const int> last_actions) const;

  nn::Linear& output_layer() { return fc2_; }
  void collect(nn::ParamList& out);
  void collect(nn::ConstParamList& out) const;

 private:
  AgentNetConfig config_;
  nn::Linear fc1_;
  nn::GruCell rnn_;
  nn::Linear fc2_;
};

// One recurrent step for a single environment from explicit one-hot pieces.
// Throws UsageError on any shape mismatch.
AgentQOutput agent_forward(AgentNet& net, const Matrix& obs, const Matrix& last_action_onehot,
                           const Matrix& agent_id_onehot, const AgentHidden& hidden);

// Greedy action over available entries; ties go to the lowest index.
// Throws UsageError when no action is available.
int masked_argmax(std::span<const double> q, std::span<const std::uint8_t> avail);

// Per agent: with probability epsilon a uniform draw over available actions,
// otherwise masked_argmax. q is n_agents x n_actions.
std::vector<int> select_actions(const Matrix& q, const env::ActionMask& avail, double epsilon, Rng& rng);

struct EpsilonSchedule {
  double start = 1.0;
  double finish = 0.05;
  long long anneal_steps = 50'000;
};

// Linear from start at step 0 to finish at anneal_steps, constant afterwards.
double epsilon_at(long long env_step, const EpsilonSchedule& schedule = {});

}  // namespace mbvd::agent
