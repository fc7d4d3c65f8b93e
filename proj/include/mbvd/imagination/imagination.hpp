#pragma once
// Latent world model over the agents' joint recurrent hidden h_t:
//   posterior  q(s | h_t)                 encoder, with a decoder back to h
//   prior      p(s_t | s_{t-1}, u_{t-1})  itself an auto-encoder of its input
//   feasibility head                       per-agent action-availability logits
//   aggregator                             GRU over a latent sequence -> state_dim
// Rollouts run k prior steps from the posterior mean under the agents' greedy
// policies and are fully deterministic.

#include <span>
#include <vector>

#include "mbvd/agent/agent_net.hpp"
#include "mbvd/autodiff/var.hpp"
#include "mbvd/env/environment.hpp"
#include "mbvd/nn/layers.hpp"

namespace mbvd::imagination {

inline constexpr double kLogStdMin = -10.0;
inline constexpr double kLogStdMax = 2.0;

// Diagonal Gaussian, one distribution per row.
struct GaussianLatent {
  ad::Var mean;
  ad::Var log_std;
};

struct ImaginationConfig {
  int n_agents = 1;
  int n_actions = 1;
  int hidden_dim = 64;  // per-agent recurrent width
  int latent_dim = 8;
  int state_dim = 1;
  int width = 128;
  int aggregator_hidden = 64;
  // Width of the vectors fed to the aggregator; 0 means latent_dim.
  int aggregator_input = 0;
  bool has_action_mask = false;

  int joint_hidden_dim() const { return n_agents * hidden_dim; }
  int joint_action_dim() const { return n_agents * n_actions; }
};

class ImaginationModule {
 public:
  ImaginationModule() = default;
  ImaginationModule(const ImaginationConfig& config, Rng& rng);

  const ImaginationConfig& config() const { return config_; }

  // joint_hidden: R x (n * hidden_dim)
  GaussianLatent encode(const ad::Var& joint_hidden);
  // latent: R x latent_dim -> R x (n * hidden_dim)
  ad::Var decode(const ad::Var& latent);
  // prev_latent: R x latent_dim, action_onehot: R x (n * n_actions)
  GaussianLatent prior(const ad::Var& prev_latent, const ad::Var& action_onehot);
  // Reconstruction of the prior's input (prev latent, joint action) from a
  // sample of its output: R x (latent_dim + n * n_actions).
  ad::Var prior_reconstruct(const ad::Var& prior_sample);
  // R x (n * n_actions) logits, agent-major.
  ad::Var feasibility_logits(const ad::Var& latent);
  // Consumes the sequence in order from a zero hidden; R x state_dim.
  ad::Var aggregate(std::span<const ad::Var> sequence);

  nn::Mlp& encoder() { return encoder_; }
  nn::Mlp& decoder() { return decoder_; }
  nn::Mlp& prior_net() { return prior_; }
  nn::Mlp& prior_decoder() { return prior_recon_; }
  nn::Mlp& feasibility_head() { return fa_head_; }
  nn::Linear& aggregator_output() { return agg_out_; }

  void collect(nn::ParamList& out);
  void collect(nn::ConstParamList& out) const;
  void collect_aggregator(nn::ConstParamList& out) const;

 private:
  GaussianLatent split(const ad::Var& out) const;

  ImaginationConfig config_;
  nn::Mlp encoder_;
  nn::Mlp decoder_;
  nn::Mlp prior_;
  nn::Mlp prior_recon_;
  nn::Mlp fa_head_;
  nn::GruCell agg_rnn_;
  nn::Linear agg_out_;
};

// mean + exp(log_std) * noise
ad::Var sample(const GaussianLatent& g, const Matrix& noise);

// Per-row KL[q || p] summed over dimensions: R x 1.
ad::Var kl_gaussian(const GaussianLatent& q, const GaussianLatent& p);
// KL[p || N(0, I)] per row: R x 1.
ad::Var kl_standard_normal(const GaussianLatent& p);
// alpha * KL[q || sg(p)] + (1 - alpha) * KL[sg(q) || p]. Same value as
// kl_gaussian; gradients to q are scaled by alpha and to p by 1 - alpha.
ad::Var kl_balanced(const GaussianLatent& q, const GaussianLatent& p, double alpha);

// Values standing in for the stop-gradient branches. With an anchor captured
// at parameters theta0, finite differences of the anchored loss reproduce the
// balanced gradient at theta0.
struct KlAnchor {
  Matrix q_mean, q_log_std, p_mean, p_log_std;
};
KlAnchor make_anchor(const GaussianLatent& q, const GaussianLatent& p);
ad::Var kl_balanced(const GaussianLatent& q, const GaussianLatent& p, double alpha, const KlAnchor& anchor);

// Plain-vector closed form, used by tools and as a cross-check.
double kl_gaussian(std::span<const double> mean_q, std::span<const double> log_std_q, std::span<const double> mean_p,
                   std::span<const double> log_std_p);

// logits R x (n * n_actions) -> flat mask bits with sigmoid(logit) > 0.5; an
// agent row with no feasible action falls back to all-true.
std::vector<std::uint8_t> predicted_mask(const Matrix& logits, int n_agents, int n_actions);

struct RolloutBatch {
  std::vector<ad::Var> latents;              // k+1 entries, R x latent_dim
  std::vector<Matrix> decoded_hiddens;       // k entries, R x (n * hidden_dim)
  std::vector<std::vector<int>> actions;     // k+1 entries, R * n joint actions
};

// Batched rollout. true_avail holds R * n * n_actions bits for step t. The
// root latent is the posterior mean of joint_hidden and the imagined latents
// are prior means; gradient flows along that chain only. Decoding and action
// selection are evaluated without gradient.
RolloutBatch generate_rollout(ImaginationModule& module, agent::AgentNet& agent, const ad::Var& joint_hidden,
                              std::span<const std::uint8_t> true_avail, int k);

struct ImaginedRollout {
  std::vector<std::vector<double>> latents;
  std::vector<std::vector<double>> decoded_hiddens;
  std::vector<std::vector<int>> actions;
};

// Single-step convenience form, inference mode.
ImaginedRollout generate_rollout(ImaginationModule& module, agent::AgentNet& agent,
                                 std::span<const double> joint_hidden, const env::ActionMask& true_avail, int k);

std::vector<double> aggregate_rollout(ImaginationModule& module, const std::vector<std::vector<double>>& latents);

// Joint action (R * n entries) -> R x (n * n_actions) one-hot.
Matrix joint_action_onehot(std::span<const int> actions, int n_agents, int n_actions);

}  // namespace mbvd::imagination
