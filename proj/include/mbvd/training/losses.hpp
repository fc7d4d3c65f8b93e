#pragma once
// Batched training objective: TD loss on the mixed value plus the world-model
// terms (posterior reconstruction, prior reconstruction, KL, feasibility).

#include <cstdint>

#include "mbvd/training/batch.hpp"
#include "mbvd/training/model.hpp"

namespace mbvd::training {

struct LossBreakdown {
  double l_rl = 0.0;
  double l_rc = 0.0;
  double l_rc_prior = 0.0;
  double l_kl = 0.0;
  double l_fa = 0.0;
  double total = 0.0;

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

struct LossConfig {
  double gamma = 0.99;
  double alpha = 0.3;
};

// Agent networks unrolled over a batch. Rows of q are ((t * B + b) * n + a);
// rows of joint_hidden are (t * B + b) for t = 0..T.
struct Unroll {
  ad::Var q;             // ((T+1)*B*n) x n_actions
  ad::Var joint_hidden;  // ((T+1)*B) x (n*hidden)
};

Unroll unroll_agents(agent::AgentNet& agent, const Batch& batch);

// (t, b) pairs addressed by a loss; t-major, b inner.
struct StepIndex {
  std::vector<std::size_t> t;
  std::vector<std::size_t> b;
  std::size_t size() const { return t.size(); }
  std::vector<std::size_t> rows(std::size_t batch, std::size_t t_offset = 0) const;
};

StepIndex valid_steps(const Batch& batch);

// Block appended to s in the mixer condition for steps (t + t_offset, b):
// imagined rollout state (mbvd), aggregate of real next states (qmix-rs) or of
// posterior means of real next hiddens (qmix-ls), zeros for padded qmix.
// Empty Var when the variant has no rollout block.
ad::Var rollout_block(Networks& net, const Batch& batch, const Unroll& unroll, const StepIndex& steps,
                      std::size_t t_offset);

// The k real future vectors an ablation feeds its aggregator at (t, b):
// entries t+1..t+k, zero past the episode's final observation.
std::vector<std::vector<double>> real_state_window(const Batch& batch, std::size_t t, std::size_t b, int k);

// y = r for terminal steps, else r + gamma * next_q_tot.
double td_target(double reward, double gamma, bool terminal, double next_q_tot);

ad::Var mse(const ad::Var& prediction, const ad::Var& target);
// Mean per-bit binary cross-entropy with probabilities clipped to [1e-7, 1 - 1e-7].
ad::Var bce_with_logits(const ad::Var& logits, const Matrix& targets);
// Mean over rows of KL[p || N(0, I)] + balanced KL[q || p].
ad::Var kl_term(const imagination::GaussianLatent& posterior, const imagination::GaussianLatent& prior, double alpha,
                const imagination::KlAnchor* anchor = nullptr);

// Records the value at every stop-gradient point of build_loss on the first
// pass and replays those values afterwards, so finite differences see the
// same frozen branches backprop does.
class StopGradientTape {
 public:
  ad::Var apply(const ad::Var& v);
  void rewind() { cursor_ = 0; }

 private:
  std::vector<Matrix> values_;
  std::size_t cursor_ = 0;
};

struct LossGraph {
  ad::Var total;
  LossBreakdown values;
};

// The imagination terms alone (reconstruction, feasibility, KL, prior
// reconstruction) on detached joint hiddens whose rows are (t * B + b).
// The tape is not rewound here.
LossGraph imagination_loss(Networks& live, const Batch& batch, const ad::Var& joint_hidden, double alpha,
                           std::uint64_t noise_key, StopGradientTape* tape = nullptr);

// Builds the full objective. The target networks are evaluated without
// gradient. noise_key addresses reparameterization noise by (b, t, dim), so
// padding never shifts it.
LossGraph build_loss(Networks& live, Networks& target, const Batch& batch, const LossConfig& config,
                     std::uint64_t noise_key, StopGradientTape* tape = nullptr);

}  // namespace mbvd::training
