#pragma once
// Value-decomposition mixers: Q_tot from the agents' chosen Q-values, optionally
// conditioned on a global vector (true state, possibly with the aggregated
// rollout state appended).

#include <functional>
#include <span>

#include "mbvd/autodiff/var.hpp"
#include "mbvd/nn/layers.hpp"

namespace mbvd::mixing {

// Additive decomposition: sum of chosen Q-values.
double vdn_mix(std::span<const double> chosen_q);

struct QmixConfig {
  int n_agents = 1;
  int cond_dim = 1;
  int embed_dim = 32;
  int hypernet_hidden = 64;
};

// Two-layer monotonic mixer whose weights come from hypernetworks of cond:
//   W1 = |hyper_w1(cond)| (n x embed), b1 = hyper_b1(cond)
//   W2 = |hyper_w2(cond)| (embed),     V  = hyper_v(cond)
//   Q_tot = elu(q W1 + b1) . W2 + V
// Non-negative weights and a monotone activation make dQ_tot/dq_a >= 0.
class QmixMixer {
 public:
  QmixMixer() = default;
  QmixMixer(const QmixConfig& config, Rng& rng);

  const QmixConfig& config() const { return config_; }

  // chosen_q: R x n_agents, cond: R x cond_dim -> R x 1
  ad::Var forward(const ad::Var& chosen_q, const ad::Var& cond);
  double mix(std::span<const double> chosen_q, std::span<const double> cond);

  nn::Mlp& hyper_w1() { return hyper_w1_; }
  nn::Linear& hyper_b1() { return hyper_b1_; }
  nn::Linear& hyper_w2() { return hyper_w2_; }
  nn::Mlp& hyper_v() { return hyper_v_; }

  void collect(nn::ParamList& out);
  void collect(nn::ConstParamList& out) const;

 private:
  QmixConfig config_;
  nn::Mlp hyper_w1_;
  nn::Linear hyper_b1_;
  nn::Linear hyper_w2_;
  nn::Mlp hyper_v_;
};

enum class MixerKind { kVdn, kQmix };

// Dispatches to VDN (cond ignored) or QMIX.
class Mixer {
 public:
  Mixer() = default;
  Mixer(MixerKind kind, const QmixConfig& config, Rng& rng);

  MixerKind kind() const { return kind_; }
  ad::Var forward(const ad::Var& chosen_q, const ad::Var& cond);
  double mix(std::span<const double> chosen_q, std::span<const double> cond);
  QmixMixer& qmix() { return qmix_; }

  void collect(nn::ParamList& out);
  void collect(nn::ConstParamList& out) const;

 private:
  MixerKind kind_ = MixerKind::kVdn;
  QmixMixer qmix_;
};

using MixFunction = std::function<double(std::span<const double> chosen_q)>;

inline constexpr long long kIgmMaxJointActions = 100'000;

// True iff the joint argmax of mix over all n_actions^n joint actions equals
// the tuple of per-agent argmaxes of q_matrix (n x n_actions). Ties resolve
// to the lowest index per agent and to the lexicographically first joint
// action (agent 0 most significant). Throws CapacityError above
// kIgmMaxJointActions joint actions.
bool check_igm(const MixFunction& mix, const Matrix& q_matrix);

}  // namespace mbvd::mixing
