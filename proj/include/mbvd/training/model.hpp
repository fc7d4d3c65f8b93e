#pragma once
// The full set of learnable networks for one algorithm variant.

#include <optional>
#include <string>

#include "mbvd/agent/agent_net.hpp"
#include "mbvd/env/environment.hpp"
#include "mbvd/imagination/imagination.hpp"
#include "mbvd/mixing/mixer.hpp"

namespace mbvd::training {

enum class Algo { kVdn, kQmix, kMbvd, kQmixRs, kQmixLs };

std::string algo_name(Algo a);
// Throws UsageError for unknown names.
Algo parse_algo(const std::string& name);

struct ModelConfig {
  Algo algo = Algo::kMbvd;
  env::EnvSpec spec;
  int hidden_dim = 64;
  int latent_dim = 16;
  int k = 3;
  int imag_width = 128;
  int aggregator_hidden = 64;
  int mixer_embed = 32;
  int hypernet_hidden = 64;
  // QMIX only: append a zero block of state_dim to the mixer condition.
  bool pad_rollout_cond = false;
  // MBVD only: replace the rollout state by zeros and drop imagination losses.
  bool zero_rollout = false;

  bool has_imagination() const { return algo == Algo::kMbvd || algo == Algo::kQmixRs || algo == Algo::kQmixLs; }
  // Mixer condition is s (+) rollout block.
  bool rollout_cond() const { return has_imagination() || (algo == Algo::kQmix && pad_rollout_cond); }
  bool imagination_losses() const { return algo == Algo::kMbvd && !zero_rollout; }
  int cond_dim() const { return spec.state_dim * (rollout_cond() ? 2 : 1); }

  void validate() const;
};

struct Networks {
  ModelConfig config;
  agent::AgentNet agent;
  mixing::Mixer mixer;
  std::optional<imagination::ImaginationModule> imag;

  void collect(nn::ParamList& out);
  void collect(nn::ConstParamList& out) const;
};

// Agent and mixer are drawn from one seed stream and the imagination module
// from another, so variants sharing a seed start from identical agent/mixer
// weights.
Networks make_networks(const ModelConfig& config, std::uint64_t seed);

// Copies every parameter value from src into dst (same architecture).
void copy_params(const Networks& src, Networks& dst);

}  // namespace mbvd::training
