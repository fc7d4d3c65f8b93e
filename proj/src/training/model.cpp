#include "mbvd/training/model.hpp"

#include "mbvd/core/errors.hpp"

namespace mbvd::training {

std::string algo_name(Algo a) {
  switch (a) {
    case Algo::kVdn: return "vdn";
    case Algo::kQmix: return "qmix";
    case Algo::kMbvd: return "mbvd";
    case Algo::kQmixRs: return "qmix-rs";
    case Algo::kQmixLs: return "qmix-ls";
  }
  return "?";
}

Algo parse_algo(const std::string& name) {
  for (Algo a : {Algo::kVdn, Algo::kQmix, Algo::kMbvd, Algo::kQmixRs, Algo::kQmixLs}) {
    if (algo_name(a) == name) return a;
  }
  throw UsageError("unknown algo '" + name + "' (expected vdn, qmix, mbvd, qmix-rs, qmix-ls)");
}

void ModelConfig::validate() const {
  spec.validate();
  if (hidden_dim < 1 || latent_dim < 1 || imag_width < 1 || aggregator_hidden < 1 || mixer_embed < 1 ||
      hypernet_hidden < 1) {
    throw UsageError("model dimensions must be >= 1");
  }
  if (has_imagination() && k < 1) throw UsageError("k must be >= 1 for " + algo_name(algo) + ", got " + std::to_string(k));
}

void Networks::collect(nn::ParamList& out) {
  agent.collect(out);
  mixer.collect(out);
  if (imag) imag->collect(out);
}

void Networks::collect(nn::ConstParamList& out) const {
  agent.collect(out);
  mixer.collect(out);
  if (imag) imag->collect(out);
}

Networks make_networks(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  Networks net;
  net.config = c;
  Rng init = make_stream(seed, rng_streams::kInit);
  net.agent = agent::AgentNet(
      {.n_agents = c.spec.n_agents, .n_actions = c.spec.n_actions, .obs_dim = c.spec.obs_dim, .hidden_dim = c.hidden_dim},
      init);
  const mixing::MixerKind kind = c.algo == Algo::kVdn ? mixing::MixerKind::kVdn : mixing::MixerKind::kQmix;
  net.mixer = mixing::Mixer(kind,
                            {.n_agents = c.spec.n_agents, .cond_dim = c.cond_dim(), .embed_dim = c.mixer_embed,
                             .hypernet_hidden = c.hypernet_hidden},
                            init);
  if (c.has_imagination()) {
    Rng imag_rng = make_stream(seed, rng_streams::kImaginationInit);
    net.imag = imagination::ImaginationModule(
        {.n_agents = c.spec.n_agents, .n_actions = c.spec.n_actions, .hidden_dim = c.hidden_dim,
         .latent_dim = c.latent_dim, .state_dim = c.spec.state_dim, .width = c.imag_width,
         .aggregator_hidden = c.aggregator_hidden, .aggregator_input = c.algo == Algo::kQmixRs ? c.spec.state_dim : 0,
         .has_action_mask = c.spec.has_action_mask},
        imag_rng);
  }
  return net;
}

void copy_params(const Networks& src, Networks& dst) {
  nn::ConstParamList from;
  src.collect(from);
  nn::ParamList to;
  dst.collect(to);
  if (from.size() != to.size()) throw UsageError("copy_params: architectures differ");
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (!from[i]->value.same_shape(to[i]->value)) throw UsageError("copy_params: shape mismatch at " + from[i]->name);
    to[i]->value = from[i]->value;
  }
}

}  // namespace mbvd::training
