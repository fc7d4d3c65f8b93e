#include "mbvd/training/batch.hpp"

#include <algorithm>

#include "mbvd/core/errors.hpp"

namespace mbvd::training {

std::size_t Batch::valid_steps() const {
  std::size_t n = 0;
  for (std::size_t l : length) n += l;
  return n;
}

Batch Batch::from_episodes(const std::vector<const env::EpisodeRecord*>& episodes, std::size_t pad_to) {
  if (episodes.empty()) throw UsageError("Batch: no episodes");
  Batch out;
  out.spec = episodes.front()->spec;
  out.batch = episodes.size();
  for (const auto* e : episodes) {
    if (!(e->spec == out.spec)) throw UsageError("Batch: episodes come from different environments");
    out.length.push_back(e->length());
    out.max_len = std::max(out.max_len, e->length());
  }
  out.max_len = std::max(out.max_len, pad_to);

  const auto n = static_cast<std::size_t>(out.spec.n_agents);
  const auto na = static_cast<std::size_t>(out.spec.n_actions);
  const auto od = static_cast<std::size_t>(out.spec.obs_dim);
  const auto sd = static_cast<std::size_t>(out.spec.state_dim);
  const std::size_t B = out.batch;
  const std::size_t T = out.max_len;

  out.obs.assign(T + 1, Matrix(B * n, od));
  out.last_actions.assign(T + 1, std::vector<int>(B * n, -1));
  out.actions.assign(T, std::vector<int>(B * n, 0));
  out.avail.assign(T + 1, std::vector<std::uint8_t>(B * n * na, 1));
  out.states.assign(T + 1, Matrix(B, sd));
  out.rewards.assign(T, std::vector<double>(B, 0.0));
  out.terminal.assign(T, std::vector<std::uint8_t>(B, 0));

  for (std::size_t b = 0; b < B; ++b) {
    const env::EpisodeRecord& e = *episodes[b];
    const std::size_t len = e.length();
    for (std::size_t t = 0; t <= len; ++t) {
      for (std::size_t a = 0; a < n; ++a) {
        std::copy_n(e.obs[t].data() + a * od, od, out.obs[t].data() + (b * n + a) * od);
        if (t > 0) out.last_actions[t][b * n + a] = e.actions[t - 1][a];
        if (t < len) out.actions[t][b * n + a] = e.actions[t][a];
      }
      std::copy(e.avail[t].bits().begin(), e.avail[t].bits().end(), out.avail[t].begin() + static_cast<std::ptrdiff_t>(b * n * na));
      std::copy(e.states[t].begin(), e.states[t].end(), out.states[t].data() + b * sd);
      if (t < len) {
        out.rewards[t][b] = e.rewards[t];
        out.terminal[t][b] = e.dones[t] ? 1 : 0;
      }
    }
  }
  return out;
}

}  // namespace mbvd::training
