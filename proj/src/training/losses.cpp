#include "mbvd/training/losses.hpp"

#include <algorithm>
#include <cmath>

#include "mbvd/core/errors.hpp"

namespace mbvd::training {

namespace {

Matrix state_rows(const Batch& batch, const StepIndex& steps, std::size_t t_offset) {
  const auto sd = static_cast<std::size_t>(batch.spec.state_dim);
  Matrix m(steps.size(), sd);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const Matrix& s = batch.states[steps.t[i] + t_offset];
    std::copy_n(s.data() + steps.b[i] * sd, sd, m.data() + i * sd);
  }
  return m;
}

std::vector<std::uint8_t> avail_rows(const Batch& batch, const StepIndex& steps, std::size_t t_offset) {
  const auto w = static_cast<std::size_t>(batch.spec.n_agents * batch.spec.n_actions);
  std::vector<std::uint8_t> bits(steps.size() * w);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& src = batch.avail[steps.t[i] + t_offset];
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(steps.b[i] * w), w,
                bits.begin() + static_cast<std::ptrdiff_t>(i * w));
  }
  return bits;
}

Matrix noise(std::uint64_t key, std::uint64_t stream, const StepIndex& steps, std::size_t dim) {
  Matrix m(steps.size(), dim);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = counter_normal(key, 2 * steps.b[i] + stream, steps.t[i], j);
  }
  return m;
}

}  // namespace

std::vector<std::size_t> StepIndex::rows(std::size_t batch, std::size_t t_offset) const {
  std::vector<std::size_t> r(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) r[i] = (t[i] + t_offset) * batch + b[i];
  return r;
}

StepIndex valid_steps(const Batch& batch) {
  StepIndex s;
  for (std::size_t t = 0; t < batch.max_len; ++t) {
    for (std::size_t b = 0; b < batch.batch; ++b) {
      if (batch.valid(t, b)) {
        s.t.push_back(t);
        s.b.push_back(b);
      }
    }
  }
  return s;
}

Unroll unroll_agents(agent::AgentNet& agent, const Batch& batch) {
  const auto n = static_cast<std::size_t>(batch.spec.n_agents);
  const auto hd = static_cast<std::size_t>(agent.config().hidden_dim);
  ad::Var hidden = ad::constant(Matrix(batch.batch * n, hd));
  std::vector<ad::Var> qs, hs;
  for (std::size_t t = 0; t <= batch.max_len; ++t) {
    auto step = agent.forward(ad::constant(agent.build_inputs(batch.obs[t], batch.last_actions[t])), hidden);
    qs.push_back(step.q);
    hs.push_back(step.hidden);
    hidden = step.hidden;
  }
  return {ad::concat_rows(qs), ad::reshape(ad::concat_rows(hs), (batch.max_len + 1) * batch.batch, n * hd)};
}

std::vector<std::vector<double>> real_state_window(const Batch& batch, std::size_t t, std::size_t b, int k) {
  const auto sd = static_cast<std::size_t>(batch.spec.state_dim);
  std::vector<std::vector<double>> out;
  for (int j = 1; j <= k; ++j) {
    const std::size_t tj = t + static_cast<std::size_t>(j);
    std::vector<double> v(sd, 0.0);
    if (tj <= batch.max_len && batch.observed(tj, b)) {
      const Matrix& s = batch.states[tj];
      std::copy_n(s.data() + b * sd, sd, v.begin());
    }
    out.push_back(std::move(v));
  }
  return out;
}

ad::Var rollout_block(Networks& net, const Batch& batch, const Unroll& unroll, const StepIndex& steps,
                      std::size_t t_offset) {
  const ModelConfig& c = net.config;
  if (!c.rollout_cond()) return {};
  const auto sd = static_cast<std::size_t>(c.spec.state_dim);
  const std::size_t N = steps.size();
  if (c.algo == Algo::kQmix || (c.algo == Algo::kMbvd && c.zero_rollout)) return ad::constant(Matrix(N, sd));

  auto& imag = *net.imag;
  std::vector<ad::Var> seq;
  if (c.algo == Algo::kMbvd) {
    const auto rows = steps.rows(batch.batch, t_offset);
    const ad::Var h = ad::gather_rows(unroll.joint_hidden, rows);
    const auto bits = avail_rows(batch, steps, t_offset);
    seq = imagination::generate_rollout(imag, net.agent, h, bits, c.k).latents;
  } else if (c.algo == Algo::kQmixRs) {
    for (int j = 1; j <= c.k; ++j) {
      Matrix m(N, sd);
      for (std::size_t i = 0; i < N; ++i) {
        const auto window = real_state_window(batch, steps.t[i] + t_offset, steps.b[i], j);
        std::copy(window.back().begin(), window.back().end(), m.data() + i * sd);
      }
      seq.push_back(ad::constant(std::move(m)));
    }
  } else {  // qmix-ls
    for (int j = 1; j <= c.k; ++j) {
      std::vector<std::size_t> rows(N);
      Matrix keep(N, 1);
      for (std::size_t i = 0; i < N; ++i) {
        const std::size_t tj = steps.t[i] + t_offset + static_cast<std::size_t>(j);
        const bool ok = tj <= batch.max_len && batch.observed(tj, steps.b[i]);
        rows[i] = std::min(tj, batch.max_len) * batch.batch + steps.b[i];
        keep[i] = ok ? 1.0 : 0.0;
      }
      const ad::Var mean = imag.encode(ad::gather_rows(unroll.joint_hidden, rows)).mean;
      seq.push_back(ad::mul_col(mean, ad::constant(std::move(keep))));
    }
  }
  return imag.aggregate(seq);
}

ad::Var StopGradientTape::apply(const ad::Var& v) {
  if (cursor_ == values_.size()) values_.push_back(v.value());
  const Matrix& m = values_.at(cursor_++);
  if (!m.same_shape(v.value())) throw UsageError("StopGradientTape: replayed shape differs");
  return ad::constant(m);
}

double td_target(double reward, double gamma, bool terminal, double next_q_tot) {
  return terminal ? reward : reward + gamma * next_q_tot;
}

ad::Var mse(const ad::Var& prediction, const ad::Var& target) { return ad::mean(ad::square(ad::sub(prediction, target))); }

ad::Var bce_with_logits(const ad::Var& logits, const Matrix& targets) {
  if (!logits.value().same_shape(targets)) throw UsageError("bce_with_logits: shape mismatch");
  constexpr double kClip = 1e-7;
  ad::Var p = ad::clamp(ad::sigmoid(logits), kClip, 1.0 - kClip);
  Matrix one_minus(targets.rows(), targets.cols());
  for (std::size_t i = 0; i < targets.size(); ++i) one_minus[i] = 1.0 - targets[i];
  ad::Var pos = ad::mul(ad::constant(targets), ad::log(p));
  ad::Var neg = ad::mul(ad::constant(std::move(one_minus)), ad::log(ad::add_scalar(ad::scale(p, -1.0), 1.0)));
  return ad::scale(ad::mean(ad::add(pos, neg)), -1.0);
}

ad::Var kl_term(const imagination::GaussianLatent& posterior, const imagination::GaussianLatent& prior, double alpha,
                const imagination::KlAnchor* anchor) {
  ad::Var balanced = anchor ? imagination::kl_balanced(posterior, prior, alpha, *anchor)
                            : imagination::kl_balanced(posterior, prior, alpha);
  return ad::mean(ad::add(imagination::kl_standard_normal(prior), balanced));
}

LossGraph imagination_loss(Networks& live, const Batch& batch, const ad::Var& joint_hidden, double alpha,
                           std::uint64_t noise_key, StopGradientTape* tape) {
  if (!live.imag) throw UsageError("imagination_loss: model has no imagination module");
  auto stop_gradient = [tape](const ad::Var& v) { return tape ? tape->apply(v) : ad::detach(v); };
  const ModelConfig& mc = live.config;
  const std::size_t B = batch.batch;
  const auto n = static_cast<std::size_t>(batch.spec.n_agents);
  const auto A = static_cast<std::size_t>(batch.spec.n_actions);
  const StepIndex steps = valid_steps(batch);
  const std::size_t N = steps.size();
  if (N == 0) throw UsageError("imagination_loss: batch has no valid steps");
  LossGraph out;
  auto& imag = *live.imag;
  const auto L = static_cast<std::size_t>(mc.latent_dim);
  const ad::Var h = stop_gradient(ad::gather_rows(joint_hidden, steps.rows(B)));
  const imagination::GaussianLatent post = imag.encode(h);
  const ad::Var z = imagination::sample(post, noise(noise_key, 0, steps, L));

  const ad::Var l_rc = mse(imag.decode(z), h);
  out.total = l_rc;
  out.values.l_rc = l_rc.item();

  if (batch.spec.has_action_mask) {
    const auto bits = avail_rows(batch, steps, 0);
    Matrix targets(N, n * A);
    for (std::size_t i = 0; i < bits.size(); ++i) targets[i] = bits[i];
    const ad::Var l_fa = bce_with_logits(imag.feasibility_logits(z), targets);
    out.total = ad::add(out.total, l_fa);
    out.values.l_fa = l_fa.item();
  }

  // Transitions (t-1 -> t) inside each episode. steps is t-major, so the
  // previous step of episode b is found by a running per-episode index.
  std::vector<std::size_t> prev_of_b(B, SIZE_MAX);
  std::vector<std::size_t> cur, prev;
  StepIndex trans;
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t b = steps.b[i];
    if (steps.t[i] >= 1) {
      cur.push_back(i);
      prev.push_back(prev_of_b[b]);
      trans.t.push_back(steps.t[i]);
      trans.b.push_back(b);
    }
    prev_of_b[b] = i;
  }
  if (!cur.empty()) {
    const ad::Var z_prev = ad::gather_rows(z, prev);
    std::vector<int> u_prev;
    for (std::size_t j = 0; j < trans.size(); ++j) {
      const auto& acts = batch.actions[trans.t[j] - 1];
      u_prev.insert(u_prev.end(), acts.begin() + static_cast<std::ptrdiff_t>(trans.b[j] * n),
                    acts.begin() + static_cast<std::ptrdiff_t>((trans.b[j] + 1) * n));
    }
    const ad::Var u_onehot = ad::constant(imagination::joint_action_onehot(u_prev, batch.spec.n_agents, batch.spec.n_actions));
    const imagination::GaussianLatent prior = imag.prior(z_prev, u_onehot);
    const imagination::GaussianLatent q_t{ad::gather_rows(post.mean, cur), ad::gather_rows(post.log_std, cur)};

    const imagination::KlAnchor anchor{stop_gradient(q_t.mean).value(), stop_gradient(q_t.log_std).value(),
                                       stop_gradient(prior.mean).value(), stop_gradient(prior.log_std).value()};
    const ad::Var l_kl = kl_term(q_t, prior, alpha, &anchor);
    out.total = ad::add(out.total, l_kl);
    out.values.l_kl = l_kl.item();

    const ad::Var zp = imagination::sample(prior, noise(noise_key, 1, trans, L));
    const std::vector<ad::Var> rec_target = {stop_gradient(z_prev), u_onehot};
    const ad::Var l_rc_prior = mse(imag.prior_reconstruct(zp), ad::concat_cols(rec_target));
    out.total = ad::add(out.total, l_rc_prior);
    out.values.l_rc_prior = l_rc_prior.item();
  }
  const LossBreakdown& v = out.values;
  out.values.total = v.l_rc + v.l_rc_prior + v.l_kl + v.l_fa;
  return out;
}

LossGraph build_loss(Networks& live, Networks& target, const Batch& batch, const LossConfig& config,
                     std::uint64_t noise_key, StopGradientTape* tape) {
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) throw UsageError("gamma must lie in (0, 1]");
  const ModelConfig& mc = live.config;
  const std::size_t B = batch.batch;
  const auto n = static_cast<std::size_t>(batch.spec.n_agents);
  const auto A = static_cast<std::size_t>(batch.spec.n_actions);
  if (tape) tape->rewind();
  const StepIndex steps = valid_steps(batch);
  const std::size_t N = steps.size();
  if (N == 0) throw UsageError("build_loss: batch has no valid steps");

  // Online Q_tot(tau_t, u_t, s_t, rollout_t).
  const Unroll live_u = unroll_agents(live.agent, batch);
  std::vector<std::size_t> agent_rows(N * n);
  std::vector<int> taken(N * n);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t a = 0; a < n; ++a) {
      agent_rows[i * n + a] = (steps.t[i] * B + steps.b[i]) * n + a;
      taken[i * n + a] = batch.actions[steps.t[i]][steps.b[i] * n + a];
    }
  }
  const ad::Var chosen = ad::reshape(ad::gather_cols(ad::gather_rows(live_u.q, agent_rows), taken), N, n);
  ad::Var cond = ad::constant(state_rows(batch, steps, 0));
  if (mc.rollout_cond()) {
    const std::vector<ad::Var> parts = {cond, rollout_block(live, batch, live_u, steps, 0)};
    cond = ad::concat_cols(parts);
  }
  const ad::Var q_tot = live.mixer.forward(chosen, cond);

  // Targets from the frozen networks.
  Matrix y(N, 1);
  {
    ad::NoGradGuard no_grad;
    const Unroll tu = unroll_agents(target.agent, batch);
    Matrix next_max(N, n);
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t t1 = steps.t[i] + 1;
      for (std::size_t a = 0; a < n; ++a) {
        const std::size_t row = (t1 * B + steps.b[i]) * n + a;
        const auto mask_off = (steps.b[i] * n + a) * A;
        double best = agent::kMaskedQ;
        for (std::size_t u = 0; u < A; ++u) {
          const double q = batch.avail[t1][mask_off + u] ? tu.q.value()(row, u) : agent::kMaskedQ;
          best = std::max(best, q);
        }
        next_max(i, a) = best;
      }
    }
    ad::Var next_cond = ad::constant(state_rows(batch, steps, 1));
    if (mc.rollout_cond()) {
      const std::vector<ad::Var> parts = {next_cond, rollout_block(target, batch, tu, steps, 1)};
      next_cond = ad::concat_cols(parts);
    }
    const Matrix next_q = target.mixer.forward(ad::constant(std::move(next_max)), next_cond).value();
    for (std::size_t i = 0; i < N; ++i) {
      y[i] = td_target(batch.rewards[steps.t[i]][steps.b[i]], config.gamma, batch.terminal[steps.t[i]][steps.b[i]] != 0,
                       next_q[i]);
    }
  }

  LossGraph out;
  const ad::Var l_rl = mse(q_tot, ad::constant(std::move(y)));
  out.total = l_rl;
  out.values.l_rl = l_rl.item();

  if (mc.imagination_losses()) {
    const LossGraph imag = imagination_loss(live, batch, live_u.joint_hidden, config.alpha, noise_key, tape);
    out.total = ad::add(out.total, imag.total);
    out.values.l_rc = imag.values.l_rc;
    out.values.l_rc_prior = imag.values.l_rc_prior;
    out.values.l_kl = imag.values.l_kl;
    out.values.l_fa = imag.values.l_fa;
  }
  const LossBreakdown& v = out.values;
  out.values.total = v.l_rl + v.l_rc + v.l_rc_prior + v.l_kl + v.l_fa;
  return out;
}

}  // namespace mbvd::training
