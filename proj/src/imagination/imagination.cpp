#include "mbvd/imagination/imagination.hpp"

#include <algorithm>
#include <cmath>

#include "mbvd/core/errors.hpp"

namespace mbvd::imagination {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

void require_cols(const ad::Var& v, int cols, const char* what) {
  if (v.cols() != sz(cols)) {
    throw UsageError(std::string(what) + ": expected " + std::to_string(cols) + " columns, got " +
                     v.value().shape_string());
  }
}

std::vector<int> greedy_rows(const Matrix& q, std::span<const std::uint8_t> avail) {
  std::vector<int> out(q.rows());
  for (std::size_t r = 0; r < q.rows(); ++r) out[r] = agent::masked_argmax(q.row(r), avail.subspan(r * q.cols(), q.cols()));
  return out;
}

}  // namespace

ImaginationModule::ImaginationModule(const ImaginationConfig& c, Rng& rng) : config_(c) {
  if (c.n_agents < 1 || c.n_actions < 1 || c.hidden_dim < 1 || c.latent_dim < 1 || c.state_dim < 1 || c.width < 1 ||
      c.aggregator_hidden < 1 || c.aggregator_input < 0) {
    throw UsageError("ImaginationModule: invalid dimensions");
  }
  const std::size_t nh = sz(c.joint_hidden_dim());
  const std::size_t na = sz(c.joint_action_dim());
  const std::size_t l = sz(c.latent_dim);
  const std::size_t w = sz(c.width);
  const auto act = nn::Activation::kRelu;
  encoder_ = nn::Mlp("imag.encoder", {nh, w, w, 2 * l}, act, rng);
  decoder_ = nn::Mlp("imag.decoder", {l, w, w, nh}, act, rng);
  prior_ = nn::Mlp("imag.prior", {l + na, w, w, 2 * l}, act, rng);
  prior_recon_ = nn::Mlp("imag.prior_recon", {l, w, l + na}, act, rng);
  fa_head_ = nn::Mlp("imag.fa", {l, w, na}, act, rng);
  const std::size_t agg_in = c.aggregator_input > 0 ? sz(c.aggregator_input) : l;
  agg_rnn_ = nn::GruCell("imag.agg_rnn", agg_in, sz(c.aggregator_hidden), rng);
  agg_out_ = nn::Linear("imag.agg_out", sz(c.aggregator_hidden), sz(c.state_dim), rng);
}

GaussianLatent ImaginationModule::split(const ad::Var& out) const {
  const std::size_t l = sz(config_.latent_dim);
  return {ad::slice_cols(out, 0, l), ad::clamp(ad::slice_cols(out, l, 2 * l), kLogStdMin, kLogStdMax)};
}

GaussianLatent ImaginationModule::encode(const ad::Var& joint_hidden) {
  require_cols(joint_hidden, config_.joint_hidden_dim(), "posterior encode");
  return split(encoder_.forward(joint_hidden));
}

ad::Var ImaginationModule::decode(const ad::Var& latent) {
  require_cols(latent, config_.latent_dim, "posterior decode");
  return decoder_.forward(latent);
}

GaussianLatent ImaginationModule::prior(const ad::Var& prev_latent, const ad::Var& action_onehot) {
  require_cols(prev_latent, config_.latent_dim, "prior transition (latent)");
  require_cols(action_onehot, config_.joint_action_dim(), "prior transition (action)");
  if (prev_latent.rows() != action_onehot.rows()) throw UsageError("prior transition: row counts differ");
  const std::vector<ad::Var> in = {prev_latent, action_onehot};
  return split(prior_.forward(ad::concat_cols(in)));
}

ad::Var ImaginationModule::prior_reconstruct(const ad::Var& prior_sample) {
  require_cols(prior_sample, config_.latent_dim, "prior reconstruct");
  return prior_recon_.forward(prior_sample);
}

ad::Var ImaginationModule::feasibility_logits(const ad::Var& latent) {
  require_cols(latent, config_.latent_dim, "feasibility head");
  return fa_head_.forward(latent);
}

ad::Var ImaginationModule::aggregate(std::span<const ad::Var> sequence) {
  if (sequence.empty()) throw UsageError("aggregate_rollout: empty sequence");
  ad::Var h = ad::constant(Matrix(sequence.front().rows(), agg_rnn_.hidden_dim()));
  for (const ad::Var& x : sequence) {
    if (x.cols() != agg_rnn_.in_dim() || x.rows() != sequence.front().rows()) {
      throw UsageError("aggregate_rollout: element shape " + x.value().shape_string() + " does not match width " +
                       std::to_string(agg_rnn_.in_dim()));
    }
    h = agg_rnn_.forward(x, h);
  }
  return agg_out_.forward(h);
}

void ImaginationModule::collect(nn::ParamList& out) {
  encoder_.collect(out);
  decoder_.collect(out);
  prior_.collect(out);
  prior_recon_.collect(out);
  fa_head_.collect(out);
  agg_rnn_.collect(out);
  agg_out_.collect(out);
}

void ImaginationModule::collect(nn::ConstParamList& out) const {
  encoder_.collect(out);
  decoder_.collect(out);
  prior_.collect(out);
  prior_recon_.collect(out);
  fa_head_.collect(out);
  agg_rnn_.collect(out);
  agg_out_.collect(out);
}

void ImaginationModule::collect_aggregator(nn::ConstParamList& out) const {
  agg_rnn_.collect(out);
  agg_out_.collect(out);
}

ad::Var sample(const GaussianLatent& g, const Matrix& noise) {
  return ad::add(g.mean, ad::mul(ad::exp(g.log_std), ad::constant(noise)));
}

ad::Var kl_gaussian(const GaussianLatent& q, const GaussianLatent& p) {
  if (!q.mean.value().same_shape(p.mean.value()) || !q.log_std.value().same_shape(p.log_std.value())) {
    throw UsageError("kl_gaussian: dimension mismatch " + q.mean.value().shape_string() + " vs " +
                     p.mean.value().shape_string());
  }
  // log(sp/sq) + (sq^2 + (mq - mp)^2) / (2 sp^2) - 1/2
  ad::Var log_ratio = ad::sub(p.log_std, q.log_std);
  ad::Var var_ratio = ad::exp(ad::scale(ad::sub(q.log_std, p.log_std), 2.0));
  ad::Var mahal = ad::mul(ad::square(ad::sub(q.mean, p.mean)), ad::exp(ad::scale(p.log_std, -2.0)));
  ad::Var term = ad::add(log_ratio, ad::add_scalar(ad::scale(ad::add(var_ratio, mahal), 0.5), -0.5));
  return ad::row_sum(term);
}

ad::Var kl_standard_normal(const GaussianLatent& p) {
  const Matrix zeros(p.mean.rows(), p.mean.cols());
  return kl_gaussian(p, {ad::constant(zeros), ad::constant(zeros)});
}

ad::Var kl_balanced(const GaussianLatent& q, const GaussianLatent& p, double alpha) {
  return kl_balanced(q, p, alpha, make_anchor(q, p));
}

KlAnchor make_anchor(const GaussianLatent& q, const GaussianLatent& p) {
  return {q.mean.value(), q.log_std.value(), p.mean.value(), p.log_std.value()};
}

ad::Var kl_balanced(const GaussianLatent& q, const GaussianLatent& p, double alpha, const KlAnchor& anchor) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("kl_balanced: alpha must lie in [0, 1]");
  const GaussianLatent q_sg{ad::constant(anchor.q_mean), ad::constant(anchor.q_log_std)};
  const GaussianLatent p_sg{ad::constant(anchor.p_mean), ad::constant(anchor.p_log_std)};
  return ad::add(ad::scale(kl_gaussian(q, p_sg), alpha), ad::scale(kl_gaussian(q_sg, p), 1.0 - alpha));
}

double kl_gaussian(std::span<const double> mq, std::span<const double> lq, std::span<const double> mp,
                   std::span<const double> lp) {
  if (mq.size() != lq.size() || mq.size() != mp.size() || mq.size() != lp.size()) {
    throw UsageError("kl_gaussian: dimension mismatch");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < mq.size(); ++i) {
    const double d = mq[i] - mp[i];
    kl += lp[i] - lq[i] + (std::exp(2.0 * lq[i]) + d * d) / (2.0 * std::exp(2.0 * lp[i])) - 0.5;
  }
  return kl;
}

std::vector<std::uint8_t> predicted_mask(const Matrix& logits, int n_agents, int n_actions) {
  if (logits.cols() != sz(n_agents * n_actions)) throw UsageError("predicted_mask: logits width mismatch");
  std::vector<std::uint8_t> bits(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) bits[i] = logits[i] > 0.0 ? 1 : 0;
  const std::size_t na = sz(n_actions);
  for (std::size_t row = 0; row < bits.size() / na; ++row) {
    auto first = bits.begin() + static_cast<std::ptrdiff_t>(row * na);
    if (std::none_of(first, first + static_cast<std::ptrdiff_t>(na), [](std::uint8_t b) { return b != 0; })) {
      std::fill(first, first + static_cast<std::ptrdiff_t>(na), 1);
    }
  }
  return bits;
}

Matrix joint_action_onehot(std::span<const int> actions, int n_agents, int n_actions) {
  const std::size_t n = sz(n_agents);
  if (actions.size() % n != 0) throw UsageError("joint_action_onehot: action count not a multiple of n_agents");
  Matrix m(actions.size() / n, n * sz(n_actions));
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const int u = actions[i];
    if (u < 0 || u >= n_actions) throw UsageError("joint_action_onehot: action out of range");
    m(i / n, (i % n) * sz(n_actions) + sz(u)) = 1.0;
  }
  return m;
}

RolloutBatch generate_rollout(ImaginationModule& module, agent::AgentNet& agent, const ad::Var& joint_hidden,
                              std::span<const std::uint8_t> true_avail, int k) {
  if (k < 1) throw UsageError("generate_rollout: k must be >= 1, got " + std::to_string(k));
  const ImaginationConfig& c = module.config();
  const std::size_t rows = joint_hidden.rows();
  const std::size_t n = sz(c.n_agents);
  const std::size_t hd = sz(c.hidden_dim);
  if (true_avail.size() != rows * n * sz(c.n_actions)) throw UsageError("generate_rollout: mask size mismatch");

  auto greedy_from_hidden = [&](const Matrix& joint, std::span<const std::uint8_t> mask) {
    ad::NoGradGuard no_grad;
    Matrix per_agent = joint;
    per_agent.reshape(rows * n, hd);
    return greedy_rows(agent.q_head(ad::constant(std::move(per_agent))).value(), mask);
  };

  RolloutBatch out;
  out.latents.push_back(module.encode(joint_hidden).mean);
  out.actions.push_back(greedy_from_hidden(joint_hidden.value(), true_avail));
  const std::vector<std::uint8_t> all_true(true_avail.size(), 1);
  for (int i = 1; i <= k; ++i) {
    const ad::Var onehot = ad::constant(joint_action_onehot(out.actions.back(), c.n_agents, c.n_actions));
    ad::Var next = module.prior(out.latents.back(), onehot).mean;
    Matrix decoded;
    std::vector<std::uint8_t> mask;
    {
      ad::NoGradGuard no_grad;
      const ad::Var latent = ad::constant(next.value());
      decoded = module.decode(latent).value();
      mask = c.has_action_mask ? predicted_mask(module.feasibility_logits(latent).value(), c.n_agents, c.n_actions)
                               : all_true;
    }
    out.actions.push_back(greedy_from_hidden(decoded, mask));
    out.decoded_hiddens.push_back(std::move(decoded));
    out.latents.push_back(std::move(next));
  }
  return out;
}

ImaginedRollout generate_rollout(ImaginationModule& module, agent::AgentNet& agent, std::span<const double> joint_hidden,
                                 const env::ActionMask& true_avail, int k) {
  ad::NoGradGuard no_grad;
  const RolloutBatch b =
      generate_rollout(module, agent, ad::constant(Matrix::row_vector(joint_hidden)), true_avail.bits(), k);
  ImaginedRollout out;
  for (const auto& l : b.latents) out.latents.push_back(l.value().values());
  for (const auto& d : b.decoded_hiddens) out.decoded_hiddens.push_back(d.values());
  out.actions = b.actions;
  return out;
}

std::vector<double> aggregate_rollout(ImaginationModule& module, const std::vector<std::vector<double>>& latents) {
  ad::NoGradGuard no_grad;
  std::vector<ad::Var> seq;
  for (const auto& l : latents) seq.push_back(ad::constant(Matrix::row_vector(l)));
  return module.aggregate(seq).value().values();
}

}  // namespace mbvd::imagination
