#include "mbvd/mixing/mixer.hpp"

#include <cmath>
#include <vector>

#include "mbvd/core/errors.hpp"

namespace mbvd::mixing {

double vdn_mix(std::span<const double> chosen_q) {
  double s = 0.0;
  for (double q : chosen_q) s += q;
  return s;
}

QmixMixer::QmixMixer(const QmixConfig& c, Rng& rng) : config_(c) {
  if (c.n_agents < 1 || c.cond_dim < 1 || c.embed_dim < 1 || c.hypernet_hidden < 1) {
    throw UsageError("QmixMixer: all dimensions must be >= 1");
  }
  const auto cond = static_cast<std::size_t>(c.cond_dim);
  const auto e = static_cast<std::size_t>(c.embed_dim);
  hyper_w1_ = nn::Mlp("mixer.hyper_w1", {cond, static_cast<std::size_t>(c.hypernet_hidden), e * static_cast<std::size_t>(c.n_agents)},
                      nn::Activation::kRelu, rng);
  hyper_b1_ = nn::Linear("mixer.hyper_b1", cond, e, rng);
  hyper_w2_ = nn::Linear("mixer.hyper_w2", cond, e, rng);
  hyper_v_ = nn::Mlp("mixer.hyper_v", {cond, e, 1}, nn::Activation::kRelu, rng);
}

ad::Var QmixMixer::forward(const ad::Var& chosen_q, const ad::Var& cond) {
  if (chosen_q.cols() != static_cast<std::size_t>(config_.n_agents) ||
      cond.cols() != static_cast<std::size_t>(config_.cond_dim) || chosen_q.rows() != cond.rows()) {
    throw UsageError("QmixMixer: chosen_q " + chosen_q.value().shape_string() + " / cond " +
                     cond.value().shape_string() + " do not match n_agents=" + std::to_string(config_.n_agents) +
                     ", cond_dim=" + std::to_string(config_.cond_dim));
  }
  ad::Var w1 = ad::abs(hyper_w1_.forward(cond));
  ad::Var b1 = hyper_b1_.forward(cond);
  ad::Var hidden = ad::elu(ad::add(ad::rowwise_vecmat(chosen_q, w1), b1));
  ad::Var w2 = ad::abs(hyper_w2_.forward(cond));
  ad::Var v = hyper_v_.forward(cond);
  return ad::add(ad::row_sum(ad::mul(hidden, w2)), v);
}

double QmixMixer::mix(std::span<const double> chosen_q, std::span<const double> cond) {
  ad::NoGradGuard no_grad;
  return forward(ad::constant(Matrix::row_vector(chosen_q)), ad::constant(Matrix::row_vector(cond))).item();
}

void QmixMixer::collect(nn::ParamList& out) {
  hyper_w1_.collect(out);
  hyper_b1_.collect(out);
  hyper_w2_.collect(out);
  hyper_v_.collect(out);
}

void QmixMixer::collect(nn::ConstParamList& out) const {
  hyper_w1_.collect(out);
  hyper_b1_.collect(out);
  hyper_w2_.collect(out);
  hyper_v_.collect(out);
}

Mixer::Mixer(MixerKind kind, const QmixConfig& config, Rng& rng) : kind_(kind) {
  if (kind == MixerKind::kQmix) qmix_ = QmixMixer(config, rng);
}

ad::Var Mixer::forward(const ad::Var& chosen_q, const ad::Var& cond) {
  if (kind_ == MixerKind::kVdn) return ad::row_sum(chosen_q);
  return qmix_.forward(chosen_q, cond);
}

double Mixer::mix(std::span<const double> chosen_q, std::span<const double> cond) {
  if (kind_ == MixerKind::kVdn) return vdn_mix(chosen_q);
  return qmix_.mix(chosen_q, cond);
}

void Mixer::collect(nn::ParamList& out) {
  if (kind_ == MixerKind::kQmix) qmix_.collect(out);
}

void Mixer::collect(nn::ConstParamList& out) const {
  if (kind_ == MixerKind::kQmix) qmix_.collect(out);
}

bool check_igm(const MixFunction& mix, const Matrix& q_matrix) {
  const auto n = static_cast<int>(q_matrix.rows());
  const auto na = static_cast<int>(q_matrix.cols());
  if (n < 1 || na < 1) throw UsageError("check_igm: empty q matrix");
  long long total = 1;
  for (int a = 0; a < n; ++a) {
    total *= na;
    if (total > kIgmMaxJointActions) {
      throw CapacityError("check_igm: n_actions^n exceeds " + std::to_string(kIgmMaxJointActions));
    }
  }

  std::vector<int> local(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    int best = 0;
    for (int u = 1; u < na; ++u) {
      if (q_matrix(a, u) > q_matrix(a, best)) best = u;
    }
    local[static_cast<std::size_t>(a)] = best;
  }

  // Odometer with agent n-1 fastest, so enumeration is lexicographic in
  // (u_0, ..., u_{n-1}) and the first maximum is the lexicographic minimum.
  std::vector<int> joint(static_cast<std::size_t>(n), 0);
  std::vector<int> best_joint;
  std::vector<double> chosen(static_cast<std::size_t>(n));
  double best_value = 0.0;
  for (long long i = 0; i < total; ++i) {
    for (int a = 0; a < n; ++a) chosen[a] = q_matrix(a, joint[a]);
    const double v = mix(chosen);
    if (best_joint.empty() || v > best_value) {
      best_value = v;
      best_joint = joint;
    }
    for (int a = n - 1; a >= 0; --a) {
      if (++joint[a] < na) break;
      joint[a] = 0;
    }
  }
  return best_joint == local;
}

}  // namespace mbvd::mixing
