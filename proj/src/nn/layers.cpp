#include "mbvd/nn/layers.hpp"

#include <cmath>

#include "mbvd/core/errors.hpp"

namespace mbvd::nn {

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  if (in == 0 || out == 0) throw UsageError("Linear '" + name + "' needs positive dims");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix w(in, out);
  for (double& v : w.values()) v = dist(rng);
  Matrix b(1, out);
  for (double& v : b.values()) v = dist(rng);
  weight_ = ad::Param(name + ".weight", std::move(w));
  bias_ = ad::Param(name + ".bias", std::move(b));
}

ad::Var Linear::forward(const ad::Var& x) {
  if (x.cols() != in_dim()) {
    throw UsageError(weight_.name + ": expected input width " + std::to_string(in_dim()) + ", got " +
                     std::to_string(x.cols()));
  }
  return ad::linear(x, ad::param(weight_), ad::param(bias_));
}

void Linear::zero() {
  weight_.value.fill(0.0);
  bias_.value.fill(0.0);
}

void Linear::collect(ParamList& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

void Linear::collect(ConstParamList& out) const {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

ad::Var activate(const ad::Var& x, Activation act) {
  switch (act) {
    case Activation::kRelu:
      return ad::relu(x);
    case Activation::kElu:
      return ad::elu(x);
    case Activation::kTanh:
      return ad::tanh(x);
  }
  return x;
}

Mlp::Mlp(const std::string& name, const std::vector<std::size_t>& sizes, Activation act, Rng& rng) : act_(act) {
  if (sizes.size() < 2) throw UsageError("Mlp '" + name + "' needs at least input and output sizes");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    layers_.emplace_back(name + ".l" + std::to_string(i), sizes[i], sizes[i + 1], rng);
  }
}

ad::Var Mlp::forward(const ad::Var& x) {
  ad::Var y = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    y = layers_[i].forward(y);
    if (i + 1 < layers_.size()) y = activate(y, act_);
  }
  return y;
}

void Mlp::collect(ParamList& out) {
  for (auto& l : layers_) l.collect(out);
}

void Mlp::collect(ConstParamList& out) const {
  for (const auto& l : layers_) l.collect(out);
}

GruCell::GruCell(const std::string& name, std::size_t in, std::size_t hidden, Rng& rng)
    : hidden_(hidden) {
  // Both halves use U(-1/sqrt(hidden), 1/sqrt(hidden)) like the usual GRU cell.
  Rng& r = rng;
  input_ = Linear(name + ".ih", in, 3 * hidden, r);
  recurrent_ = Linear(name + ".hh", hidden, 3 * hidden, r);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : input_.weight().value.values()) v = dist(rng);
  for (double& v : input_.bias().value.values()) v = dist(rng);
}

ad::Var GruCell::forward(const ad::Var& x, const ad::Var& h) {
  if (h.cols() != hidden_ || h.rows() != x.rows()) {
    throw UsageError("GruCell: hidden " + h.value().shape_string() + " incompatible with input " +
                     x.value().shape_string());
  }
  const std::size_t hd = hidden_;
  ad::Var gi = input_.forward(x);
  ad::Var gh = recurrent_.forward(h);
  ad::Var r = ad::sigmoid(ad::slice_cols(gi, 0, hd) + ad::slice_cols(gh, 0, hd));
  ad::Var z = ad::sigmoid(ad::slice_cols(gi, hd, 2 * hd) + ad::slice_cols(gh, hd, 2 * hd));
  ad::Var n = ad::tanh(ad::slice_cols(gi, 2 * hd, 3 * hd) + r * ad::slice_cols(gh, 2 * hd, 3 * hd));
  // h' = n + z * (h - n)
  return n + z * (h - n);
}

void GruCell::collect(ParamList& out) {
  input_.collect(out);
  recurrent_.collect(out);
}

void GruCell::collect(ConstParamList& out) const {
  input_.collect(out);
  recurrent_.collect(out);
}

std::size_t count_scalars(const ConstParamList& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += p->value.size();
  return n;
}

}  // namespace mbvd::nn
