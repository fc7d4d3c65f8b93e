#pragma once
// Parameterised building blocks shared by the agent, mixer and imagination networks.

#include <string>
#include <vector>

#include "mbvd/autodiff/var.hpp"
#include "mbvd/core/rng.hpp"

namespace mbvd::nn {

using ParamList = std::vector<ad::Param*>;
using ConstParamList = std::vector<const ad::Param*>;

// y = x W + b with W stored in x out. Initialised U(-1/sqrt(in), 1/sqrt(in)).
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  ad::Var forward(const ad::Var& x);
  std::size_t in_dim() const { return weight_.value.rows(); }
  std::size_t out_dim() const { return weight_.value.cols(); }

  void zero();
  void collect(ParamList& out);
  void collect(ConstParamList& out) const;

  ad::Param& weight() { return weight_; }
  ad::Param& bias() { return bias_; }
  const ad::Param& weight() const { return weight_; }
  const ad::Param& bias() const { return bias_; }

 private:
  ad::Param weight_;
  ad::Param bias_;
};

enum class Activation { kRelu, kElu, kTanh };

ad::Var activate(const ad::Var& x, Activation act);

// Stack of Linear layers with the activation between consecutive layers and
// none after the last.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, const std::vector<std::size_t>& sizes, Activation act, Rng& rng);

  ad::Var forward(const ad::Var& x);
  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }
  Linear& last() { return layers_.back(); }
  Linear& layer(std::size_t i) { return layers_.at(i); }
  std::size_t depth() const { return layers_.size(); }

  void collect(ParamList& out);
  void collect(ConstParamList& out) const;

 private:
  std::vector<Linear> layers_;
  Activation act_ = Activation::kRelu;
};

// Gated recurrent unit, gate order (reset, update, candidate):
//   r = s(x Wir + h Whr), z = s(x Wiz + h Whz), n = tanh(x Win + r * (h Whn))
//   h' = (1 - z) * n + z * h   (biases omitted above)
class GruCell {
 public:
  GruCell() = default;
  GruCell(const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);

  ad::Var forward(const ad::Var& x, const ad::Var& h);
  std::size_t hidden_dim() const { return hidden_; }
  std::size_t in_dim() const { return input_.in_dim(); }

  void collect(ParamList& out);
  void collect(ConstParamList& out) const;

 private:
  Linear input_;
  Linear recurrent_;
  std::size_t hidden_ = 0;
};

std::size_t count_scalars(const ConstParamList& params);

}  // namespace mbvd::nn
