#pragma once

#include <vector>

#include "mbvd/nn/layers.hpp"

namespace mbvd::training {

struct RmsPropConfig {
  double lr = 5e-4;
  double alpha = 0.99;  // squared-gradient smoothing
  double eps = 1e-5;
};

// v <- alpha v + (1 - alpha) g^2;  p <- p - lr g / (sqrt(v) + eps)
class RmsProp {
 public:
  RmsProp() = default;
  explicit RmsProp(RmsPropConfig config) : config_(config) {}

  const RmsPropConfig& config() const { return config_; }
  void step(const nn::ParamList& params);

  const std::vector<Matrix>& square_avg() const { return square_avg_; }
  void set_square_avg(std::vector<Matrix> v) { square_avg_ = std::move(v); }

 private:
  RmsPropConfig config_;
  std::vector<Matrix> square_avg_;
};

double global_grad_norm(const nn::ParamList& params);
// Rescales all gradients by max_norm / norm when norm exceeds max_norm.
// Returns the norm before clipping.
double clip_grad_norm(const nn::ParamList& params, double max_norm);

}  // namespace mbvd::training
