#include "mbvd/training/optimizer.hpp"

#include <cmath>

#include "mbvd/core/errors.hpp"

namespace mbvd::training {

void RmsProp::step(const nn::ParamList& params) {
  if (square_avg_.empty()) {
    for (const auto* p : params) square_avg_.emplace_back(p->value.rows(), p->value.cols());
  }
  if (square_avg_.size() != params.size()) throw UsageError("RmsProp: parameter list changed between steps");
  const double a = config_.alpha;
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Param& p = *params[i];
    Matrix& v = square_avg_[i];
    if (!v.same_shape(p.value)) throw UsageError("RmsProp: shape changed for " + p.name);
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      v[j] = a * v[j] + (1.0 - a) * g * g;
      p.value[j] -= config_.lr * g / (std::sqrt(v[j]) + config_.eps);
    }
  }
}

double global_grad_norm(const nn::ParamList& params) {
  double sq = 0.0;
  for (const auto* p : params) sq += p->grad.squared_norm();
  return std::sqrt(sq);
}

double clip_grad_norm(const nn::ParamList& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto* p : params) p->grad *= s;
  }
  return norm;
}

}  // namespace mbvd::training
