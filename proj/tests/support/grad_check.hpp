#pragma once
// Central finite differences, used as the independent oracle for every
// analytic gradient in the test suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mbvd/autodiff/var.hpp"

namespace mbvd::testing {

inline Matrix numeric_gradient(const std::function<double()>& f, Matrix& value, double h = 1e-6) {
  Matrix g(value.rows(), value.cols());
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double orig = value[i];
    value[i] = orig + h;
    const double up = f();
    value[i] = orig - h;
    const double down = f();
    value[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double relative_error(const Matrix& a, const Matrix& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nb));
  if (denom < 1e-12) return std::sqrt(diff);
  return std::sqrt(diff) / denom;
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst;
};

// Compares analytic param.grad (already populated by the caller) with
// central differences of f, which must read the params' current values.
inline GradCheckResult check_param_grads(const std::function<double()>& f, const std::vector<ad::Param*>& params,
                                         double h = 1e-6) {
  GradCheckResult out;
  for (ad::Param* p : params) {
    const Matrix analytic = p->grad;
    const Matrix numeric = numeric_gradient(f, p->value, h);
    const double err = relative_error(analytic, numeric);
    if (err > out.max_relative_error) {
      out.max_relative_error = err;
      out.worst = p->name;
    }
  }
  return out;
}

}  // namespace mbvd::testing
