#include "mbvd/env/discretize.hpp"

#include <string>

#include "mbvd/core/errors.hpp"

namespace mbvd::env {

std::vector<double> discretize_action_space(int k) {
  if (k < 2) throw UsageError("discretize_action_space: K must be >= 2, got " + std::to_string(k));
  std::vector<double> out(static_cast<std::size_t>(k));
  const double denom = static_cast<double>(k - 1);
  for (int j = 0; 2 * j < k - 1; ++j) {
    const double v = 2.0 * j / denom - 1.0;
    out[static_cast<std::size_t>(j)] = v;
    out[static_cast<std::size_t>(k - 1 - j)] = -v;
  }
  if (k % 2 == 1) out[static_cast<std::size_t>(k / 2)] = 0.0;
  return out;
}

}  // namespace mbvd::env
