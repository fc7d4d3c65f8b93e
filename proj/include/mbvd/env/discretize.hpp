#pragma once

#include <vector>

namespace mbvd::env {

// K equally spaced atomic actions {2j/(K-1) - 1 : j = 0..K-1} covering [-1, 1].
// Values are mirrored so v[K-1-j] == -v[j] exactly. Throws UsageError for K < 2.
std::vector<double> discretize_action_space(int k);

}  // namespace mbvd::env
