#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mbvd/core/errors.hpp"
#include "mbvd/env/tabular.hpp"

namespace mbvd::env {

void TabularModel::validate() const {
  if (n_states < 1 || n_joint_actions < 1) throw UsageError("TabularModel: empty state or action space");
  if (start_state < 0 || start_state >= n_states) throw UsageError("TabularModel: start state out of range");
  if (reward.size() != static_cast<std::size_t>(n_states) || transitions.size() != static_cast<std::size_t>(n_states)) {
    throw UsageError("TabularModel: reward/transition tables must have one row per state");
  }
  if (!terminal.empty() && terminal.size() != static_cast<std::size_t>(n_states)) {
    throw UsageError("TabularModel: terminal flags must cover every state");
  }
  for (int s = 0; s < n_states; ++s) {
    if (reward[s].size() != static_cast<std::size_t>(n_joint_actions) ||
        transitions[s].size() != static_cast<std::size_t>(n_joint_actions)) {
      throw UsageError("TabularModel: state " + std::to_string(s) + " does not cover every joint action");
    }
    for (const auto& outcomes : transitions[s]) {
      double total = 0.0;
      for (const auto& o : outcomes) {
        if (o.next_state < 0 || o.next_state >= n_states || o.probability < 0.0) {
          throw UsageError("TabularModel: invalid transition outcome");
        }
        total += o.probability;
      }
      if (std::abs(total - 1.0) > 1e-9) throw UsageError("TabularModel: transition probabilities must sum to 1");
    }
  }
}

double brute_force_optimal_return(const TabularModel& model, int horizon, double gamma) {
  if (horizon < 0) throw UsageError("brute_force_optimal_return: negative horizon");
  const long long pairs = static_cast<long long>(model.n_states) * model.n_joint_actions;
  if (pairs > kOracleMaxPairs) {
    throw CapacityError("brute_force_optimal_return: " + std::to_string(pairs) +
                        " (state, joint-action) pairs exceeds the enumeration limit of " +
                        std::to_string(kOracleMaxPairs));
  }
  model.validate();

  const auto is_terminal = [&](int s) { return !model.terminal.empty() && model.terminal[s]; };
  std::vector<double> next_value(static_cast<std::size_t>(model.n_states), 0.0);
  std::vector<double> value(next_value.size(), 0.0);
  for (int h = horizon - 1; h >= 0; --h) {
    for (int s = 0; s < model.n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int ja = 0; ja < model.n_joint_actions; ++ja) {
        double q = model.reward[s][ja];
        for (const auto& o : model.transitions[s][ja]) {
          if (!is_terminal(o.next_state)) q += gamma * o.probability * next_value[o.next_state];
        }
        best = std::max(best, q);
      }
      value[s] = best;
    }
    std::swap(value, next_value);
  }
  return horizon == 0 ? 0.0 : next_value[model.start_state];
}

double brute_force_optimal_return(const TabularEnvironment& env, double gamma) {
  return brute_force_optimal_return(env.model(), env.spec().episode_limit, gamma);
}

}  // namespace mbvd::env
