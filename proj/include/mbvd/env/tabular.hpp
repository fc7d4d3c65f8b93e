#pragma once
// Enumerable environments and the exhaustive optimal-return oracle.

#include <vector>

#include "mbvd/env/environment.hpp"

namespace mbvd::env {

// Fully enumerated dynamics over hidden states and joint actions.
struct TabularModel {
  struct Outcome {
    int next_state = 0;
    double probability = 0.0;
  };

  int n_states = 1;
  int n_joint_actions = 1;
  int start_state = 0;
  // [state][joint_action]
  std::vector<std::vector<double>> reward;
  std::vector<std::vector<std::vector<Outcome>>> transitions;
  // Terminal states end the episode on arrival.
  std::vector<bool> terminal;

  void validate() const;
};

// An environment that can export its exact model.
class TabularEnvironment : public Environment {
 public:
  virtual TabularModel model() const = 0;

 protected:
  using Environment::Environment;
};

// Optimal expected discounted return over `horizon` steps from the start
// state, maximising over joint actions at every (step, state) by backward
// induction. This is the centralised optimum: an upper bound for any
// decentralised policy and exact for stateless games.
double brute_force_optimal_return(const TabularModel& model, int horizon, double gamma);
double brute_force_optimal_return(const TabularEnvironment& env, double gamma);

inline constexpr long long kOracleMaxPairs = 1'000'000;

}  // namespace mbvd::env
