#pragma once

#include "mbvd/core/rng.hpp"
#include "mbvd/env/tabular.hpp"

namespace mbvd::env {

struct TabularPomdpParams {
  int horizon = 6;
  double advance_prob = 0.9;
};

// Three-node chain for two agents with two actions each.
//   node 0: coordinating on any action advances to node 1 with advance_prob.
//   node 1: both play 0 -> reward 1 and stay; both play 1 -> advance to node 2
//           with advance_prob.
//   node 2: coordinating -> reward 5 and return to node 0.
//   Miscoordination anywhere resets to node 0 with no reward.
// Agent 0 observes the node one-hot; agent 1 only observes whether it is at
// node 2. The state is the node one-hot.
class TabularPomdp final : public TabularEnvironment {
 public:
  explicit TabularPomdp(TabularPomdpParams params = {});

  std::string name() const override { return "tabular"; }
  TabularModel model() const override;
  int node() const { return node_; }

 protected:
  void on_reset(std::uint64_t seed) override;
  Transition on_step(std::span<const int> joint_action) override;
  Matrix observe() const override;
  std::vector<double> global_state() const override;

 private:
  TabularPomdpParams params_;
  TabularModel model_;
  int node_ = 0;
  Rng rng_;
};

}  // namespace mbvd::env
