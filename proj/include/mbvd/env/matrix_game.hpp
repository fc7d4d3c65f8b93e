#pragma once

#include "mbvd/env/tabular.hpp"

namespace mbvd::env {

struct MatrixGameParams {
  // payoff[i][j]: shared reward when agent 0 plays i and agent 1 plays j.
  std::vector<std::vector<double>> payoff = {{10.0, 0.0, 0.0}, {0.0, 6.0, 2.0}, {0.0, 2.0, 4.0}};
  int rounds = 1;
};

// Two-agent cooperative matrix game, one-shot (rounds = 1) or repeated.
// Stateless: observations and state are constant zero vectors.
class MatrixGame final : public TabularEnvironment {
 public:
  explicit MatrixGame(MatrixGameParams params = {});

  std::string name() const override { return "matrix"; }
  TabularModel model() const override;
  const MatrixGameParams& params() const { return params_; }

 protected:
  void on_reset(std::uint64_t seed) override;
  Transition on_step(std::span<const int> joint_action) override;
  Matrix observe() const override;
  std::vector<double> global_state() const override;

 private:
  MatrixGameParams params_;
};

}  // namespace mbvd::env
