#pragma once

#include <array>

#include "mbvd/core/rng.hpp"
#include "mbvd/env/environment.hpp"

namespace mbvd::env {

struct PredatorPreyParams {
  int grid = 7;
  int n_predators = 2;
  int n_prey = 1;
  int sight = 2;
  int episode_limit = 25;
  // Predators within Manhattan distance 1 (same cell included) needed to capture.
  int capture_predators = 2;
  double capture_bonus = 10.0;
  // Per-step reward scale for closeness to the nearest live prey.
  double shaping = 0.05;
  double prey_move_prob = 0.5;
};

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

// Partially observable predator-prey on a square grid.
//
// Actions: 0 stay, 1 up, 2 down, 3 left, 4 right; moves off the grid are
// masked. Each step predators move, prey satisfying the capture rule are
// removed (capture_bonus each), then surviving prey take a random feasible
// step with probability prey_move_prob. The shared reward adds
//   shaping * mean_a (1 - d_a / (2 (grid - 1)))
// where d_a is predator a's Manhattan distance to the nearest live prey.
// The episode ends when every prey is captured or at the step limit.
//
// Observation (per predator): a (2 sight + 1)^2 window with three channels
// (other predators, prey, off-grid) followed by the predator's own
// normalised (row, col). State: normalised predator positions, then
// (row, col, alive) per prey.
class PredatorPrey final : public Environment {
 public:
  explicit PredatorPrey(PredatorPreyParams params = {});

  std::string name() const override { return "predator_prey"; }
  const PredatorPreyParams& params() const { return params_; }

  // Overrides the positions drawn by reset(); for scripted scenarios.
  void place(const std::vector<Cell>& predators, const std::vector<Cell>& prey);
  const std::vector<Cell>& predators() const { return predators_; }
  const std::vector<Cell>& prey() const { return prey_; }
  const std::vector<bool>& prey_alive() const { return alive_; }

  static constexpr int kActions = 5;
  static Cell move(Cell c, int action);

 protected:
  void on_reset(std::uint64_t seed) override;
  Transition on_step(std::span<const int> joint_action) override;
  Matrix observe() const override;
  std::vector<double> global_state() const override;
  ActionMask feasible_actions() const override;

 private:
  bool on_grid(Cell c) const { return c.row >= 0 && c.row < params_.grid && c.col >= 0 && c.col < params_.grid; }
  bool capturable(Cell prey) const;
  double shaping_reward() const;

  PredatorPreyParams params_;
  std::vector<Cell> predators_;
  std::vector<Cell> prey_;
  std::vector<bool> alive_;
  Rng rng_;
};

}  // namespace mbvd::env
