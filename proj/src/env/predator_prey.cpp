#include "mbvd/env/predator_prey.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

#include "mbvd/core/errors.hpp"

namespace mbvd::env {
namespace {

int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

EnvSpec pp_spec(const PredatorPreyParams& p) {
  if (p.grid < 2) throw UsageError("predator_prey: grid must be >= 2");
  if (p.n_predators < 1 || p.n_prey < 1) throw UsageError("predator_prey: need at least one predator and one prey");
  if (p.n_predators + p.n_prey > p.grid * p.grid) throw UsageError("predator_prey: too many entities for the grid");
  if (p.sight < 0) throw UsageError("predator_prey: sight must be >= 0");
  if (p.capture_predators < 1 || p.capture_predators > p.n_predators) {
    throw UsageError("predator_prey: capture_predators must be in [1, n_predators]");
  }
  if (p.prey_move_prob < 0.0 || p.prey_move_prob > 1.0) throw UsageError("predator_prey: prey_move_prob outside [0, 1]");
  const int window = 2 * p.sight + 1;
  EnvSpec s;
  s.n_agents = p.n_predators;
  s.n_actions = PredatorPrey::kActions;
  s.obs_dim = 3 * window * window + 2;
  s.state_dim = 2 * p.n_predators + 3 * p.n_prey;
  s.episode_limit = p.episode_limit;
  s.has_action_mask = true;
  return s;
}

}  // namespace

PredatorPrey::PredatorPrey(PredatorPreyParams params) : Environment(pp_spec(params)), params_(params) {}

Cell PredatorPrey::move(Cell c, int action) {
  switch (action) {
    case 1:
      return {c.row - 1, c.col};
    case 2:
      return {c.row + 1, c.col};
    case 3:
      return {c.row, c.col - 1};
    case 4:
      return {c.row, c.col + 1};
    default:
      return c;
  }
}

void PredatorPrey::on_reset(std::uint64_t seed) {
  rng_.seed(seed);
  const int cells = params_.grid * params_.grid;
  std::uniform_int_distribution<int> pick(0, cells - 1);
  for (;;) {
    std::vector<int> used;
    auto draw = [&]() {
      int c;
      do {
        c = pick(rng_);
      } while (std::find(used.begin(), used.end(), c) != used.end());
      used.push_back(c);
      return Cell{c / params_.grid, c % params_.grid};
    };
    predators_.clear();
    prey_.clear();
    for (int i = 0; i < params_.n_predators; ++i) predators_.push_back(draw());
    for (int i = 0; i < params_.n_prey; ++i) prey_.push_back(draw());
    // Redraw until no prey starts already captured.
    if (std::none_of(prey_.begin(), prey_.end(), [&](Cell p) { return capturable(p); })) break;
  }
  alive_.assign(prey_.size(), true);
}

void PredatorPrey::place(const std::vector<Cell>& predators, const std::vector<Cell>& prey) {
  if (predators.size() != predators_.size() || prey.size() != prey_.size()) {
    throw UsageError("predator_prey: place() entity counts do not match the configuration");
  }
  for (Cell c : predators) {
    if (!on_grid(c)) throw UsageError("predator_prey: predator placed off-grid");
  }
  for (Cell c : prey) {
    if (!on_grid(c)) throw UsageError("predator_prey: prey placed off-grid");
  }
  predators_ = predators;
  prey_ = prey;
  alive_.assign(prey_.size(), true);
}

bool PredatorPrey::capturable(Cell prey) const {
  int near = 0;
  for (Cell p : predators_) near += manhattan(p, prey) <= 1 ? 1 : 0;
  return near >= params_.capture_predators;
}

double PredatorPrey::shaping_reward() const {
  if (params_.shaping == 0.0) return 0.0;
  const double dmax = 2.0 * (params_.grid - 1);
  double total = 0.0;
  for (Cell p : predators_) {
    int best = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < prey_.size(); ++i) {
      if (alive_[i]) best = std::min(best, manhattan(p, prey_[i]));
    }
    if (best != std::numeric_limits<int>::max()) total += 1.0 - best / dmax;
  }
  return params_.shaping * total / static_cast<double>(predators_.size());
}

Environment::Transition PredatorPrey::on_step(std::span<const int> joint_action) {
  for (std::size_t a = 0; a < predators_.size(); ++a) predators_[a] = move(predators_[a], joint_action[a]);

  double reward = 0.0;
  for (std::size_t i = 0; i < prey_.size(); ++i) {
    if (alive_[i] && capturable(prey_[i])) {
      alive_[i] = false;
      reward += params_.capture_bonus;
    }
  }

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t i = 0; i < prey_.size(); ++i) {
    if (!alive_[i]) continue;
    if (u01(rng_) >= params_.prey_move_prob) continue;
    std::vector<Cell> options;
    for (int act = 1; act < kActions; ++act) {
      const Cell next = move(prey_[i], act);
      if (on_grid(next)) options.push_back(next);
    }
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    prey_[i] = options[pick(rng_)];
  }

  reward += shaping_reward();
  const bool all_caught = std::none_of(alive_.begin(), alive_.end(), [](bool b) { return b; });
  return {reward, all_caught};
}

Matrix PredatorPrey::observe() const {
  const EnvSpec& s = spec();
  const int window = 2 * params_.sight + 1;
  const int plane = window * window;
  const double norm = static_cast<double>(params_.grid - 1);
  Matrix obs(static_cast<std::size_t>(s.n_agents), static_cast<std::size_t>(s.obs_dim));
  for (int a = 0; a < s.n_agents; ++a) {
    const Cell self = predators_[static_cast<std::size_t>(a)];
    auto cell_index = [&](Cell c) -> int {
      const int dr = c.row - self.row + params_.sight;
      const int dc = c.col - self.col + params_.sight;
      if (dr < 0 || dr >= window || dc < 0 || dc >= window) return -1;
      return dr * window + dc;
    };
    for (int b = 0; b < s.n_agents; ++b) {
      if (b == a) continue;
      const int idx = cell_index(predators_[static_cast<std::size_t>(b)]);
      if (idx >= 0) obs(a, idx) = 1.0;
    }
    for (std::size_t i = 0; i < prey_.size(); ++i) {
      if (!alive_[i]) continue;
      const int idx = cell_index(prey_[i]);
      if (idx >= 0) obs(a, plane + idx) = 1.0;
    }
    for (int dr = -params_.sight; dr <= params_.sight; ++dr) {
      for (int dc = -params_.sight; dc <= params_.sight; ++dc) {
        if (!on_grid({self.row + dr, self.col + dc})) {
          obs(a, 2 * plane + (dr + params_.sight) * window + (dc + params_.sight)) = 1.0;
        }
      }
    }
    obs(a, 3 * plane) = self.row / norm;
    obs(a, 3 * plane + 1) = self.col / norm;
  }
  return obs;
}

std::vector<double> PredatorPrey::global_state() const {
  const double norm = static_cast<double>(params_.grid - 1);
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(spec().state_dim));
  for (Cell p : predators_) {
    s.push_back(p.row / norm);
    s.push_back(p.col / norm);
  }
  for (std::size_t i = 0; i < prey_.size(); ++i) {
    s.push_back(alive_[i] ? prey_[i].row / norm : 0.0);
    s.push_back(alive_[i] ? prey_[i].col / norm : 0.0);
    s.push_back(alive_[i] ? 1.0 : 0.0);
  }
  return s;
}

ActionMask PredatorPrey::feasible_actions() const {
  ActionMask mask(spec().n_agents, kActions, false);
  for (int a = 0; a < spec().n_agents; ++a) {
    for (int act = 0; act < kActions; ++act) mask.set(a, act, on_grid(move(predators_[static_cast<std::size_t>(a)], act)));
  }
  return mask;
}

}  // namespace mbvd::env
