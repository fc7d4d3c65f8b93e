#include "mbvd/env/matrix_game.hpp"

#include "mbvd/core/errors.hpp"

namespace mbvd::env {
namespace {

EnvSpec matrix_spec(const MatrixGameParams& p) {
  if (p.payoff.empty()) throw UsageError("matrix game: empty payoff matrix");
  for (const auto& row : p.payoff) {
    if (row.size() != p.payoff.size()) throw UsageError("matrix game: payoff matrix must be square");
  }
  if (p.rounds < 1) throw UsageError("matrix game: rounds must be >= 1");
  EnvSpec s;
  s.n_agents = 2;
  s.n_actions = static_cast<int>(p.payoff.size());
  s.obs_dim = 1;
  s.state_dim = 1;
  s.episode_limit = p.rounds;
  s.has_action_mask = false;
  return s;
}

}  // namespace

MatrixGame::MatrixGame(MatrixGameParams params) : TabularEnvironment(matrix_spec(params)), params_(std::move(params)) {}

void MatrixGame::on_reset(std::uint64_t) {}

Environment::Transition MatrixGame::on_step(std::span<const int> joint_action) {
  return {params_.payoff[joint_action[0]][joint_action[1]], false};
}

Matrix MatrixGame::observe() const { return Matrix(2, 1); }

std::vector<double> MatrixGame::global_state() const { return {0.0}; }

TabularModel MatrixGame::model() const {
  const int n = spec().n_actions;
  TabularModel m;
  m.n_states = 1;
  m.n_joint_actions = n * n;
  m.reward.assign(1, std::vector<double>(static_cast<std::size_t>(n * n)));
  m.transitions.assign(1, std::vector<std::vector<TabularModel::Outcome>>(static_cast<std::size_t>(n * n)));
  for (int ja = 0; ja < n * n; ++ja) {
    const auto u = decode_joint_action(ja, 2, n);
    m.reward[0][ja] = params_.payoff[u[0]][u[1]];
    m.transitions[0][ja] = {{0, 1.0}};
  }
  return m;
}

}  // namespace mbvd::env
