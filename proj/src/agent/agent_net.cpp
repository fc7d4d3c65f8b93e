#include "mbvd/agent/agent_net.hpp"

#include <algorithm>

#include "mbvd/core/errors.hpp"

namespace mbvd::agent {

AgentNet::AgentNet(const AgentNetConfig& config, Rng& rng) : config_(config) {
  if (config.n_agents < 1 || config.n_actions < 1 || config.obs_dim < 1 || config.hidden_dim < 1) {
    throw UsageError("AgentNet: all dimensions must be >= 1");
  }
  const auto h = static_cast<std::size_t>(config.hidden_dim);
  fc1_ = nn::Linear("agent.fc1", static_cast<std::size_t>(input_dim()), h, rng);
  rnn_ = nn::GruCell("agent.rnn", h, h, rng);
  fc2_ = nn::Linear("agent.fc2", h, static_cast<std::size_t>(config.n_actions), rng);
}

AgentHidden AgentNet::init_hidden(int n_agents) const {
  return {Matrix(static_cast<std::size_t>(n_agents), static_cast<std::size_t>(config_.hidden_dim))};
}

AgentNet::Step AgentNet::forward(const ad::Var& inputs, const ad::Var& hidden) {
  if (inputs.cols() != static_cast<std::size_t>(input_dim())) {
    throw UsageError("AgentNet: expected input width " + std::to_string(input_dim()) + ", got " +
                     std::to_string(inputs.cols()));
  }
  ad::Var x = ad::relu(fc1_.forward(inputs));
  ad::Var h = rnn_.forward(x, hidden);
  return {fc2_.forward(h), h};
}

ad::Var AgentNet::q_head(const ad::Var& hidden) { return fc2_.forward(hidden); }

Matrix AgentNet::build_inputs(const Matrix& obs, std::span<const int> last_actions) const {
  const auto n = static_cast<std::size_t>(config_.n_agents);
  const auto od = static_cast<std::size_t>(config_.obs_dim);
  const auto na = static_cast<std::size_t>(config_.n_actions);
  if (obs.cols() != od || obs.rows() % n != 0 || last_actions.size() != obs.rows()) {
    throw UsageError("AgentNet::build_inputs: obs " + obs.shape_string() + " / last actions " +
                     std::to_string(last_actions.size()) + " do not match the agent config");
  }
  Matrix x(obs.rows(), static_cast<std::size_t>(input_dim()));
  for (std::size_t r = 0; r < obs.rows(); ++r) {
    std::copy_n(obs.data() + r * od, od, x.data() + r * x.cols());
    const int u = last_actions[r];
    if (u >= static_cast<int>(na)) throw UsageError("AgentNet::build_inputs: last action out of range");
    if (u >= 0) x(r, od + static_cast<std::size_t>(u)) = 1.0;
    x(r, od + na + r % n) = 1.0;
  }
  return x;
}

void AgentNet::collect(nn::ParamList& out) {
  fc1_.collect(out);
  rnn_.collect(out);
  fc2_.collect(out);
}

void AgentNet::collect(nn::ConstParamList& out) const {
  fc1_.collect(out);
  rnn_.collect(out);
  fc2_.collect(out);
}

AgentQOutput agent_forward(AgentNet& net, const Matrix& obs, const Matrix& last_action_onehot,
                           const Matrix& agent_id_onehot, const AgentHidden& hidden) {
  const auto& c = net.config();
  const auto n = static_cast<std::size_t>(c.n_agents);
  if (obs.rows() != n || obs.cols() != static_cast<std::size_t>(c.obs_dim)) {
    throw UsageError("agent_forward: obs must be " + std::to_string(n) + "x" + std::to_string(c.obs_dim));
  }
  if (last_action_onehot.rows() != n || last_action_onehot.cols() != static_cast<std::size_t>(c.n_actions)) {
    throw UsageError("agent_forward: last_action must be n_agents x n_actions");
  }
  if (agent_id_onehot.rows() != n || agent_id_onehot.cols() != n) {
    throw UsageError("agent_forward: agent_id must be n_agents x n_agents");
  }
  if (hidden.h.rows() != n || hidden.h.cols() != static_cast<std::size_t>(c.hidden_dim)) {
    throw UsageError("agent_forward: hidden must be n_agents x hidden_dim");
  }
  ad::NoGradGuard no_grad;
  const std::vector<ad::Var> parts = {ad::constant(obs), ad::constant(last_action_onehot), ad::constant(agent_id_onehot)};
  AgentNet::Step s = net.forward(ad::concat_cols(parts), ad::constant(hidden.h));
  return {s.q.value(), {s.hidden.value()}};
}

int masked_argmax(std::span<const double> q, std::span<const std::uint8_t> avail) {
  if (q.size() != avail.size()) throw UsageError("masked_argmax: q and mask sizes differ");
  int best = -1;
  double best_v = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!avail[i]) continue;
    if (best < 0 || q[i] > best_v) {
      best = static_cast<int>(i);
      best_v = q[i];
    }
  }
  if (best < 0) throw UsageError("masked_argmax: every action is unavailable");
  return best;
}

std::vector<int> select_actions(const Matrix& q, const env::ActionMask& avail, double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw UsageError("select_actions: epsilon outside [0, 1]");
  if (q.rows() != static_cast<std::size_t>(avail.n_agents()) || q.cols() != static_cast<std::size_t>(avail.n_actions())) {
    throw UsageError("select_actions: q " + q.shape_string() + " does not match the mask");
  }
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<int> actions(q.rows());
  for (std::size_t a = 0; a < q.rows(); ++a) {
    auto row = avail.row(static_cast<int>(a));
    const bool explore = epsilon > 0.0 && u01(rng) < epsilon;
    if (explore) {
      std::vector<int> ok;
      for (std::size_t u = 0; u < row.size(); ++u) {
        if (row[u]) ok.push_back(static_cast<int>(u));
      }
      if (ok.empty()) throw UsageError("select_actions: agent " + std::to_string(a) + " has no available action");
      std::uniform_int_distribution<std::size_t> pick(0, ok.size() - 1);
      actions[a] = ok[pick(rng)];
    } else {
      actions[a] = masked_argmax(q.row(a), row);
    }
  }
  return actions;
}

double epsilon_at(long long env_step, const EpsilonSchedule& s) {
  if (env_step < 0) throw UsageError("epsilon_at: negative step");
  if (s.anneal_steps <= 0 || env_step >= s.anneal_steps) return s.finish;
  const double frac = static_cast<double>(env_step) / static_cast<double>(s.anneal_steps);
  return s.start + (s.finish - s.start) * frac;
}

}  // namespace mbvd::agent
