#include "mbvd/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <variant>

#include "mbvd/core/errors.hpp"

namespace mbvd::harness {
namespace {

using Member = std::variant<std::string RunConfig::*, std::uint64_t RunConfig::*, int RunConfig::*,
                            long long RunConfig::*, double RunConfig::*, bool RunConfig::*>;

struct Field {
  const char* key;
  Member member;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"env", &RunConfig::env},
      {"algo", &RunConfig::algo},
      {"seed", &RunConfig::seed},
      {"k", &RunConfig::k},
      {"alpha", &RunConfig::alpha},
      {"gamma", &RunConfig::gamma},
      {"lr", &RunConfig::lr},
      {"rms_alpha", &RunConfig::rms_alpha},
      {"rms_eps", &RunConfig::rms_eps},
      {"batch_size", &RunConfig::batch_size},
      {"buffer_capacity", &RunConfig::buffer_capacity},
      {"target_update_episodes", &RunConfig::target_update_episodes},
      {"grad_clip", &RunConfig::grad_clip},
      {"epsilon_start", &RunConfig::epsilon_start},
      {"epsilon_finish", &RunConfig::epsilon_finish},
      {"anneal_steps", &RunConfig::anneal_steps},
      {"train_ratio", &RunConfig::train_ratio},
      {"per_agent_latent", &RunConfig::per_agent_latent},
      {"hidden_dim", &RunConfig::hidden_dim},
      {"imag_width", &RunConfig::imag_width},
      {"aggregator_hidden", &RunConfig::aggregator_hidden},
      {"mixer_embed", &RunConfig::mixer_embed},
      {"hypernet_hidden", &RunConfig::hypernet_hidden},
      {"pad_rollout_cond", &RunConfig::pad_rollout_cond},
      {"zero_rollout", &RunConfig::zero_rollout},
      {"total_env_steps", &RunConfig::total_env_steps},
      {"max_episodes", &RunConfig::max_episodes},
      {"eval_every", &RunConfig::eval_every},
      {"eval_episodes", &RunConfig::eval_episodes},
      {"checkpoint_every", &RunConfig::checkpoint_every},
      {"matrix_payoff", &RunConfig::matrix_payoff},
      {"matrix_rounds", &RunConfig::matrix_rounds},
      {"pp_grid", &RunConfig::pp_grid},
      {"pp_predators", &RunConfig::pp_predators},
      {"pp_prey", &RunConfig::pp_prey},
      {"pp_sight", &RunConfig::pp_sight},
      {"pp_limit", &RunConfig::pp_limit},
      {"pp_capture_predators", &RunConfig::pp_capture_predators},
      {"pp_capture_bonus", &RunConfig::pp_capture_bonus},
      {"pp_shaping", &RunConfig::pp_shaping},
      {"pp_prey_move_prob", &RunConfig::pp_prey_move_prob},
      {"tabular_horizon", &RunConfig::tabular_horizon},
      {"tabular_advance_prob", &RunConfig::tabular_advance_prob},
  };
  return table;
}

std::string valid_key_list() {
  std::string out;
  for (const auto& f : fields()) {
    if (!out.empty()) out += ", ";
    out += f.key;
  }
  return out;
}

const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.key) return f;
  }
  throw UsageError("unknown config key '" + key + "'; valid keys: " + valid_key_list());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw UsageError("config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.emplace_back(f.key);
    return out;
  }();
  return names;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const Field& f = find_field(key);
  const std::string value = trim(raw);
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          this->*member = value;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1") {
            this->*member = true;
          } else if (value == "false" || value == "0") {
            this->*member = false;
          } else {
            throw UsageError("config key '" + key + "': expected true or false, got '" + value + "'");
          }
        } else {
          this->*member = parse_number<T>(key, value);
        }
      },
      f.member);
}

std::string RunConfig::get(const std::string& key) const {
  const Field& f = find_field(key);
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cvref_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return this->*member;
        } else if constexpr (std::is_same_v<T, bool>) {
          return (this->*member) ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(this->*member);
        } else {
          return std::to_string(this->*member);
        }
      },
      f.member);
}

void RunConfig::validate() const {
  const training::Algo a = algorithm();
  (void)env_params();
  const bool imagination = a == training::Algo::kMbvd || a == training::Algo::kQmixRs || a == training::Algo::kQmixLs;
  if (imagination && k < 1) throw UsageError("k must be >= 1 for algo " + algo + " (got " + std::to_string(k) + ")");
  if (alpha < 0.0 || alpha > 1.0) throw UsageError("alpha must lie in [0, 1]");
  if (gamma < 0.0 || gamma > 1.0) throw UsageError("gamma must lie in [0, 1]");
  if (lr <= 0.0) throw UsageError("lr must be positive");
  if (batch_size < 1 || buffer_capacity < batch_size) throw UsageError("need 1 <= batch_size <= buffer_capacity");
  if (target_update_episodes < 1) throw UsageError("target_update_episodes must be >= 1");
  if (grad_clip <= 0.0) throw UsageError("grad_clip must be positive");
  if (anneal_steps < 0) throw UsageError("anneal_steps must be >= 0");
  if (train_ratio < 0) throw UsageError("train_ratio must be >= 0");
  if (per_agent_latent < 1 || hidden_dim < 1 || imag_width < 1 || aggregator_hidden < 1 || mixer_embed < 1 ||
      hypernet_hidden < 1) {
    throw UsageError("network sizes must be >= 1");
  }
  if (total_env_steps < 1) throw UsageError("total_env_steps must be >= 1");
  if (max_episodes < 0) throw UsageError("max_episodes must be >= 0");
  if (eval_every < 1) throw UsageError("eval_every must be >= 1");
  if (eval_episodes < 1) throw UsageError("eval_episodes must be >= 1");
  if (checkpoint_every < 0) throw UsageError("checkpoint_every must be >= 0");
  if (zero_rollout && a != training::Algo::kMbvd) throw UsageError("zero_rollout applies to mbvd only");
  if (pad_rollout_cond && a != training::Algo::kQmix) throw UsageError("pad_rollout_cond applies to qmix only");
}

std::vector<std::vector<double>> parse_payoff(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream rs(text);
  std::string row;
  while (std::getline(rs, row, ';')) {
    std::vector<double> values;
    std::stringstream cs(row);
    std::string cell;
    while (std::getline(cs, cell, ',')) values.push_back(parse_number<double>("matrix_payoff", trim(cell)));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw UsageError("matrix_payoff is empty");
  for (const auto& r : rows) {
    if (r.size() != rows.size()) throw UsageError("matrix_payoff must be square (rows separated by ';')");
  }
  return rows;
}

env::EnvParams RunConfig::env_params() const {
  env::EnvParams p;
  p.name = env;
  if (env == "matrix") {
    p.matrix.payoff = parse_payoff(matrix_payoff);
    p.matrix.rounds = matrix_rounds;
  } else if (env == "predator_prey") {
    p.predator_prey.grid = pp_grid;
    p.predator_prey.n_predators = pp_predators;
    p.predator_prey.n_prey = pp_prey;
    p.predator_prey.sight = pp_sight;
    p.predator_prey.episode_limit = pp_limit;
    p.predator_prey.capture_predators = pp_capture_predators;
    p.predator_prey.capture_bonus = pp_capture_bonus;
    p.predator_prey.shaping = pp_shaping;
    p.predator_prey.prey_move_prob = pp_prey_move_prob;
  } else if (env == "tabular") {
    p.tabular.horizon = tabular_horizon;
    p.tabular.advance_prob = tabular_advance_prob;
  } else {
    throw UsageError("unknown env '" + env + "' (expected matrix, predator_prey or tabular)");
  }
  return p;
}

training::ModelConfig RunConfig::model_config(const env::EnvSpec& spec) const {
  training::ModelConfig m;
  m.algo = algorithm();
  m.spec = spec;
  m.hidden_dim = hidden_dim;
  m.latent_dim = per_agent_latent * spec.n_agents;
  m.k = k;
  m.imag_width = imag_width;
  m.aggregator_hidden = aggregator_hidden;
  m.mixer_embed = mixer_embed;
  m.hypernet_hidden = hypernet_hidden;
  m.pad_rollout_cond = pad_rollout_cond;
  m.zero_rollout = zero_rollout;
  return m;
}

training::TrainConfig RunConfig::train_config() const {
  training::TrainConfig t;
  t.loss.gamma = gamma;
  t.loss.alpha = alpha;
  t.optimizer.lr = lr;
  t.optimizer.alpha = rms_alpha;
  t.optimizer.eps = rms_eps;
  t.grad_clip = grad_clip;
  t.batch_size = static_cast<std::size_t>(batch_size);
  t.target_update_episodes = target_update_episodes;
  return t;
}

agent::EpsilonSchedule RunConfig::epsilon_schedule() const { return {epsilon_start, epsilon_finish, anneal_steps}; }

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value, got '" + t + "'");
    }
    config.set(trim(t.substr(0, eq)), t.substr(eq + 1));
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& key : RunConfig::keys()) out += key + " = " + config.get(key) + "\n";
  return out;
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw UsageError("override '" + assignment + "' must have the form key=value");
  config.set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

}  // namespace mbvd::harness
