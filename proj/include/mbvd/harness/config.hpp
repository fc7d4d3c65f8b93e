#pragma once
// Run configuration: a flat key = value document. Every key has a default;
// unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mbvd/agent/agent_net.hpp"
#include "mbvd/env/factory.hpp"
#include "mbvd/training/learner.hpp"
#include "mbvd/training/model.hpp"

namespace mbvd::harness {

struct RunConfig {
  std::string env = "matrix";
  std::string algo = "mbvd";
  std::uint64_t seed = 0;

  // Learning
  int k = 3;
  double alpha = 0.3;
  double gamma = 0.99;
  double lr = 5e-4;
  double rms_alpha = 0.99;
  double rms_eps = 1e-5;
  int batch_size = 32;
  int buffer_capacity = 5000;
  int target_update_episodes = 200;
  double grad_clip = 10.0;
  double epsilon_start = 1.0;
  double epsilon_finish = 0.05;
  long long anneal_steps = 50'000;
  int train_ratio = 1;

  // Architecture
  int per_agent_latent = 8;
  int hidden_dim = 64;
  int imag_width = 128;
  int aggregator_hidden = 64;
  int mixer_embed = 32;
  int hypernet_hidden = 64;
  bool pad_rollout_cond = false;
  bool zero_rollout = false;

  // Schedule
  long long total_env_steps = 200'000;
  long long max_episodes = 0;  // 0: no episode cap
  long long eval_every = 10'000;
  int eval_episodes = 32;
  long long checkpoint_every = 50'000;  // 0: final checkpoint only

  // Environments
  std::string matrix_payoff = "10,0,0;0,6,2;0,2,4";
  int matrix_rounds = 1;
  int pp_grid = 7;
  int pp_predators = 2;
  int pp_prey = 1;
  int pp_sight = 2;
  int pp_limit = 25;
  int pp_capture_predators = 2;
  double pp_capture_bonus = 10.0;
  double pp_shaping = 0.05;
  double pp_prey_move_prob = 0.5;
  int tabular_horizon = 6;
  double tabular_advance_prob = 0.9;

  // Throws UsageError on an unknown key or unparsable value.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  // Cross-field checks (algo name, k >= 1 with imagination, positive sizes).
  void validate() const;

  training::Algo algorithm() const { return training::parse_algo(algo); }
  env::EnvParams env_params() const;
  training::ModelConfig model_config(const env::EnvSpec& spec) const;
  training::TrainConfig train_config() const;
  agent::EpsilonSchedule epsilon_schedule() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Lines are `key = value`; blank lines and lines starting with '#' are skipped.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
// Every key in keys() order; doubles print with round-trip precision.
std::string format_config(const RunConfig& config);

// "a=b" override.
void apply_override(RunConfig& config, const std::string& assignment);

std::vector<std::vector<double>> parse_payoff(const std::string& text);

}  // namespace mbvd::harness
