#include "mbvd/harness/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "mbvd/core/errors.hpp"
#include "mbvd/env/tabular.hpp"
#include "mbvd/training/replay_buffer.hpp"

namespace mbvd::harness {

namespace fs = std::filesystem;

namespace {

// Per-episode success test for an environment.
std::function<bool(const env::EpisodeRecord&)> success_test(const env::Environment& e) {
  if (const auto* pp = dynamic_cast<const env::PredatorPrey*>(&e)) {
    return [pp](const env::EpisodeRecord&) {
      for (bool alive : pp->prey_alive()) {
        if (alive) return false;
      }
      return true;
    };
  }
  if (const auto* tab = dynamic_cast<const env::TabularEnvironment*>(&e)) {
    const double optimum = env::brute_force_optimal_return(*tab, 1.0);
    return [optimum](const env::EpisodeRecord& rec) { return rec.total_return() >= optimum - 1e-9; };
  }
  return [](const env::EpisodeRecord&) { return false; };
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw LoadError("cannot write " + path.string());
}

}  // namespace

EvalSummary evaluate(training::Networks& nets, env::Environment& env, int episodes, std::uint64_t seed,
                     std::vector<env::EpisodeRecord>* records) {
  if (episodes < 1) throw UsageError("evaluation needs at least one episode (got " + std::to_string(episodes) + ")");
  Rng seeds = make_stream(seed, rng_streams::kEval);
  Rng unused;  // greedy selection draws nothing
  const auto succeeded = success_test(env);
  std::vector<double> returns;
  std::vector<bool> success;
  for (int i = 0; i < episodes; ++i) {
    const std::uint64_t env_seed = seeds();
    env::EpisodeRecord rec = training::run_episode(env, nets.agent, 0.0, env_seed, unused);
    returns.push_back(rec.total_return());
    success.push_back(succeeded(rec));
    if (records) records->push_back(std::move(rec));
  }
  return summarize(returns, success);
}

RunResult run_training(const RunConfig& config, const fs::path& run_dir, const RunOptions& options) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(run_dir);
  write_text(run_dir / "config.txt", format_config(config));
  MetricsWriter metrics(run_dir / "metrics.jsonl");

  auto env = env::make_environment(config.env_params());
  auto eval_env = env::make_environment(config.env_params());
  training::Learner learner(config.model_config(env->spec()), config.train_config(), config.seed);
  training::ReplayBuffer buffer(static_cast<std::size_t>(config.buffer_capacity));
  Rng acting = make_stream(config.seed, rng_streams::kActing);
  Rng train_rng = make_stream(config.seed, rng_streams::kTraining);
  Rng env_seeds = make_stream(config.seed, rng_streams::kEnvSeeds);
  const agent::EpsilonSchedule schedule = config.epsilon_schedule();

  RunResult result;
  result.dir = run_dir;
  Counters& c = result.counters;
  LossAccumulator losses;
  long long next_eval = 0;
  long long next_checkpoint = config.checkpoint_every;

  const auto emit_row = [&] {
    const EvalSummary s = evaluate(learner.live(), *eval_env, config.eval_episodes, config.seed);
    MetricsRow row;
    row.env_steps = c.env_steps;
    row.episodes = c.episodes;
    row.train_steps = learner.train_steps();
    row.eval_return_median = s.median;
    row.eval_return_q25 = s.q25;
    row.eval_return_q75 = s.q75;
    row.win_or_success_rate = s.success_rate;
    row.losses = losses.mean();
    row.epsilon = agent::epsilon_at(c.env_steps, schedule);
    row.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    metrics.append(row);
    result.rows.push_back(row);
    losses.reset();
    if (options.progress) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "steps %lld episodes %lld median %.4g [%.4g, %.4g] success %.3f eps %.3f t %.0fs",
                    row.env_steps, row.episodes, row.eval_return_median, row.eval_return_q25, row.eval_return_q75,
                    row.win_or_success_rate, row.epsilon, row.wall_clock);
      *options.progress << buf << std::endl;
    }
  };

  const auto done = [&] {
    return c.env_steps >= config.total_env_steps || (config.max_episodes > 0 && c.episodes >= config.max_episodes);
  };

  while (!done()) {
    if (c.env_steps >= next_eval) {
      emit_row();
      while (next_eval <= c.env_steps) next_eval += config.eval_every;
    }
    const double eps = agent::epsilon_at(c.env_steps, schedule);
    env::EpisodeRecord rec = training::run_episode(*env, learner.live().agent, eps, env_seeds(), acting);
    c.env_steps += static_cast<long long>(rec.length());
    ++c.episodes;
    buffer.push(std::move(rec));
    for (int i = 0; i < config.train_ratio; ++i) {
      if (auto l = learner.train_step(buffer, train_rng)) losses.add(*l);
    }
    learner.sync_target(c.episodes);
    c.train_steps = learner.train_steps();
    if (options.write_checkpoints && config.checkpoint_every > 0 && c.env_steps >= next_checkpoint && !done()) {
      save_checkpoint(run_dir / ("checkpoint_" + std::to_string(c.env_steps) + ".json"), config, c, learner);
      while (next_checkpoint <= c.env_steps) next_checkpoint += config.checkpoint_every;
    }
  }
  emit_row();
  if (options.write_checkpoints) save_checkpoint(run_dir / "checkpoint.json", config, c, learner);
  return result;
}

RunResult run_ablation_variant(const std::string& variant, RunConfig config, const fs::path& run_dir,
                               const RunOptions& options) {
  if (variant != "qmix-rs" && variant != "qmix-ls") {
    throw UsageError("unknown ablation variant '" + variant + "' (expected qmix-rs or qmix-ls)");
  }
  config.algo = variant;
  return run_training(config, run_dir, options);
}

fs::path sweep_run_dir(const fs::path& out_dir, int k, std::uint64_t seed) {
  return out_dir / ("k" + std::to_string(k) + "_seed" + std::to_string(seed));
}

std::vector<SweepRow> run_k_sweep(const RunConfig& base, const std::vector<int>& k_values,
                                  const std::vector<std::uint64_t>& seeds, const fs::path& out_dir,
                                  const RunLauncher& launch) {
  if (k_values.empty()) throw UsageError("k-sweep needs at least one k value");
  if (seeds.empty()) throw UsageError("k-sweep needs at least one seed");
  std::vector<RunConfig> configs;
  for (int k : k_values) {
    for (std::uint64_t seed : seeds) {
      RunConfig c = base;
      c.k = k;
      c.seed = seed;
      c.validate();
      configs.push_back(c);
    }
  }
  fs::create_directories(out_dir);
  for (const RunConfig& c : configs) {
    const fs::path dir = sweep_run_dir(out_dir, c.k, c.seed);
    if (launch) {
      launch(c, dir);
    } else {
      run_training(c, dir);
    }
  }
  auto table = tabulate_sweep(k_values, seeds, out_dir);
  write_text(out_dir / "sweep_table.tsv", format_sweep_table(table));
  return table;
}

std::vector<SweepRow> tabulate_sweep(const std::vector<int>& k_values, const std::vector<std::uint64_t>& seeds,
                                     const fs::path& out_dir) {
  std::vector<SweepRow> table;
  for (int k : k_values) {
    std::vector<double> finals;
    double success = 0.0;
    for (std::uint64_t seed : seeds) {
      const auto rows = read_metrics(sweep_run_dir(out_dir, k, seed) / "metrics.jsonl");
      if (rows.empty()) throw LoadError("k-sweep run k=" + std::to_string(k) + " seed=" + std::to_string(seed) +
                                        " produced no metrics");
      finals.push_back(rows.back().eval_return_median);
      success += rows.back().win_or_success_rate;
    }
    SweepRow r;
    r.k = k;
    r.runs = static_cast<int>(finals.size());
    r.median = quantile(finals, 0.5);
    r.q25 = quantile(finals, 0.25);
    r.q75 = quantile(finals, 0.75);
    r.success_rate = success / static_cast<double>(finals.size());
    table.push_back(r);
  }
  return table;
}

std::string format_sweep_table(const std::vector<SweepRow>& rows) {
  std::string out = "k\truns\tmedian\tq25\tq75\tsuccess_rate\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d\t%d\t%.17g\t%.17g\t%.17g\t%.17g\n", r.k, r.runs, r.median, r.q25, r.q75,
                  r.success_rate);
    out += buf;
  }
  return out;
}

}  // namespace mbvd::harness
