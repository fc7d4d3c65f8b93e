#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mbvd/env/episode.hpp"
#include "mbvd/harness/checkpoint.hpp"
#include "mbvd/harness/config.hpp"
#include "mbvd/harness/metrics.hpp"

namespace mbvd::harness {

// Greedy (epsilon = 0) episodes. Episode seeds come from the eval stream of
// `seed`, so every call with the same seed replays the same start states.
// Success: every prey captured (predator_prey) or the oracle optimum reached
// (tabular environments, undiscounted).
EvalSummary evaluate(training::Networks& nets, env::Environment& env, int episodes, std::uint64_t seed,
                     std::vector<env::EpisodeRecord>* records = nullptr);

struct RunOptions {
  bool write_checkpoints = true;
  std::ostream* progress = nullptr;  // one line per metrics row when set
};

struct RunResult {
  std::filesystem::path dir;
  std::vector<MetricsRow> rows;
  Counters counters;
};

// Files in run_dir: config.txt (resolved snapshot), metrics.jsonl,
// checkpoint_<env_steps>.json every checkpoint_every steps, checkpoint.json
// at the end. The metrics file is a function of the config alone apart from
// the wall_clock field.
RunResult run_training(const RunConfig& config, const std::filesystem::path& run_dir, const RunOptions& options = {});

// variant must be qmix-rs or qmix-ls.
RunResult run_ablation_variant(const std::string& variant, RunConfig config, const std::filesystem::path& run_dir,
                               const RunOptions& options = {});

struct SweepRow {
  int k = 0;
  int runs = 0;
  // Across seeds, of each run's final eval_return_median.
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double success_rate = 0.0;  // mean of final success rates
};

// Runs one training per (k, seed) into out_dir/k<k>_seed<seed> via launch
// (in-process run_training when empty), then tabulates the final rows.
using RunLauncher = std::function<void(const RunConfig&, const std::filesystem::path&)>;
std::vector<SweepRow> run_k_sweep(const RunConfig& base, const std::vector<int>& k_values,
                                  const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out_dir,
                                  const RunLauncher& launch = {});
std::vector<SweepRow> tabulate_sweep(const std::vector<int>& k_values, const std::vector<std::uint64_t>& seeds,
                                     const std::filesystem::path& out_dir);
std::string format_sweep_table(const std::vector<SweepRow>& rows);

std::filesystem::path sweep_run_dir(const std::filesystem::path& out_dir, int k, std::uint64_t seed);

}  // namespace mbvd::harness
