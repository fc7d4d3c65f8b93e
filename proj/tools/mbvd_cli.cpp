// mbvd: train, evaluate and inspect value-decomposition agents.

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbvd/core/errors.hpp"
#include "mbvd/harness/checkpoint.hpp"
#include "mbvd/harness/config.hpp"
#include "mbvd/harness/embeddings.hpp"
#include "mbvd/harness/episode_io.hpp"
#include "mbvd/harness/plot.hpp"
#include "mbvd/harness/runner.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace mbvd;
using namespace mbvd::harness;

namespace {

struct ConfigArgs {
  std::string file;
  std::string algo;
  std::string env;
  std::vector<std::string> seed;
  std::vector<std::string> k;
  std::vector<std::string> overrides;

  void add_to(CLI::App* cmd, bool with_algo = true) {
    cmd->add_option("-c,--config", file, "key = value config file");
    if (with_algo) cmd->add_option("--algo", algo, "vdn, qmix, mbvd, qmix-rs or qmix-ls");
    cmd->add_option("--env", env, "matrix, predator_prey or tabular");
    cmd->add_option("--seed", seed, "run seed")->expected(1);
    cmd->add_option("--k", k, "rollout horizon")->expected(1);
    cmd->add_option("-s,--set", overrides, "override key=value (repeatable)");
  }

  RunConfig resolve() const {
    RunConfig c = file.empty() ? RunConfig{} : load_config(file);
    if (!algo.empty()) c.set("algo", algo);
    if (!env.empty()) c.set("env", env);
    if (!seed.empty()) c.set("seed", seed.front());
    if (!k.empty()) c.set("k", k.front());
    for (const auto& o : overrides) apply_override(c, o);
    c.validate();
    return c;
  }
};

void print_summary(const EvalSummary& s) {
  std::printf("{\"episodes\": %d, \"eval_return_median\": %.17g, \"eval_return_q25\": %.17g, "
              "\"eval_return_q75\": %.17g, \"eval_return_mean\": %.17g, \"win_or_success_rate\": %.17g}\n",
              s.episodes, s.median, s.q25, s.q75, s.mean, s.success_rate);
}

// Runs `self train` for one sweep cell in a child process.
void launch_child(const std::string& self, const RunConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path cfg = dir / "sweep_config.txt";
  {
    std::ofstream out(cfg);
    out << format_config(config);
  }
  std::vector<std::string> args = {self, "train", "--config", cfg.string(), "--out", dir.string(), "--quiet"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  if (posix_spawn(&pid, self.c_str(), nullptr, nullptr, argv.data(), environ) != 0) {
    throw std::runtime_error("failed to launch " + self);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw std::runtime_error("sweep run in " + dir.string() + " failed");
  }
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stoi(cell));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Value-decomposition MARL with latent imagination"};
  app.require_subcommand(1);

  ConfigArgs train_args;
  std::string train_out;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train one run");
  train_args.add_to(train);
  train->add_option("-o,--out", train_out, "run directory")->required();
  train->add_flag("-q,--quiet", quiet, "no progress lines");

  std::string ckpt;
  int episodes = 32;
  std::vector<std::string> eval_seed;
  std::string save_episodes;
  auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  eval->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  eval->add_option("-n,--episodes", episodes, "number of greedy episodes");
  eval->add_option("--seed", eval_seed, "evaluation seed (default: the run seed)")->expected(1);
  eval->add_option("--save-episodes", save_episodes, "write the evaluated episodes to this file");

  ConfigArgs ablate_args;
  std::string variant, ablate_out;
  auto* ablate = app.add_subcommand("ablate", "train a qmix-rs or qmix-ls ablation");
  ablate->add_option("--variant", variant, "qmix-rs or qmix-ls")->required();
  ablate_args.add_to(ablate, false);
  ablate->add_option("-o,--out", ablate_out, "run directory")->required();

  ConfigArgs sweep_args;
  std::string k_values = "1,3,5", sweep_seeds = "0,1,2", sweep_out;
  bool in_process = false;
  auto* sweep = app.add_subcommand("k-sweep", "one run per rollout horizon and seed, then a comparison table");
  sweep_args.add_to(sweep);
  sweep->add_option("--k-values", k_values, "comma-separated horizons");
  sweep->add_option("--seeds", sweep_seeds, "comma-separated seeds");
  sweep->add_option("-o,--out", sweep_out, "sweep directory")->required();
  sweep->add_flag("--in-process", in_process, "run cells in this process instead of child processes");

  std::string emb_out;
  bool trend = false;
  auto* exp = app.add_subcommand("export-embeddings", "write real and imagined latent means per step");
  exp->add_option("--checkpoint", ckpt, "mbvd checkpoint")->required();
  exp->add_option("-n,--episodes", episodes, "number of greedy episodes");
  exp->add_option("--seed", eval_seed, "episode seed (default: the run seed)")->expected(1);
  exp->add_option("-o,--out", emb_out, "output TSV")->required();
  exp->add_flag("--trend", trend, "print distance by depth and its Spearman correlation");

  std::vector<std::string> metrics_files, labels;
  std::string emb_in, plot_out;
  auto* plot = app.add_subcommand("plot", "render an SVG from metrics or embeddings");
  auto* m_opt = plot->add_option("--metrics", metrics_files, "metrics.jsonl files (repeatable)");
  plot->add_option("--label", labels, "legend label per metrics file");
  auto* e_opt = plot->add_option("--embeddings", emb_in, "embedding TSV");
  m_opt->excludes(e_opt);
  plot->add_option("-o,--out", plot_out, "output SVG")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const RunConfig c = train_args.resolve();
      RunOptions opts;
      if (!quiet) opts.progress = &std::cerr;
      run_training(c, train_out, opts);
    } else if (*eval) {
      if (episodes < 1) throw UsageError("--episodes must be >= 1");
      auto loaded = load_checkpoint(ckpt);
      const std::uint64_t seed = eval_seed.empty() ? loaded.config.seed : std::stoull(eval_seed.front());
      auto env = env::make_environment(loaded.config.env_params());
      std::vector<env::EpisodeRecord> records;
      const EvalSummary s = evaluate(loaded.learner->live(), *env, episodes, seed, save_episodes.empty() ? nullptr : &records);
      if (!save_episodes.empty()) write_episodes(save_episodes, records);
      print_summary(s);
    } else if (*ablate) {
      RunOptions opts;
      opts.progress = &std::cerr;
      RunConfig c = ablate_args.resolve();
      run_ablation_variant(variant, c, ablate_out, opts);
    } else if (*sweep) {
      const RunConfig base = sweep_args.resolve();
      std::vector<std::uint64_t> seeds;
      for (int s : parse_ints(sweep_seeds)) {
        if (s < 0) throw UsageError("seeds must be non-negative");
        seeds.push_back(static_cast<std::uint64_t>(s));
      }
      RunLauncher launch;
      if (!in_process) {
        const std::string self = fs::read_symlink("/proc/self/exe").string();
        launch = [self](const RunConfig& c, const fs::path& dir) { launch_child(self, c, dir); };
      }
      const auto table = run_k_sweep(base, parse_ints(k_values), seeds, sweep_out, launch);
      std::cout << format_sweep_table(table);
    } else if (*exp) {
      if (episodes < 1) throw UsageError("--episodes must be >= 1");
      auto loaded = load_checkpoint(ckpt);
      const std::uint64_t seed = eval_seed.empty() ? loaded.config.seed : std::stoull(eval_seed.front());
      auto env = env::make_environment(loaded.config.env_params());
      const EmbeddingSet set = compute_embeddings(loaded.learner->live(), *env, episodes, seed);
      write_embeddings(emb_out, set);
      if (trend) {
        const DepthTrend t = depth_trend(set);
        for (std::size_t d = 0; d < t.mean_distance.size(); ++d) {
          std::printf("depth %zu: mean distance %.6g over %zu steps\n", d + 1, t.mean_distance[d], t.count[d]);
        }
        std::printf("spearman rho %.4f  p %.3g  n %zu\n", t.correlation.rho, t.correlation.p_value, t.correlation.n);
      }
    } else if (*plot) {
      std::string svg;
      if (!emb_in.empty()) {
        svg = embedding_svg(read_embeddings(emb_in));
      } else {
        if (metrics_files.empty()) throw UsageError("plot needs --metrics or --embeddings");
        if (!labels.empty() && labels.size() != metrics_files.size()) {
          throw UsageError("give one --label per --metrics file");
        }
        std::vector<Curve> curves;
        for (std::size_t i = 0; i < metrics_files.size(); ++i) {
          curves.push_back({labels.empty() ? fs::path(metrics_files[i]).parent_path().filename().string() : labels[i],
                            read_metrics(metrics_files[i])});
        }
        svg = learning_curve_svg(curves);
      }
      std::ofstream out(plot_out);
      out << svg;
      if (!out) throw LoadError("cannot write " + plot_out);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const LoadError& e) {
    std::cerr << "load error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
