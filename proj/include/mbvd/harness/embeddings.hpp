#pragma once
// Latent embedding export: per step of greedy episodes, the posterior mean of
// the real joint hidden and the k imagined latent means rolled out from it.

#include <filesystem>
#include <string>
#include <vector>

#include "mbvd/env/environment.hpp"
#include "mbvd/training/model.hpp"

namespace mbvd::harness {

struct EmbeddingRow {
  int episode = 0;
  int step = 0;
  std::vector<double> real;
  std::vector<std::vector<double>> imagined;  // depth 1..k

  friend bool operator==(const EmbeddingRow&, const EmbeddingRow&) = default;
};

struct EmbeddingSet {
  int latent_dim = 0;
  int k = 0;
  std::vector<EmbeddingRow> rows;

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

// Throws UsageError unless nets is an MBVD model. Episode seeds follow the
// evaluation stream of `seed`.
EmbeddingSet compute_embeddings(training::Networks& nets, env::Environment& env, int episodes, std::uint64_t seed);

// Tab-separated: episode, step, real_0.., imag<d>_<i>.. with %.17g values.
std::string format_embeddings(const EmbeddingSet& set);
EmbeddingSet parse_embeddings(const std::string& text);
void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);
EmbeddingSet read_embeddings(const std::filesystem::path& path);

// Average ranks, ties shared.
std::vector<double> ranks(const std::vector<double>& x);

struct Correlation {
  double rho = 0.0;
  // One-sided p-value for rho > 0 (t approximation, n - 2 dof).
  double p_value = 1.0;
  std::size_t n = 0;
};
Correlation spearman(const std::vector<double>& x, const std::vector<double>& y);

// Distance at depth d for step t: || imagined_d(t) - real(t + d) || within the
// same episode, for every t with t + d inside the episode.
struct DepthTrend {
  std::vector<double> mean_distance;  // index d - 1
  std::vector<std::size_t> count;
  Correlation correlation;            // depth vs distance over all pairs
};
DepthTrend depth_trend(const EmbeddingSet& set);

}  // namespace mbvd::harness
