#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mbvd/training/losses.hpp"

namespace mbvd::harness {

// Linear interpolation between order statistics (q in [0, 1]).
double quantile(std::vector<double> values, double q);

struct EvalSummary {
  int episodes = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double mean = 0.0;
  double success_rate = 0.0;
  std::vector<double> returns;
};

EvalSummary summarize(const std::vector<double>& returns, const std::vector<bool>& success);

struct MetricsRow {
  long long env_steps = 0;
  long long episodes = 0;
  long long train_steps = 0;
  double eval_return_median = 0.0;
  double eval_return_q25 = 0.0;
  double eval_return_q75 = 0.0;
  double win_or_success_rate = 0.0;
  // Means over the gradient steps since the previous row; empty before the
  // first step.
  std::optional<training::LossBreakdown> losses;
  double epsilon = 0.0;
  double wall_clock = 0.0;  // seconds since the run started

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

std::string to_json_line(const MetricsRow& row);
// Throws LoadError when a field is missing or mistyped.
MetricsRow parse_metrics_line(const std::string& line);
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

class MetricsWriter {
 public:
  explicit MetricsWriter(std::filesystem::path path);
  void append(const MetricsRow& row);

 private:
  std::filesystem::path path_;
};

// Running mean of loss breakdowns.
class LossAccumulator {
 public:
  void add(const training::LossBreakdown& l);
  std::optional<training::LossBreakdown> mean() const;
  void reset() { *this = LossAccumulator(); }

 private:
  training::LossBreakdown sum_;
  long long count_ = 0;
};

}  // namespace mbvd::harness
