#include "mbvd/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mbvd/core/errors.hpp"

namespace mbvd::harness {

using nlohmann::json;

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

EvalSummary summarize(const std::vector<double>& returns, const std::vector<bool>& success) {
  if (returns.empty()) throw UsageError("evaluation needs at least one episode");
  EvalSummary s;
  s.episodes = static_cast<int>(returns.size());
  s.returns = returns;
  s.median = quantile(returns, 0.5);
  s.q25 = quantile(returns, 0.25);
  s.q75 = quantile(returns, 0.75);
  double total = 0.0;
  for (double r : returns) total += r;
  s.mean = total / static_cast<double>(returns.size());
  const auto wins = std::count(success.begin(), success.end(), true);
  s.success_rate = static_cast<double>(wins) / static_cast<double>(returns.size());
  return s;
}

std::string to_json_line(const MetricsRow& row) {
  json j;
  j["env_steps"] = row.env_steps;
  j["episodes"] = row.episodes;
  j["train_steps"] = row.train_steps;
  j["eval_return_median"] = row.eval_return_median;
  j["eval_return_q25"] = row.eval_return_q25;
  j["eval_return_q75"] = row.eval_return_q75;
  j["win_or_success_rate"] = row.win_or_success_rate;
  const char* names[] = {"l_rl", "l_rc", "l_rc_prior", "l_kl", "l_fa", "loss_total"};
  if (row.losses) {
    const auto& l = *row.losses;
    const double values[] = {l.l_rl, l.l_rc, l.l_rc_prior, l.l_kl, l.l_fa, l.total};
    for (int i = 0; i < 6; ++i) j[names[i]] = values[i];
  } else {
    for (const char* n : names) j[n] = nullptr;
  }
  j["epsilon"] = row.epsilon;
  j["wall_clock"] = row.wall_clock;
  return j.dump();
}

MetricsRow parse_metrics_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    MetricsRow row;
    row.env_steps = j.at("env_steps").get<long long>();
    row.episodes = j.at("episodes").get<long long>();
    row.train_steps = j.at("train_steps").get<long long>();
    row.eval_return_median = j.at("eval_return_median").get<double>();
    row.eval_return_q25 = j.at("eval_return_q25").get<double>();
    row.eval_return_q75 = j.at("eval_return_q75").get<double>();
    row.win_or_success_rate = j.at("win_or_success_rate").get<double>();
    if (!j.at("l_rl").is_null()) {
      training::LossBreakdown l;
      l.l_rl = j.at("l_rl").get<double>();
      l.l_rc = j.at("l_rc").get<double>();
      l.l_rc_prior = j.at("l_rc_prior").get<double>();
      l.l_kl = j.at("l_kl").get<double>();
      l.l_fa = j.at("l_fa").get<double>();
      l.total = j.at("loss_total").get<double>();
      row.losses = l;
    }
    row.epsilon = j.at("epsilon").get<double>();
    row.wall_clock = j.at("wall_clock").get<double>();
    return row;
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed metrics row: ") + e.what());
  }
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot read metrics file " + path.string());
  std::vector<MetricsRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_metrics_line(line));
  }
  return rows;
}

MetricsWriter::MetricsWriter(std::filesystem::path path) : path_(std::move(path)) {
  std::ofstream out(path_, std::ios::trunc);
  if (!out) throw LoadError("cannot create metrics file " + path_.string());
}

void MetricsWriter::append(const MetricsRow& row) {
  std::ofstream out(path_, std::ios::app);
  out << to_json_line(row) << '\n';
  if (!out) throw LoadError("failed writing metrics file " + path_.string());
}

void LossAccumulator::add(const training::LossBreakdown& l) {
  sum_.l_rl += l.l_rl;
  sum_.l_rc += l.l_rc;
  sum_.l_rc_prior += l.l_rc_prior;
  sum_.l_kl += l.l_kl;
  sum_.l_fa += l.l_fa;
  sum_.total += l.total;
  ++count_;
}

std::optional<training::LossBreakdown> LossAccumulator::mean() const {
  if (count_ == 0) return std::nullopt;
  const double c = static_cast<double>(count_);
  return training::LossBreakdown{sum_.l_rl / c, sum_.l_rc / c, sum_.l_rc_prior / c,
                                 sum_.l_kl / c, sum_.l_fa / c, sum_.total / c};
}

}  // namespace mbvd::harness
