#include "mbvd/harness/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "mbvd/autodiff/var.hpp"
#include "mbvd/core/errors.hpp"
#include "mbvd/core/rng.hpp"
#include "mbvd/imagination/imagination.hpp"

namespace mbvd::harness {

EmbeddingSet compute_embeddings(training::Networks& nets, env::Environment& env, int episodes, std::uint64_t seed) {
  if (nets.config.algo != training::Algo::kMbvd || !nets.imag) {
    throw UsageError("embedding export needs an mbvd checkpoint (got " + training::algo_name(nets.config.algo) + ")");
  }
  if (episodes < 1) throw UsageError("embedding export needs at least one episode");
  ad::NoGradGuard no_grad;
  auto& imag = *nets.imag;
  auto& agent = nets.agent;
  const int k = nets.config.k;
  const env::EnvSpec& spec = env.spec();

  EmbeddingSet set;
  set.latent_dim = nets.config.latent_dim;
  set.k = k;
  Rng seeds = make_stream(seed, rng_streams::kEval);
  Rng unused;
  for (int e = 0; e < episodes; ++e) {
    env::StepResult step = env.reset(seeds());
    agent::AgentHidden hidden = agent.init_hidden(spec.n_agents);
    std::vector<int> last(static_cast<std::size_t>(spec.n_agents), -1);
    int t = 0;
    while (!step.done) {
      const auto out = agent.forward(ad::constant(agent.build_inputs(step.obs, last)), ad::constant(hidden.h));
      hidden.h = out.hidden.value();
      const auto& joint = hidden.h.values();
      const auto rollout = imagination::generate_rollout(imag, agent, joint, step.avail, k);
      EmbeddingRow row;
      row.episode = e;
      row.step = t;
      row.real = rollout.latents.front();
      row.imagined.assign(rollout.latents.begin() + 1, rollout.latents.end());
      set.rows.push_back(std::move(row));

      const std::vector<int> actions = agent::select_actions(out.q.value(), step.avail, 0.0, unused);
      step = env.step(actions);
      last = actions;
      ++t;
    }
  }
  return set;
}

std::string format_embeddings(const EmbeddingSet& set) {
  std::string out = "episode\tstep";
  for (int i = 0; i < set.latent_dim; ++i) out += "\treal_" + std::to_string(i);
  for (int d = 1; d <= set.k; ++d) {
    for (int i = 0; i < set.latent_dim; ++i) out += "\timag" + std::to_string(d) + "_" + std::to_string(i);
  }
  out += '\n';
  char buf[40];
  for (const auto& r : set.rows) {
    if (r.real.size() != static_cast<std::size_t>(set.latent_dim) || r.imagined.size() != static_cast<std::size_t>(set.k)) {
      throw UsageError("embedding row does not match latent_dim/k");
    }
    out += std::to_string(r.episode) + "\t" + std::to_string(r.step);
    const auto put = [&](const std::vector<double>& v) {
      for (double x : v) {
        std::snprintf(buf, sizeof buf, "\t%.17g", x);
        out += buf;
      }
    };
    put(r.real);
    for (const auto& v : r.imagined) {
      if (v.size() != r.real.size()) throw UsageError("embedding row does not match latent_dim");
      put(v);
    }
    out += '\n';
  }
  return out;
}

EmbeddingSet parse_embeddings(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw LoadError("embedding file is empty");
  std::vector<std::string> header;
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, '\t')) header.push_back(cell);
  }
  if (header.size() < 3 || header[0] != "episode" || header[1] != "step") throw LoadError("bad embedding header");
  EmbeddingSet set;
  while (set.latent_dim + 2 < static_cast<int>(header.size()) &&
         header[static_cast<std::size_t>(set.latent_dim) + 2].rfind("real_", 0) == 0) {
    ++set.latent_dim;
  }
  if (set.latent_dim == 0) throw LoadError("embedding header has no real_ columns");
  const std::size_t rest = header.size() - 2 - static_cast<std::size_t>(set.latent_dim);
  if (rest % static_cast<std::size_t>(set.latent_dim) != 0) throw LoadError("embedding header has ragged columns");
  set.k = static_cast<int>(rest / static_cast<std::size_t>(set.latent_dim));

  const auto parse_double = [](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw LoadError("bad number '" + s + "' in embedding file");
    }
    if (used != s.size()) throw LoadError("bad number '" + s + "' in embedding file");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream cs(line);
    std::string cell;
    while (std::getline(cs, cell, '\t')) cells.push_back(cell);
    if (cells.size() != header.size()) throw LoadError("embedding row has the wrong column count");
    EmbeddingRow r;
    r.episode = std::stoi(cells[0]);
    r.step = std::stoi(cells[1]);
    std::size_t c = 2;
    for (int i = 0; i < set.latent_dim; ++i) r.real.push_back(parse_double(cells[c++]));
    for (int d = 0; d < set.k; ++d) {
      std::vector<double> v;
      for (int i = 0; i < set.latent_dim; ++i) v.push_back(parse_double(cells[c++]));
      r.imagined.push_back(std::move(v));
    }
    set.rows.push_back(std::move(r));
  }
  return set;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  std::ofstream out(path, std::ios::trunc);
  out << format_embeddings(set);
  if (!out) throw LoadError("cannot write embedding file " + path.string());
}

EmbeddingSet read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("embedding file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_embeddings(ss.str());
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) r[order[m]] = avg;
    i = j + 1;
  }
  return r;
}

Correlation spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw UsageError("spearman: samples differ in length");
  Correlation c;
  c.n = x.size();
  if (c.n < 3) return c;
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(c.n);
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(c.n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < c.n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return c;
  c.rho = sxy / std::sqrt(sxx * syy);
  const double dof = static_cast<double>(c.n - 2);
  if (c.rho >= 1.0) {
    c.p_value = 0.0;
  } else {
    const double t = c.rho * std::sqrt(dof / (1.0 - c.rho * c.rho));
    c.p_value = boost::math::cdf(boost::math::complement(boost::math::students_t(dof), t));
  }
  return c;
}

DepthTrend depth_trend(const EmbeddingSet& set) {
  DepthTrend out;
  out.mean_distance.assign(static_cast<std::size_t>(set.k), 0.0);
  out.count.assign(static_cast<std::size_t>(set.k), 0);
  std::map<std::pair<int, int>, const EmbeddingRow*> index;
  for (const auto& r : set.rows) index[{r.episode, r.step}] = &r;
  std::vector<double> depth, dist;
  for (const auto& r : set.rows) {
    for (int d = 1; d <= set.k; ++d) {
      const auto it = index.find({r.episode, r.step + d});
      if (it == index.end()) continue;
      const auto& imag = r.imagined[static_cast<std::size_t>(d - 1)];
      const auto& real = it->second->real;
      double s = 0.0;
      for (std::size_t i = 0; i < real.size(); ++i) s += (imag[i] - real[i]) * (imag[i] - real[i]);
      const double dd = std::sqrt(s);
      depth.push_back(d);
      dist.push_back(dd);
      out.mean_distance[static_cast<std::size_t>(d - 1)] += dd;
      ++out.count[static_cast<std::size_t>(d - 1)];
    }
  }
  for (std::size_t i = 0; i < out.mean_distance.size(); ++i) {
    if (out.count[i] > 0) out.mean_distance[i] /= static_cast<double>(out.count[i]);
  }
  out.correlation = spearman(depth, dist);
  return out;
}

}  // namespace mbvd::harness
