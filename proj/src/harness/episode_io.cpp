#include "mbvd/harness/episode_io.hpp"

#include <fstream>

#include <json.hpp>

#include "mbvd/core/errors.hpp"

namespace mbvd::harness {

using nlohmann::json;

namespace {

json spec_json(const env::EnvSpec& s) {
  return {{"n_agents", s.n_agents},   {"n_actions", s.n_actions},         {"obs_dim", s.obs_dim},
          {"state_dim", s.state_dim}, {"episode_limit", s.episode_limit}, {"has_action_mask", s.has_action_mask}};
}

env::EnvSpec spec_from(const json& j) {
  env::EnvSpec s;
  s.n_agents = j.at("n_agents").get<int>();
  s.n_actions = j.at("n_actions").get<int>();
  s.obs_dim = j.at("obs_dim").get<int>();
  s.state_dim = j.at("state_dim").get<int>();
  s.episode_limit = j.at("episode_limit").get<int>();
  s.has_action_mask = j.at("has_action_mask").get<bool>();
  return s;
}

json step_json(const env::EpisodeRecord& ep, std::size_t e, std::size_t t) {
  json j;
  j["episode"] = e;
  j["seed"] = ep.seed;
  j["t"] = t;
  json obs = json::array();
  for (std::size_t r = 0; r < ep.obs[t].rows(); ++r) {
    const auto row = ep.obs[t].row(r);
    obs.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["obs"] = std::move(obs);
  j["state"] = ep.states[t];
  json avail = json::array();
  for (int a = 0; a < ep.avail[t].n_agents(); ++a) {
    const auto row = ep.avail[t].row(a);
    avail.push_back(std::vector<int>(row.begin(), row.end()));
  }
  j["avail"] = std::move(avail);
  if (t < ep.length()) {
    j["actions"] = ep.actions[t];
    j["reward"] = ep.rewards[t];
    j["done"] = static_cast<bool>(ep.dones[t]);
  }
  return j;
}

}  // namespace

void write_episodes(const std::filesystem::path& path, const std::vector<env::EpisodeRecord>& episodes) {
  if (episodes.empty()) throw UsageError("no episodes to write");
  const env::EnvSpec& spec = episodes.front().spec;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw LoadError("cannot write episode file " + path.string());
  out << json{{"format", kEpisodeFormat}, {"version", kEpisodeVersion}, {"spec", spec_json(spec)}}.dump() << '\n';
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto& ep = episodes[e];
    if (!(ep.spec == spec)) throw UsageError("all episodes in one file must share an EnvSpec");
    ep.validate();
    for (std::size_t t = 0; t <= ep.length(); ++t) out << step_json(ep, e, t).dump() << '\n';
  }
  if (!out) throw LoadError("failed writing episode file " + path.string());
}

std::vector<env::EpisodeRecord> read_episodes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("episode file not found: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw LoadError("episode file is empty: " + path.string());
  std::vector<env::EpisodeRecord> episodes;
  try {
    const json header = json::parse(line);
    if (header.at("format").get<std::string>() != kEpisodeFormat) throw LoadError("not an episode file");
    if (header.at("version").get<int>() != kEpisodeVersion) throw LoadError("unsupported episode file version");
    const env::EnvSpec spec = spec_from(header.at("spec"));
    spec.validate();

    bool open = false;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const auto e = j.at("episode").get<std::size_t>();
      const auto t = j.at("t").get<std::size_t>();
      if (!open) {
        if (e != episodes.size() || t != 0) throw LoadError("episode records out of order");
        episodes.emplace_back();
        episodes.back().spec = spec;
        episodes.back().seed = j.at("seed").get<std::uint64_t>();
        open = true;
      } else if (e + 1 != episodes.size() || t != episodes.back().obs.size()) {
        throw LoadError("episode records out of order");
      }
      auto& ep = episodes.back();
      const auto rows = j.at("obs").get<std::vector<std::vector<double>>>();
      Matrix obs(rows.size(), rows.empty() ? 0 : rows.front().size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != obs.cols()) throw LoadError("ragged observation");
        std::copy(rows[r].begin(), rows[r].end(), obs.row(r).begin());
      }
      ep.obs.push_back(std::move(obs));
      ep.states.push_back(j.at("state").get<std::vector<double>>());
      const auto bits = j.at("avail").get<std::vector<std::vector<int>>>();
      env::ActionMask mask(spec.n_agents, spec.n_actions, false);
      if (bits.size() != static_cast<std::size_t>(spec.n_agents)) throw LoadError("mask has wrong agent count");
      for (int a = 0; a < spec.n_agents; ++a) {
        if (bits[static_cast<std::size_t>(a)].size() != static_cast<std::size_t>(spec.n_actions)) {
          throw LoadError("mask has wrong action count");
        }
        for (int u = 0; u < spec.n_actions; ++u) mask.set(a, u, bits[static_cast<std::size_t>(a)][static_cast<std::size_t>(u)] != 0);
      }
      ep.avail.push_back(std::move(mask));
      if (j.contains("actions")) {
        ep.actions.push_back(j.at("actions").get<std::vector<int>>());
        ep.rewards.push_back(j.at("reward").get<double>());
        ep.dones.push_back(j.at("done").get<bool>());
      } else {
        ep.validate();
        open = false;
      }
    }
    if (open) throw LoadError("truncated episode file: last episode has no final record");
  } catch (const json::exception& e) {
    throw LoadError("corrupt episode file " + path.string() + ": " + e.what());
  } catch (const UsageError& e) {
    throw LoadError("invalid episode in " + path.string() + ": " + e.what());
  }
  return episodes;
}

}  // namespace mbvd::harness
