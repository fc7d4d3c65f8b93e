#include "mbvd/harness/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "mbvd/core/errors.hpp"

namespace mbvd::harness {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) { return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}}; }

Matrix matrix_from(const json& j, const std::string& what) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw LoadError(what + ": data length does not match its shape");
  return Matrix(rows, cols, std::move(data));
}

json params_json(training::Networks& nets) {
  nn::ParamList params;
  nets.collect(params);
  json out = json::array();
  for (const ad::Param* p : params) {
    json e = matrix_json(p->value);
    e["name"] = p->name;
    out.push_back(std::move(e));
  }
  return out;
}

void restore_params(const json& arr, training::Networks& nets, const std::string& which) {
  nn::ParamList params;
  nets.collect(params);
  if (!arr.is_array() || arr.size() != params.size()) {
    throw LoadError(which + ": expected " + std::to_string(params.size()) + " parameter arrays");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const json& e = arr[i];
    const auto name = e.at("name").get<std::string>();
    if (name != params[i]->name) throw LoadError(which + ": parameter " + std::to_string(i) + " is '" + name +
                                                 "', expected '" + params[i]->name + "'");
    Matrix m = matrix_from(e, name);
    if (!m.same_shape(params[i]->value)) {
      throw LoadError(which + ": '" + name + "' has shape " + m.shape_string() + ", expected " +
                      params[i]->value.shape_string());
    }
    params[i]->value = std::move(m);
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const Counters& counters,
                     training::Learner& learner) {
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  json cfg = json::object();
  for (const auto& key : RunConfig::keys()) cfg[key] = config.get(key);
  j["config"] = std::move(cfg);
  j["counters"] = {{"env_steps", counters.env_steps},
                   {"episodes", counters.episodes},
                   {"train_steps", counters.train_steps}};
  j["live"] = params_json(learner.live());
  j["target"] = params_json(learner.target());
  json sq = json::array();
  for (const Matrix& m : learner.optimizer().square_avg()) sq.push_back(matrix_json(m));
  j["optimizer"] = {{"kind", "rmsprop"}, {"square_avg", std::move(sq)}};

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw LoadError("cannot write checkpoint " + tmp.string());
    out << j.dump();
    if (!out) throw LoadError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("checkpoint not found: " + path.string());
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw LoadError("not a checkpoint: " + path.string());
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw LoadError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
    }
    LoadedCheckpoint out;
    for (const auto& [key, value] : j.at("config").items()) out.config.set(key, value.get<std::string>());
    out.config.validate();
    const json& c = j.at("counters");
    out.counters = {c.at("env_steps").get<long long>(), c.at("episodes").get<long long>(),
                    c.at("train_steps").get<long long>()};

    const auto env = env::make_environment(out.config.env_params());
    out.learner = std::make_unique<training::Learner>(out.config.model_config(env->spec()),
                                                      out.config.train_config(), out.config.seed);
    restore_params(j.at("live"), out.learner->live(), "live");
    restore_params(j.at("target"), out.learner->target(), "target");
    std::vector<Matrix> sq;
    for (const json& m : j.at("optimizer").at("square_avg")) sq.push_back(matrix_from(m, "square_avg"));
    out.learner->optimizer().set_square_avg(std::move(sq));
    out.learner->set_train_steps(out.counters.train_steps);
    return out;
  } catch (const json::exception& e) {
    throw LoadError("corrupt checkpoint " + path.string() + ": " + e.what());
  } catch (const UsageError& e) {
    throw LoadError("checkpoint " + path.string() + " holds an invalid config: " + e.what());
  }
}

}  // namespace mbvd::harness
