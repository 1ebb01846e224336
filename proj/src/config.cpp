#include "lowdose/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace lowdose {

std::string to_string(Model model) {
  switch (model) {
    case Model::poisson: return "poisson";
    case Model::bernoulli: return "bernoulli";
    case Model::noiseless: return "noiseless";
    case Model::truncated: return "truncated";
  }
  return "unknown";
}

Model parse_model(const std::string& name) {
  if (name == "poisson") return Model::poisson;
  if (name == "bernoulli") return Model::bernoulli;
  if (name == "noiseless") return Model::noiseless;
  if (name == "truncated") return Model::truncated;
  throw ConfigError("unknown model '" + name + "' (expected poisson, bernoulli, noiseless or truncated)");
}

std::optional<NoiseModel> theory_model(Model model) {
  switch (model) {
    case Model::poisson:
    case Model::noiseless: return NoiseModel::poisson;
    case Model::bernoulli: return NoiseModel::bernoulli;
    case Model::truncated: return std::nullopt;
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (models.empty()) throw ConfigError("config: models must be nonempty");
  if (n_grid.empty() || m_grid.empty() || alpha_grid.empty()) {
    throw ConfigError("config: n, m and alpha grids must be nonempty");
  }
  for (auto n : n_grid) {
    if (n < 1) throw ConfigError("config: every n must be >= 1");
  }
  for (auto m : m_grid) {
    if (m < 1) throw ConfigError("config: every m must be >= 1");
  }
  for (double a : alpha_grid) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("config: every alpha must be finite and > 0");
  }
  if (trials < 1) throw ConfigError("config: trials must be >= 1");
  if (!(eigensolver.tol > 0.0)) throw ConfigError("config: eigensolver.tol must be > 0");
  if (eigensolver.max_iter < 1) throw ConfigError("config: eigensolver.max_iter must be >= 1");
  if (truncation_t && !(*truncation_t > 0.0)) throw ConfigError("config: truncation_t must be > 0 or auto");
  try {
    constants.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

namespace {

template <typename T>
std::vector<T> read_list(const YAML::Node& node, const char* key) {
  const YAML::Node v = node[key];
  if (!v) throw ConfigError(std::string("config: missing key '") + key + "'");
  if (v.IsScalar()) return {v.as<T>()};
  if (!v.IsSequence()) throw ConfigError(std::string("config: '") + key + "' must be a list");
  return v.as<std::vector<T>>();
}

BoundConstants read_constants(const YAML::Node& node) {
  BoundConstants k;
  if (node["C_beta"]) k.C_beta = node["C_beta"].as<double>();
  if (node["C_hat_beta"]) k.C_hat_beta = node["C_hat_beta"].as<double>();
  if (node["beta"]) k.beta = node["beta"].as<double>();
  return k;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  try {
    const YAML::Node root = YAML::Load(text);
    if (!root.IsMap()) throw ConfigError("config: top level must be a mapping");

    for (const auto& name : read_list<std::string>(root, "models")) cfg.models.push_back(parse_model(name));
    cfg.n_grid = read_list<std::int64_t>(root, "n");
    cfg.m_grid = read_list<std::int64_t>(root, "m");
    cfg.alpha_grid = read_list<double>(root, "alpha");
    if (root["trials"]) cfg.trials = root["trials"].as<int>();
    if (root["seed"]) cfg.master_seed = root["seed"].as<std::uint64_t>();
    if (const auto eig = root["eigensolver"]) {
      if (eig["tol"]) cfg.eigensolver.tol = eig["tol"].as<double>();
      if (eig["max_iter"]) cfg.eigensolver.max_iter = eig["max_iter"].as<int>();
    }
    if (const auto t = root["truncation_t"]) {
      if (!(t.IsScalar() && t.Scalar() == "auto")) cfg.truncation_t = t.as<double>();
    }
    if (const auto k = root["bound_constants"]) cfg.constants = read_constants(k);
    if (const auto f = root["bound_constants_file"]) {
      if (root["bound_constants"]) {
        throw ConfigError("config: give bound_constants or bound_constants_file, not both");
      }
      cfg.constants = load_constants(resolve(base_dir, f.as<std::string>()));
    }
    if (root["output"]) cfg.output_path = resolve(base_dir, root["output"].as<std::string>()).string();
    if (root["memory_cap_bytes"]) cfg.memory_cap_bytes = root["memory_cap_bytes"].as<std::size_t>();
    if (root["measure_deviation"]) cfg.measure_deviation = root["measure_deviation"].as<bool>();
    if (root["record_timing"]) cfg.record_timing = root["record_timing"].as<bool>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string format_constants(const BoundConstants& k) {
  return fmt::format("bound_constants:\n  C_beta: {:.17g}\n  C_hat_beta: {:.17g}\n  beta: {:.17g}\n", k.C_beta,
                     k.C_hat_beta, k.beta);
}

BoundConstants load_constants(const std::filesystem::path& path) {
  try {
    const YAML::Node root = YAML::LoadFile(path.string());
    const YAML::Node node = root["bound_constants"] ? root["bound_constants"] : root;
    BoundConstants k = read_constants(node);
    k.validate();
    return k;
  } catch (const YAML::Exception& e) {
    throw ConfigError("bound constants " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("bound constants " + path.string() + ": " + e.what());
  }
}

}  // namespace lowdose
