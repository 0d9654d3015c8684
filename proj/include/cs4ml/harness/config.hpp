#pragma once

// JSON experiment configuration with desk/paper presets.

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cs4ml/error.hpp"
#include "cs4ml/harness/experiments.hpp"

namespace cs4ml {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

inline ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "polyreg") return ExperimentKind::polyreg;
  if (s == "scaling") return ExperimentKind::scaling;
  if (s == "fourier") return ExperimentKind::fourier;
  if (s == "cas") return ExperimentKind::cas;
  if (s == "props") return ExperimentKind::props;
  throw ConfigError("unknown experiment '" + s + "'");
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "cs") return Strategy::cs;
  if (s == "mcs") return Strategy::mcs;
  if (s == "hierarchical") return Strategy::hierarchical;
  if (s == "sparse_surrogate") return Strategy::sparse_surrogate;
  throw ConfigError("unknown strategy '" + s + "'");
}

inline PolyFamily parse_family(const std::string& s) {
  if (s == "hermite") return PolyFamily::hermite_prob;
  if (s == "legendre") return PolyFamily::legendre_uniform;
  throw ConfigError("unknown family '" + s + "'");
}

/// desk: minute-scale grids and schedules; paper: the published sizes.
inline void apply_preset(ExperimentConfig& cfg, const std::string& preset) {
  if (preset == "desk") {
    cfg.grid_points = 10000;
    cfg.schedule_scale = 0.1;
    cfg.interior_points = 2000;
  } else if (preset == "paper") {
    cfg.grid_points = 50000;
    cfg.schedule_scale = 1.0;
    cfg.interior_points = 20000;
    cfg.features = 200;
  } else {
    throw ConfigError("unknown preset '" + preset + "'");
  }
}

/// Fields present in `j` override `cfg`. Unknown keys are rejected.
inline void apply_json(ExperimentConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{
      "experiment", "seed", "trials", "strategies", "noise", "dim", "family", "orders", "target", "grid_points",
      "tol", "m_max", "eps", "delta", "side", "image_dim", "latent", "partition", "generator", "bandwidth",
      "samples", "kt_iterations", "features", "interior_points", "test_points", "cas_iterations",
      "schedule_scale", "adapt_steps", "step_size", "delta_tol", "layer_slope", "boundary_lambda", "out", "preset"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
  try {
    if (j.contains("experiment")) cfg.kind = parse_experiment_kind(j.at("experiment").get<std::string>());
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
    if (j.contains("strategies")) {
      cfg.strategies.clear();
      for (const auto& s : j.at("strategies")) cfg.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    if (j.contains("noise")) cfg.noise = j.at("noise").get<double>();
    if (j.contains("dim")) cfg.dim = j.at("dim").get<int>();
    if (j.contains("family")) cfg.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("orders")) cfg.orders = j.at("orders").get<std::vector<int>>();
    if (j.contains("target")) cfg.target = j.at("target").get<std::string>();
    if (j.contains("grid_points")) cfg.grid_points = j.at("grid_points").get<Index>();
    if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
    if (j.contains("m_max")) cfg.m_max = j.at("m_max").get<Index>();
    if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
    if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
    if (j.contains("side")) cfg.side = j.at("side").get<Index>();
    if (j.contains("image_dim")) cfg.image_dim = j.at("image_dim").get<int>();
    if (j.contains("latent")) cfg.latent = j.at("latent").get<Index>();
    if (j.contains("partition")) cfg.partition = j.at("partition").get<std::string>();
    if (j.contains("generator")) cfg.generator = j.at("generator").get<std::string>();
    if (j.contains("bandwidth")) cfg.bandwidth = j.at("bandwidth").get<double>();
    if (j.contains("samples")) cfg.samples = j.at("samples").get<std::vector<Index>>();
    if (j.contains("kt_iterations")) cfg.kt_iterations = j.at("kt_iterations").get<Index>();
    if (j.contains("features")) cfg.features = j.at("features").get<Index>();
    if (j.contains("interior_points")) cfg.interior_points = j.at("interior_points").get<Index>();
    if (j.contains("test_points")) cfg.test_points = j.at("test_points").get<Index>();
    if (j.contains("cas_iterations")) cfg.cas_iterations = j.at("cas_iterations").get<Index>();
    if (j.contains("schedule_scale")) cfg.schedule_scale = j.at("schedule_scale").get<double>();
    if (j.contains("adapt_steps")) cfg.adapt_steps = j.at("adapt_steps").get<int>();
    if (j.contains("step_size")) cfg.step_size = j.at("step_size").get<double>();
    if (j.contains("delta_tol")) cfg.delta_tol = j.at("delta_tol").get<double>();
    if (j.contains("layer_slope")) cfg.layer_slope = j.at("layer_slope").get<double>();
    if (j.contains("boundary_lambda")) cfg.boundary_lambda = j.at("boundary_lambda").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

inline nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

/// Preset defaults ("preset" key or `preset` argument), then file values.
inline ExperimentConfig load_config(const nlohmann::json& j, ExperimentKind kind, const std::string& preset) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  std::string p = preset;
  if (p.empty() && j.is_object() && j.contains("preset") && j.at("preset").is_string()) p = j.at("preset").get<std::string>();
  apply_preset(cfg, p.empty() ? "desk" : p);
  apply_json(cfg, j);
  if (cfg.kind != kind) throw ConfigError("config experiment '" + to_string(cfg.kind) + "' does not match '" + to_string(kind) + "'");
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

}  // namespace cs4ml
