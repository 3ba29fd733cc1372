#include "perbbm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace perbbm {

namespace {

using nlohmann::json;

const std::set<std::string> kEnvKeys = {"period", "g", "mu", "sigma", "offspring", "interpolation", "grid"};

PeriodicFunction parse_function(const json& node, const std::string& key, double period, std::size_t grid,
                                Interpolation mode) {
  if (node.is_string()) return PeriodicFunction::from_expression(node.get<std::string>(), period, grid, mode);
  if (node.is_number()) return PeriodicFunction::constant(node.get<double>(), period);
  if (node.is_array()) {
    std::vector<double> samples;
    for (const auto& v : node) {
      if (!v.is_number()) throw ConfigError("'" + key + "' samples must be numbers");
      samples.push_back(v.get<double>());
    }
    return PeriodicFunction(std::move(samples), period, mode);
  }
  throw ConfigError("'" + key + "' must be an expression string or an array of samples");
}

OffspringLaw parse_offspring(const json& node, double period) {
  if (!node.is_array() || node.empty()) throw ConfigError("'offspring' must be a non-empty array");
  std::vector<std::vector<double>> probs(node.size());
  std::vector<bool> seen(node.size(), false);
  for (const auto& entry : node) {
    if (!entry.is_object() || !entry.contains("position_index") || !entry.contains("probabilities")) {
      throw ConfigError("offspring entries need position_index and probabilities");
    }
    for (const auto& [k, v] : entry.items()) {
      if (k != "position_index" && k != "probabilities") throw ConfigError("unknown offspring key '" + k + "'");
    }
    const auto idx = entry.at("position_index");
    if (!idx.is_number_integer() || idx.get<long>() < 0 || idx.get<std::size_t>() >= node.size()) {
      throw ConfigError("offspring position_index must be in [0, number of entries)");
    }
    const auto i = idx.get<std::size_t>();
    if (seen[i]) throw ConfigError("duplicate offspring position_index " + std::to_string(i));
    seen[i] = true;
    for (const auto& p : entry.at("probabilities")) {
      if (!p.is_number()) throw ConfigError("offspring probabilities must be numbers");
      probs[i].push_back(p.get<double>());
    }
  }
  return OffspringLaw(std::move(probs), period);
}

std::vector<double> parse_row(const json& node, const std::string& key, unsigned L) {
  if (!node.contains(key)) throw ConfigError("kernel needs '" + key + "'");
  std::vector<double> row;
  for (const auto& v : node.at(key)) {
    if (!v.is_number()) throw ConfigError("kernel entries must be numbers");
    row.push_back(v.get<double>());
  }
  if (row.size() == 1 && L > 1) row.assign(L, row[0]);
  return row;
}

}  // namespace

EnvironmentSpec parse_env_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [k, v] : doc.items()) {
    if (!kEnvKeys.count(k)) throw ConfigError("unknown key '" + k + "'");
  }
  double period = 1.0;
  if (doc.contains("period")) {
    if (!doc["period"].is_number()) throw ConfigError("'period' must be a number");
    period = doc["period"].get<double>();
    if (!(period > 0.0)) throw ConfigError("'period' must be positive");
  }
  std::size_t grid = kDefaultGrid;
  if (doc.contains("grid")) {
    if (!doc["grid"].is_number_integer() || doc["grid"].get<long>() < 1) {
      throw ConfigError("'grid' must be a positive integer");
    }
    grid = doc["grid"].get<std::size_t>();
  }
  Interpolation mode = Interpolation::linear;
  if (doc.contains("interpolation")) {
    const auto s = doc["interpolation"].get<std::string>();
    if (s == "trigonometric") {
      mode = Interpolation::trigonometric;
    } else if (s != "linear") {
      throw ConfigError("'interpolation' must be linear or trigonometric");
    }
  }

  EnvironmentSpec env;
  env.g = doc.contains("g") ? parse_function(doc["g"], "g", period, grid, mode)
                            : PeriodicFunction::constant(1.0, period);
  if (!(env.g.bounds().min > 0.0)) throw ConfigError("g must be strictly positive (non-positive value found)");
  if (doc.contains("mu")) env.mu = parse_function(doc["mu"], "mu", period, grid, mode);
  if (doc.contains("sigma")) {
    env.sigma = parse_function(doc["sigma"], "sigma", period, grid, mode);
    if (!(env.sigma->bounds().min > 0.0)) throw ConfigError("sigma must be strictly positive");
  }
  if (doc.contains("offspring")) {
    env.offspring = parse_offspring(doc["offspring"], period);
    if (env.offspring->min_children() < 1) throw ConfigError("offspring law must put zero mass on 0 children");
  }
  return env;
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("syntax error: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  ExperimentConfig cfg;
  cfg.document = doc;
  json env_doc = doc;
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
    env_doc.erase("seed");
  }
  json kernel;
  if (doc.contains("kernel")) {
    kernel = doc["kernel"];
    env_doc.erase("kernel");
  }
  cfg.env = parse_env_json(env_doc);
  if (!kernel.is_null()) {
    if (!kernel.is_object()) throw ConfigError("'kernel' must be an object");
    for (const auto& [k, v] : kernel.items()) {
      if (k != "left" && k != "stay" && k != "right") throw ConfigError("unknown kernel key '" + k + "'");
    }
    const double period = cfg.env.period();
    if (period != std::floor(period)) throw ConfigError("lattice period L must be an integer");
    BRWModel m;
    m.L = static_cast<unsigned>(period);
    m.p_left = parse_row(kernel, "left", m.L);
    m.p_stay = parse_row(kernel, "stay", m.L);
    m.p_right = parse_row(kernel, "right", m.L);
    if (cfg.env.offspring) m.offspring = *cfg.env.offspring;
    m.validate();
    cfg.brw = std::move(m);
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

}  // namespace perbbm
