#pragma once

// JSON configuration documents: the environment grammar plus experiment keys.
//
//   {
//     "period": 1,                          // L (integer) for lattice models
//     "g": "1 + 0.5*sin(2*pi*x)",           // expression or array of samples
//     "mu": "0.2*sin(2*pi*x)",
//     "sigma": "1",
//     "offspring": [{"position_index": 0, "probabilities": [0, 0, 1]}],
//     "interpolation": "linear",            // or "trigonometric"
//     "grid": 1024,                         // samples per period for expressions
//     "kernel": {"left": [0.25], "stay": [0.5], "right": [0.25]},   // BRW only
//     "seed": 42
//   }

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "perbbm/eigen.hpp"
#include "perbbm/env.hpp"

namespace perbbm {

/// Environment keys only; anything else is rejected.
EnvironmentSpec parse_env_json(const nlohmann::json& doc);

struct ExperimentConfig {
  EnvironmentSpec env;
  std::optional<BRWModel> brw;
  std::optional<std::uint64_t> seed;
  nlohmann::json document;
};

/// Environment keys plus `kernel` and `seed`. Throws ConfigError.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace perbbm
