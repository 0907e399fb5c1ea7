#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ous/harness.hpp"

namespace ous {

/// Parses one scenario object:
///   {"T": 22, "b": 3, "experiment": "width_sweep", "policies": ["alg1", "alg2"],
///    "tau_rule": "grid" | "fixed" | {"kind": "fixed", "fraction": 0.5},
///    "widths": [0, 1, 2], "n_reps": 20000, "master_seed": 7, "sigma": 0.1,
///    "scenario_id": "fig2-T22", "seqrts_min_probability": 1e-6}
/// Missing master_seed falls back to `default_seed`. Errors throw InvalidInput
/// naming the field.
ScenarioConfig parse_scenario(const nlohmann::json& j, std::uint64_t default_seed);

/// Accepts a single scenario object, an array of them, or {"scenarios": [...]}.
std::vector<ScenarioConfig> parse_scenarios(const nlohmann::json& j, std::uint64_t default_seed);

/// Reads and parses a config file. Unreadable files throw IoError.
std::vector<ScenarioConfig> load_scenarios(const std::string& path, std::uint64_t default_seed);

}  // namespace ous
