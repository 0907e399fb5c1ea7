#include "ous/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ous/error.hpp"

namespace ous {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw InvalidInput(field + ": " + what);
}

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(key, "missing");
  return *it;
}

std::int64_t as_int(const json& v, const std::string& field) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  fail(field, "expected an integer");
}

double as_double(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  return v.get<double>();
}

std::uint64_t as_seed(const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_string()) {
    try {
      std::size_t used = 0;
      const std::string s = v.get<std::string>();
      const auto seed = std::stoull(s, &used, 0);
      if (used == s.size()) return seed;
    } catch (const std::exception&) {
    }
  }
  fail("master_seed", "expected a non-negative integer");
}

TauRule parse_tau_rule(const json& v) {
  TauRule rule;
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "grid") return rule;
    if (s == "fixed") {
      rule.kind = TauRule::Kind::kFixed;
      return rule;
    }
    fail("tau_rule", "expected \"grid\" or \"fixed\", got \"" + s + "\"");
  }
  if (!v.is_object()) fail("tau_rule", "expected a string or object");
  const std::string kind = v.value("kind", std::string("fixed"));
  if (kind == "grid") return rule;
  if (kind != "fixed") fail("tau_rule.kind", "expected \"grid\" or \"fixed\"");
  rule.kind = TauRule::Kind::kFixed;
  if (auto it = v.find("fraction"); it != v.end()) {
    rule.fraction = as_double(*it, "tau_rule.fraction");
  }
  return rule;
}

}  // namespace

ScenarioConfig parse_scenario(const json& j, std::uint64_t default_seed) {
  if (!j.is_object()) throw InvalidInput("scenario: expected a JSON object");
  ScenarioConfig cfg;
  cfg.spec.horizon = as_int(require(j, "T"), "T");
  cfg.spec.budget = as_double(require(j, "b"), "b");
  if (auto it = j.find("sigma"); it != j.end() && !it->is_null()) {
    cfg.spec.sigma = as_double(*it, "sigma");
  }

  const json& exp = require(j, "experiment");
  if (!exp.is_string()) fail("experiment", "expected a string");
  const auto experiment = parse_experiment(exp.get<std::string>());
  if (!experiment) fail("experiment", "unknown value \"" + exp.get<std::string>() + "\"");
  cfg.experiment = *experiment;

  const json& policies = require(j, "policies");
  if (!policies.is_array()) fail("policies", "expected an array");
  for (const json& p : policies) {
    if (!p.is_string()) fail("policies", "entries must be strings");
    const auto id = parse_policy_id(p.get<std::string>());
    if (!id) fail("policies", "unknown policy \"" + p.get<std::string>() + "\"");
    cfg.policies.push_back(*id);
  }

  if (cfg.experiment == Experiment::kWidthSweep) cfg.tau_rule.kind = TauRule::Kind::kFixed;
  if (auto it = j.find("tau_rule"); it != j.end()) cfg.tau_rule = parse_tau_rule(*it);

  if (auto it = j.find("widths"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) fail("widths", "expected an array");
    std::vector<std::int64_t> widths;
    for (const json& w : *it) widths.push_back(as_int(w, "widths"));
    cfg.widths = std::move(widths);
  }
  if (auto it = j.find("n_reps"); it != j.end()) cfg.n_reps = as_int(*it, "n_reps");
  cfg.master_seed = default_seed;
  if (auto it = j.find("master_seed"); it != j.end()) cfg.master_seed = as_seed(*it);
  if (auto it = j.find("seqrts_min_probability"); it != j.end()) {
    cfg.seqrts_min_probability = as_double(*it, "seqrts_min_probability");
  }

  if (auto it = j.find("scenario_id"); it != j.end()) {
    if (!it->is_string()) fail("scenario_id", "expected a string");
    cfg.scenario_id = it->get<std::string>();
  } else {
    std::ostringstream id;
    id << to_string(cfg.experiment) << "-T" << cfg.spec.horizon << "-b"
       << format_number(cfg.spec.budget);
    cfg.scenario_id = id.str();
  }
  if (cfg.scenario_id.find_first_of(",\n\"") != std::string::npos) {
    fail("scenario_id", "must not contain commas, quotes or newlines");
  }

  cfg.validate();
  return cfg;
}

std::vector<ScenarioConfig> parse_scenarios(const json& j, std::uint64_t default_seed) {
  const json* list = &j;
  if (j.is_object() && j.contains("scenarios")) list = &j.at("scenarios");
  std::vector<ScenarioConfig> out;
  if (list->is_array()) {
    if (list->empty()) throw InvalidInput("scenarios: empty list");
    for (std::size_t k = 0; k < list->size(); ++k) {
      try {
        out.push_back(parse_scenario((*list)[k], default_seed));
      } catch (const InvalidInput& e) {
        throw InvalidInput("scenarios[" + std::to_string(k) + "]." + e.what());
      }
    }
    return out;
  }
  out.push_back(parse_scenario(*list, default_seed));
  return out;
}

std::vector<ScenarioConfig> load_scenarios(const std::string& path, std::uint64_t default_seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("config: malformed JSON in ") + path + ": " + e.what());
  }
  return parse_scenarios(j, default_seed);
}

}  // namespace ous
