#pragma once

#include "cemas/tracking.hpp"
#include "cemas/types.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace cemas::cli {

/// A scenario file: the scenario itself plus an optional tracking block.
struct ScenarioFile {
  Scenario scenario;
  std::optional<TrackingSpec> tracking;
};

/// Reads and validates a scenario file. IO, syntax and schema problems are
/// reported as InvalidInput with the offending key path or line.
ScenarioFile load_scenario(const std::string& path);

ScenarioFile parse_scenario(const nlohmann::json& doc);
ScenarioFile parse_scenario_text(const std::string& text);

/// Explicit form of a scenario (full Q, expanded supply) that parses back to
/// the same object.
nlohmann::json scenario_to_json(const ScenarioFile& file);

/// Equilibrium solution as written by `solve` and read back by `verify`.
nlohmann::json solution_to_json(const EquilibriumSolution& solution);
EquilibriumSolution solution_from_json(const nlohmann::json& doc, const Scenario& scenario);

nlohmann::json matrix_to_json(const Matrix& M);
nlohmann::json vector_to_json(const Vector& v);

}  // namespace cemas::cli
