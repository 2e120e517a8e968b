#pragma once

#include "cemas/types.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace cemas::cli {

/// Pretty-printed JSON with keys in sorted order and every floating-point
/// number written with 17 significant digits. Non-finite numbers become the
/// strings "inf", "-inf" and "nan".
std::string to_json_text(const nlohmann::json& doc);

/// Header line plus one row per entry, numbers with 17 significant digits.
std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

/// One row per step t = 0..N-1 with columns
///   t, lambda, then per agent i: h_i, e_i, a_i, u_i_0.., x_i_0..
/// where x_i is the state at the start of step t.
std::string solution_csv(const Scenario& scenario, const EquilibriumSolution& solution);

}  // namespace cemas::cli
