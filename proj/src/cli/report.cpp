#include "cemas/cli/report.hpp"

#include "cemas/model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace cemas::cli {

using nlohmann::json;

namespace {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write(const json& j, std::ostringstream& os, int depth) {
  const std::string pad(2 * (depth + 1), ' ');
  const std::string close(2 * depth, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << json(it.key()).dump() << ": ";
        write(it.value(), os, depth + 1);
      }
      os << "\n" << close << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // Arrays of scalars stay on one line; nested arrays get one line each.
      const bool flat = !j.front().is_structured();
      os << (flat ? "[" : "[\n");
      for (size_t i = 0; i < j.size(); ++i) {
        if (i > 0) os << (flat ? ", " : ",\n");
        if (!flat) os << pad;
        write(j[i], os, depth + 1);
      }
      if (!flat) os << "\n" << close;
      os << "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      os << (std::isfinite(v) ? format_number(v) : "\"" + format_number(v) + "\"");
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace

std::string to_json_text(const json& doc) {
  std::ostringstream os;
  write(doc, os, 0);
  os << "\n";
  return os.str();
}

std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << "\n";
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
    os << "\n";
  }
  return os.str();
}

std::string solution_csv(const Scenario& scenario, const EquilibriumSolution& solution) {
  const int n = scenario.num_agents();
  const int N = scenario.horizon();
  const Matrix h = consumption_profile(scenario, solution.controls);

  std::vector<std::string> header = {"t", "lambda"};
  for (int i = 0; i < n; ++i) {
    const std::string id = std::to_string(i + 1);
    header.push_back("h_" + id);
    header.push_back("e_" + id);
    header.push_back("a_" + id);
    for (int j = 0; j < scenario.agents[i].input_dim(); ++j) header.push_back("u_" + id + "_" + std::to_string(j + 1));
    for (int j = 0; j < scenario.agents[i].state_dim(); ++j) header.push_back("x_" + id + "_" + std::to_string(j + 1));
  }

  std::vector<std::vector<double>> rows;
  for (int t = 0; t < N; ++t) {
    std::vector<double> row = {static_cast<double>(t), solution.prices[t]};
    for (int i = 0; i < n; ++i) {
      row.push_back(h(i, t));
      row.push_back(solution.trading(i, t));
      row.push_back(scenario.supply(i, t));
      for (Eigen::Index j = 0; j < solution.controls[i].rows(); ++j) row.push_back(solution.controls[i](j, t));
      for (Eigen::Index j = 0; j < solution.states[i].rows(); ++j) row.push_back(solution.states[i](j, t));
    }
    rows.push_back(std::move(row));
  }
  return csv_table(header, rows);
}

}  // namespace cemas::cli
