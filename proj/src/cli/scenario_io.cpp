#include "cemas/cli/scenario_io.hpp"

#include "cemas/errors.hpp"
#include "cemas/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace cemas::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw InvalidInput(path + ": " + message);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path, "missing key '" + key + "'");
  return *it;
}

double read_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

/// Row-major nested arrays; a bare number is accepted as a 1x1 matrix.
Matrix read_matrix(const json& j, const std::string& path) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix M;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[r];
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || row.empty()) fail(row_path, "expected a non-empty array of numbers");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      M.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      fail(row_path, "row length " + std::to_string(row.size()) + " differs from " + std::to_string(cols));
    }
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = read_number(row[c], row_path + "[" + std::to_string(c) + "]");
  }
  return M;
}

Vector read_vector(const json& j, const std::string& path) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = read_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

AgentSpec read_agent(const json& j, const std::string& path) {
  AgentSpec agent;
  agent.A = read_matrix(require(j, "A", path), path + ".A");
  agent.B = read_matrix(require(j, "B", path), path + ".B");
  const bool has_q = j.contains("Q");
  const bool has_q_scalar = j.contains("q_scalar");
  if (has_q == has_q_scalar) fail(path, "give exactly one of 'Q' and 'q_scalar'");
  if (has_q) {
    agent.Q = read_matrix(j["Q"], path + ".Q");
  } else {
    const double q = read_number(j["q_scalar"], path + ".q_scalar");
    agent.Q = q * Matrix::Identity(agent.A.rows(), agent.A.rows());
  }
  agent.R = read_matrix(require(j, "R", path), path + ".R");
  agent.H = read_matrix(require(j, "H", path), path + ".H");
  agent.x0 = read_vector(require(j, "x0", path), path + ".x0");
  agent.h_lin = j.contains("h_lin") ? read_vector(j["h_lin"], path + ".h_lin") : Vector::Zero(agent.B.cols());
  if (j.contains("h_const")) agent.h_const = read_number(j["h_const"], path + ".h_const");
  return agent;
}

Eigen::RowVectorXd read_supply_row(const json& j, int horizon, const std::string& path) {
  Eigen::RowVectorXd row(horizon);
  if (j.is_object()) {
    const json& kind = require(j, "kind", path);
    if (!kind.is_string() || kind.get<std::string>() != "sinusoid") fail(path + ".kind", "only 'sinusoid' is supported");
    const double amp = read_number(require(j, "amp", path), path + ".amp");
    const double freq = read_number(require(j, "freq", path), path + ".freq");
    const double offset = read_number(require(j, "offset", path), path + ".offset");
    for (int t = 0; t < horizon; ++t) row[t] = amp * std::sin(freq * std::numbers::pi * t) + offset;
    return row;
  }
  if (!j.is_array()) fail(path, "expected an array of numbers or a sinusoid object");
  if (static_cast<int>(j.size()) != horizon) {
    fail(path, "has " + std::to_string(j.size()) + " entries, horizon is " + std::to_string(horizon));
  }
  for (int t = 0; t < horizon; ++t) row[t] = read_number(j[t], path + "[" + std::to_string(t) + "]");
  return row;
}

}  // namespace

ScenarioFile parse_scenario(const json& doc) {
  if (!doc.is_object()) fail("$", "expected an object at the top level");
  const json& horizon_j = require(doc, "horizon", "$");
  if (!horizon_j.is_number_integer() || horizon_j.get<long long>() < 1) fail("$.horizon", "expected a positive integer");
  const int horizon = horizon_j.get<int>();

  ScenarioFile file;
  Scenario& s = file.scenario;
  if (doc.contains("threshold")) s.threshold = read_number(doc["threshold"], "$.threshold");

  const json& agents = require(doc, "agents", "$");
  if (!agents.is_array() || agents.empty()) fail("$.agents", "expected a non-empty array");
  for (size_t i = 0; i < agents.size(); ++i) s.agents.push_back(read_agent(agents[i], "$.agents[" + std::to_string(i) + "]"));

  const json& supply = require(doc, "supply", "$");
  if (!supply.is_array() || supply.size() != agents.size()) fail("$.supply", "expected one entry per agent");
  s.supply.resize(static_cast<Eigen::Index>(agents.size()), horizon);
  for (size_t i = 0; i < supply.size(); ++i) {
    s.supply.row(static_cast<Eigen::Index>(i)) = read_supply_row(supply[i], horizon, "$.supply[" + std::to_string(i) + "]");
  }
  validate(s);

  if (doc.contains("tracking")) {
    const json& tr = doc["tracking"];
    TrackingSpec spec;
    spec.base = s;
    spec.x_ref = read_vector(require(tr, "x_ref", "$.tracking"), "$.tracking.x_ref");
    const json& u_ref = require(tr, "u_ref", "$.tracking");
    if (!u_ref.is_array()) fail("$.tracking.u_ref", "expected an array with one vector per agent");
    for (size_t i = 0; i < u_ref.size(); ++i) {
      spec.u_ref.push_back(read_vector(u_ref[i], "$.tracking.u_ref[" + std::to_string(i) + "]"));
    }
    validate(spec);
    file.tracking = std::move(spec);
  }
  return file;
}

ScenarioFile parse_scenario_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("malformed scenario: ") + e.what());
  }
  return parse_scenario(doc);
}

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open scenario file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_scenario_text(buffer.str());
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json scenario_to_json(const ScenarioFile& file) {
  const Scenario& s = file.scenario;
  json doc;
  doc["horizon"] = s.horizon();
  if (s.threshold) doc["threshold"] = *s.threshold;
  json agents = json::array();
  for (const auto& a : s.agents) {
    agents.push_back({{"A", matrix_to_json(a.A)},
                      {"B", matrix_to_json(a.B)},
                      {"Q", matrix_to_json(a.Q)},
                      {"R", matrix_to_json(a.R)},
                      {"H", matrix_to_json(a.H)},
                      {"x0", vector_to_json(a.x0)},
                      {"h_lin", vector_to_json(a.h_lin)},
                      {"h_const", a.h_const}});
  }
  doc["agents"] = std::move(agents);
  json supply = json::array();
  for (Eigen::Index i = 0; i < s.supply.rows(); ++i) supply.push_back(vector_to_json(s.supply.row(i).transpose()));
  doc["supply"] = std::move(supply);
  if (file.tracking) {
    json u_ref = json::array();
    for (const auto& u : file.tracking->u_ref) u_ref.push_back(vector_to_json(u));
    doc["tracking"] = {{"x_ref", vector_to_json(file.tracking->x_ref)}, {"u_ref", std::move(u_ref)}};
  }
  return doc;
}

json solution_to_json(const EquilibriumSolution& sol) {
  json controls = json::array();
  json states = json::array();
  for (const auto& U : sol.controls) controls.push_back(matrix_to_json(U));
  for (const auto& X : sol.states) states.push_back(matrix_to_json(X));
  const auto& r = sol.residuals;
  return {{"prices", vector_to_json(sol.prices.values())},
          {"controls", std::move(controls)},
          {"states", std::move(states)},
          {"trading", matrix_to_json(sol.trading)},
          {"welfare", sol.welfare},
          {"iterations", sol.iterations},
          {"degenerate", sol.degenerate},
          {"residuals",
           {{"balance_residual", r.balance_residual},
            {"feasibility_slack", r.feasibility_slack},
            {"complementarity_residual", r.complementarity_residual},
            {"price_negativity", r.price_negativity},
            {"best_response_gap", r.best_response_gap},
            {"passed", r.passed}}}};
}

EquilibriumSolution solution_from_json(const json& doc, const Scenario& scenario) {
  // Accept either a bare solution or a full `solve` report.
  const json& j = doc.contains("solution") ? doc["solution"] : doc;
  const std::string path = doc.contains("solution") ? "$.solution" : "$";
  EquilibriumSolution sol;
  sol.prices = PriceTrajectory(read_vector(require(j, "prices", path), path + ".prices"));
  const json& controls = require(j, "controls", path);
  if (!controls.is_array()) fail(path + ".controls", "expected one matrix per agent");
  for (size_t i = 0; i < controls.size(); ++i) {
    sol.controls.push_back(read_matrix(controls[i], path + ".controls[" + std::to_string(i) + "]"));
  }
  sol.trading = read_matrix(require(j, "trading", path), path + ".trading");
  if (static_cast<int>(sol.controls.size()) != scenario.num_agents()) {
    fail(path + ".controls", "expected " + std::to_string(scenario.num_agents()) + " agents");
  }
  for (int i = 0; i < scenario.num_agents(); ++i) sol.states.push_back(rollout(scenario.agents[i], sol.controls[i]));
  sol.welfare = evaluate_welfare(scenario, sol.controls);
  return sol;
}

}  // namespace cemas::cli
