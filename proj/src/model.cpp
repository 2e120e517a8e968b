#include "cemas/model.hpp"

#include "cemas/errors.hpp"
#include "cemas/riccati.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace cemas {

namespace {

std::string shape(const Matrix& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

void require_finite(const Matrix& M, const char* name) {
  if (!M.allFinite()) throw InvalidInput(std::string(name) + " has non-finite entries");
}

void require_spd(const Matrix& M, const char* name) {
  require_finite(M, name);
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidInput(std::string(name) + " is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
  const double smallest = eig.eigenvalues().minCoeff();
  if (!(smallest > 0.0)) {
    std::ostringstream os;
    os << name << " is not positive definite (smallest eigenvalue " << smallest << ")";
    throw InvalidInput(os.str());
  }
}

void require_controls(const AgentSpec& agent, const Matrix& controls) {
  if (controls.rows() != agent.input_dim()) {
    throw InvalidInput("controls have " + std::to_string(controls.rows()) + " rows, agent input dimension is " +
                       std::to_string(agent.input_dim()));
  }
}

void require_plan(const Scenario& scenario, const std::vector<Matrix>& controls) {
  if (static_cast<int>(controls.size()) != scenario.num_agents()) {
    throw InvalidInput("control plan covers " + std::to_string(controls.size()) + " agents, scenario has " +
                       std::to_string(scenario.num_agents()));
  }
  for (int i = 0; i < scenario.num_agents(); ++i) {
    require_controls(scenario.agents[i], controls[i]);
    if (controls[i].cols() != scenario.horizon()) {
      throw InvalidInput("controls of agent " + std::to_string(i) + " span " + std::to_string(controls[i].cols()) +
                         " steps, horizon is " + std::to_string(scenario.horizon()));
    }
  }
}

}  // namespace

AgentSpec make_agent(Matrix A, Matrix B, Matrix Q, Matrix R, Matrix H, Vector x0) {
  AgentSpec agent;
  agent.h_lin = Vector::Zero(B.cols());
  agent.A = std::move(A);
  agent.B = std::move(B);
  agent.Q = std::move(Q);
  agent.R = std::move(R);
  agent.H = std::move(H);
  agent.x0 = std::move(x0);
  return agent;
}

PriceTrajectory::PriceTrajectory(Vector values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw InvalidInput("price trajectory has non-finite entries");
  if (values_.size() > 0 && values_.minCoeff() < -1e-12) {
    throw InvalidInput("price trajectory has a negative entry " + std::to_string(values_.minCoeff()));
  }
  values_ = values_.cwiseMax(0.0);
}

PriceTrajectory PriceTrajectory::zeros(int horizon) { return PriceTrajectory(Vector::Zero(horizon)); }

void validate(const AgentSpec& agent) {
  const auto d = agent.A.rows();
  const auto m = agent.B.cols();
  if (d == 0 || agent.A.cols() != d) throw InvalidInput("A must be square and non-empty, got " + shape(agent.A));
  if (m == 0 || agent.B.rows() != d) throw InvalidInput("B must be " + std::to_string(d) + "xm, got " + shape(agent.B));
  if (agent.Q.rows() != d || agent.Q.cols() != d) throw InvalidInput("Q must match A, got " + shape(agent.Q));
  if (agent.R.rows() != m || agent.R.cols() != m) throw InvalidInput("R must be mxm, got " + shape(agent.R));
  if (agent.H.rows() != m || agent.H.cols() != m) throw InvalidInput("H must be mxm, got " + shape(agent.H));
  if (agent.x0.size() != d) throw InvalidInput("x0 must have length " + std::to_string(d));
  if (agent.h_lin.size() != m) throw InvalidInput("h_lin must have length " + std::to_string(m));
  require_finite(agent.A, "A");
  require_finite(agent.B, "B");
  require_finite(agent.x0, "x0");
  require_finite(agent.h_lin, "h_lin");
  if (!std::isfinite(agent.h_const)) throw InvalidInput("h_const is not finite");
  require_spd(agent.Q, "Q");
  require_spd(agent.R, "R");
  require_spd(agent.H, "H");
}

void validate(const Scenario& scenario) {
  const int n = scenario.num_agents();
  if (n == 0) throw InvalidInput("scenario has no agents");
  for (int i = 0; i < n; ++i) {
    try {
      validate(scenario.agents[i]);
    } catch (const InvalidInput& e) {
      throw InvalidInput("agent " + std::to_string(i) + ": " + e.what());
    }
    if (scenario.agents[i].state_dim() != scenario.state_dim() ||
        scenario.agents[i].input_dim() != scenario.input_dim()) {
      throw InvalidInput("agent " + std::to_string(i) + " has dimensions differing from agent 0");
    }
  }
  if (scenario.supply.rows() != n) {
    throw InvalidInput("supply has " + std::to_string(scenario.supply.rows()) + " rows for " + std::to_string(n) +
                       " agents");
  }
  if (scenario.supply.cols() == 0) throw InvalidInput("horizon must be positive");
  require_finite(scenario.supply, "supply");
  const Vector C = scenario.total_supply();
  for (int t = 0; t < C.size(); ++t) {
    if (!(C[t] > 0.0)) throw InvalidInput("C(" + std::to_string(t) + ") <= 0");
  }
  if (scenario.threshold && !(*scenario.threshold > 0.0)) throw InvalidInput("threshold must be positive");
}

Scenario with_uniform_q(Scenario scenario, double q) {
  for (auto& agent : scenario.agents) agent.Q = q * Matrix::Identity(agent.state_dim(), agent.state_dim());
  return scenario;
}

Matrix rollout(const AgentSpec& agent, const Matrix& controls) {
  require_controls(agent, controls);
  if (agent.x0.size() != agent.state_dim()) throw InvalidInput("x0 does not match the state dimension");
  const auto N = controls.cols();
  Matrix states(agent.state_dim(), N + 1);
  states.col(0) = agent.x0;
  for (Eigen::Index t = 0; t < N; ++t) states.col(t + 1) = agent.A * states.col(t) + agent.B * controls.col(t);
  return states;
}

double consumption(const AgentSpec& agent, const Vector& u) {
  if (u.size() != agent.input_dim()) throw InvalidInput("input vector does not match the input dimension");
  double value = u.dot(agent.H * u) + agent.h_const;
  if (agent.h_lin.size() == u.size()) value += 2.0 * agent.h_lin.dot(u);
  return value;
}

double agent_welfare(const AgentSpec& agent, const Matrix& controls) {
  const Matrix states = rollout(agent, controls);
  double value = 0.0;
  for (Eigen::Index t = 0; t < states.cols(); ++t) value -= states.col(t).dot(agent.Q * states.col(t));
  for (Eigen::Index t = 0; t < controls.cols(); ++t) value -= controls.col(t).dot(agent.R * controls.col(t));
  return value;
}

double agent_payoff(const AgentSpec& agent, const PriceTrajectory& prices, const Matrix& controls) {
  if (prices.size() != controls.cols()) throw InvalidInput("price and control horizons differ");
  double value = agent_welfare(agent, controls);
  for (Eigen::Index t = 0; t < controls.cols(); ++t) value -= prices[t] * consumption(agent, controls.col(t));
  return value;
}

double evaluate_welfare(const Scenario& scenario, const std::vector<Matrix>& controls) {
  require_plan(scenario, controls);
  double total = 0.0;
  for (int i = 0; i < scenario.num_agents(); ++i) total += agent_welfare(scenario.agents[i], controls[i]);
  return total;
}

Matrix consumption_profile(const Scenario& scenario, const std::vector<Matrix>& controls) {
  require_plan(scenario, controls);
  Matrix h(scenario.num_agents(), scenario.horizon());
  for (int i = 0; i < scenario.num_agents(); ++i) {
    for (int t = 0; t < scenario.horizon(); ++t) h(i, t) = consumption(scenario.agents[i], controls[i].col(t));
  }
  return h;
}

Matrix construct_trading(const Scenario& scenario, const std::vector<Matrix>& controls) {
  const Matrix h = consumption_profile(scenario, controls);
  const Matrix net = scenario.supply - h;
  // Subtracting the column mean of the net supply is the same correction
  // term, and keeps each column sum at rounding level.
  const Eigen::RowVectorXd mean = net.colwise().mean();
  return net.rowwise() - mean;
}

VerificationReport verify_equilibrium(const Scenario& scenario, const EquilibriumSolution& solution,
                                      const VerifyTolerances& tolerances) {
  require_plan(scenario, solution.controls);
  const int n = scenario.num_agents();
  const int N = scenario.horizon();
  if (solution.trading.rows() != n || solution.trading.cols() != N || solution.prices.size() != N) {
    throw InvalidInput("solution dimensions do not match the scenario");
  }

  const Matrix h = consumption_profile(scenario, solution.controls);
  const Vector C = scenario.total_supply();
  const Vector& lambda = solution.prices.values();

  VerificationReport report;
  report.balance_residual = solution.trading.colwise().sum().cwiseAbs().maxCoeff();
  report.feasibility_slack = (scenario.supply - h - solution.trading).minCoeff();
  const Vector excess = h.colwise().sum().transpose() - C;
  report.complementarity_residual = lambda.cwiseProduct(excess).cwiseAbs().maxCoeff();
  report.price_negativity = std::max(0.0, -lambda.minCoeff());

  double gap = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const AgentSpec& agent = scenario.agents[i];
    const BestResponse best = best_response(agent, solution.prices);
    const double income = lambda.dot(scenario.supply.row(i).transpose());
    const double optimal = best.payoff + income;
    const double supplied = agent_welfare(agent, solution.controls[i]) + lambda.dot(solution.trading.row(i).transpose());
    gap = std::max(gap, optimal - supplied);
  }
  report.best_response_gap = gap;

  const double gap_scale = std::max(1.0, std::abs(evaluate_welfare(scenario, solution.controls)));
  report.passed = report.balance_residual <= tolerances.balance && report.feasibility_slack >= -tolerances.slack &&
                  report.complementarity_residual <= tolerances.complementarity && report.price_negativity <= 1e-12 &&
                  report.best_response_gap <= tolerances.best_response * gap_scale;
  return report;
}

}  // namespace cemas
