#include "cemas/tracking.hpp"

#include "cemas/errors.hpp"
#include "cemas/model.hpp"

#include <Eigen/QR>

#include <sstream>
#include <string>

namespace cemas {

namespace {

constexpr double kSteadyStateTol = 1e-9;

}  // namespace

void validate(const TrackingSpec& spec) {
  validate(spec.base);
  const int n = spec.base.num_agents();
  const int d = spec.base.state_dim();
  if (spec.x_ref.size() != d) throw InvalidInput("x_ref must have length " + std::to_string(d));
  if (static_cast<int>(spec.u_ref.size()) != n) throw InvalidInput("u_ref needs one entry per agent");

  double steady_total = 0.0;
  for (int i = 0; i < n; ++i) {
    const AgentSpec& agent = spec.base.agents[i];
    if (spec.u_ref[i].size() != agent.input_dim()) {
      throw InvalidInput("u_ref of agent " + std::to_string(i) + " has the wrong length");
    }
    const double residual = (agent.A * spec.x_ref + agent.B * spec.u_ref[i] - spec.x_ref).cwiseAbs().maxCoeff();
    if (residual > kSteadyStateTol) {
      std::ostringstream os;
      os << "agent " << i << ": x_ref is not a steady state under u_ref (residual " << residual << ")";
      throw InvalidInput(os.str());
    }
    steady_total += consumption(agent, spec.u_ref[i]);
  }

  const Vector C = spec.base.total_supply();
  for (int t = 0; t < C.size(); ++t) {
    if (!(C[t] > steady_total)) {
      throw InvalidInput("supply C(" + std::to_string(t) + ") does not exceed the steady-state consumption");
    }
  }
}

Scenario to_regulation(const TrackingSpec& spec) {
  validate(spec);
  Scenario out = spec.base;
  for (int i = 0; i < out.num_agents(); ++i) {
    AgentSpec& agent = out.agents[i];
    const Vector& u = spec.u_ref[i];
    // h(u + u_ref) = u'Hu + 2 (H u_ref + h_lin)'u + h(u_ref)
    const double steady = consumption(agent, u);
    agent.h_lin = agent.H * u + agent.h_lin;
    agent.h_const = 0.0;
    agent.x0 = agent.x0 - spec.x_ref;
    out.supply.row(i).array() -= steady;
  }
  return out;
}

EquilibriumSolution recover_tracking(const EquilibriumSolution& solution, const TrackingSpec& spec) {
  const int n = spec.base.num_agents();
  if (static_cast<int>(solution.controls.size()) != n || static_cast<int>(solution.states.size()) != n) {
    throw InvalidInput("solution does not cover every agent of the tracking problem");
  }
  EquilibriumSolution out = solution;
  for (int i = 0; i < n; ++i) {
    if (out.controls[i].rows() != spec.u_ref[i].size() || out.states[i].rows() != spec.x_ref.size()) {
      throw InvalidInput("solution dimensions do not match agent " + std::to_string(i));
    }
    out.controls[i].colwise() += spec.u_ref[i];
    out.states[i].colwise() += spec.x_ref;
  }
  return out;
}

Vector steady_state_input(const Matrix& A, const Matrix& B, const Vector& x_ref) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || x_ref.size() != A.rows()) {
    throw InvalidInput("steady_state_input: inconsistent dimensions");
  }
  const Vector target = x_ref - A * x_ref;
  const Vector u = B.colPivHouseholderQr().solve(target);
  const double residual = (B * u - target).cwiseAbs().maxCoeff();
  if (residual > kSteadyStateTol) {
    std::ostringstream os;
    os << "x_ref is not reachable as a steady state (residual " << residual << ")";
    throw InvalidInput(os.str());
  }
  return u;
}

}  // namespace cemas
