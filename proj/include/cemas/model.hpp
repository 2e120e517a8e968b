#pragma once

#include "cemas/types.hpp"

#include <vector>

namespace cemas {

/// Throws InvalidInput naming the first violated agent invariant: shape
/// consistency, symmetry of Q/R/H to 1e-12, positive definiteness.
void validate(const AgentSpec& agent);

/// Agent checks plus shared dimensions, supply shape and C(t) > 0.
void validate(const Scenario& scenario);

/// Copy of the scenario with every Q_i replaced by q * I.
Scenario with_uniform_q(Scenario scenario, double q);

/// States x(0..N) under the given m x N control sequence.
Matrix rollout(const AgentSpec& agent, const Matrix& controls);

/// h(u) = u'Hu + 2 h_lin'u + h_const.
double consumption(const AgentSpec& agent, const Vector& u);

/// Running plus terminal utility of one agent under its controls.
double agent_welfare(const AgentSpec& agent, const Matrix& controls);

/// Utility minus priced consumption: the individual payoff with the
/// supply income sum_t lambda_t a_i(t) left out.
double agent_payoff(const AgentSpec& agent, const PriceTrajectory& prices, const Matrix& controls);

/// Social welfare: sum of every agent's running and terminal utility.
double evaluate_welfare(const Scenario& scenario, const std::vector<Matrix>& controls);

/// n x N matrix of h_i(u_i(t)).
Matrix consumption_profile(const Scenario& scenario, const std::vector<Matrix>& controls);

/// Canonical trades e_i(t) = a_i(t) - h_i(u_i(t)) + (sum_j h_j - sum_j a_j) / n.
/// Each column sums to zero.
Matrix construct_trading(const Scenario& scenario, const std::vector<Matrix>& controls);

/// Residuals of the equilibrium conditions. The best-response gap compares
/// each agent's payoff at its recomputed optimum against the supplied plan.
/// Failures are reported, never thrown.
VerificationReport verify_equilibrium(const Scenario& scenario, const EquilibriumSolution& solution,
                                      const VerifyTolerances& tolerances = {});

}  // namespace cemas
