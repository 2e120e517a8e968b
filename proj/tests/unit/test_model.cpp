#include "cemas/errors.hpp"
#include "cemas/model.hpp"
#include "cemas/riccati.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace cemas;
using namespace cemas::testing;

namespace {

EquilibriumSolution closed_form_solution(const Scenario& s, double price) {
  EquilibriumSolution sol;
  const double u = -std::sqrt(0.5);
  for (const auto& agent : s.agents) {
    sol.controls.push_back(scalar(u));
    sol.states.push_back(rollout(agent, sol.controls.back()));
  }
  sol.prices = PriceTrajectory(vec({price}));
  sol.trading = construct_trading(s, sol.controls);
  sol.welfare = evaluate_welfare(s, sol.controls);
  return sol;
}

}  // namespace

TEST(Rollout, ZeroDynamicsCopiesInput) {
  const AgentSpec a = scalar_agent(0, 1, 1, 1, 1, 1);
  const Matrix x = rollout(a, mat({{5}}));
  EXPECT_DOUBLE_EQ(x(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(x(0, 1), 5.0);
}

TEST(Rollout, HandRecursion) {
  const AgentSpec a = scalar_agent(0.5, 1, 1, 1, 1, 1);
  const Matrix x = rollout(a, mat({{-0.26471, -0.05882}}));
  EXPECT_NEAR(x(0, 1), 0.23529, 1e-12);
  EXPECT_NEAR(x(0, 2), 0.05882, 1e-5);
}

TEST(Rollout, IdentityDynamicsHoldState) {
  AgentSpec a = make_agent(Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                           Matrix::Identity(2, 2), Matrix::Identity(2, 2), vec({1.5, -2}));
  const Matrix x = rollout(a, Matrix::Zero(2, 4));
  for (int t = 0; t <= 4; ++t) EXPECT_EQ(x.col(t), a.x0);
}

TEST(Rollout, RejectsWrongInputDimension) {
  const AgentSpec a = scalar_agent(0.5, 1, 1, 1, 1, 1);
  EXPECT_THROW(rollout(a, Matrix::Zero(2, 3)), InvalidInput);
}

TEST(Consumption, QuadraticAndAffineTerms) {
  AgentSpec a = make_agent(Matrix::Identity(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                           Matrix::Identity(2, 2), Matrix::Identity(2, 2), vec({0, 0}));
  EXPECT_EQ(consumption(a, vec({0, 0})), 0.0);
  a.H = mat({{1, 0}, {0, 4}});
  EXPECT_DOUBLE_EQ(consumption(a, vec({1, 1})), 5.0);

  AgentSpec s = scalar_agent(1, 1, 1, 1, 1, 0);
  s.h_lin = vec({2});
  s.h_const = -1;
  EXPECT_DOUBLE_EQ(consumption(s, vec({0.5})), 1.25);
  EXPECT_THROW(consumption(s, vec({0.5, 1})), InvalidInput);
}

TEST(Welfare, ZeroStateZeroInput) {
  Scenario s = two_agent_closed_form();
  for (auto& a : s.agents) a.x0.setZero();
  EXPECT_EQ(evaluate_welfare(s, {Matrix::Zero(1, 1), Matrix::Zero(1, 1)}), 0.0);
}

TEST(Welfare, ScalarOptimumAndZeroInput) {
  Scenario s;
  s.agents = {scalar_agent(0.5, 1, 1, 1, 1, 1)};
  s.supply = mat({{1, 1}});
  const BestResponse best = best_response(s.agents[0], PriceTrajectory::zeros(2));
  EXPECT_NEAR(evaluate_welfare(s, {best.controls}), -1.1323529411764706, 1e-12);
  EXPECT_DOUBLE_EQ(evaluate_welfare(s, {Matrix::Zero(1, 2)}), -1.3125);
}

TEST(Welfare, RejectsMissingAgent) {
  const Scenario s = two_agent_closed_form();
  EXPECT_THROW(evaluate_welfare(s, {Matrix::Zero(1, 1)}), InvalidInput);
}

TEST(Trading, ZeroConsumptionSplitsSupply) {
  Scenario s = benchmark_infinite(small_initial_states(), 1);
  const Matrix e = construct_trading(s, {Matrix::Zero(2, 1), Matrix::Zero(2, 1), Matrix::Zero(2, 1)});
  EXPECT_NEAR(e(0, 0), 1 - 2.8 / 3, 1e-15);
  EXPECT_NEAR(e(1, 0), 1.8 - 2.8 / 3, 1e-15);
  EXPECT_NEAR(e(2, 0), -2.8 / 3, 1e-15);
}

TEST(Trading, TwoAgentClosedForm) {
  const Scenario s = two_agent_closed_form();
  const double u = -std::sqrt(0.5);
  const Matrix e = construct_trading(s, {scalar(u), scalar(u)});
  EXPECT_NEAR(e(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(e(1, 0), -0.5, 1e-15);
}

TEST(Trading, SingleAgentNeverTrades) {
  Scenario s;
  s.agents = {scalar_agent(0.5, 1, 1, 1, 1, 3)};
  s.supply = mat({{0.7, 2.0, 0.1}});
  const Matrix e = construct_trading(s, {mat({{1, -2, 0.5}})});
  EXPECT_LE(e.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Verify, ClosedFormPasses) {
  const Scenario s = two_agent_closed_form();
  const auto r = verify_equilibrium(s, closed_form_solution(s, 2 * std::sqrt(2.0) - 1.1));
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.balance_residual, 1e-8);
  EXPECT_LT(r.complementarity_residual, 1e-8);
  EXPECT_LT(std::abs(r.best_response_gap), 1e-8);
  EXPECT_GT(r.feasibility_slack, -1e-8);
}

TEST(Verify, ZeroPriceExposesOverConsumption) {
  const Scenario s = two_agent_closed_form();
  const auto r = verify_equilibrium(s, closed_form_solution(s, 0.0));
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.best_response_gap, 0.0);
}

TEST(Verify, AllZeroScenarioPasses) {
  Scenario s = two_agent_closed_form();
  for (auto& a : s.agents) a.x0.setZero();
  EquilibriumSolution sol;
  sol.controls = {Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
  for (int i = 0; i < 2; ++i) sol.states.push_back(rollout(s.agents[i], sol.controls[i]));
  sol.trading = construct_trading(s, sol.controls);
  sol.prices = PriceTrajectory::zeros(1);
  EXPECT_TRUE(verify_equilibrium(s, sol).passed);
}

TEST(Verify, RejectsMismatchedSolution) {
  const Scenario s = two_agent_closed_form();
  EquilibriumSolution sol = closed_form_solution(s, 1.0);
  sol.prices = PriceTrajectory::zeros(3);
  EXPECT_THROW(verify_equilibrium(s, sol), InvalidInput);
}

TEST(Validate, AcceptsBenchmarks) {
  EXPECT_NO_THROW(validate(benchmark_finite()));
  EXPECT_NO_THROW(validate(benchmark_infinite(large_initial_states())));
}

TEST(Validate, RejectsAsymmetricWeight) {
  AgentSpec a = make_agent(Matrix::Identity(2, 2), Matrix::Identity(2, 2), mat({{1, 0.1}, {0, 1}}),
                           Matrix::Identity(2, 2), Matrix::Identity(2, 2), vec({1, 1}));
  EXPECT_THROW(validate(a), InvalidInput);
}

TEST(Validate, NamesIndefiniteConsumption) {
  Scenario s = two_agent_closed_form();
  s.agents[1].H = scalar(-1);
  try {
    validate(s);
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("agent 1: H is not positive definite"), std::string::npos);
  }
}

TEST(Validate, RejectsNonPositiveSupply) {
  Scenario s = two_agent_closed_form();
  s.supply = mat({{1}, {-1}});
  try {
    validate(s);
    FAIL() << "expected InvalidInput";
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("C(0) <= 0"), std::string::npos);
  }
}

TEST(Validate, RejectsHeterogeneousDimensions) {
  Scenario s = two_agent_closed_form();
  s.agents[1] = make_agent(Matrix::Identity(2, 2), Matrix::Identity(2, 1), Matrix::Identity(2, 2), scalar(1),
                           scalar(1), vec({1, 1}));
  EXPECT_THROW(validate(s), InvalidInput);
}

TEST(Validate, RejectsBadShapesAndMissingThreshold) {
  AgentSpec a = scalar_agent(1, 1, 1, 1, 1, 1);
  a.x0 = vec({1, 2});
  EXPECT_THROW(validate(a), InvalidInput);
  Scenario s = two_agent_closed_form();
  s.supply = mat({{1, 1}});
  EXPECT_THROW(validate(s), InvalidInput);
  s = two_agent_closed_form();
  s.threshold = -1.0;
  EXPECT_THROW(validate(s), InvalidInput);
}

TEST(Prices, RejectNegativeAndClampRounding) {
  EXPECT_THROW(PriceTrajectory(vec({1, -1e-6})), InvalidInput);
  const PriceTrajectory p(vec({1, -1e-14}));
  EXPECT_EQ(p[1], 0.0);
  EXPECT_EQ(p.max(), 1.0);
}

TEST(ModelProperty, TradingBalancesEveryStep) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Scenario s = random_scenario(rng);
    std::vector<Matrix> U;
    for (const auto& a : s.agents) U.push_back(random_matrix(rng, a.input_dim(), s.horizon(), 2.0));
    const Matrix e = construct_trading(s, U);
    const double bound = 1e-12 * s.num_agents() * std::max(1.0, s.supply.cwiseAbs().maxCoeff());
    EXPECT_LE(e.colwise().sum().cwiseAbs().maxCoeff(), bound);
    // Within total supply, the canonical trade never exceeds the local slack.
    const Matrix h = consumption_profile(s, U);
    for (int t = 0; t < s.horizon(); ++t) {
      if (h.col(t).sum() > s.supply.col(t).sum()) continue;
      for (int i = 0; i < s.num_agents(); ++i) EXPECT_LE(e(i, t), s.supply(i, t) - h(i, t) + 1e-12);
    }
  }
}

TEST(ModelProperty, UnconstrainedWelfareMatchesRiccatiValue) {
  std::mt19937 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Scenario full = random_scenario(rng);
    Scenario s;
    s.agents = {full.agents[0]};
    s.supply = full.supply.row(0);
    const PriceTrajectory zero = PriceTrajectory::zeros(s.horizon());
    const RiccatiSolution ric = finite_riccati(s.agents[0], zero);
    const BestResponse best = best_response(s.agents[0], zero);
    const double value = -s.agents[0].x0.dot(ric.P[0] * s.agents[0].x0);
    EXPECT_NEAR(evaluate_welfare(s, {best.controls}), value, 1e-10 * std::max(1.0, std::abs(value)));
  }
}
