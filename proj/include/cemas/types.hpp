#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace cemas {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One agent of the network: LTI dynamics x(t+1) = A x(t) + B u(t), running
/// utility -x'Qx - u'Ru, terminal utility -x'Qx and resource consumption
/// h(u) = u'Hu + 2 h_lin'u + h_const.
///
/// The affine consumption terms are zero for plain regulation problems and
/// are only populated by the tracking transformation.
struct AgentSpec {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
  Matrix H;
  Vector h_lin;
  double h_const = 0.0;
  Vector x0;

  [[nodiscard]] int state_dim() const { return static_cast<int>(A.rows()); }
  [[nodiscard]] int input_dim() const { return static_cast<int>(B.cols()); }
};

/// Builds an agent with zero affine consumption terms.
AgentSpec make_agent(Matrix A, Matrix B, Matrix Q, Matrix R, Matrix H, Vector x0);

/// A population of agents sharing one resource. supply(i, t) is the excess
/// resource a_i(t); the horizon is the number of supply columns.
struct Scenario {
  std::vector<AgentSpec> agents;
  Matrix supply;
  std::optional<double> threshold;

  [[nodiscard]] int num_agents() const { return static_cast<int>(agents.size()); }
  [[nodiscard]] int horizon() const { return static_cast<int>(supply.cols()); }
  [[nodiscard]] int state_dim() const { return agents.empty() ? 0 : agents.front().state_dim(); }
  [[nodiscard]] int input_dim() const { return agents.empty() ? 0 : agents.front().input_dim(); }

  /// C(t) = sum_i a_i(t) for every step.
  [[nodiscard]] Vector total_supply() const { return supply.colwise().sum().transpose(); }
};

/// Per-step clearing prices. Construction rejects entries below -1e-12 and
/// clamps the remaining tiny negatives to zero.
class PriceTrajectory {
 public:
  PriceTrajectory() = default;
  explicit PriceTrajectory(Vector values);

  static PriceTrajectory zeros(int horizon);

  [[nodiscard]] const Vector& values() const { return values_; }
  [[nodiscard]] int size() const { return static_cast<int>(values_.size()); }
  [[nodiscard]] double operator[](int t) const { return values_[t]; }
  [[nodiscard]] double max() const { return values_.size() == 0 ? 0.0 : values_.maxCoeff(); }

 private:
  Vector values_;
};

/// Residuals of the competitive-equilibrium conditions for a candidate
/// solution.
struct VerificationReport {
  double balance_residual = 0.0;
  double feasibility_slack = 0.0;
  double complementarity_residual = 0.0;
  double price_negativity = 0.0;
  double best_response_gap = 0.0;
  bool passed = false;
};

/// Acceptance thresholds for verify_equilibrium. best_response is relative
/// to max(1, |welfare|).
struct VerifyTolerances {
  double balance = 1e-9;
  double slack = 1e-9;
  double complementarity = 1e-6;
  double best_response = 1e-6;
};

/// Equilibrium triple plus derived quantities. controls[i] is m x N,
/// states[i] is d x (N+1), trading is n x N.
struct EquilibriumSolution {
  std::vector<Matrix> controls;
  std::vector<Matrix> states;
  Matrix trading;
  PriceTrajectory prices;
  double welfare = 0.0;
  VerificationReport residuals;
  int iterations = 0;
  /// Set when some step has a flat dual (zero residual over a price
  /// interval); the smallest valid multiplier is returned there.
  bool degenerate = false;
};

}  // namespace cemas
