#pragma once

#include "cemas/errors.hpp"
#include "cemas/riccati.hpp"
#include "cemas/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cemas {

enum class StepRule { fixed, backtracking };

struct SolverOptions {
  double residual_tol = 1e-8;
  int max_iters = 10000;
  StepRule step_rule = StepRule::backtracking;
  std::optional<PriceTrajectory> initial_prices;
};

struct DualIterate {
  Vector prices;
  double residual = 0.0;   // ||min(lambda, -g)||_inf
  double objective = 0.0;  // concave dual value
  double step = 0.0;
};

using DualTrace = std::vector<DualIterate>;

class DualConvergenceError : public ConvergenceError {
 public:
  DualConvergenceError(const std::string& what, DualTrace trace)
      : ConvergenceError(what), trace_(std::move(trace)) {}
  [[nodiscard]] const DualTrace& trace() const { return trace_; }

 private:
  DualTrace trace_;
};

/// Everything the dual method needs at one price vector.
struct DualEvaluation {
  Vector residual;  // g_t = sum_i h_i(u_i*(t)) - C(t)
  double objective = 0.0;
  std::vector<BestResponse> responses;
};

/// Best responses of all agents at the given prices, the consumption
/// excess g and the dual value -(sum_i payoff_i + sum_t lambda_t C(t)).
/// g is the gradient of that concave function.
DualEvaluation evaluate_dual(const Scenario& scenario, const PriceTrajectory& prices);

Vector dual_residual(const Scenario& scenario, const PriceTrajectory& prices);
double dual_objective(const Scenario& scenario, const PriceTrajectory& prices);

struct DualSolve {
  EquilibriumSolution solution;
  DualTrace trace;
};

/// Competitive equilibrium by projected dual ascent on the clearing prices.
/// Throws DualConvergenceError carrying the trace when the budget runs out.
DualSolve solve_welfare_finite_traced(const Scenario& scenario, const SolverOptions& options = {});
EquilibriumSolution solve_welfare_finite(const Scenario& scenario, const SolverOptions& options = {});

/// Welfare maximization subject to sum_i h_i(u_i(t)) <= C(t), solved by
/// projected gradient ascent on the stacked controls with an adjoint
/// gradient. Prices come from the projection multipliers.
EquilibriumSolution primal_oracle(const Scenario& scenario, const SolverOptions& options = {});

/// Euclidean projection onto {u : u'Hu <= C} with its multiplier mu, where
/// the projection solves (I + mu H) u_p = u.
struct EllipsoidProjection {
  Vector point;
  double multiplier = 0.0;
};

class EllipsoidProjector {
 public:
  /// H must be symmetric positive definite.
  explicit EllipsoidProjector(const Matrix& H);

  [[nodiscard]] EllipsoidProjection project(const Vector& u, double C) const;

 private:
  Matrix basis_;
  Vector weights_;
};

Vector project_ellipsoid(const Vector& u, const Matrix& H, double C);

}  // namespace cemas
