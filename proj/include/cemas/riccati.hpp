#pragma once

#include "cemas/types.hpp"

#include <vector>

namespace cemas {

/// Backward Riccati pass for one agent at fixed prices. The cost-to-go
/// from step k is x'P[k]x + 2 p[k]'x + c[k]; the optimal input is
/// u(k) = gains[k] x(k) + offsets[k].
struct RiccatiSolution {
  std::vector<Matrix> P;
  std::vector<Vector> p;
  std::vector<double> c;
  std::vector<Matrix> gains;
  std::vector<Vector> offsets;
};

/// Riccati recursion with input weight R + lambda_k H over the horizon
/// prices.size(). The affine terms are driven by h_lin and h_const.
/// Throws ConditioningError if an innovation matrix is not safely positive
/// definite (condition number above 1e12).
RiccatiSolution finite_riccati(const AgentSpec& agent, const PriceTrajectory& prices);

struct BestResponse {
  Matrix controls;  // m x N
  Matrix states;    // d x (N+1)
  double payoff = 0.0;
};

/// Payoff-maximizing plan of one agent facing the given prices. The
/// payoff excludes the supply income sum_t lambda_t a(t).
BestResponse best_response(const AgentSpec& agent, const PriceTrajectory& prices);

struct DareSolution {
  Matrix P;
  Matrix K;
  int iterations = 0;
};

/// Discrete algebraic Riccati equation by fixed-point iteration from P = Q.
/// Stops once successive iterates differ by less than 1e-13 * max(1, |P|)
/// in spectral norm; throws NonStabilizableError after 10,000 iterations or
/// when the resulting closed loop is not Schur stable.
DareSolution dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R);

/// Largest eigenvalue modulus.
double spectral_radius(const Matrix& M);

}  // namespace cemas
