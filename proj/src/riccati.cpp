#include "cemas/riccati.hpp"

#include "cemas/errors.hpp"
#include "cemas/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace cemas {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr int kDareMaxIterations = 10000;

Matrix symmetrized(const Matrix& M) { return 0.5 * (M + M.transpose()); }

/// Cholesky factor of the innovation term B'PB + R + lambda H, after
/// checking it is safely positive definite.
Eigen::LLT<Matrix> factor_innovation(const Matrix& S, int step) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition) {
    std::ostringstream os;
    os << "innovation matrix at step " << step << " is not safely positive definite (eigenvalues in [" << lo << ", "
       << hi << "])";
    throw ConditioningError(os.str());
  }
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) throw ConditioningError("Cholesky factorization failed at step " + std::to_string(step));
  return llt;
}

double symmetric_norm(const Matrix& M) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(M), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

RiccatiSolution finite_riccati(const AgentSpec& agent, const PriceTrajectory& prices) {
  const int N = prices.size();
  const int d = agent.state_dim();
  const int m = agent.input_dim();
  const Vector h_lin = agent.h_lin.size() == m ? agent.h_lin : Vector::Zero(m);

  RiccatiSolution sol;
  sol.P.resize(N + 1);
  sol.p.resize(N + 1);
  sol.c.resize(N + 1);
  sol.gains.resize(N);
  sol.offsets.resize(N);
  sol.P[N] = agent.Q;
  sol.p[N] = Vector::Zero(d);
  sol.c[N] = 0.0;

  for (int k = N - 1; k >= 0; --k) {
    const double lambda = prices[k];
    const Matrix& Pn = sol.P[k + 1];
    const Matrix PnB = Pn * agent.B;
    const Matrix S = symmetrized(agent.B.transpose() * PnB + agent.R + lambda * agent.H);
    const auto llt = factor_innovation(S, k);

    sol.gains[k] = -llt.solve(PnB.transpose() * agent.A);
    sol.offsets[k] = -llt.solve(agent.B.transpose() * sol.p[k + 1] + lambda * h_lin);
    sol.P[k] = symmetrized(agent.A.transpose() * Pn * agent.A + agent.Q + agent.A.transpose() * PnB * sol.gains[k]);
    sol.p[k] = agent.A.transpose() * (sol.p[k + 1] + PnB * sol.offsets[k]);
    sol.c[k] = sol.c[k + 1] + lambda * agent.h_const - sol.offsets[k].dot(S * sol.offsets[k]);
  }
  return sol;
}

BestResponse best_response(const AgentSpec& agent, const PriceTrajectory& prices) {
  const RiccatiSolution ric = finite_riccati(agent, prices);
  const int N = prices.size();

  BestResponse out;
  out.controls.resize(agent.input_dim(), N);
  out.states.resize(agent.state_dim(), N + 1);
  out.states.col(0) = agent.x0;
  for (int k = 0; k < N; ++k) {
    out.controls.col(k) = ric.gains[k] * out.states.col(k) + ric.offsets[k];
    out.states.col(k + 1) = agent.A * out.states.col(k) + agent.B * out.controls.col(k);
  }
  out.payoff = agent_payoff(agent, prices, out.controls);
  return out;
}

DareSolution dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || Q.rows() != A.rows() || Q.cols() != A.cols() ||
      R.rows() != B.cols() || R.cols() != B.cols()) {
    throw InvalidInput("dare: inconsistent matrix dimensions");
  }

  Matrix P = Q;
  for (int it = 1; it <= kDareMaxIterations; ++it) {
    const Matrix PB = P * B;
    const auto llt = factor_innovation(symmetrized(B.transpose() * PB + R), -1);
    const Matrix next = symmetrized(A.transpose() * P * A + Q - A.transpose() * PB * llt.solve(PB.transpose() * A));
    if (!next.allFinite()) throw NonStabilizableError("dare: Riccati iteration diverged");

    const double change = symmetric_norm(next - P);
    P = next;
    if (change < 1e-13 * std::max(1.0, symmetric_norm(P))) {
      const Matrix PBk = P * B;
      const auto fac = factor_innovation(symmetrized(B.transpose() * PBk + R), -1);
      DareSolution sol;
      sol.P = P;
      sol.K = -fac.solve(PBk.transpose() * A);
      sol.iterations = it;
      const double rho = spectral_radius(A + B * sol.K);
      if (!(rho < 1.0)) {
        throw NonStabilizableError("dare: closed loop spectral radius " + std::to_string(rho) + " is not below 1");
      }
      return sol;
    }
  }
  throw NonStabilizableError("dare: no convergence within " + std::to_string(kDareMaxIterations) + " iterations");
}

double spectral_radius(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  const Eigen::EigenSolver<Matrix> eig(M, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace cemas
