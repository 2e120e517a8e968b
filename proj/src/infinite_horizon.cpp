#include "cemas/infinite_horizon.hpp"

#include "cemas/errors.hpp"
#include "cemas/model.hpp"
#include "cemas/riccati.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>

namespace cemas {

namespace {

Matrix block_diagonal(const Scenario& scenario, const Matrix AgentSpec::*field) {
  int rows = 0;
  int cols = 0;
  for (const auto& agent : scenario.agents) {
    rows += static_cast<int>((agent.*field).rows());
    cols += static_cast<int>((agent.*field).cols());
  }
  Matrix out = Matrix::Zero(rows, cols);
  int r = 0;
  int c = 0;
  for (const auto& agent : scenario.agents) {
    const Matrix& M = agent.*field;
    out.block(r, c, M.rows(), M.cols()) = M;
    r += static_cast<int>(M.rows());
    c += static_cast<int>(M.cols());
  }
  return out;
}

Vector symmetric_eigenvalues(const Matrix& M) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

}  // namespace

StackedSystem stack_agents(const Scenario& scenario) {
  for (const auto& agent : scenario.agents) validate(agent);
  if (scenario.agents.empty()) throw InvalidInput("scenario has no agents");
  StackedSystem s;
  s.A = block_diagonal(scenario, &AgentSpec::A);
  s.B = block_diagonal(scenario, &AgentSpec::B);
  s.Q = block_diagonal(scenario, &AgentSpec::Q);
  s.R = block_diagonal(scenario, &AgentSpec::R);
  s.H = block_diagonal(scenario, &AgentSpec::H);
  const DareSolution ric = dare(s.A, s.B, s.Q, s.R);
  s.P = ric.P;
  s.K = ric.K;
  return s;
}

Vector stacked_initial_state(const Scenario& scenario) {
  int d = 0;
  for (const auto& agent : scenario.agents) d += agent.state_dim();
  Vector x(d);
  int offset = 0;
  for (const auto& agent : scenario.agents) {
    x.segment(offset, agent.state_dim()) = agent.x0;
    offset += agent.state_dim();
  }
  return x;
}

double supply_lower_bound(const Scenario& scenario) {
  if (scenario.supply.cols() == 0) throw InvalidInput("scenario has no supply columns");
  return scenario.total_supply().minCoeff();
}

double invariant_radius(const StackedSystem& system, double supply_bound) {
  if (!(supply_bound > 0.0)) throw InvalidInput("supply lower bound must be positive");
  const double gain = symmetric_eigenvalues(system.K.transpose() * system.H * system.K).maxCoeff();
  if (!(gain > 0.0)) return std::numeric_limits<double>::infinity();
  const Vector p = symmetric_eigenvalues(system.P);
  return std::sqrt(supply_bound * p.minCoeff() / (p.maxCoeff() * gain));
}

double invariant_radius(const Scenario& scenario) {
  validate(scenario);
  return invariant_radius(stack_agents(scenario), supply_lower_bound(scenario));
}

ZeroPriceCertificate zero_price_certificate(const Scenario& scenario, const Vector& x0_stacked, int window) {
  validate(scenario);
  if (window < 1) throw InvalidInput("certificate window must be positive");
  const StackedSystem sys = stack_agents(scenario);
  if (x0_stacked.size() != sys.A.rows()) throw InvalidInput("stacked initial state has the wrong length");
  const double C = supply_lower_bound(scenario);

  ZeroPriceCertificate cert;
  cert.radius = invariant_radius(sys, C);
  cert.inside = x0_stacked.norm() <= cert.radius;
  if (!cert.inside) return cert;

  cert.n_bar = 0;
  cert.price_tail = PriceTrajectory::zeros(window);
  cert.invariance_verified = true;
  Vector x = x0_stacked;
  double energy = x.dot(sys.P * x);
  for (int t = 0; t < window; ++t) {
    const Vector u = sys.K * x;
    if (u.dot(sys.H * u) > C + 1e-9) cert.invariance_verified = false;
    x = sys.A * x + sys.B * u;
    const double next = x.dot(sys.P * x);
    if (next > energy * (1.0 + 1e-12) + 1e-300) cert.invariance_verified = false;
    energy = next;
  }
  return cert;
}

Scenario truncate(const Scenario& scenario, const Vector& x0_stacked, int horizon) {
  if (horizon < 1) throw InvalidInput("truncation horizon must be positive");
  if (scenario.supply.cols() == 0) throw InvalidInput("scenario has no supply columns");
  Scenario out = scenario;
  int offset = 0;
  for (auto& agent : out.agents) {
    if (offset + agent.state_dim() > x0_stacked.size()) throw InvalidInput("stacked initial state is too short");
    agent.x0 = x0_stacked.segment(offset, agent.state_dim());
    offset += agent.state_dim();
  }
  if (offset != x0_stacked.size()) throw InvalidInput("stacked initial state is too long");

  const auto available = scenario.supply.cols();
  out.supply.resize(scenario.supply.rows(), horizon);
  for (int t = 0; t < horizon; ++t) out.supply.col(t) = scenario.supply.col(std::min<Eigen::Index>(t, available - 1));
  return out;
}

PriceDecay zero_price_time(const Scenario& scenario, const Vector& x0_stacked, int horizon_cap, double price_tol,
                           const SolverOptions& options) {
  if (horizon_cap < 1) throw InvalidInput("horizon cap must be positive");
  if (!(price_tol > 0.0)) throw InvalidInput("price tolerance must be positive");
  const double x0_norm = x0_stacked.norm();

  int horizon = horizon_cap;
  for (int attempt = 0; attempt <= 4; ++attempt, horizon *= 2) {
    PriceDecay out;
    out.truncated = truncate(scenario, x0_stacked, horizon);
    out.solution = solve_welfare_finite(out.truncated, options);
    out.horizon = horizon;

    const Vector& lambda = out.solution.prices.values();
    int n_bar = horizon;
    while (n_bar > 0 && lambda[n_bar - 1] < price_tol) --n_bar;

    double terminal = 0.0;
    for (const auto& states : out.solution.states) terminal += states.col(horizon).squaredNorm();
    const bool quiet_prices = n_bar <= horizon - horizon / 4;
    const bool contracted = std::sqrt(terminal) < 1e-3 * x0_norm || x0_norm == 0.0;
    if (quiet_prices && contracted) {
      out.n_bar = n_bar;
      return out;
    }
  }
  throw TruncationError("prices did not settle within a truncation of " + std::to_string(horizon / 2) + " steps");
}

}  // namespace cemas
