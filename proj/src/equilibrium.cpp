#include "cemas/equilibrium.hpp"

#include "cemas/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace cemas {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;

double largest_eigenvalue(const Matrix& M) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

// Objective changes below this are indistinguishable from rounding.
double noise_floor(double value) { return 1e-13 * std::max(1.0, std::abs(value)); }

void check_options(const SolverOptions& options) {
  if (!(options.residual_tol > 0.0)) throw InvalidInput("residual_tol must be positive");
  if (options.max_iters < 1) throw InvalidInput("max_iters must be at least 1");
}

double natural_residual(const Vector& lambda, const Vector& g) {
  return lambda.cwiseMin(-g).cwiseAbs().maxCoeff();
}

double complementarity(const Vector& lambda, const Vector& g) { return lambda.cwiseProduct(g).cwiseAbs().maxCoeff(); }

// Over-consumption is held two orders below the residual tolerance so the
// returned plan clears the (tighter) feasibility check of verification.
constexpr double kFeasibilityFactor = 1e-2;

bool stationary(const Vector& lambda, const Vector& g, double tol) {
  return natural_residual(lambda, g) <= tol && complementarity(lambda, g) <= tol &&
         g.maxCoeff() <= kFeasibilityFactor * tol;
}

EquilibriumSolution assemble(const Scenario& scenario, std::vector<Matrix> controls, std::vector<Matrix> states,
                             PriceTrajectory prices) {
  EquilibriumSolution sol;
  sol.controls = std::move(controls);
  sol.states = std::move(states);
  sol.prices = std::move(prices);
  sol.trading = construct_trading(scenario, sol.controls);
  sol.welfare = evaluate_welfare(scenario, sol.controls);
  sol.residuals = verify_equilibrium(scenario, sol);
  return sol;
}

}  // namespace

DualEvaluation evaluate_dual(const Scenario& scenario, const PriceTrajectory& prices) {
  if (prices.size() != scenario.horizon()) throw InvalidInput("price vector length differs from the horizon");
  DualEvaluation eval;
  const Vector C = scenario.total_supply();
  eval.residual = -C;
  double payoff = 0.0;
  eval.responses.reserve(scenario.agents.size());
  for (const auto& agent : scenario.agents) {
    BestResponse br = best_response(agent, prices);
    for (int t = 0; t < scenario.horizon(); ++t) eval.residual[t] += consumption(agent, br.controls.col(t));
    payoff += br.payoff;
    eval.responses.push_back(std::move(br));
  }
  eval.objective = -(payoff + prices.values().dot(C));
  return eval;
}

Vector dual_residual(const Scenario& scenario, const PriceTrajectory& prices) {
  return evaluate_dual(scenario, prices).residual;
}

double dual_objective(const Scenario& scenario, const PriceTrajectory& prices) {
  return evaluate_dual(scenario, prices).objective;
}

DualSolve solve_welfare_finite_traced(const Scenario& scenario, const SolverOptions& options) {
  validate(scenario);
  check_options(options);
  const int N = scenario.horizon();
  const int n = scenario.num_agents();
  const double tol = options.residual_tol;

  PriceTrajectory lambda = PriceTrajectory::zeros(N);
  if (options.initial_prices) {
    if (options.initial_prices->size() != N) throw InvalidInput("initial prices have the wrong length");
    lambda = *options.initial_prices;
  }

  double h_max = 0.0;
  for (const auto& agent : scenario.agents) h_max = std::max(h_max, largest_eigenvalue(agent.H));
  const double base_step = 1.0 / (n * h_max * N);

  DualSolve out;
  DualEvaluation eval = evaluate_dual(scenario, lambda);
  double step = base_step;
  bool converged = false;
  int iter = 0;

  for (;; ++iter) {
    const Vector& g = eval.residual;
    const double natural = natural_residual(lambda.values(), g);
    out.trace.push_back({lambda.values(), natural, eval.objective, step});
    if (stationary(lambda.values(), g, tol)) {
      converged = true;
      break;
    }
    if (iter >= options.max_iters) break;

    PriceTrajectory next;
    DualEvaluation next_eval;
    if (options.step_rule == StepRule::fixed) {
      next = PriceTrajectory((lambda.values() + base_step * g).cwiseMax(0.0));
      next_eval = evaluate_dual(scenario, next);
    } else {
      bool accepted = false;
      for (int halving = 0; halving <= kMaxHalvings; ++halving) {
        next = PriceTrajectory((lambda.values() + step * g).cwiseMax(0.0));
        next_eval = evaluate_dual(scenario, next);
        const double predicted = kArmijo * g.dot(next.values() - lambda.values());
        if (next_eval.objective >= eval.objective + predicted - noise_floor(eval.objective)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        // Backtracking can no longer resolve an increase; accept the
        // current point if it already meets the natural-residual test.
        converged = natural <= tol && g.maxCoeff() <= kFeasibilityFactor * tol;
        break;
      }
    }

    const Vector dl = next.values() - lambda.values();
    const Vector dg = next_eval.residual - eval.residual;
    const double curvature = -dl.dot(dg);
    if (options.step_rule == StepRule::backtracking) {
      step = curvature > 0.0 ? dl.squaredNorm() / curvature : 2.0 * step;
      step = std::clamp(step, base_step * 1e-12, base_step * 1e12);
    }
    lambda = std::move(next);
    eval = std::move(next_eval);
  }

  if (!converged) {
    std::ostringstream os;
    os << "dual ascent did not converge within " << options.max_iters << " iterations (residual "
       << out.trace.back().residual << ")";
    throw DualConvergenceError(os.str(), std::move(out.trace));
  }

  std::vector<Matrix> controls;
  std::vector<Matrix> states;
  for (auto& br : eval.responses) {
    controls.push_back(std::move(br.controls));
    states.push_back(std::move(br.states));
  }
  out.solution = assemble(scenario, std::move(controls), std::move(states), lambda);
  out.solution.iterations = iter;
  for (int t = 0; t < N; ++t) {
    if (lambda[t] <= tol && std::abs(eval.residual[t]) <= tol) out.solution.degenerate = true;
  }
  return out;
}

EquilibriumSolution solve_welfare_finite(const Scenario& scenario, const SolverOptions& options) {
  return solve_welfare_finite_traced(scenario, options).solution;
}

namespace {

/// Stacked-control view of the welfare problem: per-step vectors
/// [u_1(t); ...; u_n(t)] and the shifted ellipsoid of the budget.
class PrimalProblem {
 public:
  explicit PrimalProblem(const Scenario& scenario)
      : scenario_(scenario), n_(scenario.num_agents()), m_(scenario.input_dim()), N_(scenario.horizon()) {
    const int dim = n_ * m_;
    Matrix H = Matrix::Zero(dim, dim);
    Vector h = Vector::Zero(dim);
    double h_const = 0.0;
    for (int i = 0; i < n_; ++i) {
      const auto& agent = scenario.agents[i];
      H.block(i * m_, i * m_, m_, m_) = agent.H;
      h.segment(i * m_, m_) = agent.h_lin;
      h_const += agent.h_const;
    }
    projector_ = std::make_unique<EllipsoidProjector>(H);
    const Eigen::LLT<Matrix> llt(H);
    center_ = -llt.solve(h);
    const double shift = h.dot(llt.solve(h)) - h_const;
    budget_ = scenario.total_supply().array() + shift;
    for (int t = 0; t < N_; ++t) {
      if (!(budget_[t] > 0.0)) throw InvalidInput("consumption budget is empty at step " + std::to_string(t));
    }
  }

  /// Welfare and its gradient with respect to every u_i(t), via the
  /// costate recursion.
  double welfare(const std::vector<Matrix>& U, std::vector<Matrix>& grad) const {
    double total = 0.0;
    grad.resize(n_);
    for (int i = 0; i < n_; ++i) {
      const auto& a = scenario_.agents[i];
      const Matrix x = rollout(a, U[i]);
      for (int t = 0; t <= N_; ++t) total -= x.col(t).dot(a.Q * x.col(t));
      for (int t = 0; t < N_; ++t) total -= U[i].col(t).dot(a.R * U[i].col(t));

      grad[i].resize(m_, N_);
      Vector costate = -2.0 * a.Q * x.col(N_);
      for (int t = N_ - 1; t >= 0; --t) {
        grad[i].col(t) = -2.0 * a.R * U[i].col(t) + a.B.transpose() * costate;
        costate = -2.0 * a.Q * x.col(t) + a.A.transpose() * costate;
      }
    }
    return total;
  }

  /// Projects every time slice of U + step * G; multipliers are written to mu.
  std::vector<Matrix> project(const std::vector<Matrix>& U, const std::vector<Matrix>& G, double step,
                              Vector& mu) const {
    std::vector<Matrix> out(n_, Matrix(m_, N_));
    mu.resize(N_);
    Vector slice(n_ * m_);
    for (int t = 0; t < N_; ++t) {
      for (int i = 0; i < n_; ++i) slice.segment(i * m_, m_) = U[i].col(t) + step * G[i].col(t);
      const auto proj = projector_->project(slice - center_, budget_[t]);
      const Vector point = proj.point + center_;
      mu[t] = proj.multiplier;
      for (int i = 0; i < n_; ++i) out[i].col(t) = point.segment(i * m_, m_);
    }
    return out;
  }

  [[nodiscard]] int agents() const { return n_; }
  [[nodiscard]] int inputs() const { return m_; }
  [[nodiscard]] int horizon() const { return N_; }

 private:
  const Scenario& scenario_;
  int n_;
  int m_;
  int N_;
  std::unique_ptr<EllipsoidProjector> projector_;
  Vector center_;
  Vector budget_;
};

double inner(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i].array() * b[i].array()).sum();
  return s;
}

std::vector<Matrix> difference(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  std::vector<Matrix> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

double max_abs(const std::vector<Matrix>& a) {
  double s = 0.0;
  for (const auto& M : a) s = std::max(s, M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff());
  return s;
}

}  // namespace

EquilibriumSolution primal_oracle(const Scenario& scenario, const SolverOptions& options) {
  validate(scenario);
  check_options(options);
  const PrimalProblem problem(scenario);
  const int n = problem.agents();
  const int N = problem.horizon();

  double r_max = 0.0;
  for (const auto& agent : scenario.agents) r_max = std::max(r_max, largest_eigenvalue(agent.R));
  double step = 0.5 / r_max;

  Vector mu;
  std::vector<Matrix> G;
  std::vector<Matrix> U(n, Matrix::Zero(problem.inputs(), N));
  U = problem.project(U, U, 0.0, mu);
  double W = problem.welfare(U, G);

  for (int iter = 1; iter <= options.max_iters; ++iter) {
    std::vector<Matrix> next;
    std::vector<Matrix> next_G;
    double next_W = 0.0;
    bool accepted = false;
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
      next = problem.project(U, G, step, mu);
      next_W = problem.welfare(next, next_G);
      if (next_W >= W + kArmijo * inner(G, difference(next, U)) - noise_floor(W)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    const std::vector<Matrix> dU = difference(next, U);
    const double gradient_mapping = max_abs(dU) / step;
    if (!accepted && gradient_mapping > options.residual_tol) {
      throw ConvergenceError("primal oracle: line search stalled (projected gradient " +
                             std::to_string(gradient_mapping) + ")");
    }
    const Vector prices = (mu / (2.0 * step)).cwiseMax(0.0);
    const std::vector<Matrix> dG = difference(next_G, G);
    U = std::move(next);
    G = std::move(next_G);
    W = next_W;

    if (gradient_mapping <= options.residual_tol) {
      std::vector<Matrix> states;
      for (int i = 0; i < n; ++i) states.push_back(rollout(scenario.agents[i], U[i]));
      EquilibriumSolution sol = assemble(scenario, std::move(U), std::move(states), PriceTrajectory(prices));
      sol.iterations = iter;
      return sol;
    }

    const double curvature = -inner(dU, dG);
    step = curvature > 0.0 ? inner(dU, dU) / curvature : 2.0 * step;
  }
  throw ConvergenceError("primal oracle did not converge within " + std::to_string(options.max_iters) + " iterations");
}

}  // namespace cemas
