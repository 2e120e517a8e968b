#include "cemas/shaping.hpp"

#include "cemas/errors.hpp"
#include "cemas/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cemas {

namespace {

double spectral_norm(const Matrix& M) {
  const Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

/// Coefficient of delta in the step-k price bound, before the common
/// n beta / sqrt(C(k) rho) factor.
double coefficient(const BoundParams& p, BoundMethod method, int k) {
  const Vector& C = p.supply_totals;
  const double a = p.alpha;
  double coef = 0.0;
  for (int t = k + 1; t <= p.horizon; ++t) {
    coef += p.gamma * std::pow(a, 2 * t - k - 1);
    if (method == BoundMethod::dp && k == 0) continue;
    const int j_end = method == BoundMethod::qp ? t : k;
    double inner = 0.0;
    for (int j = 0; j < j_end; ++j) {
      if (method == BoundMethod::qp && j == k) continue;
      inner += std::sqrt(C[j] / p.rho) * std::pow(a, 2 * t - j - k - 2);
    }
    coef += p.beta * inner;
  }
  return coef;
}

}  // namespace

BoundParams bound_params(const Scenario& scenario) {
  validate(scenario);
  if (!scenario.threshold) throw InvalidInput("bound parameters need a price threshold");
  BoundParams p;
  p.rho = std::numeric_limits<double>::infinity();
  for (const auto& agent : scenario.agents) {
    p.alpha = std::max(p.alpha, spectral_norm(agent.A));
    p.beta = std::max(p.beta, spectral_norm(agent.B));
    p.gamma = std::max(p.gamma, agent.x0.norm());
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(agent.H, Eigen::EigenvaluesOnly);
    p.rho = std::min(p.rho, eig.eigenvalues().minCoeff());
  }
  p.n = scenario.num_agents();
  p.horizon = scenario.horizon();
  p.supply_totals = scenario.total_supply();
  p.threshold = *scenario.threshold;
  return p;
}

void validate(const BoundParams& p) {
  // alpha = 0 and gamma = 0 are degenerate but meaningful (no coupling,
  // no initial state); the bounds then return +infinity.
  if (!(p.alpha >= 0.0) || !(p.gamma >= 0.0)) throw InvalidInput("alpha and gamma must be non-negative");
  if (!(p.beta > 0.0) || !(p.rho > 0.0)) throw InvalidInput("beta and rho must be positive");
  if (!(p.threshold > 0.0)) throw InvalidInput("threshold must be positive");
  if (p.n < 1 || p.horizon < 1) throw InvalidInput("agent count and horizon must be positive");
  if (p.supply_totals.size() != p.horizon) throw InvalidInput("supply totals do not match the horizon");
  for (int t = 0; t < p.horizon; ++t) {
    if (!(p.supply_totals[t] > 0.0)) throw InvalidInput("C(" + std::to_string(t) + ") <= 0");
  }
}

double delta_max(const BoundParams& params, BoundMethod method) {
  validate(params);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < params.horizon; ++k) {
    const double coef = coefficient(params, method, k);
    if (coef <= 0.0) continue;
    const double rhs = std::sqrt(params.supply_totals[k] * params.rho) * params.threshold / (params.n * params.beta);
    best = std::min(best, rhs / coef);
  }
  return best;
}

double delta_max_qp(const BoundParams& params) { return delta_max(params, BoundMethod::qp); }
double delta_max_dp(const BoundParams& params) { return delta_max(params, BoundMethod::dp); }

double price_upper_bound(const BoundParams& params, double delta, BoundMethod method, int k) {
  validate(params);
  if (k < 0 || k >= params.horizon) throw InvalidInput("step " + std::to_string(k) + " is outside the horizon");
  if (!(delta >= 0.0)) throw InvalidInput("delta must be non-negative");
  return delta * params.n * params.beta * coefficient(params, method, k) /
         std::sqrt(params.supply_totals[k] * params.rho);
}

double max_price_over_box(const Scenario& scenario, double delta, const SearchMode& mode,
                          const SolverOptions& options) {
  if (!(delta > 0.0)) throw InvalidInput("delta must be positive");
  if (mode.kind == SearchMode::Kind::corner) {
    return solve_welfare_finite(with_uniform_q(scenario, delta), options).prices.max();
  }
  if (mode.points < 1) throw InvalidInput("grid search needs at least one point per axis");

  const int n = scenario.num_agents();
  std::vector<int> index(n, 1);
  double worst = 0.0;
  for (;;) {
    Scenario s = scenario;
    for (int i = 0; i < n; ++i) {
      const int d = s.agents[i].state_dim();
      s.agents[i].Q = delta * index[i] / mode.points * Matrix::Identity(d, d);
    }
    worst = std::max(worst, solve_welfare_finite(s, options).prices.max());
    int i = 0;
    while (i < n && index[i] == mode.points) index[i++] = 1;
    if (i == n) break;
    ++index[i];
  }
  return worst;
}

ShapingResult bisection_shape(const PriceMap& price_map, double threshold, double d_rho, int max_iters,
                              std::optional<double> price_tol) {
  if (!(threshold > 0.0)) throw InvalidInput("threshold must be positive");
  if (!(d_rho > 0.0)) throw InvalidInput("initial upper end must be positive");
  if (max_iters < 1) throw InvalidInput("bisection needs at least one iteration");
  const double tol = price_tol.value_or(1e-6 * threshold);

  const double top = price_map(d_rho);
  if (!(top > threshold)) {
    throw InvalidInput("price at the initial upper end (" + std::to_string(top) + ") does not exceed the threshold");
  }

  ShapingResult result;
  double lower = 0.0;
  double upper = d_rho;
  for (int k = 0; k < max_iters; ++k) {
    const double mid = 0.5 * (lower + upper);
    const double price = price_map(mid);
    result.trace.push_back({lower, upper, mid, price});
    result.iterations = k + 1;
    if (std::abs(price - threshold) <= tol) {
      result.delta_max = mid;
      result.converged = true;
      return result;
    }
    if (price > threshold) {
      upper = mid;
    } else {
      lower = mid;
    }
  }
  result.delta_max = lower;
  // Only report convergence when the bracket cannot shrink any further.
  result.converged = upper - lower <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, upper);
  return result;
}

ShapingResult bisection_shape(const Scenario& scenario, double threshold, double d_rho, int max_iters,
                              std::optional<double> price_tol, const SearchMode& mode,
                              const SolverOptions& options) {
  validate(scenario);
  return bisection_shape([&](double delta) { return max_price_over_box(scenario, delta, mode, options); }, threshold,
                         d_rho, max_iters, price_tol);
}

}  // namespace cemas
