#pragma once

#include "cemas/equilibrium.hpp"
#include "cemas/types.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace cemas {

/// Scalar summary of a scenario used by the analytic price bounds.
struct BoundParams {
  double alpha = 0.0;  // >= max_i ||A_i||
  double beta = 0.0;   // >= max_i ||B_i||
  double gamma = 0.0;  // >= max_i ||x_i(0)||
  double rho = 0.0;    // H_i >= rho I for every i
  int n = 0;
  int horizon = 0;
  Vector supply_totals;  // C(t)
  double threshold = 0.0;
};

/// Exact norms over the agents. Throws InvalidInput when the scenario has
/// no threshold.
BoundParams bound_params(const Scenario& scenario);

/// Throws InvalidInput if a field is out of range.
void validate(const BoundParams& params);

enum class BoundMethod { qp, dp };

/// Largest delta such that every Q_i with ||Q_i|| <= delta keeps the price
/// under the threshold, from the stacked quadratic-program argument (qp)
/// or the value-recursion argument (dp). Returns +infinity when no step
/// constrains delta.
double delta_max_qp(const BoundParams& params);
double delta_max_dp(const BoundParams& params);
double delta_max(const BoundParams& params, BoundMethod method);

/// Analytic upper bound on the price at step k when every ||Q_i|| <= delta.
double price_upper_bound(const BoundParams& params, double delta, BoundMethod method, int k);

/// How the worst case over q in (0, delta]^n is searched.
struct SearchMode {
  enum class Kind { corner, grid } kind = Kind::corner;
  int points = 1;

  static SearchMode corner() { return {}; }
  static SearchMode grid(int points) { return {Kind::grid, points}; }
};

/// Largest equilibrium price over Q_i = q_i I with q in (0, delta]^n. Corner
/// mode only evaluates q_i = delta.
double max_price_over_box(const Scenario& scenario, double delta, const SearchMode& mode = {},
                          const SolverOptions& options = {});

struct BisectionStep {
  double lower = 0.0;     // b_k
  double upper = 0.0;     // d_k
  double midpoint = 0.0;  // L_k
  double price = 0.0;     // worst-case price at L_k
};

struct ShapingResult {
  double delta_max = 0.0;
  std::vector<BisectionStep> trace;
  bool converged = false;
  int iterations = 0;
};

using PriceMap = std::function<double(double)>;

/// Bisection for the largest delta whose worst-case price stays at or under
/// the threshold. Requires price_map(d_rho) > threshold. An evaluation
/// within price_tol of the threshold ends the search; at the iteration cap
/// the certified lower end is returned.
ShapingResult bisection_shape(const PriceMap& price_map, double threshold, double d_rho, int max_iters,
                              std::optional<double> price_tol = std::nullopt);

/// Same search with the price map of max_price_over_box.
ShapingResult bisection_shape(const Scenario& scenario, double threshold, double d_rho, int max_iters,
                              std::optional<double> price_tol = std::nullopt, const SearchMode& mode = {},
                              const SolverOptions& options = {});

}  // namespace cemas
