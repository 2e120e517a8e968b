#pragma once

#include "cemas/equilibrium.hpp"
#include "cemas/types.hpp"

#include <optional>

namespace cemas {

/// Block-diagonal stacking of every agent together with the stabilizing
/// DARE solution of the stacked problem.
struct StackedSystem {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
  Matrix H;
  Matrix P;
  Matrix K;
};

/// Throws NonStabilizableError when the stacked pair cannot be stabilized.
StackedSystem stack_agents(const Scenario& scenario);

/// [x_1(0); ...; x_n(0)].
Vector stacked_initial_state(const Scenario& scenario);

/// min_t C(t): the supply level guaranteed at every step.
double supply_lower_bound(const Scenario& scenario);

/// Radius of the ball of initial states from which u = Kx never exceeds the
/// supply bound C. Infinite when K = 0.
double invariant_radius(const StackedSystem& system, double supply_bound);
double invariant_radius(const Scenario& scenario);

struct ZeroPriceCertificate {
  bool inside = false;
  double radius = 0.0;
  std::optional<int> n_bar;
  PriceTrajectory price_tail;
  /// Closed-loop check over the window: x'Px non-increasing and
  /// u'Hu <= C + 1e-9 at every step. Only evaluated when inside.
  bool invariance_verified = false;
};

/// Ball test for the stacked initial state. Inside the ball the zero-price
/// equilibrium u = Kx is simulated over `window` steps.
ZeroPriceCertificate zero_price_certificate(const Scenario& scenario, const Vector& x0_stacked, int window = 200);

struct PriceDecay {
  int n_bar = 0;
  int horizon = 0;            // truncation length that produced a quiet tail
  Scenario truncated;         // the scenario actually solved
  EquilibriumSolution solution;
};

/// Scenario with the given stacked initial state and supply resized to
/// `horizon` steps; missing columns repeat the last one.
Scenario truncate(const Scenario& scenario, const Vector& x0_stacked, int horizon);

/// First step after which every price stays below price_tol, from a
/// truncated finite-horizon solve. The truncation is doubled up to four
/// times until the last quarter of prices is quiet and the terminal state
/// has contracted below 1e-3 |x0|; throws TruncationError otherwise.
PriceDecay zero_price_time(const Scenario& scenario, const Vector& x0_stacked, int horizon_cap = 60,
                           double price_tol = 1e-6, const SolverOptions& options = {});

}  // namespace cemas
