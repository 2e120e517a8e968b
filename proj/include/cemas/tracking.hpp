#pragma once

#include "cemas/types.hpp"

#include <vector>

namespace cemas {

/// Tracking problem: drive every agent to the shared reference state x_ref,
/// held there by the steady-state input u_ref[i].
struct TrackingSpec {
  Scenario base;
  Vector x_ref;
  std::vector<Vector> u_ref;
};

/// Throws InvalidInput when A_i x_ref + B_i u_ref_i != x_ref (to 1e-9) or the
/// supply left after the steady-state consumption is not positive.
void validate(const TrackingSpec& spec);

/// Regulation problem in error coordinates x - x_ref, u - u_ref. The
/// steady-state consumption moves into the supply, the cross term into
/// h_lin.
Scenario to_regulation(const TrackingSpec& spec);

/// Shifts controls and states of a solution of to_regulation(spec) back to
/// original coordinates. Prices and trades are unchanged.
EquilibriumSolution recover_tracking(const EquilibriumSolution& solution, const TrackingSpec& spec);

/// Least-squares u with B u = (I - A) x_ref. Throws InvalidInput if the
/// residual exceeds 1e-9, i.e. x_ref is not an equilibrium point.
Vector steady_state_input(const Matrix& A, const Matrix& B, const Vector& x_ref);

}  // namespace cemas
