#pragma once

#include "geoseek/sim.hpp"

namespace geoseek {

/// Same layout as ClosedLoopState; the averaged system lives on the same
/// manifold G x g x R^n x R.
using AveragedState = ClosedLoopState;

/// The autonomous averaged vector field:
///   gbar-dot = T_e L_gbar(vbar)
///   vbar-dot + nabla_vbar vbar = -R vbar - b wbar
///                                - lambda^2 (aa')(psi - eta) grad
///   wbar-dot = -a wbar - kappa lambda (aa')(psi - eta) grad
///   etabar-dot = -h etabar + h psi(gbar)
/// with grad the body gradient of the objective in frame coordinates.
StateDeriv averaged_rhs(const PlantModel& plant, const ControllerGains& gains,
                        const ShapingFunction& shaping, const AveragedState& state);

/// Residual of the symmetric-product identity at (g, eta): the left side
/// -1/2 sum_i < Y_i : Y_i > with Y_i = lambda alpha(psi - eta) e_i^L is
/// evaluated numerically (finite-difference directional derivatives of the
/// coefficient function plus connection-table terms) and compared with the
/// analytic right side
///   -lambda^2 (aa')(psi - eta) grad - lambda^2 alpha^2(psi - eta) mu.
/// Returns the frame-coordinate norm of the difference.
double symmetric_product_residual(const PlantModel& plant, const ShapingFunction& shaping,
                                  double lambda, const Eigen::VectorXd& g, double eta,
                                  double fd_rel_step = 1e-5);

/// Sup over the shared grid of the distance between the transformed
/// closed-loop state and the averaged state (group part in ambient
/// coordinates, velocity parts in frame coordinates).  Both trajectories
/// must share the time grid and the initial transformed state.
double approximation_error(const Trajectory& closed, const Trajectory& averaged,
                           const PlantModel& plant, const ControllerGains& gains,
                           const ShapingFunction& shaping, const DitherBank& bank);

/// Distance used by approximation_error and the stability harness.
double state_distance(const ClosedLoopState& a, const ClosedLoopState& b);

}  // namespace geoseek
