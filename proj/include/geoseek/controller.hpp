#pragma once

#include <Eigen/Dense>

#include "geoseek/plant.hpp"
#include "geoseek/signals.hpp"

namespace geoseek {

/// Gains (a, lambda, b, kappa, h, omega).  Construction enforces that all
/// gains are strictly positive and that the phase-lead condition
/// a*lambda - b*kappa > 0 holds.
struct ControllerGains {
  double a;
  double lambda;
  double b;
  double kappa;
  double h;
  double omega;

  ControllerGains(double a_, double lambda_, double b_, double kappa_, double h_,
                  double omega_);

  double lead_margin() const { return a * lambda - b * kappa; }
  double dither_period() const;  // 2*pi / omega for the built-in banks
};

struct ControllerState {
  Eigen::VectorXd w;  // phase-lead compensator state
  double eta = 0.0;   // high-pass filter state
};

/// Full closed-loop state on G x g x R^n x R.  v and w are in frame
/// coordinates; g is an ambient group element.
struct ClosedLoopState {
  Eigen::VectorXd g;
  Eigen::VectorXd v;
  Eigen::VectorXd w;
  double eta = 0.0;
};

/// The output-feedback control law, in frame coordinates:
///   u = -b (w - kappa alpha(y - eta) U(omega t))
///       + lambda alpha(y - eta) omega u(omega t)
///       + lambda^2 alpha^2(y - eta) mu
Eigen::VectorXd control_input(const ControllerGains& gains, const ShapingFunction& shaping,
                              const DitherBank& bank, const Eigen::VectorXd& mu_frame,
                              double t, double y, const ControllerState& state);

struct CompensatorDeriv {
  Eigen::VectorXd w_dot;
  double eta_dot = 0.0;
};

/// Compensator and filter dynamics:
///   wdot   = -a (w - kappa alpha(y - eta) U(omega t))
///            + kappa alpha(y - eta) omega u(omega t)
///   etadot = -h eta + h y
CompensatorDeriv controller_rhs(const ControllerGains& gains, const ShapingFunction& shaping,
                                const DitherBank& bank, double t, double y,
                                const ControllerState& state);

/// Derivative of a closed-loop or averaged state.  g_velocity is the body
/// velocity (frame coordinates) that drives the configuration; the
/// integrator turns it into a retraction.
struct StateDeriv {
  Eigen::VectorXd g_velocity;
  Eigen::VectorXd v_dot;
  Eigen::VectorXd w_dot;
  double eta_dot = 0.0;
};

/// Composition of measure_output, control_input, euler_poincare_rhs and
/// controller_rhs: the full closed-loop vector field.
StateDeriv closed_loop_rhs(const PlantModel& plant, const ControllerGains& gains,
                           const ShapingFunction& shaping, const DitherBank& bank, double t,
                           const ClosedLoopState& state);

/// Change of variables removing the oscillatory velocity component:
///   vtilde = v - lambda alpha(psi(g) - eta) U(omega t)
///   wtilde = w - kappa  alpha(psi(g) - eta) U(omega t)
/// with g and eta unchanged.  from_tilde inverts it exactly.
ClosedLoopState to_tilde(const PlantModel& plant, const ControllerGains& gains,
                         const ShapingFunction& shaping, const DitherBank& bank, double t,
                         const ClosedLoopState& state);
ClosedLoopState from_tilde(const PlantModel& plant, const ControllerGains& gains,
                           const ShapingFunction& shaping, const DitherBank& bank, double t,
                           const ClosedLoopState& state);

}  // namespace geoseek
