#include "geoseek/controller.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace geoseek {

ControllerGains::ControllerGains(double a_, double lambda_, double b_, double kappa_,
                                 double h_, double omega_)
    : a(a_), lambda(lambda_), b(b_), kappa(kappa_), h(h_), omega(omega_) {
  if (!(a > 0.0 && lambda > 0.0 && b > 0.0 && kappa > 0.0 && h > 0.0 && omega > 0.0))
    throw std::invalid_argument("controller gains must all be strictly positive");
  if (!(a * lambda - b * kappa > 0.0))
    throw std::invalid_argument("controller gains must satisfy a*lambda - b*kappa > 0");
}

double ControllerGains::dither_period() const { return 2.0 * std::numbers::pi / omega; }

Eigen::VectorXd control_input(const ControllerGains& gains, const ShapingFunction& shaping,
                              const DitherBank& bank, const Eigen::VectorXd& mu_frame,
                              double t, double y, const ControllerState& state) {
  const double tau = gains.omega * t;
  const double av = shaping.alpha(y - state.eta);
  return -gains.b * (state.w - gains.kappa * av * bank.U_at(tau)) +
         gains.lambda * av * gains.omega * bank.u_at(tau) +
         gains.lambda * gains.lambda * av * av * mu_frame;
}

CompensatorDeriv controller_rhs(const ControllerGains& gains, const ShapingFunction& shaping,
                                const DitherBank& bank, double t, double y,
                                const ControllerState& state) {
  const double tau = gains.omega * t;
  const double av = shaping.alpha(y - state.eta);
  CompensatorDeriv d;
  d.w_dot = -gains.a * (state.w - gains.kappa * av * bank.U_at(tau)) +
            gains.kappa * av * gains.omega * bank.u_at(tau);
  d.eta_dot = -gains.h * state.eta + gains.h * y;
  return d;
}

StateDeriv closed_loop_rhs(const PlantModel& plant, const ControllerGains& gains,
                           const ShapingFunction& shaping, const DitherBank& bank, double t,
                           const ClosedLoopState& state) {
  if (bank.channels != plant.dim())
    throw std::invalid_argument("closed_loop_rhs: bank channel count must equal plant dim");
  const double y = measure_output(plant, state.g);
  const ControllerState cs{state.w, state.eta};
  const Eigen::VectorXd u =
      control_input(gains, shaping, bank, plant.mu_frame, t, y, cs);
  const BodyDeriv body = euler_poincare_rhs(plant, state.g, state.v, u);
  const CompensatorDeriv comp = controller_rhs(gains, shaping, bank, t, y, cs);

  StateDeriv d;
  d.g_velocity = body.velocity;
  d.v_dot = body.accel;
  d.w_dot = comp.w_dot;
  d.eta_dot = comp.eta_dot;
  return d;
}

namespace {

ClosedLoopState shift_by_dither(const PlantModel& plant, const ControllerGains& gains,
                                const ShapingFunction& shaping, const DitherBank& bank,
                                double t, const ClosedLoopState& state, double sign) {
  const double av = shaping.alpha(measure_output(plant, state.g) - state.eta);
  const Eigen::VectorXd Uv = bank.U_at(gains.omega * t);
  ClosedLoopState out = state;
  out.v += sign * gains.lambda * av * Uv;
  out.w += sign * gains.kappa * av * Uv;
  return out;
}

}  // namespace

ClosedLoopState to_tilde(const PlantModel& plant, const ControllerGains& gains,
                         const ShapingFunction& shaping, const DitherBank& bank, double t,
                         const ClosedLoopState& state) {
  return shift_by_dither(plant, gains, shaping, bank, t, state, -1.0);
}

ClosedLoopState from_tilde(const PlantModel& plant, const ControllerGains& gains,
                           const ShapingFunction& shaping, const DitherBank& bank, double t,
                           const ClosedLoopState& state) {
  return shift_by_dither(plant, gains, shaping, bank, t, state, +1.0);
}

}  // namespace geoseek
