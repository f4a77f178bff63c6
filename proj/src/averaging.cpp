#include "geoseek/averaging.hpp"

#include <cmath>
#include <stdexcept>

namespace geoseek {

StateDeriv averaged_rhs(const PlantModel& plant, const ControllerGains& gains,
                        const ShapingFunction& shaping, const AveragedState& state) {
  const double y = measure_output(plant, state.g);
  const double aa = shaping.alpha_alpha_prime(y - state.eta);
  const Eigen::VectorXd grad = body_gradient(plant.model, plant.frame, plant.objective, state.g);

  StateDeriv d;
  d.g_velocity = state.v;
  d.v_dot = -plant.conn.nabla(state.v, state.v) - plant.damping * state.v -
            gains.b * state.w - gains.lambda * gains.lambda * aa * grad;
  d.w_dot = -gains.a * state.w - gains.kappa * gains.lambda * aa * grad;
  d.eta_dot = -gains.h * state.eta + gains.h * y;
  return d;
}

double symmetric_product_residual(const PlantModel& plant, const ShapingFunction& shaping,
                                  double lambda, const Eigen::VectorXd& g, double eta,
                                  double fd_rel_step) {
  const int n = plant.dim();
  const auto& model = plant.model;
  const auto& frame = plant.frame;

  auto coeff = [&](const Eigen::VectorXd& gg) {
    return lambda * shaping.alpha(measure_output(plant, gg) - eta);
  };

  const double f = coeff(g);
  const double h = fd_rel_step * std::max(1.0, g.lpNorm<Eigen::Infinity>());

  // -1/2 sum_i <Y_i : Y_i> = -sum_i (f D_i f) e_i - f^2 mu, assembled from
  // finite-difference directional derivatives and the connection table.
  Eigen::VectorXd lhs = -f * f * plant.mu_frame;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd e = frame.basis.col(i);
    const double df =
        (coeff(model.retract(g, e, h)) - coeff(model.retract(g, e, -h))) / (2.0 * h);
    lhs[i] -= f * df;
  }

  const double y = measure_output(plant, g);
  const double lam2 = lambda * lambda;
  const double av = shaping.alpha(y - eta);
  const Eigen::VectorXd rhs =
      -lam2 * shaping.alpha_alpha_prime(y - eta) *
          body_gradient(model, frame, plant.objective, g) -
      lam2 * av * av * plant.mu_frame;

  return (lhs - rhs).norm();
}

double state_distance(const ClosedLoopState& a, const ClosedLoopState& b) {
  const double de = a.eta - b.eta;
  return std::sqrt((a.g - b.g).squaredNorm() + (a.v - b.v).squaredNorm() +
                   (a.w - b.w).squaredNorm() + de * de);
}

double approximation_error(const Trajectory& closed, const Trajectory& averaged,
                           const PlantModel& plant, const ControllerGains& gains,
                           const ShapingFunction& shaping, const DitherBank& bank) {
  if (closed.size() != averaged.size() || closed.size() == 0)
    throw std::invalid_argument("approximation_error: trajectories must share the time grid");
  for (std::size_t k = 0; k < closed.size(); ++k) {
    if (std::abs(closed.times[k] - averaged.times[k]) >
        1e-9 * std::max(1.0, std::abs(closed.times[k])))
      throw std::invalid_argument("approximation_error: time grids differ");
  }
  const ClosedLoopState x0 =
      to_tilde(plant, gains, shaping, bank, closed.times.front(), closed.states.front());
  if (state_distance(x0, averaged.states.front()) > 1e-9)
    throw std::invalid_argument(
        "approximation_error: initial transformed states differ");

  double sup = 0.0;
  for (std::size_t k = 0; k < closed.size(); ++k) {
    const ClosedLoopState xt =
        to_tilde(plant, gains, shaping, bank, closed.times[k], closed.states[k]);
    sup = std::max(sup, state_distance(xt, averaged.states[k]));
  }
  return sup;
}

}  // namespace geoseek
