#include "geoseek/sim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace geoseek {

namespace {

bool finite(const ClosedLoopState& x) {
  return x.g.allFinite() && x.v.allFinite() && x.w.allFinite() && std::isfinite(x.eta);
}

}  // namespace

Trajectory integrate(const PlantModel& plant, const RhsFn& rhs, ClosedLoopState x0,
                     double t0, double t_end, double step, IntegrateOptions opts) {
  if (step <= 0.0) throw std::invalid_argument("integrate: step must be positive");
  if (t_end < t0) throw std::invalid_argument("integrate: t_end must be >= t0");
  if (opts.thin < 1) throw std::invalid_argument("integrate: thin must be >= 1");

  const auto& model = plant.model;
  const auto& frame = plant.frame;
  const auto nsteps = static_cast<long>(std::ceil((t_end - t0) / step - 1e-12));

  Trajectory traj;
  traj.times.reserve(nsteps / opts.thin + 2);

  auto record = [&](double t, const ClosedLoopState& x) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.outputs.push_back(measure_output(plant, x.g));
    traj.defects.push_back(model.defect(x.g));
  };

  auto healthy = [&](const ClosedLoopState& x) {
    return finite(x) && model.defect(x.g) <= opts.defect_limit;
  };

  ClosedLoopState x = std::move(x0);
  double t = t0;
  if (!healthy(x)) {
    traj.faulted = true;
    traj.fault_time = t;
    traj.fault_reason = "initial state off-manifold or non-finite";
    record(t, x);
    return traj;
  }
  record(t, x);

  auto advance = [&](const ClosedLoopState& base, const StateDeriv& k, double dt) {
    ClosedLoopState out;
    out.g = model.retract(base.g, frame.from_frame(k.g_velocity), dt);
    out.v = base.v + dt * k.v_dot;
    out.w = base.w + dt * k.w_dot;
    out.eta = base.eta + dt * k.eta_dot;
    return out;
  };

  for (long i = 0; i < nsteps; ++i) {
    const double dt = std::min(step, t_end - t);
    const StateDeriv k1 = rhs(t, x);
    const StateDeriv k2 = rhs(t + 0.5 * dt, advance(x, k1, 0.5 * dt));
    const StateDeriv k3 = rhs(t + 0.5 * dt, advance(x, k2, 0.5 * dt));
    const StateDeriv k4 = rhs(t + dt, advance(x, k3, dt));

    StateDeriv k;
    k.g_velocity = (k1.g_velocity + 2.0 * k2.g_velocity + 2.0 * k3.g_velocity +
                    k4.g_velocity) /
                   6.0;
    k.v_dot = (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot) / 6.0;
    k.w_dot = (k1.w_dot + 2.0 * k2.w_dot + 2.0 * k3.w_dot + k4.w_dot) / 6.0;
    k.eta_dot = (k1.eta_dot + 2.0 * k2.eta_dot + 2.0 * k3.eta_dot + k4.eta_dot) / 6.0;

    x = advance(x, k, dt);
    t = (i + 1 == nsteps) ? t_end : t0 + (i + 1) * step;

    if (!healthy(x)) {
      traj.faulted = true;
      traj.fault_time = t;
      traj.fault_reason = finite(x) ? "manifold defect above limit" : "non-finite state";
      record(t, x);
      return traj;
    }
    if ((i + 1) % opts.thin == 0 || i + 1 == nsteps) record(t, x);
  }
  return traj;
}

double step_size_for(const ControllerGains& gains, int steps_per_period) {
  if (steps_per_period < 50)
    throw std::invalid_argument("step_size_for: need >= 50 steps per dither period");
  return (2.0 * std::numbers::pi / gains.omega) / steps_per_period;
}

}  // namespace geoseek
