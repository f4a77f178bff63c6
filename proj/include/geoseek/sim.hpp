#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "geoseek/controller.hpp"

namespace geoseek {

/// Recorded run of the closed-loop, averaged, or open-loop system.  energy
/// is filled by the analysis/scenario layer when requested; it stays empty
/// otherwise.
struct Trajectory {
  std::vector<double> times;
  std::vector<ClosedLoopState> states;
  std::vector<double> outputs;  // y = psi(g)
  std::vector<double> defects;
  std::vector<double> energy;

  bool faulted = false;
  double fault_time = std::numeric_limits<double>::quiet_NaN();
  std::string fault_reason;

  std::size_t size() const { return times.size(); }
};

using RhsFn = std::function<StateDeriv(double, const ClosedLoopState&)>;

struct IntegrateOptions {
  int thin = 1;                // record every thin-th step (first/last always)
  double defect_limit = 1e-6;  // exceeding this faults the run
};

/// Fixed-step classical RK4 on the (v, w, eta) components with the group
/// component advanced per stage via retract along the stage body velocity
/// (Munthe-Kaas-style update specialized to left-invariant flows).  The
/// group element therefore never leaves the manifold beyond roundoff.
/// Non-finite states or defect above the limit fault the trajectory with
/// the fault time recorded; integration stops there.
Trajectory integrate(const PlantModel& plant, const RhsFn& rhs, ClosedLoopState x0,
                     double t0, double t_end, double step, IntegrateOptions opts = {});

/// (2*pi/omega) / steps_per_period; steps_per_period must be >= 50 so the
/// dither is resolved.
double step_size_for(const ControllerGains& gains, int steps_per_period);

}  // namespace geoseek
