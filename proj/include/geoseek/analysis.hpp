#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "geoseek/averaging.hpp"

namespace geoseek {

/// Data needed to evaluate the energy function: the damping-modified metric
///   Xi = b kappa ((a lambda - b kappa) I + lambda R)^{-1}
/// (symmetric positive-definite whenever the gains are admissible and R is
/// PSD), the shaping, the gains, and the minimizer.
struct EnergyParams {
  Eigen::MatrixXd xi;
  ShapingFunction shaping;
  ControllerGains gains;
  Eigen::VectorXd g_star;
  double psi_star = 0.0;

  static EnergyParams make(const PlantModel& plant, const ControllerGains& gains,
                           const ShapingFunction& shaping, const Eigen::VectorXd& g_star);
};

/// V = 1/2 |v|^2 + 1/2 |v - (lambda/kappa) w|_Xi^2
///     + lambda^2 (aa')(0) (psi(g) - psi(g*)) + lambda^2 beta(psi(g) - eta)
double lyapunov_V(const EnergyParams& params, const PlantModel& plant,
                  const ClosedLoopState& x);

/// Derivative of V along the averaged flow:
///   Vdot = -h lambda^2 beta'(psi - eta)(psi - eta)
///          - |v|_R^2 - |v|_{R Xi}^2
///          - (lambda/kappa^2)(a lambda - b kappa) |w|_Xi^2
///          - <Xi nabla_v v, v - (lambda/kappa) w>
double lyapunov_Vdot(const EnergyParams& params, const PlantModel& plant,
                     const ClosedLoopState& x);

/// Chetaev-modified energy
///   V_eps = V - eps (b kappa / lambda) <grad, v> + eps (a lambda / kappa) <grad, w>.
/// Equals V at eps = 0.
double chetaev_V_eps(const EnergyParams& params, const PlantModel& plant,
                     const ClosedLoopState& x, double eps);

struct Linearization {
  Eigen::MatrixXd jacobian;                       // (3n+1) x (3n+1) chart Jacobian
  std::vector<std::complex<double>> eigenvalues;
};

/// Jacobian of the averaged vector field at an equilibrium x*, in the chart
/// (exponential coordinates at the group component, linear in v, w, eta).
/// Central finite differences with the given step; rejects x* when
/// |averaged_rhs(x*)| > 1e-8.
Linearization linearize_averaged(const PlantModel& plant, const ControllerGains& gains,
                                 const ShapingFunction& shaping, const AveragedState& x_star,
                                 double fd_step = 1e-5);

/// Pre-flight for the local-minimum assumption: finite-difference Hessian of
/// the objective at g_star in exponential chart coordinates; returns its
/// eigenvalues (all positive <=> positive-definite Hessian).
Eigen::VectorXd objective_hessian_eigenvalues(const PlantModel& plant,
                                              const Eigen::VectorXd& g_star,
                                              double fd_step = 1e-4);

/// Pre-flight for the nonvanishing-gradient assumption: minimum body-gradient
/// norm over seeded chart samples within the y0-sublevel set around g_star,
/// excluding a ball of radius exclusion around g_star itself.
double min_gradient_norm_on_sublevel(const PlantModel& plant, const Eigen::VectorXd& g_star,
                                     double y0, double chart_radius, int samples,
                                     double exclusion, std::uint64_t seed);

/// One harness run: a (omega, dither phase, initial sample) cell.
struct ScanCell {
  double omega = 0.0;
  double t0 = 0.0;
  int sample = 0;
  double sup_deviation = 0.0;        // sup_t |xtilde(t) - x*|
  std::vector<double> settle_times;  // per epsilon; NaN when never settled
  bool faulted = false;
};

struct StabilityReport {
  std::vector<double> eps_grid;
  std::vector<double> omega_ladder;
  std::vector<ScanCell> cells;
  // stay[i][j]: every cell at omega_ladder[i] keeps sup deviation <= eps_grid[j]
  std::vector<std::vector<bool>> stay;
  // settle[i][j]: every cell at omega_ladder[i] settles into the eps ball
  std::vector<std::vector<bool>> settle;
  // smallest eps passing both templates, per omega; NaN when none does
  std::vector<double> smallest_passing_eps;
};

/// Everything the harness needs; the scenario layer assembles this from a
/// config.  When use_averaged_flow is set the closed loop is replaced by the
/// averaged system (identity transform) -- the degenerate self-test.
struct ScanSetup {
  PlantModel plant;
  ControllerGains gains;
  ShapingFunction shaping;
  DitherBank bank;
  AveragedState x_star;
  std::vector<double> eps_grid;
  std::vector<double> omega_ladder;
  int init_samples = 8;
  int dither_phases = 4;
  double delta = 0.03;  // radius of the sampled chart ball around x*
  double horizon = 40.0;
  int steps_per_period = 200;
  std::uint64_t seed = 1234;
  bool use_averaged_flow = false;
};

/// Integrates every (omega, phase, sample) cell from a seeded initial point
/// on the delta-sphere in the transformed chart, maps through the change of
/// variables, and aggregates the Definition-style pass matrices.  Faulted
/// cells are recorded, not thrown.  Cells are deterministic given the seed.
StabilityReport practical_stability_scan(const ScanSetup& setup);

}  // namespace geoseek
