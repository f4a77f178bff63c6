#include "geoseek/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <stdexcept>

namespace geoseek {

EnergyParams EnergyParams::make(const PlantModel& plant, const ControllerGains& gains,
                                const ShapingFunction& shaping,
                                const Eigen::VectorXd& g_star) {
  const int n = plant.dim();
  const Eigen::MatrixXd lhs =
      gains.lead_margin() * Eigen::MatrixXd::Identity(n, n) + gains.lambda * plant.damping;
  Eigen::MatrixXd xi = gains.b * gains.kappa * lhs.partialPivLu().inverse();
  xi = 0.5 * (xi + xi.transpose());  // symmetrize roundoff

  EnergyParams p{std::move(xi), shaping, gains, g_star, measure_output(plant, g_star)};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.xi);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("EnergyParams: Xi is not positive-definite");
  return p;
}

double lyapunov_V(const EnergyParams& params, const PlantModel& plant,
                  const ClosedLoopState& x) {
  const auto& g = params.gains;
  const double lam2 = g.lambda * g.lambda;
  const double y = measure_output(plant, x.g);
  const Eigen::VectorXd d = x.v - (g.lambda / g.kappa) * x.w;
  return 0.5 * x.v.squaredNorm() + 0.5 * d.dot(params.xi * d) +
         lam2 * params.shaping.alpha_alpha_prime(0.0) * (y - params.psi_star) +
         lam2 * params.shaping.beta(y - x.eta);
}

double lyapunov_Vdot(const EnergyParams& params, const PlantModel& plant,
                     const ClosedLoopState& x) {
  const auto& g = params.gains;
  const double lam2 = g.lambda * g.lambda;
  const double y = measure_output(plant, x.g);
  const double delta = y - x.eta;
  const Eigen::VectorXd nvv = plant.conn.nabla(x.v, x.v);
  return -g.h * lam2 * params.shaping.beta_prime(delta) * delta -
         x.v.dot(plant.damping * x.v) - x.v.dot(plant.damping * params.xi * x.v) -
         (g.lambda / (g.kappa * g.kappa)) * g.lead_margin() * x.w.dot(params.xi * x.w) -
         (params.xi * nvv).dot(x.v - (g.lambda / g.kappa) * x.w);
}

double chetaev_V_eps(const EnergyParams& params, const PlantModel& plant,
                     const ClosedLoopState& x, double eps) {
  if (eps < 0.0) throw std::invalid_argument("chetaev_V_eps: eps must be >= 0");
  const auto& g = params.gains;
  const Eigen::VectorXd grad =
      body_gradient(plant.model, plant.frame, plant.objective, x.g);
  return lyapunov_V(params, plant, x) -
         eps * (g.b * g.kappa / g.lambda) * grad.dot(x.v) +
         eps * (g.a * g.lambda / g.kappa) * grad.dot(x.w);
}

namespace {

// Chart around x*: exponential coordinates for the group factor, linear for
// v, w, eta.  Valid as a first-order chart at any equilibrium with v* = 0,
// where the dexp correction is quadratic and drops out of the Jacobian.
AveragedState chart_to_state(const PlantModel& plant, const AveragedState& x_star,
                             const Eigen::VectorXd& z) {
  const int n = plant.dim();
  AveragedState x;
  x.g = plant.model.retract(x_star.g, plant.frame.from_frame(z.head(n)), 1.0);
  x.v = x_star.v + z.segment(n, n);
  x.w = x_star.w + z.segment(2 * n, n);
  x.eta = x_star.eta + z[3 * n];
  return x;
}

Eigen::VectorXd chart_rhs(const PlantModel& plant, const ControllerGains& gains,
                          const ShapingFunction& shaping, const AveragedState& x_star,
                          const Eigen::VectorXd& z) {
  const int n = plant.dim();
  const StateDeriv d = averaged_rhs(plant, gains, shaping, chart_to_state(plant, x_star, z));
  Eigen::VectorXd out(3 * n + 1);
  out.head(n) = d.g_velocity;
  out.segment(n, n) = d.v_dot;
  out.segment(2 * n, n) = d.w_dot;
  out[3 * n] = d.eta_dot;
  return out;
}

}  // namespace

Linearization linearize_averaged(const PlantModel& plant, const ControllerGains& gains,
                                 const ShapingFunction& shaping, const AveragedState& x_star,
                                 double fd_step) {
  const int n = plant.dim();
  const int dim = 3 * n + 1;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim);
  if (chart_rhs(plant, gains, shaping, x_star, zero).norm() > 1e-8)
    throw std::invalid_argument("linearize_averaged: x_star is not an equilibrium");

  Linearization lin;
  lin.jacobian.resize(dim, dim);
  for (int j = 0; j < dim; ++j) {
    Eigen::VectorXd zp = zero, zm = zero;
    zp[j] += fd_step;
    zm[j] -= fd_step;
    lin.jacobian.col(j) = (chart_rhs(plant, gains, shaping, x_star, zp) -
                           chart_rhs(plant, gains, shaping, x_star, zm)) /
                          (2.0 * fd_step);
  }

  const Eigen::EigenSolver<Eigen::MatrixXd> es(lin.jacobian);
  lin.eigenvalues.reserve(dim);
  for (int i = 0; i < dim; ++i) lin.eigenvalues.push_back(es.eigenvalues()[i]);
  return lin;
}

Eigen::VectorXd objective_hessian_eigenvalues(const PlantModel& plant,
                                              const Eigen::VectorXd& g_star, double fd_step) {
  const int n = plant.dim();
  auto phi = [&](const Eigen::VectorXd& xi) {
    return measure_output(plant, plant.model.retract(g_star, plant.frame.from_frame(xi), 1.0));
  };
  const double h = fd_step;
  const double phi0 = phi(Eigen::VectorXd::Zero(n));
  Eigen::MatrixXd H(n, n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd ei = Eigen::VectorXd::Zero(n);
    ei[i] = h;
    H(i, i) = (phi(ei) - 2.0 * phi0 + phi(-ei)) / (h * h);
    for (int j = i + 1; j < n; ++j) {
      Eigen::VectorXd ej = Eigen::VectorXd::Zero(n);
      ej[j] = h;
      const double v = (phi(ei + ej) - phi(ei - ej) - phi(ej - ei) + phi(-ei - ej)) /
                       (4.0 * h * h);
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues();
}

double min_gradient_norm_on_sublevel(const PlantModel& plant, const Eigen::VectorXd& g_star,
                                     double y0, double chart_radius, int samples,
                                     double exclusion, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = plant.dim();

  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd dir(n);
    for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
    dir.normalize();
    const double radius = chart_radius * std::pow(unif(rng), 1.0 / n);
    const Eigen::VectorXd xi = radius * dir;
    if (xi.norm() < exclusion) continue;
    const Eigen::VectorXd g =
        plant.model.retract(g_star, plant.frame.from_frame(xi), 1.0);
    if (measure_output(plant, g) > y0) continue;
    best = std::min(best, body_gradient(plant.model, plant.frame, plant.objective, g).norm());
  }
  return best;
}

StabilityReport practical_stability_scan(const ScanSetup& setup) {
  const int n = setup.plant.dim();
  const int chart_dim = 3 * n + 1;

  StabilityReport report;
  report.eps_grid = setup.eps_grid;
  report.omega_ladder = setup.omega_ladder;
  std::sort(report.eps_grid.begin(), report.eps_grid.end());

  // Shared chart offsets on the delta-sphere so every omega sees the same
  // transformed initial conditions.
  std::mt19937_64 rng(setup.seed);
  std::normal_distribution<double> gauss;
  std::vector<Eigen::VectorXd> offsets;
  offsets.reserve(setup.init_samples);
  for (int s = 0; s < setup.init_samples; ++s) {
    Eigen::VectorXd c(chart_dim);
    for (int i = 0; i < chart_dim; ++i) c[i] = gauss(rng);
    c *= setup.delta / c.norm();
    offsets.push_back(std::move(c));
  }

  auto transformed_initial = [&](const Eigen::VectorXd& c) {
    AveragedState x;
    x.g = setup.plant.model.retract(setup.x_star.g, setup.plant.frame.from_frame(c.head(n)),
                                    1.0);
    x.v = setup.x_star.v + c.segment(n, n);
    x.w = setup.x_star.w + c.segment(2 * n, n);
    x.eta = setup.x_star.eta + c[3 * n];
    return x;
  };

  for (double omega : report.omega_ladder) {
    const ControllerGains gains(setup.gains.a, setup.gains.lambda, setup.gains.b,
                                setup.gains.kappa, setup.gains.h, omega);
    const double period = gains.dither_period();
    const double step = period / setup.steps_per_period;

    for (int ph = 0; ph < setup.dither_phases; ++ph) {
      const double t0 = period * ph / setup.dither_phases;
      for (int s = 0; s < setup.init_samples; ++s) {
        const AveragedState xt0 = transformed_initial(offsets[s]);

        Trajectory traj;
        if (setup.use_averaged_flow) {
          traj = integrate(
              setup.plant,
              [&](double, const ClosedLoopState& x) {
                return averaged_rhs(setup.plant, gains, setup.shaping, x);
              },
              xt0, t0, t0 + setup.horizon, step);
        } else {
          const ClosedLoopState x0 =
              from_tilde(setup.plant, gains, setup.shaping, setup.bank, t0, xt0);
          traj = integrate(
              setup.plant,
              [&](double t, const ClosedLoopState& x) {
                return closed_loop_rhs(setup.plant, gains, setup.shaping, setup.bank, t, x);
              },
              x0, t0, t0 + setup.horizon, step);
        }

        ScanCell cell;
        cell.omega = omega;
        cell.t0 = t0;
        cell.sample = s;
        cell.faulted = traj.faulted;
        cell.settle_times.assign(report.eps_grid.size(),
                                 std::numeric_limits<double>::quiet_NaN());
        if (traj.faulted) {
          cell.sup_deviation = std::numeric_limits<double>::infinity();
          report.cells.push_back(std::move(cell));
          continue;
        }

        std::vector<double> dev(traj.size());
        for (std::size_t k = 0; k < traj.size(); ++k) {
          const ClosedLoopState xt =
              setup.use_averaged_flow
                  ? traj.states[k]
                  : to_tilde(setup.plant, gains, setup.shaping, setup.bank, traj.times[k],
                             traj.states[k]);
          dev[k] = state_distance(xt, setup.x_star);
        }
        cell.sup_deviation = *std::max_element(dev.begin(), dev.end());

        // Settle time per epsilon: the first grid time after which the
        // deviation never exceeds epsilon again.
        for (std::size_t e = 0; e < report.eps_grid.size(); ++e) {
          const double eps = report.eps_grid[e];
          std::ptrdiff_t last_above = -1;
          for (std::ptrdiff_t k = static_cast<std::ptrdiff_t>(dev.size()) - 1; k >= 0; --k) {
            if (dev[k] > eps) {
              last_above = k;
              break;
            }
          }
          if (last_above + 1 < static_cast<std::ptrdiff_t>(dev.size()))
            cell.settle_times[e] = traj.times[last_above + 1];
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }

  // Definition-style aggregates.
  const std::size_t ne = report.eps_grid.size();
  const std::size_t no = report.omega_ladder.size();
  report.stay.assign(no, std::vector<bool>(ne, true));
  report.settle.assign(no, std::vector<bool>(ne, true));
  for (const ScanCell& cell : report.cells) {
    std::size_t oi = 0;
    while (oi < no && report.omega_ladder[oi] != cell.omega) ++oi;
    for (std::size_t e = 0; e < ne; ++e) {
      if (!(cell.sup_deviation <= report.eps_grid[e])) report.stay[oi][e] = false;
      if (!std::isfinite(cell.settle_times[e])) report.settle[oi][e] = false;
    }
  }
  report.smallest_passing_eps.assign(no, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t oi = 0; oi < no; ++oi) {
    for (std::size_t e = 0; e < ne; ++e) {
      if (report.stay[oi][e] && report.settle[oi][e]) {
        report.smallest_passing_eps[oi] = report.eps_grid[e];
        break;
      }
    }
  }
  return report;
}

}  // namespace geoseek
