#pragma once

#include <Eigen/Dense>

#include "geoseek/geometry.hpp"

namespace geoseek {

/// Mechanical plant in Euler-Poincare form:
///   gdot = T_e L_g(v),   vdot + nabla_v v = -R v + u
/// with v and u in frame coordinates.
struct PlantModel {
  LieGroupModel model;
  AlgebraFrame frame;
  ConnectionTable conn;
  Eigen::MatrixXd damping;   // R, symmetric PSD, frame coordinates
  Objective objective;
  Eigen::VectorXd mu_frame;  // cached sum_i nabla_{e_i} e_i

  int dim() const { return model.dim; }
};

/// Validates invariants (frame orthonormality, damping symmetric PSD,
/// consistent sizes) and caches mu.  All plant factories go through here.
PlantModel make_plant(LieGroupModel model, AlgebraFrame frame, ConnectionTable conn,
                      Eigen::MatrixXd damping, Objective objective);

struct BodyDeriv {
  Eigen::VectorXd velocity;  // body velocity driving the g-update
  Eigen::VectorXd accel;     // vdot
};

/// (v, -nabla_v v - R v + u) in frame coordinates.  The configuration update
/// itself is performed by the integrator via retract(g, E(v), dt).
BodyDeriv euler_poincare_rhs(const PlantModel& plant, const Eigen::VectorXd& g,
                             const Eigen::VectorXd& v, const Eigen::VectorXd& u);

double measure_output(const PlantModel& plant, const Eigen::VectorXd& g);

/// Double integrator on R^n with scalar damping r >= 0: vdot = -r v + u.
PlantModel double_integrator_plant(int n, double damping_r, Objective objective);

/// Rigid body in an ideal fluid on SE(3).  J and M must be symmetric
/// positive-definite.  The frame is the kinetic-energy-orthonormal basis
/// e_i = (hat(J^{-1/2} E_i), 0), e_{i+3} = (0, M^{-1/2} E_i); the connection
/// is the polarization of the Kirchhoff drift
///   Q(Omega, V) = (J^{-1}(Omega x J Omega + V x M V), M^{-1}(Omega x M V))
/// and the damping is zero (no dissipative forces).
PlantModel kirchhoff_plant(const Eigen::Matrix3d& J, const Eigen::Matrix3d& M,
                           Objective objective);

}  // namespace geoseek
