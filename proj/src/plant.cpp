#include "geoseek/plant.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace geoseek {

PlantModel make_plant(LieGroupModel model, AlgebraFrame frame, ConnectionTable conn,
                      Eigen::MatrixXd damping, Objective objective) {
  const int n = model.dim;
  if (frame.dim() != n || conn.dim() != n)
    throw std::invalid_argument("make_plant: frame/connection dimension mismatch");
  if (damping.rows() != n || damping.cols() != n)
    throw std::invalid_argument("make_plant: damping must be n x n");
  if ((damping - damping.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("make_plant: damping must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(damping);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw std::invalid_argument("make_plant: damping must be positive-semidefinite");
  if (!objective.value) throw std::invalid_argument("make_plant: objective has no value map");

  PlantModel p;
  p.model = std::move(model);
  p.frame = std::move(frame);
  p.conn = std::move(conn);
  p.damping = std::move(damping);
  p.objective = std::move(objective);
  p.mu_frame = mu_vector(p.frame, p.conn);
  return p;
}

BodyDeriv euler_poincare_rhs(const PlantModel& plant, const Eigen::VectorXd& /*g*/,
                             const Eigen::VectorXd& v, const Eigen::VectorXd& u) {
  BodyDeriv d;
  d.velocity = v;
  d.accel = -plant.conn.nabla(v, v) - plant.damping * v + u;
  return d;
}

double measure_output(const PlantModel& plant, const Eigen::VectorXd& g) {
  return plant.objective.value(g);
}

PlantModel double_integrator_plant(int n, double damping_r, Objective objective) {
  if (damping_r < 0.0)
    throw std::invalid_argument("double_integrator_plant: damping must be >= 0");
  return make_plant(rn_group(n), AlgebraFrame::euclidean(n), ConnectionTable::zero(n),
                    damping_r * Eigen::MatrixXd::Identity(n, n), std::move(objective));
}

namespace {

Eigen::Matrix3d spd_inverse_sqrt(const Eigen::Matrix3d& A, const char* name) {
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument(std::string(name) + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument(std::string(name) + " must be positive-definite");
  return es.operatorInverseSqrt();
}

}  // namespace

PlantModel kirchhoff_plant(const Eigen::Matrix3d& J, const Eigen::Matrix3d& M,
                           Objective objective) {
  const Eigen::Matrix3d Jis = spd_inverse_sqrt(J, "kirchhoff J");
  const Eigen::Matrix3d Mis = spd_inverse_sqrt(M, "kirchhoff M");

  // Kinetic-energy inner product and its orthonormal basis in (Omega, V)
  // coordinates.
  Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(6, 6);
  inner.topLeftCorner<3, 3>() = J;
  inner.bottomRightCorner<3, 3>() = M;
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(6, 6);
  basis.topLeftCorner<3, 3>() = Jis;
  basis.bottomRightCorner<3, 3>() = Mis;
  AlgebraFrame frame = AlgebraFrame::make(basis, inner);

  auto drift = [J, M, Ji = Eigen::Matrix3d(J.inverse()),
                Mi = Eigen::Matrix3d(M.inverse())](const Eigen::VectorXd& xi) {
    const Eigen::Vector3d omega = xi.head<3>();
    const Eigen::Vector3d vel = xi.tail<3>();
    Eigen::VectorXd q(6);
    q.head<3>() = Ji * (omega.cross(J * omega) + vel.cross(M * vel));
    q.tail<3>() = Mi * (omega.cross(M * vel));
    return q;
  };
  ConnectionTable conn = ConnectionTable::from_quadratic_drift(frame, drift);

  return make_plant(se3_group(), std::move(frame), std::move(conn),
                    Eigen::MatrixXd::Zero(6, 6), std::move(objective));
}

}  // namespace geoseek
