#include "geoseek/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace geoseek {

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d W;
  W << 0.0, -w[2], w[1],  //
      w[2], 0.0, -w[0],   //
      -w[1], w[0], 0.0;
  return W;
}

Eigen::Vector3d unhat(const Eigen::Matrix3d& W, double asym_tol) {
  const double asym = (W + W.transpose()).cwiseAbs().maxCoeff();
  if (asym > asym_tol) throw std::invalid_argument("unhat: matrix is not skew-symmetric");
  return {W(2, 1), W(0, 2), W(1, 0)};
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d W = hat(w);
  double c1, c2;  // sin(t)/t, (1-cos(t))/t^2
  if (theta < 1e-4) {
    c1 = 1.0 - theta2 / 6.0;
    c2 = 0.5 - theta2 / 24.0;
  } else {
    c1 = std::sin(theta) / theta;
    c2 = (1.0 - std::cos(theta)) / theta2;
  }
  return Eigen::Matrix3d::Identity() + c1 * W + c2 * W * W;
}

namespace {

// Left Jacobian of SO(3); the translation block of the SE(3) exponential.
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& w) {
  const double theta2 = w.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Eigen::Matrix3d W = hat(w);
  double c2, c3;  // (1-cos t)/t^2, (t - sin t)/t^3
  if (theta < 1e-4) {
    c2 = 0.5 - theta2 / 24.0;
    c3 = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    c2 = (1.0 - std::cos(theta)) / theta2;
    c3 = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Eigen::Matrix3d::Identity() + c2 * W + c3 * W * W;
}

}  // namespace

Eigen::VectorXd se3_pack(const Eigen::Matrix3d& R, const Eigen::Vector3d& r) {
  Eigen::VectorXd g(12);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g[3 * i + j] = R(i, j);
  g.tail<3>() = r;
  return g;
}

void se3_unpack(const Eigen::VectorXd& g, Eigen::Matrix3d& R, Eigen::Vector3d& r) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) R(i, j) = g[3 * i + j];
  r = g.tail<3>();
}

LieGroupModel rn_group(int n) {
  if (n < 1) throw std::invalid_argument("rn_group: n must be >= 1");
  LieGroupModel m;
  m.dim = n;
  m.embed_dim = n;
  m.identity = Eigen::VectorXd::Zero(n);
  m.compose = [](const Eigen::VectorXd& g, const Eigen::VectorXd& h) -> Eigen::VectorXd {
    return g + h;
  };
  m.tangent_lift = [](const Eigen::VectorXd&, const Eigen::VectorXd& xi) { return xi; };
  m.retract = [](const Eigen::VectorXd& g, const Eigen::VectorXd& xi,
                 double dt) -> Eigen::VectorXd { return g + dt * xi; };
  m.defect = [](const Eigen::VectorXd&) { return 0.0; };
  for (int i = 1; i <= n; ++i) m.coord_names.push_back("g" + std::to_string(i));
  return m;
}

LieGroupModel se3_group() {
  LieGroupModel m;
  m.dim = 6;
  m.embed_dim = 12;
  m.identity = se3_pack(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  m.compose = [](const Eigen::VectorXd& ga, const Eigen::VectorXd& gb) {
    Eigen::Matrix3d Ra, Rb;
    Eigen::Vector3d ra, rb;
    se3_unpack(ga, Ra, ra);
    se3_unpack(gb, Rb, rb);
    return se3_pack(Ra * Rb, ra + Ra * rb);
  };
  m.tangent_lift = [](const Eigen::VectorXd& g, const Eigen::VectorXd& xi) {
    Eigen::Matrix3d R;
    Eigen::Vector3d r;
    se3_unpack(g, R, r);
    const Eigen::Vector3d omega = xi.head<3>();
    const Eigen::Vector3d vel = xi.tail<3>();
    return se3_pack(R * hat(omega), R * vel);  // (R Omega^, R V) as ambient vector
  };
  m.retract = [](const Eigen::VectorXd& g, const Eigen::VectorXd& xi, double dt) {
    Eigen::Matrix3d R;
    Eigen::Vector3d r;
    se3_unpack(g, R, r);
    const Eigen::Vector3d w = dt * xi.head<3>();
    const Eigen::Vector3d v = dt * xi.tail<3>();
    const Eigen::Matrix3d dR = rodrigues(w);
    const Eigen::Vector3d dr = so3_left_jacobian(w) * v;
    return se3_pack(R * dR, r + R * dr);
  };
  m.defect = [](const Eigen::VectorXd& g) {
    Eigen::Matrix3d R;
    Eigen::Vector3d r;
    se3_unpack(g, R, r);
    return (R.transpose() * R - Eigen::Matrix3d::Identity()).norm();
  };
  m.coord_names = {"R11", "R12", "R13", "R21", "R22", "R23",
                   "R31", "R32", "R33", "r1",  "r2",  "r3"};
  return m;
}

AlgebraFrame AlgebraFrame::make(Eigen::MatrixXd basis, Eigen::MatrixXd inner) {
  if (basis.rows() != basis.cols() || inner.rows() != inner.cols() ||
      basis.rows() != inner.rows()) {
    throw std::invalid_argument("AlgebraFrame: basis/inner size mismatch");
  }
  AlgebraFrame f;
  f.basis = std::move(basis);
  f.inner = std::move(inner);
  f.basis_inv = f.basis.partialPivLu().inverse();
  if (f.orthonormality_defect() > 1e-12)
    throw std::invalid_argument("AlgebraFrame: basis is not orthonormal for the inner product");
  return f;
}

AlgebraFrame AlgebraFrame::euclidean(int n) {
  return make(Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n));
}

double AlgebraFrame::orthonormality_defect() const {
  const int n = dim();
  return (basis.transpose() * inner * basis - Eigen::MatrixXd::Identity(n, n))
      .cwiseAbs()
      .maxCoeff();
}

Eigen::VectorXd ConnectionTable::nabla(const Eigen::VectorXd& v,
                                       const Eigen::VectorXd& w) const {
  const int n = dim();
  Eigen::VectorXd out(n);
  for (int k = 0; k < n; ++k) out[k] = v.dot(gamma[k] * w);
  return out;
}

ConnectionTable ConnectionTable::zero(int n) {
  ConnectionTable c;
  c.gamma.assign(n, Eigen::MatrixXd::Zero(n, n));
  return c;
}

ConnectionTable ConnectionTable::from_quadratic_drift(
    const AlgebraFrame& frame,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& drift) {
  const int n = frame.dim();
  ConnectionTable c;
  c.gamma.assign(n, Eigen::MatrixXd::Zero(n, n));
  c.symmetric_only = true;

  std::vector<Eigen::VectorXd> q_basis(n);
  for (int i = 0; i < n; ++i) q_basis[i] = drift(frame.basis.col(i));

  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Eigen::VectorXd bij_alg =
          i == j ? q_basis[i]
                 : Eigen::VectorXd(0.5 * (drift(frame.basis.col(i) + frame.basis.col(j)) -
                                          q_basis[i] - q_basis[j]));
      const Eigen::VectorXd bij = frame.to_frame(bij_alg);
      for (int k = 0; k < n; ++k) {
        c.gamma[k](i, j) = bij[k];
        c.gamma[k](j, i) = bij[k];
      }
    }
  }
  return c;
}

Eigen::VectorXd mu_vector(const AlgebraFrame& frame, const ConnectionTable& conn) {
  if (frame.dim() != conn.dim())
    throw std::invalid_argument("mu_vector: frame/connection dimension mismatch");
  const int n = frame.dim();
  Eigen::VectorXd mu(n);
  for (int k = 0; k < n; ++k) mu[k] = conn.gamma[k].trace();
  return mu;
}

Eigen::VectorXd body_gradient(const LieGroupModel& model, const AlgebraFrame& frame,
                              const Objective& objective, const Eigen::VectorXd& g) {
  if (!objective.ambient_gradient) return body_gradient_fd(model, frame, objective, g);
  const Eigen::VectorXd grad_amb = objective.ambient_gradient(g);
  const int n = model.dim;
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = grad_amb.dot(model.tangent_lift(g, frame.basis.col(i)));
  }
  return out;
}

Eigen::VectorXd body_gradient_fd(const LieGroupModel& model, const AlgebraFrame& frame,
                                 const Objective& objective, const Eigen::VectorXd& g) {
  const double h = 1e-6 * std::max(1.0, g.lpNorm<Eigen::Infinity>());
  const int n = model.dim;
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd e = frame.basis.col(i);
    out[i] = (objective.value(model.retract(g, e, h)) -
              objective.value(model.retract(g, e, -h))) /
             (2.0 * h);
  }
  return out;
}

}  // namespace geoseek
