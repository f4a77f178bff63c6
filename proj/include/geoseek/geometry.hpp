#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace geoseek {

/// A Lie group embedded in Euclidean space.  Group elements are ambient
/// vectors of length embed_dim; algebra elements are coordinate vectors of
/// length dim.  For se(3) the algebra coordinates are (Omega, V) with Omega
/// the unhatted angular part.
struct LieGroupModel {
  int dim = 0;
  int embed_dim = 0;
  Eigen::VectorXd identity;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> compose;
  /// T_e L_g applied to an algebra vector, as an ambient tangent vector.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> tangent_lift;
  /// Left-invariant exponential flow: g * exp(dt * xi).
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&, double)> retract;
  /// Nonnegative distance-from-manifold measure; 0 on the manifold.
  std::function<double(const Eigen::VectorXd&)> defect;
  std::vector<std::string> coord_names;
};

/// Flat abelian group (R^n, +).  retract(g, v, dt) = g + dt v exactly.
LieGroupModel rn_group(int n);

/// SE(3) = SO(3) x| R^3 embedded in R^12 as [R row-major, r].  Retraction is
/// the closed-form screw motion; defect(g) = ||R^T R - I||_F.
LieGroupModel se3_group();

Eigen::Matrix3d hat(const Eigen::Vector3d& w);
/// Inverse of hat; rejects matrices whose asymmetry exceeds asym_tol.
Eigen::Vector3d unhat(const Eigen::Matrix3d& W, double asym_tol = 1e-10);
/// SO(3) exponential of hat(w).
Eigen::Matrix3d rodrigues(const Eigen::Vector3d& w);

Eigen::VectorXd se3_pack(const Eigen::Matrix3d& R, const Eigen::Vector3d& r);
void se3_unpack(const Eigen::VectorXd& g, Eigen::Matrix3d& R, Eigen::Vector3d& r);

/// Orthonormal algebra basis (e_1..e_n) and inner product, both expressed in
/// algebra coordinates.  from_frame is the isomorphism E sending frame
/// coefficient vectors to algebra coordinate vectors; to_frame is E^{-1}.
struct AlgebraFrame {
  Eigen::MatrixXd basis;      // columns are e_i
  Eigen::MatrixXd inner;      // SPD matrix of the inner product
  Eigen::MatrixXd basis_inv;  // cached inverse of basis

  /// Validates orthonormality basis^T inner basis = I within 1e-12.
  static AlgebraFrame make(Eigen::MatrixXd basis, Eigen::MatrixXd inner);
  static AlgebraFrame euclidean(int n);

  int dim() const { return static_cast<int>(basis.cols()); }
  Eigen::VectorXd from_frame(const Eigen::VectorXd& coeffs) const { return basis * coeffs; }
  Eigen::VectorXd to_frame(const Eigen::VectorXd& xi) const { return basis_inv * xi; }
  double pairing(const Eigen::VectorXd& xi, const Eigen::VectorXd& zeta) const {
    return xi.dot(inner * zeta);
  }
  double orthonormality_defect() const;
};

/// Coefficients Gamma^k_{ij} of the restricted connection in frame
/// coordinates: nabla_{e_i} e_j = sum_k Gamma^k_{ij} e_k.  When
/// symmetric_only is set, only the i<->j symmetric part is trusted; that is
/// all the controller and the averaged system use (nabla_v v, mu, symmetric
/// products).
struct ConnectionTable {
  std::vector<Eigen::MatrixXd> gamma;  // gamma[k](i, j)
  bool symmetric_only = false;

  int dim() const { return static_cast<int>(gamma.size()); }
  /// nabla_v w in frame coordinates.
  Eigen::VectorXd nabla(const Eigen::VectorXd& v, const Eigen::VectorXd& w) const;

  static ConnectionTable zero(int n);

  /// Polarization of a quadratic drift map Q given in algebra coordinates:
  /// B(v, w) := (Q(v + w) - Q(v) - Q(w)) / 2, tabulated on the frame basis.
  /// Recovers exactly the symmetric part of the connection, and agrees with
  /// Q on the diagonal: B(v, v) = Q(v).
  static ConnectionTable from_quadratic_drift(
      const AlgebraFrame& frame,
      const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& drift);
};

/// sum_i nabla_{e_i} e_i, in frame coordinates.
Eigen::VectorXd mu_vector(const AlgebraFrame& frame, const ConnectionTable& conn);

/// Configuration-dependent objective.  ambient_gradient is optional; when
/// absent, body gradients are computed by central differences along
/// retractions.
struct Objective {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> ambient_gradient;
};

/// Frame coordinates of the body gradient of the objective at g: component i
/// is the directional derivative of the objective along tangent_lift(g, e_i).
/// By frame orthonormality these are the inner-product coordinates of the
/// gradient pulled back to the algebra.
Eigen::VectorXd body_gradient(const LieGroupModel& model, const AlgebraFrame& frame,
                              const Objective& objective, const Eigen::VectorXd& g);

/// Finite-difference path, always available.  Step is 1e-6 * max(1, |g|_inf).
Eigen::VectorXd body_gradient_fd(const LieGroupModel& model, const AlgebraFrame& frame,
                                 const Objective& objective, const Eigen::VectorXd& g);

}  // namespace geoseek
