#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace geoseek {

/// Bank of T-periodic zero-mean perturbation channels u^i together with
/// their zero-mean antiderivatives U^i.  The channels are callables of the
/// phase variable and may be evaluated at any real argument.
///
/// Contract: the time-averaged Gram matrix (1/T) int_0^T U^i U^j dtau of a
/// valid bank is the identity (see gram_matrix / validate_bank).
struct DitherBank {
  double period = 0.0;
  int channels = 0;
  std::vector<std::function<double(double)>> u;
  std::vector<std::function<double(double)>> U;

  Eigen::VectorXd u_at(double tau) const;
  Eigen::VectorXd U_at(double tau) const;
};

enum class BankVariant { canonical, fig1, fig2 };

/// Maps the scenario-config keys "canonical" | "fig1" | "fig2".
BankVariant bank_variant_from_key(const std::string& key);

/// Harmonic banks with period 2*pi:
///   canonical: u^i = sqrt(2) i cos(i tau)            (any m >= 1)
///   fig1:      u = (-sqrt(2) sin, sqrt(2) cos)       (m == 2)
///   fig2:      u^i = sqrt(2)(7-i) cos((7-i) tau)     (m == 6)
DitherBank make_harmonic_bank(int m, BankVariant variant);

/// Bank built from per-channel samples of u on a uniform grid over
/// [0, period).  Samples are mean-shifted so each channel is exactly
/// zero-mean; U is the exact antiderivative of the periodic linear
/// interpolant, shifted to zero mean.
DitherBank tabulated_bank(double period, const std::vector<std::vector<double>>& u_samples);

/// Entry (i,j) = (1/T) int_0^T U^i U^j dtau by composite Simpson.
/// quadrature_points counts grid nodes and must be >= 256.
Eigen::MatrixXd gram_matrix(const DitherBank& bank, int quadrature_points = 2049);

/// Lambda^{ij} = (1/(2T)) int_0^T U^i U^j dtau, i.e. half the Gram matrix.
Eigen::MatrixXd lambda_matrix(const DitherBank& bank, int quadrature_points = 2049);

struct BankReport {
  Eigen::MatrixXd gram;
  double max_mean_abs = 0.0;  // largest channel mean |(1/T) int u^i|
  double gram_defect = 0.0;   // max-abs entry of Gram - I
  bool ok = false;
};

BankReport validate_bank(const DitherBank& bank, double tol = 1e-8,
                         int quadrature_points = 4097);

/// Output-shaping function alpha with its derived objects.  alpha*alpha'
/// must be strictly increasing and positive; beta(z) = int_0^z (aa - aa(0))
/// is then positive definite about 0 and beta' = aa - aa(0).
struct ShapingFunction {
  std::function<double(double)> alpha;
  std::function<double(double)> alpha_prime;
  std::function<double(double)> alpha_alpha_prime;
  std::function<double(double)> beta;
  std::function<double(double)> beta_prime;
};

/// alpha(z) = sqrt(z + log(2 cosh z)).  Then alpha*alpha' = (1 + tanh)/2
/// and beta has the closed form log(cosh z)/2.
ShapingFunction default_shaping();

/// Shaping from a user-supplied (alpha, alpha') pair; beta falls back to
/// adaptive quadrature of alpha*alpha' - (alpha*alpha')(0).
ShapingFunction shaping_from_alpha(std::function<double(double)> alpha,
                                   std::function<double(double)> alpha_prime);

}  // namespace geoseek
