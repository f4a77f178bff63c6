#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "geoseek/signals.hpp"

using namespace geoseek;

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

TEST_CASE("default shaping values") {
  const ShapingFunction s = default_shaping();
  CHECK(s.alpha_alpha_prime(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  // alpha(0) = sqrt(log 2)
  CHECK(s.alpha(0.0) == doctest::Approx(std::sqrt(std::log(2.0))).epsilon(1e-15));
  CHECK(s.alpha(0.0) == doctest::Approx(0.8325546111576977).epsilon(1e-12));
  CHECK(s.beta(0.0) == 0.0);
  // closed form beta(z) = log(cosh z)/2
  CHECK(s.beta(1.3) == doctest::Approx(0.5 * std::log(std::cosh(1.3))).epsilon(1e-14));
}

TEST_CASE("alpha*alpha' strictly increasing and positive; beta positive definite") {
  const ShapingFunction s = default_shaping();
  double prev = -1.0;
  for (int k = 0; k <= 2000; ++k) {
    const double z = -10.0 + 20.0 * k / 2000.0;
    const double aa = s.alpha_alpha_prime(z);
    CHECK(aa > 0.0);
    CHECK(aa > prev);
    prev = aa;
    if (z != 0.0) CHECK(s.beta(z) > 0.0);
  }
}

TEST_CASE("shaping stays finite far into the negative tail") {
  const ShapingFunction s = default_shaping();
  CHECK(std::isfinite(s.alpha(-50.0)));
  CHECK(s.alpha(-50.0) >= 0.0);
  CHECK(std::isfinite(s.alpha_prime(-50.0)));
  CHECK(std::isfinite(s.alpha(-1e6)));
}

TEST_CASE("quadrature beta fallback matches the closed form") {
  const ShapingFunction closed = default_shaping();
  const ShapingFunction quad = shaping_from_alpha(closed.alpha, closed.alpha_prime);
  for (double z : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
    CHECK(quad.beta(z) == doctest::Approx(closed.beta(z)).epsilon(1e-9));
    CHECK(quad.beta_prime(z) == doctest::Approx(closed.beta_prime(z)).epsilon(1e-12));
  }
}

TEST_CASE("harmonic bank point values") {
  const DitherBank canonical = make_harmonic_bank(2, BankVariant::canonical);
  CHECK(canonical.u[0](0.0) == doctest::Approx(kSqrt2).epsilon(1e-15));
  CHECK(canonical.U[0](0.0) == doctest::Approx(0.0));

  const DitherBank fig1 = make_harmonic_bank(2, BankVariant::fig1);
  CHECK(fig1.U[0](0.0) == doctest::Approx(kSqrt2).epsilon(1e-15));
  CHECK(fig1.u[0](0.0) == doctest::Approx(0.0));

  const DitherBank fig2 = make_harmonic_bank(6, BankVariant::fig2);
  // first channel frequency is 6, last is 1
  CHECK(fig2.u[0](0.0) == doctest::Approx(kSqrt2 * 6.0).epsilon(1e-15));
  CHECK(fig2.u[5](0.0) == doctest::Approx(kSqrt2).epsilon(1e-15));
}

TEST_CASE("variant/channel mismatch is rejected") {
  CHECK_THROWS_AS(make_harmonic_bank(0, BankVariant::canonical), std::invalid_argument);
  CHECK_THROWS_AS(make_harmonic_bank(3, BankVariant::fig1), std::invalid_argument);
  CHECK_THROWS_AS(make_harmonic_bank(2, BankVariant::fig2), std::invalid_argument);
  CHECK_THROWS_AS(bank_variant_from_key("nope"), std::invalid_argument);
}

TEST_CASE("all variants are zero-mean and orthonormal") {
  for (auto variant : {BankVariant::canonical, BankVariant::fig1, BankVariant::fig2}) {
    const int m = variant == BankVariant::fig2 ? 6 : 2;
    const BankReport report = validate_bank(make_harmonic_bank(m, variant));
    CHECK(report.max_mean_abs <= 1e-10);
    CHECK(report.gram_defect <= 1e-8);
    CHECK(report.ok);
  }
}

TEST_CASE("gram matrix is the identity for canonical banks, m = 1..6") {
  for (int m = 1; m <= 6; ++m) {
    const Eigen::MatrixXd gram = gram_matrix(make_harmonic_bank(m, BankVariant::canonical));
    CHECK((gram - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("lambda matrix is half the gram matrix") {
  const DitherBank fig2 = make_harmonic_bank(6, BankVariant::fig2);
  const Eigen::MatrixXd lambda = lambda_matrix(fig2);
  CHECK((lambda - 0.5 * Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-8);

  const DitherBank canonical = make_harmonic_bank(3, BankVariant::canonical);
  CHECK((lambda_matrix(canonical) - 0.5 * gram_matrix(canonical)).cwiseAbs().maxCoeff() <=
        1e-14);
}

TEST_CASE("duplicated channel fails orthonormality with off-diagonal 1") {
  DitherBank dup = make_harmonic_bank(1, BankVariant::canonical);
  dup.channels = 2;
  dup.u.push_back(dup.u[0]);
  dup.U.push_back(dup.U[0]);
  const Eigen::MatrixXd gram = gram_matrix(dup);
  CHECK(gram(0, 1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(lambda_matrix(dup)(0, 1) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK_FALSE(validate_bank(dup).ok);
}

TEST_CASE("quadrature precondition") {
  const DitherBank bank = make_harmonic_bank(2, BankVariant::fig1);
  CHECK_THROWS_AS(gram_matrix(bank, 100), std::invalid_argument);
}

TEST_CASE("U' = u pointwise on a 1024-point grid") {
  const double h = 1e-6;
  for (auto variant : {BankVariant::canonical, BankVariant::fig1, BankVariant::fig2}) {
    const int m = variant == BankVariant::fig2 ? 6 : 2;
    const DitherBank bank = make_harmonic_bank(m, variant);
    for (int i = 0; i < m; ++i) {
      double scale = 1.0;
      for (int k = 0; k < 1024; ++k) scale = std::max(scale, std::abs(bank.u[i](k * kTwoPi / 1024)));
      for (int k = 0; k < 1024; ++k) {
        const double tau = k * kTwoPi / 1024;
        const double du = (bank.U[i](tau + h) - bank.U[i](tau - h)) / (2.0 * h);
        CHECK(std::abs(du - bank.u[i](tau)) <= 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("tabulated bank tracks the sampled signal") {
  const int samples = 512;
  std::vector<std::vector<double>> table(2, std::vector<double>(samples));
  for (int k = 0; k < samples; ++k) {
    const double tau = kTwoPi * k / samples;
    table[0][k] = -kSqrt2 * std::sin(tau);
    table[1][k] = kSqrt2 * std::cos(tau);
  }
  const DitherBank bank = tabulated_bank(kTwoPi, table);
  const DitherBank exact = make_harmonic_bank(2, BankVariant::fig1);

  for (int k = 0; k < 200; ++k) {
    const double tau = kTwoPi * (k + 0.37) / 200.0;
    CHECK(std::abs(bank.u[0](tau) - exact.u[0](tau)) <= 1e-4);
    CHECK(std::abs(bank.U[1](tau) - exact.U[1](tau)) <= 1e-4);
  }
  // U is the exact antiderivative of the interpolant: finite differences at
  // mid-segment points reproduce u to roundoff-dominated error.
  const double h = 1e-7;
  for (int k = 0; k < 50; ++k) {
    const double tau = kTwoPi * (k + 0.5) / samples;
    const double du = (bank.U[0](tau + h) - bank.U[0](tau - h)) / (2.0 * h);
    CHECK(std::abs(du - bank.u[0](tau)) <= 1e-6);
  }
  CHECK(validate_bank(bank, 1e-3).ok);

  // periodic wrap, including negative arguments
  CHECK(bank.u[0](-1.0) == doctest::Approx(bank.u[0](kTwoPi - 1.0)).epsilon(1e-12));
  CHECK(bank.U[0](7.0 * kTwoPi + 0.3) == doctest::Approx(bank.U[0](0.3)).epsilon(1e-12));
}

TEST_CASE("tabulated bank rejects malformed input") {
  CHECK_THROWS_AS(tabulated_bank(0.0, {{1, 2, 3, 4}}), std::invalid_argument);
  CHECK_THROWS_AS(tabulated_bank(1.0, {}), std::invalid_argument);
  CHECK_THROWS_AS(tabulated_bank(1.0, {{1, 2, 3, 4}, {1, 2, 3}}), std::invalid_argument);
}
