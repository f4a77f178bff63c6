#include "geoseek/signals.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace geoseek {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// log(2 cosh z) without overflow for large |z|.
double log_2cosh(double z) {
  const double az = std::abs(z);
  return az + std::log1p(std::exp(-2.0 * az));
}

// log(cosh z), same trick.
double log_cosh(double z) {
  const double az = std::abs(z);
  return az + std::log1p(std::exp(-2.0 * az)) - std::numbers::ln2;
}

// Composite Simpson over [0, T] of a callable; points is made odd if needed.
template <typename F>
double simpson(const F& f, double period, int points) {
  if (points % 2 == 0) ++points;
  const int intervals = points - 1;
  const double h = period / intervals;
  double sum = f(0.0) + f(period);
  for (int k = 1; k < intervals; ++k) {
    sum += f(k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                            double fa, double fm, double fb, double whole, double tol,
                            int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

Eigen::VectorXd DitherBank::u_at(double tau) const {
  Eigen::VectorXd out(channels);
  for (int i = 0; i < channels; ++i) out[i] = u[i](tau);
  return out;
}

Eigen::VectorXd DitherBank::U_at(double tau) const {
  Eigen::VectorXd out(channels);
  for (int i = 0; i < channels; ++i) out[i] = U[i](tau);
  return out;
}

BankVariant bank_variant_from_key(const std::string& key) {
  if (key == "canonical") return BankVariant::canonical;
  if (key == "fig1") return BankVariant::fig1;
  if (key == "fig2") return BankVariant::fig2;
  throw std::invalid_argument("unknown bank variant key: " + key);
}

DitherBank make_harmonic_bank(int m, BankVariant variant) {
  if (m < 1) throw std::invalid_argument("bank needs at least one channel");
  if (variant == BankVariant::fig1 && m != 2)
    throw std::invalid_argument("fig1 bank is two-channel (m must be 2)");
  if (variant == BankVariant::fig2 && m != 6)
    throw std::invalid_argument("fig2 bank is six-channel (m must be 6)");

  const double s2 = std::numbers::sqrt2;
  DitherBank bank;
  bank.period = kTwoPi;
  bank.channels = m;
  bank.u.resize(m);
  bank.U.resize(m);

  switch (variant) {
    case BankVariant::canonical:
      for (int i = 0; i < m; ++i) {
        const double k = i + 1;
        bank.u[i] = [s2, k](double tau) { return s2 * k * std::cos(k * tau); };
        bank.U[i] = [s2, k](double tau) { return s2 * std::sin(k * tau); };
      }
      break;
    case BankVariant::fig1:
      bank.u[0] = [s2](double tau) { return -s2 * std::sin(tau); };
      bank.U[0] = [s2](double tau) { return s2 * std::cos(tau); };
      bank.u[1] = [s2](double tau) { return s2 * std::cos(tau); };
      bank.U[1] = [s2](double tau) { return s2 * std::sin(tau); };
      break;
    case BankVariant::fig2:
      for (int i = 0; i < m; ++i) {
        const double k = 6 - i;  // frequencies 6..1
        bank.u[i] = [s2, k](double tau) { return s2 * k * std::cos(k * tau); };
        bank.U[i] = [s2, k](double tau) { return s2 * std::sin(k * tau); };
      }
      break;
  }
  return bank;
}

DitherBank tabulated_bank(double period, const std::vector<std::vector<double>>& u_samples) {
  if (period <= 0.0) throw std::invalid_argument("tabulated bank: period must be positive");
  if (u_samples.empty()) throw std::invalid_argument("tabulated bank: no channels");
  const std::size_t count = u_samples.front().size();
  if (count < 4) throw std::invalid_argument("tabulated bank: need >= 4 samples per channel");
  for (const auto& ch : u_samples) {
    if (ch.size() != count)
      throw std::invalid_argument("tabulated bank: channels must share the sample count");
  }

  DitherBank bank;
  bank.period = period;
  bank.channels = static_cast<int>(u_samples.size());

  const double dt = period / static_cast<double>(count);
  for (const auto& raw : u_samples) {
    auto s = std::make_shared<std::vector<double>>(raw);
    double mean = 0.0;
    for (double v : *s) mean += v;
    mean /= static_cast<double>(s->size());
    for (double& v : *s) v -= mean;  // exact zero mean of the interpolant

    const std::size_t n = s->size();
    // Node values of the raw antiderivative A(tau_k); A(T) = 0 by zero mean.
    auto acc = std::make_shared<std::vector<double>>(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double sk = (*s)[k];
      const double sk1 = (*s)[(k + 1) % n];
      (*acc)[k + 1] = (*acc)[k] + dt * 0.5 * (sk + sk1);
    }
    // Mean of A over the period, per-segment closed form (A is piecewise
    // quadratic).
    double a_mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double sk = (*s)[k];
      const double sk1 = (*s)[(k + 1) % n];
      a_mean += dt * (*acc)[k] + dt * dt * (sk / 2.0 + (sk1 - sk) / 6.0);
    }
    a_mean /= period;

    auto wrap = [period](double tau) {
      double x = std::fmod(tau, period);
      if (x < 0.0) x += period;
      return x;
    };

    bank.u.push_back([s, dt, wrap, n](double tau) {
      const double x = wrap(tau);
      std::size_t k = std::min(static_cast<std::size_t>(x / dt), n - 1);
      const double th = (x - k * dt) / dt;
      return (*s)[k] * (1.0 - th) + (*s)[(k + 1) % n] * th;
    });
    bank.U.push_back([s, acc, dt, wrap, n, a_mean](double tau) {
      const double x = wrap(tau);
      std::size_t k = std::min(static_cast<std::size_t>(x / dt), n - 1);
      const double th = (x - k * dt) / dt;
      const double sk = (*s)[k];
      const double sk1 = (*s)[(k + 1) % n];
      return (*acc)[k] + dt * (sk * th + 0.5 * (sk1 - sk) * th * th) - a_mean;
    });
  }
  return bank;
}

Eigen::MatrixXd gram_matrix(const DitherBank& bank, int quadrature_points) {
  if (quadrature_points < 256)
    throw std::invalid_argument("gram_matrix: need >= 256 quadrature points");
  const int m = bank.channels;
  int points = quadrature_points;
  if (points % 2 == 0) ++points;
  const int intervals = points - 1;
  const double h = bank.period / intervals;

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k <= intervals; ++k) {
    const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    const Eigen::VectorXd Uv = bank.U_at(k * h);
    gram.noalias() += (w * h / 3.0) * (Uv * Uv.transpose());
  }
  return gram / bank.period;
}

Eigen::MatrixXd lambda_matrix(const DitherBank& bank, int quadrature_points) {
  return 0.5 * gram_matrix(bank, quadrature_points);
}

BankReport validate_bank(const DitherBank& bank, double tol, int quadrature_points) {
  BankReport report;
  report.gram = gram_matrix(bank, quadrature_points);
  report.gram_defect =
      (report.gram - Eigen::MatrixXd::Identity(bank.channels, bank.channels))
          .cwiseAbs()
          .maxCoeff();
  report.max_mean_abs = 0.0;
  for (int i = 0; i < bank.channels; ++i) {
    const double mean = simpson(bank.u[i], bank.period, quadrature_points) / bank.period;
    report.max_mean_abs = std::max(report.max_mean_abs, std::abs(mean));
  }
  report.ok = report.gram_defect <= tol && report.max_mean_abs <= tol;
  return report;
}

ShapingFunction default_shaping() {
  ShapingFunction s;
  s.alpha = [](double z) {
    const double arg = z + log_2cosh(z);
    if (arg < 0.0) throw std::domain_error("shaping alpha: negative radicand");
    return std::sqrt(arg);
  };
  s.alpha_alpha_prime = [](double z) { return 0.5 * (1.0 + std::tanh(z)); };
  s.alpha_prime = [aa = s.alpha_alpha_prime, a = s.alpha](double z) {
    const double av = a(z);
    if (av == 0.0) return 0.0;  // limit z -> -inf
    return aa(z) / av;
  };
  s.beta = [](double z) { return 0.5 * log_cosh(z); };
  s.beta_prime = [](double z) { return 0.5 * std::tanh(z); };
  return s;
}

ShapingFunction shaping_from_alpha(std::function<double(double)> alpha,
                                   std::function<double(double)> alpha_prime) {
  ShapingFunction s;
  s.alpha = alpha;
  s.alpha_prime = alpha_prime;
  s.alpha_alpha_prime = [alpha, alpha_prime](double z) { return alpha(z) * alpha_prime(z); };
  const double aa0 = s.alpha_alpha_prime(0.0);
  s.beta_prime = [aa = s.alpha_alpha_prime, aa0](double z) { return aa(z) - aa0; };
  s.beta = [bp = s.beta_prime](double z) { return adaptive_simpson(bp, 0.0, z, 1e-12); };
  return s;
}

}  // namespace geoseek
