#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <random>

#include "geoseek/controller.hpp"
#include "geoseek/scenario.hpp"
#include "oracles.hpp"

using namespace geoseek;

namespace {

DitherBank zero_bank(int m) {
  DitherBank bank;
  bank.period = 2.0 * std::numbers::pi;
  bank.channels = m;
  for (int i = 0; i < m; ++i) {
    bank.u.emplace_back([](double) { return 0.0; });
    bank.U.emplace_back([](double) { return 0.0; });
  }
  return bank;
}

PlantModel planar_plant() {
  return double_integrator_plant(2, 0.0, objective_from_key("quadratic2d"));
}

Eigen::Matrix3d paper_J() {
  Eigen::Matrix3d J;
  J << 5, 0, -2, 0, 7, 2, -2, 2, 6;
  return J / 3.0;
}

Eigen::Matrix3d paper_M() {
  Eigen::Matrix3d M;
  M << 7, 0, 2, 0, 5, -2, 2, -2, 6;
  return M / 3.0;
}

}  // namespace

TEST_CASE("gain admissibility") {
  CHECK_THROWS_AS(ControllerGains(1, 1, 1, 1, 1, 30), std::invalid_argument);
  CHECK_THROWS_AS(ControllerGains(1, 1, 1, 0.5, -1, 30), std::invalid_argument);
  CHECK_THROWS_AS(ControllerGains(0, 1, 1, 0.5, 1, 30), std::invalid_argument);
  CHECK_NOTHROW(ControllerGains(1, 1, 1, 0.5, 1, 30));
  CHECK_NOTHROW(ControllerGains(1.3, 0.7, 1.2, 0.7, 1, 30));
  CHECK_NOTHROW(ControllerGains(0.1, 0.2, 0.1, 0.1, 1, 5));
  CHECK_NOTHROW(ControllerGains(0.15, 0.13, 0.13, 0.13, 1, 5));
}

TEST_CASE("control input at the start of the dither period") {
  const ControllerGains gains(1, 1, 1, 0.5, 1, 30);
  const ShapingFunction shaping = default_shaping();
  const DitherBank bank = make_harmonic_bank(2, BankVariant::fig1);
  const ControllerState state{Eigen::Vector2d::Zero(), 0.0};

  // y - eta = 0: first channel sees only b*kappa*alpha(0)*sqrt2
  const Eigen::VectorXd u = control_input(gains, shaping, bank, Eigen::Vector2d::Zero(),
                                          0.0, 0.0, state);
  CHECK(u[0] == doctest::Approx(0.5887050112577373).epsilon(1e-12));
  // second channel carries the omega-scaled perturbation
  const double expected2 = gains.lambda * shaping.alpha(0.0) * gains.omega * std::numbers::sqrt2;
  CHECK(u[1] == doctest::Approx(expected2).epsilon(1e-12));
}

TEST_CASE("control input vanishes when the compensator matches the dither") {
  const ControllerGains gains(1, 1, 1, 0.5, 1, 2.0);
  const ShapingFunction shaping = default_shaping();
  const DitherBank bank = make_harmonic_bank(1, BankVariant::canonical);

  // u(pi/2) = 0 and U(pi/2) = sqrt2 for the single-harmonic bank
  const double t = std::numbers::pi / 2.0 / gains.omega;
  const double y = 0.7, eta = 0.2;
  const double av = shaping.alpha(y - eta);
  ControllerState state;
  state.w = gains.kappa * av * bank.U_at(gains.omega * t);
  state.eta = eta;
  const Eigen::VectorXd u =
      control_input(gains, shaping, bank, Eigen::VectorXd::Zero(1), t, y, state);
  CHECK(u.norm() <= 1e-14);
}

TEST_CASE("only the mu term survives a silent bank") {
  const ControllerGains gains(1, 1, 1, 0.5, 1, 30);
  const ShapingFunction shaping = default_shaping();
  const DitherBank bank = zero_bank(2);
  const Eigen::Vector2d mu(0.3, -0.8);
  const ControllerState state{Eigen::Vector2d::Zero(), 0.0};
  const double y = 1.1;
  const Eigen::VectorXd u = control_input(gains, shaping, bank, mu, 0.4, y, state);
  const double av = shaping.alpha(y);
  CHECK((u - gains.lambda * gains.lambda * av * av * mu).norm() <= 1e-14);
}

TEST_CASE("compensator rest point and filter linearity") {
  const ControllerGains gains(1, 1, 1, 0.5, 1, 2.0);
  const ShapingFunction shaping = default_shaping();
  const DitherBank bank = make_harmonic_bank(1, BankVariant::canonical);

  const double t = std::numbers::pi / 2.0 / gains.omega;
  const double y = 0.4;
  ControllerState state;
  state.eta = y;  // filter output zero
  state.w = gains.kappa * shaping.alpha(0.0) * bank.U_at(gains.omega * t);
  const CompensatorDeriv d = controller_rhs(gains, shaping, bank, t, y, state);
  CHECK(d.w_dot.norm() <= 1e-14);
  CHECK(d.eta_dot == doctest::Approx(0.0));

  ControllerState fresh{Eigen::VectorXd::Zero(1), 0.0};
  const double c = 2.5;
  CHECK(controller_rhs(gains, shaping, bank, 0.0, c, fresh).eta_dot ==
        doctest::Approx(gains.h * c));
}

TEST_CASE("compensator sign pattern at a quarter period") {
  const ControllerGains gains(1.3, 0.7, 1.2, 0.7, 1, 30);
  const ShapingFunction shaping = default_shaping();
  const DitherBank bank = make_harmonic_bank(2, BankVariant::fig1);

  const double t = (std::numbers::pi / 2.0) / gains.omega;  // omega t = pi/2
  const double y = 0.9;
  const ControllerState state{Eigen::Vector2d::Zero(), 0.0};
  const double av = shaping.alpha(y);
  const CompensatorDeriv d = controller_rhs(gains, shaping, bank, t, y, state);

  const double s2 = std::numbers::sqrt2;
  // U(pi/2) = (0, sqrt2), u(pi/2) = (-sqrt2, 0)
  CHECK(d.w_dot[0] == doctest::Approx(-gains.kappa * av * gains.omega * s2).epsilon(1e-10));
  CHECK(d.w_dot[1] == doctest::Approx(gains.a * gains.kappa * av * s2).epsilon(1e-10));
  CHECK(d.w_dot[0] < 0.0);
  CHECK(d.w_dot[1] > 0.0);
}

TEST_CASE("constant objective decouples the configuration") {
  Objective constant;
  constant.value = [](const Eigen::VectorXd&) { return 3.0; };
  const PlantModel plant = double_integrator_plant(2, 0.0, constant);
  const ControllerGains gains(1, 1, 1, 0.5, 1, 30);
  const ShapingFunction shaping = default_shaping();
  const DitherBank bank = make_harmonic_bank(2, BankVariant::fig1);

  ClosedLoopState x;
  x.g = Eigen::Vector2d(0.4, -0.2);
  x.v = Eigen::Vector2d::Zero();
  x.w = Eigen::Vector2d::Zero();
  x.eta = 3.0;
  const double t = 0.37;
  const StateDeriv d = closed_loop_rhs(plant, gains, shaping, bank, t, x);
  CHECK(d.g_velocity.norm() == 0.0);
  const Eigen::VectorXd u = control_input(gains, shaping, bank, plant.mu_frame, t,
                                          3.0, ControllerState{x.w, x.eta});
  CHECK((d.v_dot - u).norm() <= 1e-15);
}

TEST_CASE("generic closed loop reproduces the hand-coded planar system") {
  const PlantModel plant = planar_plant();
  const ShapingFunction shaping = default_shaping();
  const DitherBank bank = make_harmonic_bank(2, BankVariant::fig1);
  const ControllerGains gains(1, 1, 1, 0.5, 1, 30);

  std::mt19937 rng(33);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  for (int k = 0; k < 20; ++k) {
    ClosedLoopState x;
    x.g = Eigen::Vector2d(unif(rng), unif(rng));
    x.v = Eigen::Vector2d(unif(rng), unif(rng));
    x.w = Eigen::Vector2d(unif(rng), unif(rng));
    x.eta = unif(rng);
    const double t = 0.5 * (unif(rng) + 1.5);

    const StateDeriv d = closed_loop_rhs(plant, gains, shaping, bank, t, x);
    const oracle::PlanarState od = oracle::planar_closed_loop(
        {gains.a, gains.lambda, gains.b, gains.kappa, gains.h, gains.omega}, t,
        {x.g[0], x.g[1], x.v[0], x.v[1], x.w[0], x.w[1], x.eta});

    Eigen::VectorXd mine(7), ref(7);
    mine << d.g_velocity[0], d.g_velocity[1], d.v_dot[0], d.v_dot[1], d.w_dot[0], d.w_dot[1],
        d.eta_dot;
    ref << od.g1, od.g2, od.v1, od.v2, od.w1, od.w2, od.eta;
    CHECK((mine - ref).norm() <= 1e-12 * ref.norm());
  }
}

TEST_CASE("generic closed loop reproduces the hand-coded rigid-body system") {
  const Eigen::Matrix3d J = paper_J();
  const Eigen::Matrix3d M = paper_M();
  const PlantModel plant = kirchhoff_plant(J, M, objective_from_key("pose-distance"));
  const ShapingFunction shaping = default_shaping();
  const DitherBank bank = make_harmonic_bank(6, BankVariant::fig2);
  const ControllerGains gains(0.1, 0.2, 0.1, 0.1, 1, 5);

  std::mt19937 rng(55);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    Eigen::Vector3d axis(unif(rng), unif(rng), unif(rng));
    const Eigen::Matrix3d R =
        Eigen::AngleAxisd(unif(rng) * std::numbers::pi, axis.normalized()).toRotationMatrix();
    oracle::RigidState ox;
    ox.R = R;
    for (int i = 0; i < 3; ++i) {
      ox.r[i] = unif(rng);
      ox.Omega[i] = unif(rng);
      ox.V[i] = unif(rng);
      ox.wOmega[i] = unif(rng);
      ox.wV[i] = unif(rng);
    }
    ox.eta = unif(rng);
    const double t = 0.5 * (unif(rng) + 1.0);

    ClosedLoopState x;
    x.g = se3_pack(ox.R, ox.r);
    Eigen::VectorXd xi(6);
    xi << ox.Omega, ox.V;
    x.v = plant.frame.to_frame(xi);
    Eigen::VectorXd w(6);
    w << ox.wOmega, ox.wV;
    x.w = w;
    x.eta = ox.eta;

    const StateDeriv d = closed_loop_rhs(plant, gains, shaping, bank, t, x);
    const oracle::RigidDeriv od = oracle::rigid_closed_loop(
        J, M, gains.a, gains.lambda, gains.b, gains.kappa, gains.h, gains.omega, t, ox);

    // ambient configuration velocity
    const Eigen::VectorXd gdot =
        plant.model.tangent_lift(x.g, plant.frame.from_frame(d.g_velocity));
    const Eigen::VectorXd gdot_ref = se3_pack(od.Rdot, od.rdot);
    // body acceleration back in (Omega, V) coordinates
    const Eigen::VectorXd vdot_alg = plant.frame.from_frame(d.v_dot);
    Eigen::VectorXd vdot_ref(6);
    vdot_ref << od.Omegadot, od.Vdot;
    Eigen::VectorXd wdot_ref(6);
    wdot_ref << od.wOmegadot, od.wVdot;

    Eigen::VectorXd mine(12 + 6 + 6 + 1), ref(12 + 6 + 6 + 1);
    mine << gdot, vdot_alg, d.w_dot, d.eta_dot;
    ref << gdot_ref, vdot_ref, wdot_ref, od.etadot;
    CHECK((mine - ref).norm() <= 1e-12 * ref.norm());
  }
}

TEST_CASE("closed loop is periodic in time with the dither period") {
  const PlantModel plant = planar_plant();
  const ShapingFunction shaping = default_shaping();
  const DitherBank bank = make_harmonic_bank(2, BankVariant::fig1);
  const ControllerGains gains(1, 1, 1, 0.5, 1, 30);
  const double period = gains.dither_period();

  ClosedLoopState x;
  x.g = Eigen::Vector2d(0.7, -0.4);
  x.v = Eigen::Vector2d(0.2, 0.1);
  x.w = Eigen::Vector2d(-0.3, 0.5);
  x.eta = 0.25;
  for (double t : {0.0, 0.1, 1.3}) {
    const StateDeriv d1 = closed_loop_rhs(plant, gains, shaping, bank, t, x);
    const StateDeriv d2 = closed_loop_rhs(plant, gains, shaping, bank, t + period, x);
    Eigen::VectorXd diff(7);
    diff << d1.g_velocity - d2.g_velocity, d1.v_dot - d2.v_dot, d1.w_dot - d2.w_dot,
        d1.eta_dot - d2.eta_dot;
    CHECK(diff.lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("channel mismatch is rejected") {
  const PlantModel plant = planar_plant();
  const DitherBank bank = make_harmonic_bank(6, BankVariant::fig2);
  ClosedLoopState x;
  x.g = Eigen::Vector2d(0, 0);
  x.v = Eigen::Vector2d(0, 0);
  x.w = Eigen::Vector2d(0, 0);
  CHECK_THROWS_AS(closed_loop_rhs(plant, ControllerGains(1, 1, 1, 0.5, 1, 30),
                                  default_shaping(), bank, 0.0, x),
                  std::invalid_argument);
}

TEST_CASE("change of variables: identity at a dither zero and exact inverse") {
  const ShapingFunction shaping = default_shaping();
  const ControllerGains gains(1, 1, 1, 0.5, 1, 2.0);

  // single-harmonic bank: U(0) = 0, so the transform is the identity at t = 0
  {
    Objective quad1;
    quad1.value = [](const Eigen::VectorXd& g) { return g[0] * g[0]; };
    const PlantModel plant = double_integrator_plant(1, 0.0, quad1);
    const DitherBank bank = make_harmonic_bank(1, BankVariant::canonical);
    ClosedLoopState x;
    x.g = Eigen::VectorXd::Constant(1, 0.8);
    x.v = Eigen::VectorXd::Constant(1, -0.3);
    x.w = Eigen::VectorXd::Constant(1, 0.5);
    x.eta = 0.1;
    const ClosedLoopState xt = to_tilde(plant, gains, shaping, bank, 0.0, x);
    CHECK((xt.v - x.v).norm() == 0.0);
    CHECK((xt.w - x.w).norm() == 0.0);
  }

  // inverse round trip at random states and times
  const PlantModel plant = planar_plant();
  const DitherBank bank = make_harmonic_bank(2, BankVariant::fig1);
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    ClosedLoopState x;
    x.g = Eigen::Vector2d(unif(rng), unif(rng));
    x.v = Eigen::Vector2d(unif(rng), unif(rng));
    x.w = Eigen::Vector2d(unif(rng), unif(rng));
    x.eta = unif(rng);
    const double t = unif(rng);
    const ClosedLoopState back =
        from_tilde(plant, gains, shaping, bank, t, to_tilde(plant, gains, shaping, bank, t, x));
    CHECK((back.v - x.v).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((back.w - x.w).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((back.g - x.g).norm() == 0.0);
    CHECK(back.eta == x.eta);
  }
}

TEST_CASE("transformed velocity at the start of the dither period") {
  const PlantModel plant = planar_plant();
  const ShapingFunction shaping = default_shaping();
  const DitherBank bank = make_harmonic_bank(2, BankVariant::fig1);
  const ControllerGains gains(1, 1, 1, 0.5, 1, 30);

  ClosedLoopState x;
  x.g = Eigen::Vector2d(1.0, 1.0);
  x.v = Eigen::Vector2d(0.9, -0.2);
  x.w = Eigen::Vector2d::Zero();
  x.eta = measure_output(plant, x.g);  // alpha argument is 0

  const ClosedLoopState xt = to_tilde(plant, gains, shaping, bank, 0.0, x);
  // vtilde1 = v1 - lambda sqrt(ln 2) sqrt2
  CHECK(xt.v[0] == doctest::Approx(x.v[0] - gains.lambda * 1.1774100225154747).epsilon(1e-12));
  // U2(0) = 0: second component unchanged
  CHECK(xt.v[1] == doctest::Approx(x.v[1]));
}
