#include "sail/plant.hpp"

#include <doctest.h>

#include "test_util.hpp"

#include <cmath>

using namespace sail;
using namespace testutil;

TEST_SUITE_BEGIN("plant");

namespace {

plant::FrictionParams uniform_friction(int n, double f_c, double f_s, double f_v,
                                       double v_s, double kappa) {
  plant::FrictionParams p;
  p.f_c = VectorXd::Constant(n, f_c);
  p.f_s = VectorXd::Constant(n, f_s);
  p.f_v = VectorXd::Constant(n, f_v);
  p.v_s = VectorXd::Constant(n, v_s);
  p.kappa_f = kappa;
  return p;
}

}  // namespace

TEST_CASE("friction: zero velocity, zero torque") {
  auto p = uniform_friction(3, 0.8, 1.2, 0.4, 0.1, 25.0);
  CHECK(plant::friction_torque(VectorXd::Zero(3), p).norm() == 0.0);
}

TEST_CASE("friction: high-velocity asymptote is Coulomb plus viscous") {
  auto p = uniform_friction(1, 0.8, 1.2, 0.4, 0.1, 25.0);
  VectorXd qd(1);
  qd << 50.0;
  const double tau = plant::friction_torque(qd, p)[0];
  CHECK(tau == doctest::Approx(0.8 + 0.4 * 50.0).epsilon(1e-9));
}

TEST_CASE("friction: scalar evaluation oracle") {
  auto p = uniform_friction(1, 1.0, 1.5, 0.5, 0.1, 25.0);
  VectorXd qd(1);
  qd << 0.2;
  const double expected = (1.0 + 0.5 * std::exp(-4.0)) * std::tanh(5.0) + 0.5 * 0.2;
  CHECK(plant::friction_torque(qd, p)[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("friction: odd function of velocity") {
  auto p = uniform_friction(4, 0.8, 1.2, 0.4, 0.1, 25.0);
  Rng rng(31);
  VectorXd qd = random_vector(rng, 4, -2.0, 2.0);
  VectorXd a = plant::friction_torque(qd, p);
  VectorXd b = plant::friction_torque(VectorXd(-qd), p);
  CHECK((a + b).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("friction: parameter validation") {
  auto p = uniform_friction(2, 1.2, 0.8, 0.4, 0.1, 25.0);  // f_s < f_c
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("wrench: zero outside the window") {
  plant::WrenchProfile w;
  w.peak << 20, 20, -15, 0, 0, 0;
  w.t0 = 5.0;
  w.t1 = 7.0;
  w.envelope_width = 0.5;
  CHECK(plant::wrench_at(4.0, w).norm() == 0.0);
  CHECK(plant::wrench_at(7.5, w).norm() == 0.0);
  CHECK(plant::wrench_at(5.0, w).norm() == 0.0);
}

TEST_CASE("wrench: peak at the window midpoint") {
  plant::WrenchProfile w;
  w.peak << 20, 20, -15, 0, 0, 0;
  w.t0 = 5.0;
  w.t1 = 7.0;
  w.envelope_width = 0.5;
  Vector6d F = plant::wrench_at(6.0, w);
  CHECK(F[0] == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(F[1] == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(F[2] == doctest::Approx(-15.0).epsilon(1e-12));
  CHECK(F.tail<3>().norm() == 0.0);
}

TEST_CASE("wrench: symmetric about the midpoint") {
  plant::WrenchProfile w;
  w.peak << 20, 20, -15, 0, 0, 0;
  w.t0 = 5.0;
  w.t1 = 7.0;
  w.envelope_width = 0.5;
  for (double delta : {0.1, 0.45, 0.8}) {
    CHECK((plant::wrench_at(6.0 - delta, w) - plant::wrench_at(6.0 + delta, w))
              .norm() <= 1e-12);
  }
}

TEST_CASE("plant derivative: static equilibrium under gravity compensation") {
  auto m = default_robot();
  Rng rng(37);
  VectorXd q = random_vector(rng, m.n(), -1.2, 1.2);
  plant::JointState x{q, VectorXd::Zero(m.n())};
  auto p = plant::FrictionParams::zero(m.n());
  auto dx = plant::plant_derivative(m, x, rbd::gravity_vector(m, q),
                                    Vector6d::Zero(), p);
  CHECK(dx.qdd.lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("plant derivative: dynamics residual at random states") {
  auto m = default_robot();
  auto p = uniform_friction(m.n(), 0.8, 1.2, 0.4, 0.1, 25.0);
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    plant::JointState x{random_vector(rng, m.n(), -1.5, 1.5),
                        random_vector(rng, m.n(), -1.0, 1.0)};
    VectorXd u = random_vector(rng, m.n(), -20, 20);
    Vector6d F_h;
    for (int i = 0; i < 6; ++i) F_h[i] = rng.uniform(-15, 15);
    auto dx = plant::plant_derivative(m, x, u, F_h, p);
    const VectorXd residual =
        rbd::mass_matrix(m, x.q) * dx.qdd + rbd::coriolis_matrix(m, x.q, x.qd) * x.qd +
        rbd::gravity_vector(m, x.q) + plant::friction_torque(x.qd, p) - u -
        rbd::jacobian(m, x.q).transpose() * F_h;
    CHECK(residual.lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("rk4: zero derivative leaves the state unchanged") {
  VectorXd y = VectorXd::LinSpaced(5, -1.0, 1.0);
  auto f = [](double, const VectorXd& s) { return VectorXd::Zero(s.size()).eval(); };
  CHECK(plant::rk4_step(f, y, 0.0, 0.01) == y);
}

TEST_CASE("rk4: linear decay matches the degree-4 Taylor polynomial") {
  VectorXd y(1);
  y << 2.0;
  const double dt = 0.01;
  auto f = [](double, const VectorXd& s) { return (-s).eval(); };
  VectorXd y1 = plant::rk4_step(f, y, 0.0, dt);
  const double factor = 1.0 - dt + dt * dt / 2 - dt * dt * dt / 6 + dt * dt * dt * dt / 24;
  CHECK(y1[0] == doctest::Approx(2.0 * factor).epsilon(1e-14));
  CHECK(std::abs(y1[0] - 2.0 * std::exp(-dt)) < 1e-10 * 2.0);
}

TEST_CASE("rk4: ten seconds at ten milliseconds is exactly 1000 steps") {
  int steps = 0;
  VectorXd y(1);
  y << 0.0;
  auto f = [](double, const VectorXd&) { return VectorXd::Ones(1).eval(); };
  for (double t = 0.0; steps * 0.01 < 10.0 - 1e-12; ++steps, t = steps * 0.01)
    y = plant::rk4_step(f, y, t, 0.01);
  CHECK(steps == 1000);
  CHECK(y[0] == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("rk4: faults on a non-finite derivative with the component named") {
  VectorXd y = VectorXd::Zero(3);
  auto f = [](double, const VectorXd& s) {
    VectorXd d = VectorXd::Zero(s.size());
    d[1] = std::numeric_limits<double>::quiet_NaN();
    return d;
  };
  CHECK_THROWS_WITH_AS(plant::rk4_step(f, y, 0.0, 0.01),
                       doctest::Contains("component 1"), Fault);
}

TEST_CASE("rk4: kinetic-energy drift on a zero-gravity coast") {
  auto m = default_robot();
  m.gravity.setZero();
  auto p = plant::FrictionParams::zero(m.n());
  VectorXd q(7), qd(7);
  q << 0.2, -0.9, 1.1, -0.4, 0.6, -1.0, 0.3;
  qd << 0.3, -0.2, 0.25, 0.3, -0.3, 0.2, -0.25;
  auto f = [&](double, const VectorXd& y) {
    plant::JointState x{y.head(7), y.tail(7)};
    auto dx = plant::plant_derivative(m, x, VectorXd::Zero(7), Vector6d::Zero(), p);
    VectorXd out(14);
    out.head(7) = dx.qd;
    out.tail(7) = dx.qdd;
    return out;
  };
  VectorXd y(14);
  y.head(7) = q;
  y.tail(7) = qd;
  const double e0 = 0.5 * qd.dot(rbd::mass_matrix(m, q) * qd);
  for (int k = 0; k < 1000; ++k) y = plant::rk4_step(f, y, k * 0.01, 0.01);
  const double e1 =
      0.5 * y.tail(7).dot(rbd::mass_matrix(m, y.head(7)) * y.tail(7));
  CHECK(std::abs(e1 - e0) <= 1e-6 * e0);
}

TEST_SUITE_END();
