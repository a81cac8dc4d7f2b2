#include "sail/rbd.hpp"

#include <doctest.h>

#include "test_util.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

using namespace sail;
using namespace testutil;

namespace {

// Independent forward-kinematics oracle: plain product of standard-DH
// homogeneous transforms, written without reference to the library path.
Matrix4d oracle_dh(double a, double alpha, double d, double theta) {
  Matrix4d T = Matrix4d::Identity();
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  T(0, 0) = ct; T(0, 1) = -st * ca; T(0, 2) = st * sa; T(0, 3) = a * ct;
  T(1, 0) = st; T(1, 1) = ct * ca; T(1, 2) = -ct * sa; T(1, 3) = a * st;
  T(2, 1) = sa; T(2, 2) = ca; T(2, 3) = d;
  return T;
}

Matrix4d oracle_fk(const rbd::RobotModel& m, const VectorXd& q) {
  Matrix4d T = Matrix4d::Identity();
  for (int i = 0; i < m.n(); ++i) {
    const rbd::Link& L = m.links[i];
    T = T * oracle_dh(L.a, L.alpha, L.d, L.theta_offset + q[i]);
  }
  return T;
}

}  // namespace

TEST_SUITE_BEGIN("rbd");

TEST_CASE("forward kinematics: single link along x") {
  auto m = single_link(0.7, 1.0, 0.01);
  VectorXd q = VectorXd::Zero(1);
  auto pose = rbd::forward_kinematics(m, q);
  CHECK(pose.position.isApprox(Vector3d(0.7, 0, 0), 1e-12));
  CHECK(std::abs(pose.orientation.w() - 1.0) < 1e-12);
}

TEST_CASE("forward kinematics: 2*pi periodicity") {
  auto m = default_robot();
  Rng rng(7);
  VectorXd q = random_vector(rng, m.n(), -1.5, 1.5);
  VectorXd q2 = q;
  q2[3] += 2.0 * M_PI;
  auto pa = rbd::forward_kinematics(m, q);
  auto pb = rbd::forward_kinematics(m, q2);
  CHECK((pa.position - pb.position).norm() < 1e-12);
  CHECK(std::abs(std::abs(pa.orientation.dot(pb.orientation)) - 1.0) < 1e-12);
}

TEST_CASE("forward kinematics: default chain matches transform-chain oracle") {
  auto m = default_robot();
  VectorXd q(7);
  q << 0, -1.0, 1.0, -0.5, 0.5, -1.2, 0;
  const Matrix4d T = oracle_fk(m, q);
  auto pose = rbd::forward_kinematics(m, q);
  CHECK(pose.position.isApprox(Vector3d(T.block<3, 1>(0, 3)), 1e-10));
  const Matrix3d R = pose.orientation.toRotationMatrix();
  CHECK((R - T.block<3, 3>(0, 0)).norm() < 1e-10);
}

TEST_CASE("jacobian: single revolute joint lever arm") {
  auto m = single_link(0.7, 1.0, 0.01);
  VectorXd q = VectorXd::Zero(1);
  MatrixXd J = rbd::jacobian(m, q);
  CHECK(J.block<3, 1>(0, 0).isApprox(Vector3d(0, 0.7, 0), 1e-12));
  CHECK(J.block<3, 1>(3, 0).isApprox(Vector3d(0, 0, 1), 1e-12));
}

TEST_CASE("jacobian: finite-difference oracle on position rows") {
  auto m = default_robot();
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    VectorXd q = random_vector(rng, m.n(), -1.2, 1.2);
    VectorXd qd = random_vector(rng, m.n(), -1.0, 1.0);
    const double eps = 1e-7;
    const Vector3d p0 = rbd::forward_kinematics(m, q).position;
    const Vector3d p1 = rbd::forward_kinematics(m, q + eps * qd).position;
    const Vector3d fd = (p1 - p0) / eps;
    const Vector3d lin = rbd::jacobian(m, q).topRows(3) * qd;
    CHECK((fd - lin).norm() < 1e-6 * std::max(1.0, lin.norm()));
  }
}

TEST_CASE("jacobian: duplicate-axis chain is singular when stretched") {
  auto m = planar_two_link(0.5, 0.5, 1.0, 1.0);
  VectorXd q = VectorXd::Zero(2);
  MatrixXd Jp = rbd::jacobian(m, q).topRows(3);
  Eigen::JacobiSVD<MatrixXd> svd(Jp);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > 1e-10) ++rank;
  CHECK(rank < 2);
}

TEST_CASE("jacobian_dot: zero velocity gives zero") {
  auto m = default_robot();
  Rng rng(3);
  VectorXd q = random_vector(rng, m.n(), -1.2, 1.2);
  CHECK(rbd::jacobian_dot(m, q, VectorXd::Zero(m.n())).norm() == 0.0);
}

TEST_CASE("jacobian_dot: central finite-difference oracle") {
  auto m = default_robot();
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    VectorXd q = random_vector(rng, m.n(), -1.2, 1.2);
    VectorXd qd = random_vector(rng, m.n(), -1.0, 1.0);
    const double eps = 1e-6;
    MatrixXd Jp = rbd::jacobian(m, q + eps * qd);
    MatrixXd Jm = rbd::jacobian(m, q - eps * qd);
    MatrixXd fd = (Jp - Jm) / (2.0 * eps);
    MatrixXd Jd = rbd::jacobian_dot(m, q, qd);
    CHECK((fd - Jd).norm() < 1e-5 * std::max(1.0, Jd.norm()));
  }
}

TEST_CASE("jacobian_dot: single joint column rotates with the joint rate") {
  auto m = single_link(0.7, 1.0, 0.01);
  VectorXd q(1), qd(1);
  q << 0.3;
  qd << 2.0;
  // linear column is w x p with p rotating at rate qd
  MatrixXd Jd = rbd::jacobian_dot(m, q, qd);
  const Vector3d p(0.7 * std::cos(0.3), 0.7 * std::sin(0.3), 0);
  const Vector3d z(0, 0, 1);
  const Vector3d expected = z.cross(z.cross(p) * qd[0]);
  CHECK((Vector3d(Jd.block<3, 1>(0, 0)) - expected).norm() < 1e-12);
  CHECK(Jd.block<3, 1>(3, 0).norm() < 1e-12);
}

TEST_CASE("mass matrix: scalar pendulum value") {
  const double L = 0.8, mass = 2.0, izz = 0.05;
  auto m = single_link(L, mass, izz);
  VectorXd q = VectorXd::Zero(1);
  MatrixXd M = rbd::mass_matrix(m, q);
  CHECK(M(0, 0) == doctest::Approx(izz + mass * L * L).epsilon(1e-10));
}

TEST_CASE("mass matrix: symmetric positive-definite at random configurations") {
  auto m = default_robot();
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    VectorXd q = random_vector(rng, m.n(), -2.0, 2.0);
    MatrixXd M = rbd::mass_matrix(m, q);
    CHECK((M - M.transpose()).norm() <= 1e-10);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("coriolis: zero velocity gives zero matrix") {
  auto m = default_robot();
  Rng rng(17);
  VectorXd q = random_vector(rng, m.n(), -1.5, 1.5);
  CHECK(rbd::coriolis_matrix(m, q, VectorXd::Zero(m.n())).norm() == 0.0);
}

TEST_CASE("coriolis: Mdot - 2C skew-symmetry against finite-difference Mdot") {
  auto m = default_robot();
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    VectorXd q = random_vector(rng, m.n(), -1.5, 1.5);
    VectorXd qd = random_vector(rng, m.n(), -1.0, 1.0);
    const double eps = 1e-6;
    MatrixXd Mdot =
        (rbd::mass_matrix(m, q + eps * qd) - rbd::mass_matrix(m, q - eps * qd)) /
        (2.0 * eps);
    MatrixXd S = Mdot - 2.0 * rbd::coriolis_matrix(m, q, qd);
    CHECK((S + S.transpose()).norm() <= 1e-8);
  }
}

TEST_CASE("coriolis: energy balance on a one-second free swing") {
  auto m = default_robot();
  VectorXd q(7), qd(7);
  q << 0.2, -0.9, 1.1, -0.4, 0.6, -1.0, 0.3;
  qd.setZero();
  const double dt = 1e-3;
  double energy0 = 0.5 * qd.dot(rbd::mass_matrix(m, q) * qd) + rbd::potential_energy(m, q);
  // RK4 on (q, qd) with u = 0, no friction
  auto deriv = [&](const VectorXd& y) {
    VectorXd qq = y.head(7), vv = y.tail(7);
    MatrixXd M = rbd::mass_matrix(m, qq);
    VectorXd rhs = -rbd::coriolis_matrix(m, qq, vv) * vv - rbd::gravity_vector(m, qq);
    VectorXd out(14);
    out.head(7) = vv;
    out.tail(7) = M.ldlt().solve(rhs);
    return out;
  };
  VectorXd y(14);
  y.head(7) = q;
  y.tail(7) = qd;
  for (int k = 0; k < 1000; ++k) {
    VectorXd k1 = deriv(y);
    VectorXd k2 = deriv(y + 0.5 * dt * k1);
    VectorXd k3 = deriv(y + 0.5 * dt * k2);
    VectorXd k4 = deriv(y + dt * k3);
    y += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  VectorXd qf = y.head(7), vf = y.tail(7);
  double energy1 = 0.5 * vf.dot(rbd::mass_matrix(m, qf) * vf) + rbd::potential_energy(m, qf);
  CHECK(std::abs(energy1 - energy0) <= 1e-6 * std::max(1.0, std::abs(energy0)));
}

TEST_CASE("gravity: zero gravity vector gives zero torque") {
  auto m = single_link(0.5, 1.0, 0.01, Vector3d::Zero());
  VectorXd q(1);
  q << 0.7;
  CHECK(rbd::gravity_vector(m, q).norm() == 0.0);
}

TEST_CASE("gravity: textbook pendulum") {
  // joint about z, gravity along -y, COM at distance L
  const double L = 0.6, mass = 1.5;
  auto m = single_link(L, mass, 0.02, Vector3d(0, -9.81, 0));
  VectorXd hanging(1), horizontal(1);
  hanging << -M_PI / 2;
  horizontal << 0.0;
  CHECK(std::abs(rbd::gravity_vector(m, hanging)[0]) < 1e-12);
  CHECK(rbd::gravity_vector(m, horizontal)[0] ==
        doctest::Approx(mass * 9.81 * L).epsilon(1e-10));
}

TEST_CASE("gravity: matches finite-difference gradient of potential energy") {
  auto m = default_robot();
  Rng rng(23);
  VectorXd q = random_vector(rng, m.n(), -1.5, 1.5);
  VectorXd G = rbd::gravity_vector(m, q);
  const double eps = 1e-6;
  for (int i = 0; i < m.n(); ++i) {
    VectorXd qp = q, qm = q;
    qp[i] += eps;
    qm[i] -= eps;
    const double fd =
        (rbd::potential_energy(m, qp) - rbd::potential_energy(m, qm)) / (2 * eps);
    CHECK(G[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("perturb_model: level zero is the identity") {
  auto m = default_robot();
  auto p = rbd::perturb_model(m, 0.0, 42);
  for (int i = 0; i < m.n(); ++i) {
    CHECK(p.links[i].mass == m.links[i].mass);
    CHECK(p.links[i].com == m.links[i].com);
    CHECK(p.links[i].inertia == m.links[i].inertia);
  }
}

TEST_CASE("perturb_model: deterministic for a fixed seed") {
  auto m = default_robot();
  auto a = rbd::perturb_model(m, 0.5, 9001);
  auto b = rbd::perturb_model(m, 0.5, 9001);
  for (int i = 0; i < m.n(); ++i) {
    CHECK(a.links[i].mass == b.links[i].mass);
    CHECK(a.links[i].com == b.links[i].com);
    CHECK(a.links[i].inertia == b.links[i].inertia);
  }
}

TEST_CASE("perturb_model: factors stay inside the +-50% band") {
  auto m = default_robot();
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    auto p = rbd::perturb_model(m, 0.5, seed);
    for (int i = 0; i < m.n(); ++i) {
      CHECK(p.links[i].mass >= 0.5 * m.links[i].mass);
      CHECK(p.links[i].mass <= 1.5 * m.links[i].mass);
    }
    CHECK_NOTHROW(p.validate());
  }
}

TEST_CASE("perturb_model: rejects out-of-range level") {
  auto m = default_robot();
  CHECK_THROWS_AS(rbd::perturb_model(m, 0.95, 1), ConfigError);
}

TEST_CASE("robot file: rejects non-physical models") {
  rbd::RobotModel bad = default_robot();
  bad.links[2].mass = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = default_robot();
  bad.links[2].inertia = -Matrix3d::Identity();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_SUITE_END();
