#include "sail/impedance.hpp"

#include <doctest.h>

#include "test_util.hpp"

#include <cmath>

using namespace sail;
using namespace testutil;

TEST_SUITE_BEGIN("impedance");

namespace {

impedance::DlsConfig dls_cfg(int n) {
  impedance::DlsConfig cfg;
  cfg.K_damp = 5.0 * MatrixXd::Identity(n, n);
  return cfg;
}

}  // namespace

TEST_CASE("task error: identical poses") {
  rbd::Pose a;
  a.position << 0.3, -0.2, 0.5;
  a.orientation = Quaterniond(Eigen::AngleAxisd(0.7, Vector3d(1, 2, 3).normalized()));
  CHECK(impedance::task_error(a, a).norm() <= 1e-15);
}

TEST_CASE("task error: pure 90 degree z-rotation") {
  rbd::Pose z_d, z;
  z_d.orientation = Quaterniond(Eigen::AngleAxisd(M_PI / 2, Vector3d::UnitZ()));
  Vector6d e = impedance::task_error(z_d, z);
  CHECK(e.head<3>().norm() == 0.0);
  CHECK(e[3] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(e[4] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(e[5] == doctest::Approx(std::sin(M_PI / 4)).epsilon(1e-12));
}

TEST_CASE("task error: antipodal quaternions give zero orientation error") {
  rbd::Pose z_d, z;
  z_d.orientation = Quaterniond(Eigen::AngleAxisd(0.4, Vector3d::UnitX()));
  z.orientation = Quaterniond(-z_d.orientation.w(), -z_d.orientation.x(),
                              -z_d.orientation.y(), -z_d.orientation.z());
  CHECK(impedance::task_error(z_d, z).norm() <= 1e-14);
}

TEST_CASE("impedance accel: equilibrium at zero error and zero force") {
  impedance::ImpedanceParams p;
  CHECK(impedance::impedance_accel(Vector6d::Zero(), Vector6d::Zero(),
                                   Vector6d::Zero(), p)
            .norm() == 0.0);
}

TEST_CASE("impedance accel: steady state under a constant 20 N step is 20/49") {
  impedance::ImpedanceParams p;
  p.M_d = Matrix6d::Identity();
  p.K_d = Matrix6d::Identity();
  p.B_d = Matrix6d::Identity();
  p.K_d.topLeftCorner(3, 3) = 49.0 * Matrix3d::Identity();
  p.K_d.bottomRightCorner(3, 3) = 16.0 * Matrix3d::Identity();
  p.B_d.topLeftCorner(3, 3) = 49.0 * Matrix3d::Identity();
  p.B_d.bottomRightCorner(3, 3) = 12.0 * Matrix3d::Identity();
  Vector6d F = Vector6d::Zero();
  F[0] = 20.0;
  // integrate the 6-dof error ODE for ten time constants of the slow pole
  Vector6d e = Vector6d::Zero(), ed = Vector6d::Zero();
  const double dt = 1e-4;
  for (double t = 0.0; t < 10.0; t += dt) {
    Vector6d edd = impedance::impedance_accel(e, ed, F, p);
    e += dt * ed + 0.5 * dt * dt * edd;
    ed += dt * edd;
  }
  CHECK(e[0] == doctest::Approx(20.0 / 49.0).epsilon(1e-3));
  CHECK(std::abs(e[1]) < 1e-6);
}

TEST_CASE("impedance accel: linear in the applied wrench") {
  impedance::ImpedanceParams p;
  p.M_d = 2.0 * Matrix6d::Identity();
  Rng rng(5);
  Vector6d e, ed, F;
  for (int i = 0; i < 6; ++i) {
    e[i] = rng.uniform(-1, 1);
    ed[i] = rng.uniform(-1, 1);
    F[i] = rng.uniform(-10, 10);
  }
  Vector6d a1 = impedance::impedance_accel(e, ed, F, p);
  Vector6d a2 = impedance::impedance_accel(e, ed, Vector6d(2 * F), p);
  CHECK((a2 - a1 - p.M_d.inverse() * F).norm() <= 1e-12);
}

TEST_CASE("singularity weights: boundary and midpoint values") {
  auto cfg = dls_cfg(7);
  Vector6d s;
  s << cfg.sigma_high, cfg.sigma_low, 0.5 * (cfg.sigma_low + cfg.sigma_high), 1.0,
      0.0, 0.03;
  Vector6d w = impedance::singularity_weights(s, cfg);
  CHECK(w[0] == 0.0);
  CHECK(w[1] == 1.0);
  CHECK(w[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w[3] == 0.0);
  CHECK(w[4] == 1.0);
  CHECK(w[5] > 0.0);
  CHECK(w[5] < 1.0);
}

TEST_CASE("singularity weights: monotone non-increasing over a grid") {
  auto cfg = dls_cfg(7);
  double prev = 2.0;
  for (int k = 0; k <= 200; ++k) {
    Vector6d s = Vector6d::Constant(k * 0.001);
    const double w = impedance::singularity_weights(s, cfg)[0];
    CHECK(w <= prev + 1e-15);
    CHECK(w >= 0.0);
    CHECK(w <= 1.0);
    prev = w;
  }
}

TEST_CASE("dls inverse: full damping exactly at sigma = 0") {
  auto cfg = dls_cfg(2);
  // J with one zero singular value
  MatrixXd J = MatrixXd::Zero(6, 2);
  J(0, 0) = 1.0;
  MatrixXd Ji = impedance::dls_inverse(J, cfg);
  // the zero-sigma directions contribute nothing (0/(0+k_max))
  CHECK(Ji.row(1).norm() <= 1e-12);
  CHECK(Ji(0, 0) == doctest::Approx(1.0 / (1.0 + cfg.k_max * 2.0 /
                                                     (1.0 + std::exp(cfg.alpha_s))))
                        .epsilon(1e-9));
}

TEST_CASE("dls inverse: reconstruction on the row space away from singularity") {
  auto cfg = dls_cfg(7);
  cfg.k_max = 0.1;
  cfg.alpha_s = 10.0;
  // diagonal-like J with singular values (2, 1, 1, 1, 1, 1)
  MatrixXd J = MatrixXd::Zero(6, 7);
  J(0, 0) = 2.0;
  for (int i = 1; i < 6; ++i) J(i, i) = 1.0;
  MatrixXd Ji = impedance::dls_inverse(J, cfg);
  Rng rng(77);
  VectorXd qd = random_vector(rng, 7, -1, 1);
  qd[6] = 0.0;  // row space of J
  VectorXd v = Ji * (J * qd);
  CHECK((v - qd).norm() <= 1e-3 * std::max(1.0, qd.norm()));
}

TEST_CASE("dls inverse: bounded through a sigma sweep to zero") {
  auto cfg = dls_cfg(1);
  for (double sigma = 1e-6; sigma <= 1.0; sigma *= 2.0) {
    MatrixXd J = MatrixXd::Zero(6, 1);
    J(0, 0) = sigma;
    MatrixXd Ji = impedance::dls_inverse(J, cfg);
    const double k = cfg.k_max * 2.0 / (1.0 + std::exp(cfg.alpha_s * sigma));
    CHECK(std::isfinite(Ji.norm()));
    CHECK(Ji.norm() <= sigma / (sigma * sigma + k) + 1e-9);
  }
}

TEST_CASE("project singular: zero weights are the identity") {
  Rng rng(9);
  Vector6d zdd;
  for (int i = 0; i < 6; ++i) zdd[i] = rng.uniform(-2, 2);
  Matrix6d U = Matrix6d::Identity();
  CHECK((impedance::project_singular(zdd, U, Vector6d::Zero()) - zdd).norm() == 0.0);
}

TEST_CASE("project singular: full weights annihilate the command") {
  Rng rng(10);
  Vector6d zdd;
  for (int i = 0; i < 6; ++i) zdd[i] = rng.uniform(-2, 2);
  // any orthogonal U spans R^6
  Eigen::HouseholderQR<Matrix6d> qr(Matrix6d::Random());
  Matrix6d U = qr.householderQ();
  CHECK(impedance::project_singular(zdd, U, Vector6d::Ones()).norm() <= 1e-12);
}

TEST_CASE("project singular: single weight removes exactly that direction") {
  Rng rng(11);
  Vector6d zdd;
  for (int i = 0; i < 6; ++i) zdd[i] = rng.uniform(-2, 2);
  Eigen::HouseholderQR<Matrix6d> qr(Matrix6d::Random());
  Matrix6d U = qr.householderQ();
  Vector6d w = Vector6d::Zero();
  w[0] = 1.0;
  Vector6d out = impedance::project_singular(zdd, U, w);
  CHECK(std::abs(U.col(0).dot(out)) <= 1e-12);
  CHECK(std::abs(U.col(1).dot(out) - U.col(1).dot(zdd)) <= 1e-12);
}

TEST_CASE("impedance joint accel: at rest with no task acceleration") {
  auto m = default_robot();
  VectorXd q(7);
  q << 0, -1.0, 1.0, -0.5, 0.5, -1.2, 0;
  auto cfg = dls_cfg(7);
  impedance::ImpedanceTrajectory traj{q, VectorXd::Zero(7)};
  MatrixXd J = rbd::jacobian(m, q);
  MatrixXd Jdot = MatrixXd::Zero(6, 7);
  CHECK(impedance::impedance_joint_accel(traj, Vector6d::Zero(), J, Jdot, cfg)
            .norm() <= 1e-12);
}

TEST_CASE("impedance joint accel: null-space damping stays in the kernel of J") {
  auto m = default_robot();
  VectorXd q(7);
  q << 0.3, -0.8, 0.9, -0.6, 0.4, -1.0, 0.2;
  auto cfg = dls_cfg(7);
  cfg.k_max = 1e-9;  // negligible damping so Jdls J is a clean projector
  MatrixXd J = rbd::jacobian(m, q);
  // build a null-space velocity
  Eigen::JacobiSVD<MatrixXd> svd(J, Eigen::ComputeFullV);
  VectorXd null_dir = svd.matrixV().col(6);
  impedance::ImpedanceTrajectory traj{q, null_dir};
  MatrixXd Jdot = MatrixXd::Zero(6, 7);
  VectorXd qdd = impedance::impedance_joint_accel(traj, Vector6d::Zero(), J, Jdot, cfg);
  // the damping acceleration must not excite the task space
  CHECK((J * qdd).norm() <= 1e-6 * std::max(1.0, qdd.norm()));
  // and it opposes the null-space velocity
  CHECK(qdd.dot(null_dir) < 0.0);
}

TEST_SUITE_END();
