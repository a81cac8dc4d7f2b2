#include "sail/impedance.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace sail::impedance {

namespace {

void require_spd(const Matrix6d& A, const char* name) {
  if ((A - A.transpose()).norm() > 1e-9 * std::max(1.0, A.norm()))
    throw ConfigError(std::string(name) + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(A);
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw ConfigError(std::string(name) + " must be positive-definite");
}

}  // namespace

void ImpedanceParams::validate() const {
  require_spd(M_d, "M_d");
  require_spd(B_d, "B_d");
  require_spd(K_d, "K_d");
}

void DlsConfig::validate() const {
  if (!(k_max > 0.0)) throw ConfigError("DLS requires k_max > 0");
  if (!(alpha_s > 0.0)) throw ConfigError("DLS requires alpha_s > 0");
  if (!(sigma_low > 0.0 && sigma_low < sigma_high))
    throw ConfigError("DLS requires 0 < sigma_low < sigma_high");
  if (K_damp.rows() != K_damp.cols() || K_damp.rows() == 0)
    throw ConfigError("K_damp must be square and non-empty");
}

Vector6d task_error(const rbd::Pose& z_d, const rbd::Pose& z) {
  Vector6d e;
  e.head<3>() = z_d.position - z.position;
  Quaterniond err = z_d.orientation * z.orientation.conjugate();
  if (err.w() < 0.0) err.coeffs() *= -1.0;  // avoid unwinding
  e.tail<3>() = err.vec();
  return e;
}

Vector6d impedance_accel(const Vector6d& e_imp, const Vector6d& ed_imp,
                         const Vector6d& F_h, const ImpedanceParams& p) {
  return p.M_d.ldlt().solve(F_h - p.B_d * ed_imp - p.K_d * e_imp);
}

Vector6d singularity_weights(const Vector6d& sigmas, const DlsConfig& cfg) {
  Vector6d w;
  for (int i = 0; i < 6; ++i) {
    const double s = sigmas[i];
    if (s >= cfg.sigma_high) {
      w[i] = 0.0;
    } else if (s <= cfg.sigma_low) {
      w[i] = 1.0;
    } else {
      w[i] = 0.5 * (1.0 + std::cos(M_PI * (s - cfg.sigma_low) /
                                   (cfg.sigma_high - cfg.sigma_low)));
    }
  }
  return w;
}

JacobianSvd jacobian_svd(const MatrixXd& J) {
  Eigen::JacobiSVD<MatrixXd> svd(J, Eigen::ComputeFullU | Eigen::ComputeThinV);
  JacobianSvd out;
  out.U = svd.matrixU();
  out.V = svd.matrixV();
  out.sigmas.setZero();
  const auto& sv = svd.singularValues();
  for (int i = 0; i < sv.size() && i < 6; ++i) out.sigmas[i] = sv[i];
  // pad V with zero columns if rank-deficient thin SVD returned fewer than 6
  if (out.V.cols() < 6) {
    MatrixXd V = MatrixXd::Zero(J.cols(), 6);
    V.leftCols(out.V.cols()) = out.V;
    out.V = V;
  }
  return out;
}

MatrixXd dls_inverse(const JacobianSvd& svd, const DlsConfig& cfg) {
  Vector6d gains;
  for (int i = 0; i < 6; ++i) {
    const double s = svd.sigmas[i];
    const double k_lambda = cfg.k_max * 2.0 / (1.0 + std::exp(cfg.alpha_s * s));
    gains[i] = s / (s * s + k_lambda);
  }
  return svd.V * gains.asDiagonal() * svd.U.transpose();
}

MatrixXd dls_inverse(const MatrixXd& J, const DlsConfig& cfg) {
  return dls_inverse(jacobian_svd(J), cfg);
}

Vector6d project_singular(const Vector6d& zdd, const Matrix6d& U, const Vector6d& w) {
  Vector6d out = zdd;
  for (int i = 0; i < 6; ++i) {
    const Vector6d u_i = U.col(i);
    out -= w[i] * u_i.dot(zdd) * u_i;
  }
  return out;
}

VectorXd impedance_joint_accel(const ImpedanceTrajectory& traj, const Vector6d& zdd_bar,
                               const MatrixXd& J, const MatrixXd& Jdot,
                               const DlsConfig& cfg) {
  const Eigen::Index n = J.cols();
  const MatrixXd Jdls = dls_inverse(J, cfg);
  const VectorXd task = Jdls * (zdd_bar - Jdot * traj.qd_imp);
  const VectorXd null_damp =
      (MatrixXd::Identity(n, n) - Jdls * J) * (cfg.K_damp * traj.qd_imp);
  return task - null_damp;
}

}  // namespace sail::impedance
