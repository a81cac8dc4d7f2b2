/**
 * @file impedance.hpp
 * @brief Task-space impedance model and its joint-space realization:
 *        adaptive damped least-squares inverse, singularity-consistent
 *        acceleration projection and null-space damping.
 */

#ifndef SAIL_IMPEDANCE_HPP_
#define SAIL_IMPEDANCE_HPP_

#include "sail/common.hpp"
#include "sail/rbd.hpp"

namespace sail::impedance {

/// Desired task-space inertia / damping / stiffness.
struct ImpedanceParams {
  Matrix6d M_d = Matrix6d::Identity();
  Matrix6d B_d = Matrix6d::Identity();
  Matrix6d K_d = Matrix6d::Identity();

  void validate() const;
};

struct DlsConfig {
  double k_max = 0.01;    ///< peak damping
  double alpha_s = 50.0;  ///< sigmoid sharpness
  double sigma_low = 0.01;   ///< full singularity weighting below this
  double sigma_high = 0.05;  ///< no singularity weighting above this
  MatrixXd K_damp;        ///< null-space damping gain (n x n PD)

  void validate() const;
};

/// Joint-space impedance trajectory; the task-space pose/twist are derived
/// from (q_imp, qd_imp) by forward kinematics when needed.
struct ImpedanceTrajectory {
  VectorXd q_imp;
  VectorXd qd_imp;
};

/// 6-vector task error z_d - z: position difference on rows 0-2, vector part
/// of the error quaternion q_d * q^{-1} (scalar part >= 0) on rows 3-5.
Vector6d task_error(const rbd::Pose& z_d, const rbd::Pose& z);

/// Impedance-model error acceleration: edd = M_d^{-1} (F_h - B_d ed - K_d e).
Vector6d impedance_accel(const Vector6d& e_imp, const Vector6d& ed_imp,
                         const Vector6d& F_h, const ImpedanceParams& p);

/// Cosine-blend singularity weights in [0,1], element-wise over singular values.
Vector6d singularity_weights(const Vector6d& sigmas, const DlsConfig& cfg);

/// SVD pieces of a Jacobian, reused by the DLS inverse and the projection.
struct JacobianSvd {
  Matrix6d U;
  MatrixXd V;        // n x 6
  Vector6d sigmas;
};

JacobianSvd jacobian_svd(const MatrixXd& J);

/// Damped least-squares inverse with per-direction sigmoid damping
/// k_i = k_max * 2 / (1 + exp(alpha_s * sigma_i)).
MatrixXd dls_inverse(const MatrixXd& J, const DlsConfig& cfg);
MatrixXd dls_inverse(const JacobianSvd& svd, const DlsConfig& cfg);

/// Removes weighted components of zdd along near-singular output directions.
Vector6d project_singular(const Vector6d& zdd, const Matrix6d& U, const Vector6d& w);

/// Joint impedance acceleration
///   qdd_imp = Jdls (zdd_bar - Jdot qd_imp) - (I - Jdls J) K_damp qd_imp.
VectorXd impedance_joint_accel(const ImpedanceTrajectory& traj, const Vector6d& zdd_bar,
                               const MatrixXd& J, const MatrixXd& Jdot,
                               const DlsConfig& cfg);

}  // namespace sail::impedance

#endif  // SAIL_IMPEDANCE_HPP_
