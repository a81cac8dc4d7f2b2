/**
 * @file rbd.hpp
 * @brief Kinematics and rigid-body dynamics of an n-DOF serial revolute chain.
 *
 * Supplies M(q), C(q,qd), G(q), forward kinematics, the geometric Jacobian
 * and its time derivative. All quantities are exact closed forms built from
 * the world-frame joint axes and frame origins of a standard-DH chain, so
 * the Christoffel construction of C keeps Mdot - 2C skew-symmetric.
 */

#ifndef SAIL_RBD_HPP_
#define SAIL_RBD_HPP_

#include "sail/common.hpp"

#include <string>
#include <vector>

namespace sail::rbd {

/**
 * @brief One link of a serial revolute chain, standard (distal) DH.
 *
 * Link transform: T_i = RotZ(theta_offset + q_i) * TransZ(d) * TransX(a) * RotX(alpha).
 */
struct Link {
  double a = 0.0;             ///< DH link length [m]
  double alpha = 0.0;         ///< DH twist [rad]
  double d = 0.0;             ///< DH offset [m]
  double theta_offset = 0.0;  ///< joint-angle offset [rad]
  double mass = 0.0;          ///< link mass [kg]
  Vector3d com = Vector3d::Zero();           ///< center of mass, link frame [m]
  Matrix3d inertia = Matrix3d::Identity();   ///< rotational inertia, link frame [kg m^2]
};

/// Kinematic/dynamic description of an n-DOF serial revolute chain.
struct RobotModel {
  std::vector<Link> links;
  Vector3d gravity = Vector3d(0, 0, -9.81);  ///< world frame [m/s^2]

  int n() const { return static_cast<int>(links.size()); }

  /// Throws ConfigError unless masses > 0, inertias symmetric PD, n >= 1.
  void validate() const;
};

/// End-effector pose: position and scalar-first unit quaternion.
struct Pose {
  Vector3d position = Vector3d::Zero();
  Quaterniond orientation = Quaterniond::Identity();  // (w, x, y, z)
};

/// World-frame frame data at a configuration q, shared by the kinematics
/// and dynamics routines.
struct FrameCache {
  std::vector<Vector3d> axis;      ///< joint axis a_j (z of frame j-1), size n
  std::vector<Vector3d> origin;    ///< axis point o_j (origin of frame j-1), size n
  std::vector<Vector3d> com;       ///< world COM of link j, size n
  std::vector<Matrix3d> rot;       ///< world rotation of link frame j, size n
  Vector3d ee_position = Vector3d::Zero();
  Matrix3d ee_rotation = Matrix3d::Identity();
};

FrameCache compute_frames(const RobotModel& model, const VectorXd& q);

Pose forward_kinematics(const RobotModel& model, const VectorXd& q);

/// Geometric Jacobian, linear velocity on rows 0-2, angular on rows 3-5.
MatrixXd jacobian(const RobotModel& model, const VectorXd& q);

/// Time derivative of the geometric Jacobian along qd.
MatrixXd jacobian_dot(const RobotModel& model, const VectorXd& q, const VectorXd& qd);

/// Symmetric positive-definite joint-space inertia matrix.
MatrixXd mass_matrix(const RobotModel& model, const VectorXd& q);

/// All n partial derivatives dM/dq_k (exact, not finite differences).
std::vector<MatrixXd> mass_matrix_partials(const RobotModel& model, const VectorXd& q);

/// Coriolis matrix from Christoffel symbols of M, so that Mdot - 2C is
/// skew-symmetric.
MatrixXd coriolis_matrix(const RobotModel& model, const VectorXd& q, const VectorXd& qd);

/// Gravity torque G(q) = d(potential energy)/dq.
VectorXd gravity_vector(const RobotModel& model, const VectorXd& q);

/// Gravitational potential energy (used by the gradient oracle).
double potential_energy(const RobotModel& model, const VectorXd& q);

/**
 * @brief Randomly scale masses, COM components and principal inertias.
 *
 * Each parameter gets an independent uniform factor in [1-level, 1+level].
 * Deterministic for a fixed seed. Links whose scaled inertia loses positive
 * definiteness are resampled; after a bounded number of attempts a Fault is
 * raised.
 */
RobotModel perturb_model(const RobotModel& model, double level, std::uint64_t seed);

/// Load a robot description file (JSON; see data/ for the schema).
RobotModel load_robot(const std::string& path);

}  // namespace sail::rbd

#endif  // SAIL_RBD_HPP_
