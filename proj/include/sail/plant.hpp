/**
 * @file plant.hpp
 * @brief Ground-truth simulation: true dynamics with friction, interaction
 *        wrench profile, and fixed-step RK4 integration.
 */

#ifndef SAIL_PLANT_HPP_
#define SAIL_PLANT_HPP_

#include "sail/common.hpp"
#include "sail/rbd.hpp"

#include <functional>

namespace sail::plant {

struct JointState {
  VectorXd q;   ///< [rad]
  VectorXd qd;  ///< [rad/s]
};

/// Stribeck + Coulomb + viscous friction, smoothed with tanh.
struct FrictionParams {
  VectorXd f_c;      ///< Coulomb level [N m]
  VectorXd f_s;      ///< static level [N m], f_s >= f_c
  VectorXd f_v;      ///< viscous coefficient [N m s/rad]
  VectorXd v_s;      ///< Stribeck velocity [rad/s]
  double kappa_f = 25.0;  ///< tanh sharpness [s/rad]

  void validate() const;
  static FrictionParams zero(int n);
};

/// Half-sine pulse with a Gaussian envelope, zero outside [t0, t1].
struct WrenchProfile {
  Vector6d peak = Vector6d::Zero();  ///< [N, N, N, N m, N m, N m]
  double t0 = 0.0;                   ///< window start [s]
  double t1 = 0.0;                   ///< window end [s]
  double envelope_width = 0.5;       ///< Gaussian width [s]

  void validate() const;
};

VectorXd friction_torque(const VectorXd& qd, const FrictionParams& p);

Vector6d wrench_at(double t, const WrenchProfile& w);

struct StateDerivative {
  VectorXd qd;
  VectorXd qdd;
};

/// qdd = M^{-1} (u + J^T F_h - C qd - G - tau_fric). Faults if M is
/// numerically singular (condition number above 1e12).
StateDerivative plant_derivative(const rbd::RobotModel& model, const JointState& x,
                                 const VectorXd& u, const Vector6d& F_h,
                                 const FrictionParams& p);

/// Classical 4th-order Runge-Kutta step of an arbitrary flattened state.
/// The derivative map is re-evaluated at every stage state. Faults with the
/// offending component index on a non-finite derivative.
VectorXd rk4_step(const std::function<VectorXd(double, const VectorXd&)>& derivative,
                  const VectorXd& state, double t, double dt);

}  // namespace sail::plant

#endif  // SAIL_PLANT_HPP_
