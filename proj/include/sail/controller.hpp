/**
 * @file controller.hpp
 * @brief Per-step assembly of the full adaptive safety-filtered impedance
 *        control law and the NIC / AWORM baselines.
 */

#ifndef SAIL_CONTROLLER_HPP_
#define SAIL_CONTROLLER_HPP_

#include "sail/adapt.hpp"
#include "sail/common.hpp"
#include "sail/impedance.hpp"
#include "sail/optim.hpp"
#include "sail/plant.hpp"
#include "sail/rbd.hpp"
#include "sail/safety.hpp"

#include <string>
#include <vector>

namespace sail::controller {

enum class Mode { kProposed, kNic, kAworm };

Mode mode_from_string(const std::string& s);
std::string mode_to_string(Mode m);

/// Full online state of the closed loop, integrated jointly by RK4.
struct LoopState {
  VectorXd q, qd;            ///< plant
  VectorXd q_imp, qd_imp;    ///< impedance trajectory
  VectorXd x_ref;            ///< reference model (q_ref, qd_ref), 2n
  VectorXd theta;            ///< FLS weights, 405 n
  VectorXd w_hat;            ///< SMC bound estimates, n
  VectorXd ell_c, ell_o;     ///< DOB internal states, n

  VectorXd flatten() const;
  static LoopState unflatten(const VectorXd& y, int n);
  static int flat_size(int n) { return 9 * n + adapt::kWeightsPerJoint * n; }
};

struct StepDiagnostics {
  VectorXd u;
  VectorXd qdd_cmd, qdd_nom, qdd_s;
  VectorXd s_star;
  VectorXd r, r_imp;
  VectorXd r_adapt;        ///< the signal actually fed to the update laws
  double min_h = 0.0;
  double min_h_velocity = 0.0;
  double min_h_position = 0.0;
  double f_max = std::numeric_limits<double>::quiet_NaN();
  double f_theta = 0.0;    ///< projection activity
  double min_sigma = 0.0;  ///< smallest Jacobian singular value at q_imp
  int qp_iterations = 0;
  double qp_kkt_residual = 0.0;
  bool hard_feasible = true;
  bool fls_underflow = false;
};

/// Derivatives of every controller-internal state (plant handled separately).
struct ControllerDerivatives {
  VectorXd qd_imp, qdd_imp;
  VectorXd x_ref_dot;
  VectorXd theta_dot;
  VectorXd w_hat_dot;
  VectorXd ell_c_dot, ell_o_dot;
};

struct StepResult {
  VectorXd u;
  ControllerDerivatives deriv;
  StepDiagnostics diag;
};

/// Everything the controller is configured with. The nominal model carries
/// the perturbed dynamic parameters; its kinematics coincide with the true
/// chain (only inertial parameters are uncertain).
struct ControllerConfig {
  rbd::RobotModel model_hat;
  impedance::ImpedanceParams impedance;
  impedance::DlsConfig dls;
  safety::JointLimits limits;
  safety::SafetyConfig safety;
  adapt::FlsConfig fls;
  adapt::AdaptGains gains;
  optim::CommandQpConfig qp;
  VectorXd tau_min, tau_max;
  rbd::Pose z_d;
  Mode mode = Mode::kProposed;

  void validate() const;
};

/// One controller instance per simulation run. Owns the QP warm-start cache;
/// everything else is pure in the state snapshot.
class Controller {
public:
  explicit Controller(ControllerConfig cfg);

  /// Evaluate the control law at a state snapshot. The flags additionally
  /// compute the hard-feasibility certificate (one LP) and the wrench metric
  /// (six LPs); used on logging evaluations only.
  StepResult eval(const LoopState& s, double t, const Vector6d& F_h,
                  bool want_hard_feasible = false, bool want_fmax = false);

  const ControllerConfig& config() const { return cfg_; }

private:
  StepResult eval_nic(const LoopState& s, const Vector6d& F_h);

  ControllerConfig cfg_;
  std::vector<int> warm_working_set_;
};

/// PD coupling of the impedance trajectory to the plant.
VectorXd nominal_accel(const plant::JointState& x, const VectorXd& q_imp,
                       const VectorXd& qd_imp, const VectorXd& qdd_imp,
                       const adapt::AdaptGains& g);

/// tau_base = tau_h - C_hat qd - G_hat - M_hat (qdd_s - d_hat_c - f_hat).
VectorXd base_torque(const MatrixXd& M_hat, const MatrixXd& C_hat,
                     const VectorXd& G_hat, const VectorXd& tau_h,
                     const plant::JointState& x, const VectorXd& qdd_s,
                     const VectorXd& d_hat_c, const VectorXd& f_hat);

}  // namespace sail::controller

#endif  // SAIL_CONTROLLER_HPP_
