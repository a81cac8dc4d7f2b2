/**
 * @file adapt.hpp
 * @brief Online learning stack: interval type-2 TSK fuzzy approximator with
 *        Nie-Tan type reduction, projection and sigma-modification update
 *        laws, smooth sliding-mode compensator, disturbance observers, and
 *        the command-driven reference model.
 */

#ifndef SAIL_ADAPT_HPP_
#define SAIL_ADAPT_HPP_

#include "sail/common.hpp"
#include "sail/plant.hpp"

namespace sail::adapt {

inline constexpr int kFlsInputs = 4;      // (sin q, cos q, qd, xi_bar)
inline constexpr int kMfPerInput = 3;
inline constexpr int kRules = 81;         // 3^4
inline constexpr int kConsequents = 5;    // first-order: 1 + 4 inputs
inline constexpr int kWeightsPerJoint = kRules * kConsequents;  // 405

struct FlsConfig {
  double mf_centers[kMfPerInput] = {-1.0, 0.0, 1.0};
  double mf_width = 0.6;       ///< nominal Gaussian width
  double fou_factor = 1.3;     ///< >= 1; upper width = factor * nominal, lower = nominal / factor
  double xi_bar_scale = 10.0;  ///< normalization of the xi_bar input [rad/s^2]

  void validate() const;
};

/// Per-joint 405-entry regressor block: Nie-Tan reduced, normalized firing
/// strengths tensored with the first-order consequent basis (1, xi_1..xi_4).
/// `underflow` flags the uniform fallback when every rule underflowed.
struct RegressorBlock {
  Eigen::Matrix<double, kWeightsPerJoint, 1> zeta;
  bool underflow = false;
};

/// Inputs already normalized to the membership domain.
RegressorBlock it2_regressor(const Eigen::Vector4d& xi, const FlsConfig& cfg);

/// Block-structured FLS output: joint i reads only its own weight block.
/// `zeta` has one column per joint.
VectorXd fls_output(const MatrixXd& zeta, const VectorXd& theta);

struct AdaptGains {
  double gamma_theta = 10.0;   ///< adaptation rate of the FLS weights
  double gamma_w = 5.0;        ///< adaptation rate of the SMC bound estimate
  double sigma_w = 0.0125;     ///< leakage of the w_hat law
  VectorXd eps_smc;            ///< SMC boundary layers, > 0
  double kappa = 0.2785;       ///< Lemma constant: kappa + ln(kappa) = -1
  double theta_bound = 50.0;   ///< Theta
  double eps_proj = 5.0;       ///< projection tolerance epsilon
  double alpha_c = 70.0;       ///< compensation DOB gain
  double alpha_o = 80.0;       ///< safety DOB gain
  VectorXd K_r_diag;           ///< diagonal of K_r
  VectorXd Lambda_diag;        ///< diagonal of Lambda

  void validate() const;
  VectorXd Kv_diag() const { return Lambda_diag + K_r_diag; }
  VectorXd Kp_diag() const { return (K_r_diag.array() * Lambda_diag.array()).matrix(); }
};

/// Convex bounding function of the projection operator.
double proj_bounding(const VectorXd& theta, const AdaptGains& g);

/// Smooth projection of the raw update Gamma*y; never grows |theta| past
/// Theta + eps.
VectorXd proj_update(const VectorXd& theta, const VectorXd& y, const AdaptGains& g);

/// w_hat-dot = Gamma_w (|r| - sigma_w w_hat) element-wise.
VectorXd w_update(const VectorXd& w_hat, const VectorXd& r, const AdaptGains& g);

/// qdd_s,i = w_hat_i tanh(kappa r_i w_hat_i / eps_i); bounded by w_hat.
VectorXd smc_accel(const VectorXd& r, const VectorXd& w_hat, const AdaptGains& g);

struct DobOutputs {
  VectorXd d_hat_c;
  VectorXd d_hat_o;
};

DobOutputs dob_outputs(const VectorXd& ell_c, const VectorXd& ell_o,
                       const VectorXd& qd, const AdaptGains& g);

struct DobDerivatives {
  VectorXd ell_c_dot;
  VectorXd ell_o_dot;
};

DobDerivatives dob_state_derivatives(const VectorXd& qdd_cmd, const VectorXd& qdd_s,
                                     const VectorXd& d_hat_o, const AdaptGains& g);

/// Reference model x_ref = (q_ref, qd_ref) with
///   qdd_u = qdd_cmd + K_v (qd - qd_ref) + K_p (q - q_ref).
VectorXd reference_model_derivative(const VectorXd& x_ref, const VectorXd& qdd_cmd,
                                    const plant::JointState& x, const AdaptGains& g);

/// r = ed + Lambda e.
VectorXd filtered_error(const VectorXd& e, const VectorXd& ed, const AdaptGains& g);

}  // namespace sail::adapt

#endif  // SAIL_ADAPT_HPP_
