/**
 * @file safety.hpp
 * @brief Non-smooth control barrier functions for velocity-only and
 *        position-and-velocity joints, their acceleration bounds, the
 *        observer-robustified margins, and the gamma tuning-feasibility
 *        analyzer.
 */

#ifndef SAIL_SAFETY_HPP_
#define SAIL_SAFETY_HPP_

#include "sail/common.hpp"
#include "sail/plant.hpp"

#include <optional>
#include <vector>

namespace sail::safety {

enum class LimitKind { kVelocityOnly, kPositionAndVelocity };

struct JointLimit {
  LimitKind kind = LimitKind::kVelocityOnly;
  double q_max = 0.0;   ///< [rad], used only for position-and-velocity joints
  double qd_max = 0.0;  ///< [rad/s]
};

struct JointLimits {
  std::vector<JointLimit> joints;

  int n() const { return static_cast<int>(joints.size()); }
  void validate() const;
};

struct SafetyConfig {
  int l = 6;               ///< even exponent of the position NCBF
  double gamma_v = 10.0;   ///< velocity barrier rate [1/s]
  double gamma_p = 10.0;   ///< position barrier rate [1/s]
  double nu = 50.0;        ///< observer-margin coupling gain [1/s]
  double beta = 35.0;      ///< robust margin scaling
  double omega1_bar = 75.0;  ///< bound on the CBF-disturbance derivative
  double alpha_o = 80.0;   ///< safety DOB gain [1/s]

  /// Parameter inequalities: l even >= 2, 0 < nu < 2 alpha_o,
  /// max(gamma_v, gamma_p) < 2 alpha_o - nu.
  void validate() const;
};

/// min(qd_max - qd, qd_max + qd); negative outside the velocity band.
double ncbf_velocity(double qd, double qd_max);

/// Composed position-velocity NCBF, min of the two one-sided barriers.
double ncbf_position(double q, double qd, double q_max, double qd_max, int l);

struct AccelBounds {
  VectorXd lower;  ///< alpha_A
  VectorXd upper;  ///< alpha_B
};

/// Element-wise NCBF acceleration bounds alpha_A <= qdd <= alpha_B.
AccelBounds accel_bounds(const plant::JointState& x, const JointLimits& limits,
                         const SafetyConfig& cfg);

/// Robust safety margin qdd_marg per joint; strictly positive.
VectorXd robust_margin(const SafetyConfig& cfg, const JointLimits& limits);

/// alpha_A/alpha_B shifted by the robustified compensation terms:
///   lower = alpha_A - qdd_s - d_hat_o + marg
///   upper = alpha_B - qdd_s - d_hat_o - marg.
/// Faults on a degenerate box (lower_i > upper_i), never clips.
AccelBounds robust_bounds(const plant::JointState& x, const JointLimits& limits,
                          const SafetyConfig& cfg, const VectorXd& qdd_s,
                          const VectorXd& d_hat_o);

struct GammaInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Constant K(l) of the position feasibility bound.
double position_curvature_constant(int l);

/// Feasible (gamma_min, gamma_max) interval for one joint, from the
/// discriminant of the tuning quadratic; nullopt when empty.
std::optional<GammaInterval> gamma_feasible_interval(const JointLimit& limit,
                                                     const SafetyConfig& cfg);

/// Minimum NCBF over all joints; negative iff x is outside the safe set.
double min_ncbf(const plant::JointState& x, const JointLimits& limits, int l);

/// Per-family minima (velocity-only family, position-and-velocity family).
/// Families without members report +infinity.
struct NcbfMinima {
  double velocity;
  double position;
};
NcbfMinima min_ncbf_families(const plant::JointState& x, const JointLimits& limits, int l);

}  // namespace sail::safety

#endif  // SAIL_SAFETY_HPP_
