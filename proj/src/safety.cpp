#include "sail/safety.hpp"

#include <cmath>
#include <limits>

namespace sail::safety {

namespace {

double ramp_pos(double v) { return std::max(0.0, v); }   // R1
double ramp_neg(double v) { return std::max(0.0, -v); }  // R2

double ipow(double base, int e) {
  double out = 1.0;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

}  // namespace

void JointLimits::validate() const {
  if (joints.empty()) throw ConfigError("joint limit table is empty");
  for (int i = 0; i < n(); ++i) {
    const JointLimit& jl = joints[i];
    if (!(jl.qd_max > 0.0))
      throw ConfigError("joint " + std::to_string(i) + ": qd_max must be > 0");
    if (jl.kind == LimitKind::kPositionAndVelocity && !(jl.q_max > 0.0))
      throw ConfigError("joint " + std::to_string(i) + ": q_max must be > 0");
  }
}

void SafetyConfig::validate() const {
  if (l < 2 || l % 2 != 0) throw ConfigError("NCBF exponent l must be even and >= 2");
  if (!(gamma_v > 0.0 && gamma_p > 0.0)) throw ConfigError("gamma_v, gamma_p must be > 0");
  if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
  if (!(omega1_bar > 0.0)) throw ConfigError("omega1_bar must be > 0");
  if (!(alpha_o > 0.0)) throw ConfigError("alpha_o must be > 0");
  if (!(nu > 0.0 && nu < 2.0 * alpha_o))
    throw ConfigError("robust margin requires 0 < nu < 2 alpha_o");
  if (!(std::max(gamma_v, gamma_p) < 2.0 * alpha_o - nu))
    throw ConfigError("robust margin requires max(gamma_v, gamma_p) < 2 alpha_o - nu");
}

double ncbf_velocity(double qd, double qd_max) {
  return std::min(qd_max - qd, qd_max + qd);
}

double ncbf_position(double q, double qd, double q_max, double qd_max, int l) {
  const double qn = q / q_max;
  const double vn = qd / qd_max;
  const double h1 = 1.0 - ipow(ramp_pos(qn), l) - ramp_pos(vn);
  const double h2 = 1.0 - ipow(ramp_neg(qn), l) - ramp_neg(vn);
  return std::min(h1, h2);
}

AccelBounds accel_bounds(const plant::JointState& x, const JointLimits& limits,
                         const SafetyConfig& cfg) {
  const int n = limits.n();
  AccelBounds b;
  b.lower.resize(n);
  b.upper.resize(n);
  for (int i = 0; i < n; ++i) {
    const JointLimit& jl = limits.joints[i];
    const double qd = x.qd[i];
    if (jl.kind == LimitKind::kVelocityOnly) {
      b.lower[i] = -cfg.gamma_v * (jl.qd_max + qd);
      b.upper[i] = cfg.gamma_v * (jl.qd_max - qd);
    } else {
      const double qn = x.q[i] / jl.q_max;
      const double vn = qd / jl.qd_max;
      const double h1 = 1.0 - ipow(ramp_pos(qn), cfg.l) - ramp_pos(vn);
      const double h2 = 1.0 - ipow(ramp_neg(qn), cfg.l) - ramp_neg(vn);
      const double slope = cfg.l * qd / jl.q_max;  // l * qd_i / q_max_i
      b.lower[i] = jl.qd_max * (-slope * ipow(ramp_neg(qn), cfg.l - 1) - cfg.gamma_p * h2);
      b.upper[i] = jl.qd_max * (-slope * ipow(ramp_pos(qn), cfg.l - 1) + cfg.gamma_p * h1);
    }
  }
  return b;
}

VectorXd robust_margin(const SafetyConfig& cfg, const JointLimits& limits) {
  cfg.validate();
  const int n = limits.n();
  const double c1 = cfg.omega1_bar * cfg.omega1_bar / (2.0 * cfg.nu * cfg.beta);
  VectorXd marg(n);
  for (int i = 0; i < n; ++i) {
    const JointLimit& jl = limits.joints[i];
    if (jl.kind == LimitKind::kVelocityOnly) {
      marg[i] = c1 + cfg.beta / (4.0 * cfg.alpha_o - 2.0 * (cfg.nu + cfg.gamma_v));
    } else {
      marg[i] = c1 * jl.qd_max +
                (cfg.beta / jl.qd_max) /
                    (4.0 * cfg.alpha_o - 2.0 * (cfg.nu + cfg.gamma_p));
    }
  }
  return marg;
}

AccelBounds robust_bounds(const plant::JointState& x, const JointLimits& limits,
                          const SafetyConfig& cfg, const VectorXd& qdd_s,
                          const VectorXd& d_hat_o) {
  AccelBounds b = accel_bounds(x, limits, cfg);
  const VectorXd marg = robust_margin(cfg, limits);
  b.lower += -qdd_s - d_hat_o + marg;
  b.upper += -qdd_s - d_hat_o - marg;
  for (int i = 0; i < limits.n(); ++i) {
    if (b.lower[i] > b.upper[i])
      throw Fault("robust_bounds: degenerate acceleration box on joint " +
                  std::to_string(i) + " (lower " + std::to_string(b.lower[i]) +
                  " > upper " + std::to_string(b.upper[i]) + ")");
  }
  return b;
}

double position_curvature_constant(int l) {
  const double lm1 = l - 1.0;
  const double d = 2.0 * l - 1.0;
  return std::pow(lm1 / d, lm1 / l) * (l / d);
}

std::optional<GammaInterval> gamma_feasible_interval(const JointLimit& limit,
                                                     const SafetyConfig& cfg) {
  const double two_ao_nu = 2.0 * cfg.alpha_o - cfg.nu;
  const double c1 = cfg.omega1_bar * cfg.omega1_bar / (2.0 * cfg.nu * cfg.beta);
  const double c2 = cfg.beta / 2.0;
  const double vmax = limit.qd_max;

  double a, b, c;
  if (limit.kind == LimitKind::kVelocityOnly) {
    a = vmax;
    b = -(vmax * two_ao_nu + c1);
    c = c1 * two_ao_nu + c2;
  } else {
    const double c3 =
        cfg.l * vmax * vmax * position_curvature_constant(cfg.l) / limit.q_max;
    const double c1_bar = 2.0 * c1 * vmax + c3;
    a = vmax;
    b = -(vmax * two_ao_nu + c1_bar);
    c = c1_bar * two_ao_nu + 2.0 * c2 / vmax;
  }

  const double disc = b * b - 4.0 * a * c;
  if (!(disc > 0.0)) return std::nullopt;
  const double sq = std::sqrt(disc);
  GammaInterval gi{(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)};
  // the quadratic is derived for gamma below the margin pole; its value at the
  // pole is beta/2 > 0, so roots never straddle it -- an interval starting at
  // or beyond the pole is spurious
  if (gi.lo >= two_ao_nu) return std::nullopt;
  return gi;
}

NcbfMinima min_ncbf_families(const plant::JointState& x, const JointLimits& limits,
                             int l) {
  NcbfMinima m{std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity()};
  for (int i = 0; i < limits.n(); ++i) {
    const JointLimit& jl = limits.joints[i];
    if (jl.kind == LimitKind::kVelocityOnly)
      m.velocity = std::min(m.velocity, ncbf_velocity(x.qd[i], jl.qd_max));
    else
      m.position = std::min(m.position, ncbf_position(x.q[i], x.qd[i], jl.q_max,
                                                      jl.qd_max, l));
  }
  return m;
}

double min_ncbf(const plant::JointState& x, const JointLimits& limits, int l) {
  const NcbfMinima m = min_ncbf_families(x, limits, l);
  return std::min(m.velocity, m.position);
}

}  // namespace sail::safety
