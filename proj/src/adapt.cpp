#include "sail/adapt.hpp"

#include <cmath>

namespace sail::adapt {

void FlsConfig::validate() const {
  if (!(mf_width > 0.0)) throw ConfigError("FLS membership width must be > 0");
  if (!(fou_factor >= 1.0)) throw ConfigError("FLS FOU factor must be >= 1");
  if (!(xi_bar_scale > 0.0)) throw ConfigError("FLS xi_bar scale must be > 0");
}

RegressorBlock it2_regressor(const Eigen::Vector4d& xi, const FlsConfig& cfg) {
  // memberships per input dimension and MF, lower and upper bounds of the FOU
  double lower_mf[kFlsInputs][kMfPerInput];
  double upper_mf[kFlsInputs][kMfPerInput];
  const double w_lo = cfg.mf_width / cfg.fou_factor;
  const double w_hi = cfg.mf_width * cfg.fou_factor;
  for (int i = 0; i < kFlsInputs; ++i) {
    for (int m = 0; m < kMfPerInput; ++m) {
      const double u = xi[i] - cfg.mf_centers[m];
      lower_mf[i][m] = std::exp(-0.5 * (u / w_lo) * (u / w_lo));
      upper_mf[i][m] = std::exp(-0.5 * (u / w_hi) * (u / w_hi));
    }
  }

  // min-composition over the 3^4 rule grid, Nie-Tan reduction to the midpoint
  double strengths[kRules];
  double total = 0.0;
  int r = 0;
  for (int a = 0; a < kMfPerInput; ++a)
    for (int b = 0; b < kMfPerInput; ++b)
      for (int c = 0; c < kMfPerInput; ++c)
        for (int d = 0; d < kMfPerInput; ++d, ++r) {
          const double lo = std::min(std::min(lower_mf[0][a], lower_mf[1][b]),
                                     std::min(lower_mf[2][c], lower_mf[3][d]));
          const double hi = std::min(std::min(upper_mf[0][a], upper_mf[1][b]),
                                     std::min(upper_mf[2][c], upper_mf[3][d]));
          strengths[r] = 0.5 * (lo + hi);
          total += strengths[r];
        }

  RegressorBlock out;
  if (!(total > 1e-300)) {
    out.underflow = true;
    for (int i = 0; i < kRules; ++i) strengths[i] = 1.0 / kRules;
    total = 1.0;
  }

  for (int i = 0; i < kRules; ++i) {
    const double phi = strengths[i] / total;
    const int base = i * kConsequents;
    out.zeta[base] = phi;
    out.zeta[base + 1] = phi * xi[0];
    out.zeta[base + 2] = phi * xi[1];
    out.zeta[base + 3] = phi * xi[2];
    out.zeta[base + 4] = phi * xi[3];
  }
  return out;
}

VectorXd fls_output(const MatrixXd& zeta, const VectorXd& theta) {
  const int n = static_cast<int>(zeta.cols());
  if (zeta.rows() != kWeightsPerJoint || theta.size() != n * kWeightsPerJoint)
    throw Fault("fls_output: dimension mismatch");
  VectorXd f(n);
  for (int i = 0; i < n; ++i)
    f[i] = zeta.col(i).dot(theta.segment(i * kWeightsPerJoint, kWeightsPerJoint));
  return f;
}

void AdaptGains::validate() const {
  if (!(gamma_theta > 0.0 && gamma_w > 0.0))
    throw ConfigError("adaptation gains must be > 0");
  if (!(sigma_w > 0.0)) throw ConfigError("sigma_w must be > 0");
  if (eps_smc.size() == 0 || eps_smc.minCoeff() <= 0.0)
    throw ConfigError("SMC boundary layers must be > 0");
  if (!(theta_bound > 0.0 && eps_proj > 0.0))
    throw ConfigError("projection bound and tolerance must be > 0");
  if (!(alpha_c > 0.0 && alpha_o > 0.0)) throw ConfigError("DOB gains must be > 0");
  if (K_r_diag.size() == 0 || K_r_diag.minCoeff() <= 0.0 ||
      Lambda_diag.size() != K_r_diag.size() || Lambda_diag.minCoeff() <= 0.0)
    throw ConfigError("K_r and Lambda must be positive diagonal");
}

double proj_bounding(const VectorXd& theta, const AdaptGains& g) {
  const double t2 = theta.squaredNorm();
  return (t2 - g.theta_bound * g.theta_bound) /
         (2.0 * g.eps_proj * g.theta_bound + g.eps_proj * g.eps_proj);
}

VectorXd proj_update(const VectorXd& theta, const VectorXd& y, const AdaptGains& g) {
  // Gamma = gamma_theta * I, so Gamma y and the rank-one correction reduce to
  // scalar operations on theta.
  const VectorXd gy = g.gamma_theta * y;
  const double f = proj_bounding(theta, g);
  if (f <= 0.0) return gy;
  // gradient direction is theta itself; the normalization cancels
  const double y_gamma_grad = g.gamma_theta * y.dot(theta);
  if (y_gamma_grad <= 0.0) return gy;
  const double tt = theta.squaredNorm();
  if (tt <= 0.0) return gy;
  return gy - (f * y_gamma_grad / tt) * theta;
}

VectorXd w_update(const VectorXd& w_hat, const VectorXd& r, const AdaptGains& g) {
  return g.gamma_w * (r.cwiseAbs() - g.sigma_w * w_hat);
}

VectorXd smc_accel(const VectorXd& r, const VectorXd& w_hat, const AdaptGains& g) {
  VectorXd out(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i)
    out[i] = w_hat[i] * std::tanh(g.kappa * r[i] * w_hat[i] / g.eps_smc[i]);
  return out;
}

DobOutputs dob_outputs(const VectorXd& ell_c, const VectorXd& ell_o,
                       const VectorXd& qd, const AdaptGains& g) {
  return {ell_c + g.alpha_c * qd, ell_o + g.alpha_o * qd};
}

DobDerivatives dob_state_derivatives(const VectorXd& qdd_cmd, const VectorXd& qdd_s,
                                     const VectorXd& d_hat_o, const AdaptGains& g) {
  return {-g.alpha_c * (qdd_cmd + qdd_s), -g.alpha_o * (qdd_cmd + qdd_s + d_hat_o)};
}

VectorXd reference_model_derivative(const VectorXd& x_ref, const VectorXd& qdd_cmd,
                                    const plant::JointState& x, const AdaptGains& g) {
  const int n = static_cast<int>(qdd_cmd.size());
  const VectorXd q_ref = x_ref.head(n);
  const VectorXd qd_ref = x_ref.tail(n);
  VectorXd dx(2 * n);
  dx.head(n) = qd_ref;
  dx.tail(n) = qdd_cmd + g.Kv_diag().cwiseProduct(x.qd - qd_ref) +
               g.Kp_diag().cwiseProduct(x.q - q_ref);
  return dx;
}

VectorXd filtered_error(const VectorXd& e, const VectorXd& ed, const AdaptGains& g) {
  return ed + g.Lambda_diag.cwiseProduct(e);
}

}  // namespace sail::adapt
