#include "sail/controller.hpp"

#include <cmath>

namespace sail::controller {

Mode mode_from_string(const std::string& s) {
  if (s == "proposed") return Mode::kProposed;
  if (s == "nic") return Mode::kNic;
  if (s == "aworm") return Mode::kAworm;
  throw ConfigError("unknown controller mode: " + s);
}

std::string mode_to_string(Mode m) {
  switch (m) {
    case Mode::kProposed: return "proposed";
    case Mode::kNic: return "nic";
    case Mode::kAworm: return "aworm";
  }
  return "?";
}

VectorXd LoopState::flatten() const {
  const int n = static_cast<int>(q.size());
  VectorXd y(flat_size(n));
  int at = 0;
  auto put = [&](const VectorXd& v) {
    y.segment(at, v.size()) = v;
    at += static_cast<int>(v.size());
  };
  put(q);
  put(qd);
  put(q_imp);
  put(qd_imp);
  put(x_ref);
  put(theta);
  put(w_hat);
  put(ell_c);
  put(ell_o);
  return y;
}

LoopState LoopState::unflatten(const VectorXd& y, int n) {
  LoopState s;
  int at = 0;
  auto take = [&](int len) {
    VectorXd v = y.segment(at, len);
    at += len;
    return v;
  };
  s.q = take(n);
  s.qd = take(n);
  s.q_imp = take(n);
  s.qd_imp = take(n);
  s.x_ref = take(2 * n);
  s.theta = take(adapt::kWeightsPerJoint * n);
  s.w_hat = take(n);
  s.ell_c = take(n);
  s.ell_o = take(n);
  return s;
}

void ControllerConfig::validate() const {
  model_hat.validate();
  impedance.validate();
  dls.validate();
  limits.validate();
  safety.validate();
  fls.validate();
  gains.validate();
  qp.validate();
  const int n = model_hat.n();
  if (limits.n() != n || tau_min.size() != n || tau_max.size() != n)
    throw ConfigError("controller config: per-joint tables must have n entries");
  for (int i = 0; i < n; ++i)
    if (!(tau_min[i] < tau_max[i]))
      throw ConfigError("controller config: tau_min < tau_max required");
}

VectorXd nominal_accel(const plant::JointState& x, const VectorXd& q_imp,
                       const VectorXd& qd_imp, const VectorXd& qdd_imp,
                       const adapt::AdaptGains& g) {
  return qdd_imp + g.Kv_diag().cwiseProduct(qd_imp - x.qd) +
         g.Kp_diag().cwiseProduct(q_imp - x.q);
}

VectorXd base_torque(const MatrixXd& M_hat, const MatrixXd& C_hat,
                     const VectorXd& G_hat, const VectorXd& tau_h,
                     const plant::JointState& x, const VectorXd& qdd_s,
                     const VectorXd& d_hat_c, const VectorXd& f_hat) {
  return tau_h - C_hat * x.qd - G_hat - M_hat * (qdd_s - d_hat_c - f_hat);
}

Controller::Controller(ControllerConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

namespace {

/// Impedance-trajectory acceleration shared by all modes. Also reports the
/// smallest Jacobian singular value for diagnostics.
struct ImpedanceEval {
  VectorXd qdd_imp;
  double min_sigma;
};

ImpedanceEval impedance_trajectory_accel(const ControllerConfig& cfg,
                                         const LoopState& s, const Vector6d& F_h) {
  const rbd::Pose z_imp = rbd::forward_kinematics(cfg.model_hat, s.q_imp);
  const MatrixXd J_imp = rbd::jacobian(cfg.model_hat, s.q_imp);
  const Vector6d e_task = impedance::task_error(cfg.z_d, z_imp);
  const Vector6d ed_task = -(J_imp * s.qd_imp);  // z_d is a fixed pose
  const Vector6d edd = impedance::impedance_accel(e_task, ed_task, F_h, cfg.impedance);
  const Vector6d zdd_imp = -edd;  // zdd_d = 0

  const impedance::JacobianSvd svd = impedance::jacobian_svd(J_imp);
  const Vector6d weights = impedance::singularity_weights(svd.sigmas, cfg.dls);
  const Vector6d zdd_bar = impedance::project_singular(zdd_imp, svd.U, weights);
  const MatrixXd Jdot_imp = rbd::jacobian_dot(cfg.model_hat, s.q_imp, s.qd_imp);
  impedance::ImpedanceTrajectory traj{s.q_imp, s.qd_imp};
  ImpedanceEval out;
  out.qdd_imp = impedance::impedance_joint_accel(traj, zdd_bar, J_imp, Jdot_imp, cfg.dls);
  out.min_sigma = svd.sigmas.minCoeff();
  return out;
}

}  // namespace

StepResult Controller::eval_nic(const LoopState& s, const Vector6d& F_h) {
  const int n = cfg_.model_hat.n();
  const plant::JointState x{s.q, s.qd};

  const ImpedanceEval imp = impedance_trajectory_accel(cfg_, s, F_h);
  const VectorXd qdd_nom = nominal_accel(x, s.q_imp, s.qd_imp, imp.qdd_imp, cfg_.gains);

  const MatrixXd M_hat = rbd::mass_matrix(cfg_.model_hat, s.q);
  const MatrixXd C_hat = rbd::coriolis_matrix(cfg_.model_hat, s.q, s.qd);
  const VectorXd G_hat = rbd::gravity_vector(cfg_.model_hat, s.q);
  const VectorXd tau_h = rbd::jacobian(cfg_.model_hat, s.q).transpose() * F_h;

  StepResult res;
  res.u = M_hat * qdd_nom + C_hat * s.qd + G_hat - tau_h;

  // only the impedance trajectory evolves; the learning stack is absent
  res.deriv.qd_imp = s.qd_imp;
  res.deriv.qdd_imp = imp.qdd_imp;
  res.deriv.x_ref_dot = VectorXd::Zero(2 * n);
  res.deriv.theta_dot = VectorXd::Zero(s.theta.size());
  res.deriv.w_hat_dot = VectorXd::Zero(n);
  res.deriv.ell_c_dot = VectorXd::Zero(n);
  res.deriv.ell_o_dot = VectorXd::Zero(n);

  StepDiagnostics& d = res.diag;
  d.u = res.u;
  d.qdd_cmd = qdd_nom;
  d.qdd_nom = qdd_nom;
  d.qdd_s = VectorXd::Zero(n);
  d.s_star = VectorXd::Zero(n);
  const VectorXd e = s.x_ref.head(n) - s.q;
  const VectorXd ed = s.x_ref.tail(n) - s.qd;
  d.r = adapt::filtered_error(e, ed, cfg_.gains);
  d.r_imp = adapt::filtered_error(s.q_imp - s.q, s.qd_imp - s.qd, cfg_.gains);
  d.r_adapt = VectorXd::Zero(n);
  const safety::NcbfMinima hmin = safety::min_ncbf_families(x, cfg_.limits, cfg_.safety.l);
  d.min_h_velocity = hmin.velocity;
  d.min_h_position = hmin.position;
  d.min_h = std::min(hmin.velocity, hmin.position);
  d.min_sigma = imp.min_sigma;
  return res;
}

StepResult Controller::eval(const LoopState& s, double t, const Vector6d& F_h,
                            bool want_hard_feasible, bool want_fmax) {
  (void)t;
  if (cfg_.mode == Mode::kNic) return eval_nic(s, F_h);

  const int n = cfg_.model_hat.n();
  const plant::JointState x{s.q, s.qd};

  // impedance trajectory and nominal coupling
  const ImpedanceEval imp = impedance_trajectory_accel(cfg_, s, F_h);
  const VectorXd qdd_nom = nominal_accel(x, s.q_imp, s.qd_imp, imp.qdd_imp, cfg_.gains);

  // adaptation signals
  const VectorXd e = s.x_ref.head(n) - s.q;
  const VectorXd ed = s.x_ref.tail(n) - s.qd;
  const VectorXd r = adapt::filtered_error(e, ed, cfg_.gains);
  const VectorXd r_imp =
      adapt::filtered_error(s.q_imp - s.q, s.qd_imp - s.qd, cfg_.gains);
  const VectorXd& r_adapt = (cfg_.mode == Mode::kProposed) ? r : r_imp;

  // compensators
  const VectorXd qdd_s = adapt::smc_accel(r, s.w_hat, cfg_.gains);
  const adapt::DobOutputs dob = adapt::dob_outputs(s.ell_c, s.ell_o, s.qd, cfg_.gains);
  const VectorXd xi_bar = qdd_s - dob.d_hat_c;

  MatrixXd zeta(adapt::kWeightsPerJoint, n);
  bool underflow = false;
  for (int i = 0; i < n; ++i) {
    Eigen::Vector4d xi(std::sin(s.q[i]), std::cos(s.q[i]),
                       s.qd[i] / cfg_.limits.joints[i].qd_max,
                       xi_bar[i] / cfg_.fls.xi_bar_scale);
    const adapt::RegressorBlock block = adapt::it2_regressor(xi, cfg_.fls);
    zeta.col(i) = block.zeta;
    underflow = underflow || block.underflow;
  }
  const VectorXd f_hat = adapt::fls_output(zeta, s.theta);

  // nominal dynamic terms
  const MatrixXd M_hat = rbd::mass_matrix(cfg_.model_hat, s.q);
  const MatrixXd C_hat = rbd::coriolis_matrix(cfg_.model_hat, s.q, s.qd);
  const VectorXd G_hat = rbd::gravity_vector(cfg_.model_hat, s.q);
  const MatrixXd J = rbd::jacobian(cfg_.model_hat, s.q);
  const VectorXd tau_h = J.transpose() * F_h;
  const VectorXd tau_base =
      base_torque(M_hat, C_hat, G_hat, tau_h, x, qdd_s, dob.d_hat_c, f_hat);

  // robustified CBF box and the soft-constrained QP
  const safety::AccelBounds box =
      safety::robust_bounds(x, cfg_.limits, cfg_.safety, qdd_s, dob.d_hat_o);
  const optim::QpProblem qp =
      optim::build_command_qp(qdd_nom, box.lower, box.upper, M_hat, tau_base,
                              cfg_.tau_min, cfg_.tau_max, cfg_.qp);

  // feasible start: clamp the nominal command into the box, then open slack
  VectorXd z0(2 * n);
  for (int i = 0; i < n; ++i)
    z0[i] = std::min(std::max(qdd_nom[i], box.lower[i]), box.upper[i]);
  const VectorXd tau0 = M_hat * z0.head(n) - tau_base;
  for (int i = 0; i < n; ++i)
    z0[n + i] =
        std::max({0.0, tau0[i] - cfg_.tau_max[i], cfg_.tau_min[i] - tau0[i]});

  const optim::QpSolution sol = optim::solve_qp(qp, 1e-8, &z0, &warm_working_set_);
  if (sol.status != optim::SolveStatus::kOptimal)
    throw Fault("command QP failed (status " +
                std::to_string(static_cast<int>(sol.status)) +
                ", kkt residual " + std::to_string(sol.kkt_residual) + ")");
  warm_working_set_ = sol.working_set;

  const VectorXd qdd_cmd = sol.z.head(n);
  const VectorXd s_star = sol.z.tail(n);

  StepResult res;
  res.u = M_hat * qdd_cmd - tau_base;

  res.deriv.qd_imp = s.qd_imp;
  res.deriv.qdd_imp = imp.qdd_imp;
  res.deriv.x_ref_dot = adapt::reference_model_derivative(s.x_ref, qdd_cmd, x, cfg_.gains);
  VectorXd y(adapt::kWeightsPerJoint * n);
  for (int i = 0; i < n; ++i)
    y.segment(i * adapt::kWeightsPerJoint, adapt::kWeightsPerJoint) =
        -zeta.col(i) * r_adapt[i];
  res.deriv.theta_dot = adapt::proj_update(s.theta, y, cfg_.gains);
  res.deriv.w_hat_dot = adapt::w_update(s.w_hat, r_adapt, cfg_.gains);
  const adapt::DobDerivatives dd =
      adapt::dob_state_derivatives(qdd_cmd, qdd_s, dob.d_hat_o, cfg_.gains);
  res.deriv.ell_c_dot = dd.ell_c_dot;
  res.deriv.ell_o_dot = dd.ell_o_dot;

  StepDiagnostics& d = res.diag;
  d.u = res.u;
  d.qdd_cmd = qdd_cmd;
  d.qdd_nom = qdd_nom;
  d.qdd_s = qdd_s;
  d.s_star = s_star;
  d.r = r;
  d.r_imp = r_imp;
  d.r_adapt = r_adapt;
  const safety::NcbfMinima hmin = safety::min_ncbf_families(x, cfg_.limits, cfg_.safety.l);
  d.min_h_velocity = hmin.velocity;
  d.min_h_position = hmin.position;
  d.min_h = std::min(hmin.velocity, hmin.position);
  d.f_theta = adapt::proj_bounding(s.theta, cfg_.gains);
  d.min_sigma = imp.min_sigma;
  d.qp_iterations = sol.iterations;
  d.qp_kkt_residual = sol.kkt_residual;
  d.fls_underflow = underflow;

  if (want_fmax) {
    const VectorXd tau_base_0 = tau_base - tau_h;
    d.f_max = optim::wrench_feasibility(box.lower, box.upper, M_hat, J, tau_base_0,
                                        cfg_.tau_min, cfg_.tau_max);
  }
  if (want_hard_feasible) {
    const optim::QpProblem hard = optim::build_hard_command_qp(
        qdd_nom, box.lower, box.upper, M_hat, tau_base, cfg_.tau_min, cfg_.tau_max);
    d.hard_feasible = optim::lp_feasible(hard.A, hard.b);
  }
  return res;
}

}  // namespace sail::controller
