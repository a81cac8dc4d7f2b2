#include "sail/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace sail::harness {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

VectorXd get_vector(const json& j, int n, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  if (static_cast<int>(j.size()) == 1) return VectorXd::Constant(n, j.at(0).get<double>());
  if (static_cast<int>(j.size()) != n)
    throw ConfigError(std::string(what) + " must have " + std::to_string(n) +
                      " entries");
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = j.at(i).get<double>();
  return v;
}

Matrix6d diag6(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 6)
    throw ConfigError(std::string(what) + " must be a 6-entry diagonal");
  Matrix6d m = Matrix6d::Zero();
  for (int i = 0; i < 6; ++i) m(i, i) = j.at(i).get<double>();
  return m;
}

constexpr double kRpmToRadPerSec = 2.0 * M_PI / 60.0;
constexpr double kDegToRad = M_PI / 180.0;

}  // namespace

int ScenarioConfig::steps() const { return static_cast<int>(std::llround(duration / dt)); }

void ScenarioConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (std::abs(steps() * dt - duration) > 1e-9)
    throw ConfigError("duration must be an integer multiple of dt");
  if (steps() < 1) throw ConfigError("duration must cover at least one step");
  limits.validate();
  safety_cfg.validate();
  friction.validate();
  wrench.validate();
  const int n = limits.n();
  if (q0.size() != n || qd0.size() != n)
    throw ConfigError("initial state must have n entries");
  const plant::JointState x0{q0, qd0};
  if (safety::min_ncbf(x0, limits, safety_cfg.l) < 0.0)
    throw ConfigError("initial state lies outside the safe set");
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("scenario file " + path + ": " + e.what());
  }

  ScenarioConfig cfg;
  try {
    cfg.version = j.value("version", 1);
    if (cfg.version != 1)
      throw ConfigError("unsupported scenario schema version " +
                        std::to_string(cfg.version));

    // robot path is relative to the config file location
    std::filesystem::path robot(j.at("robot").get<std::string>());
    if (robot.is_relative())
      robot = std::filesystem::path(path).parent_path() / robot;
    cfg.robot_file = robot.string();

    const auto& jm = j.at("mismatch");
    cfg.mismatch_level = jm.at("level").get<double>();
    cfg.mismatch_seed = jm.value("seed", 1ull);
    cfg.mode = controller::mode_from_string(j.value("mode", "proposed"));
    cfg.duration = j.value("duration", 10.0);
    cfg.dt = j.value("dt", 0.01);

    const auto& ji = j.at("initial");
    const int n = static_cast<int>(ji.at("q").size());
    cfg.q0 = get_vector(ji.at("q"), n, "initial.q");
    cfg.qd0 = ji.contains("qd") ? get_vector(ji.at("qd"), n, "initial.qd")
                                : VectorXd::Zero(n);

    const auto& jt = j.at("torque_limits");
    cfg.tau_max = get_vector(jt.at("tau_max"), n, "tau_max");
    cfg.tau_min = jt.contains("tau_min") ? get_vector(jt.at("tau_min"), n, "tau_min")
                                         : VectorXd(-cfg.tau_max);

    const auto& jl = j.at("joint_limits");
    if (static_cast<int>(jl.size()) != n)
      throw ConfigError("joint_limits must have one entry per joint");
    for (const auto& je : jl) {
      safety::JointLimit lim;
      const std::string kind = je.at("kind").get<std::string>();
      if (kind == "velocity") {
        lim.kind = safety::LimitKind::kVelocityOnly;
      } else if (kind == "position_velocity") {
        lim.kind = safety::LimitKind::kPositionAndVelocity;
        lim.q_max = je.contains("q_max_deg") ? je.at("q_max_deg").get<double>() * kDegToRad
                                             : je.at("q_max").get<double>();
      } else {
        throw ConfigError("joint limit kind must be velocity or position_velocity");
      }
      lim.qd_max = je.contains("qd_max_rpm")
                       ? je.at("qd_max_rpm").get<double>() * kRpmToRadPerSec
                       : je.at("qd_max").get<double>();
      cfg.limits.joints.push_back(lim);
    }

    if (j.contains("impedance")) {
      const auto& jp = j.at("impedance");
      cfg.impedance_params.M_d = diag6(jp.at("M_d"), "impedance.M_d");
      cfg.impedance_params.B_d = diag6(jp.at("B_d"), "impedance.B_d");
      cfg.impedance_params.K_d = diag6(jp.at("K_d"), "impedance.K_d");
    }
    if (j.contains("dls")) {
      const auto& jd = j.at("dls");
      cfg.dls.k_max = jd.value("k_max", cfg.dls.k_max);
      cfg.dls.alpha_s = jd.value("alpha_s", cfg.dls.alpha_s);
      cfg.dls.sigma_low = jd.value("sigma_low", cfg.dls.sigma_low);
      cfg.dls.sigma_high = jd.value("sigma_high", cfg.dls.sigma_high);
      cfg.dls.K_damp = jd.value("k_damp", 5.0) * MatrixXd::Identity(n, n);
    } else {
      cfg.dls.K_damp = 5.0 * MatrixXd::Identity(n, n);
    }
    if (j.contains("safety")) {
      const auto& js = j.at("safety");
      cfg.safety_cfg.l = js.value("l", cfg.safety_cfg.l);
      cfg.safety_cfg.gamma_v = js.value("gamma_v", cfg.safety_cfg.gamma_v);
      cfg.safety_cfg.gamma_p = js.value("gamma_p", cfg.safety_cfg.gamma_p);
      cfg.safety_cfg.nu = js.value("nu", cfg.safety_cfg.nu);
      cfg.safety_cfg.beta = js.value("beta", cfg.safety_cfg.beta);
      cfg.safety_cfg.omega1_bar = js.value("omega1_bar", cfg.safety_cfg.omega1_bar);
      cfg.safety_cfg.alpha_o = js.value("alpha_o", cfg.safety_cfg.alpha_o);
    }
    if (j.contains("fls")) {
      const auto& jf = j.at("fls");
      cfg.fls.mf_width = jf.value("mf_width", cfg.fls.mf_width);
      cfg.fls.fou_factor = jf.value("fou_factor", cfg.fls.fou_factor);
      cfg.fls.xi_bar_scale = jf.value("xi_bar_scale", cfg.fls.xi_bar_scale);
    }
    {
      const json ja = j.value("adapt", json::object());
      cfg.gains.gamma_theta = ja.value("gamma_theta", cfg.gains.gamma_theta);
      cfg.gains.gamma_w = ja.value("gamma_w", cfg.gains.gamma_w);
      cfg.gains.sigma_w = ja.value("sigma_w", cfg.gains.sigma_w);
      cfg.gains.eps_smc = VectorXd::Constant(n, ja.value("eps_smc", 0.1));
      cfg.gains.kappa = ja.value("kappa", cfg.gains.kappa);
      cfg.gains.theta_bound = ja.value("theta_bound", cfg.gains.theta_bound);
      cfg.gains.eps_proj = ja.value("eps_proj", cfg.gains.eps_proj);
      cfg.gains.alpha_c = ja.value("alpha_c", cfg.gains.alpha_c);
      cfg.gains.alpha_o = cfg.safety_cfg.alpha_o;  // single source
      const double k_r = ja.value("k_r", std::sqrt(250.0));
      const double lambda = ja.value("lambda", std::sqrt(250.0));
      cfg.gains.K_r_diag = VectorXd::Constant(n, k_r);
      cfg.gains.Lambda_diag = VectorXd::Constant(n, lambda);
    }
    if (j.contains("qp")) {
      cfg.qp.rho = j.at("qp").value("rho", cfg.qp.rho);
      cfg.qp.eps_s = j.at("qp").value("eps_s", cfg.qp.eps_s);
    }
    {
      const json jf = j.value("friction", json::object());
      cfg.friction.f_c = jf.contains("f_c") ? get_vector(jf.at("f_c"), n, "friction.f_c")
                                            : VectorXd::Constant(n, 0.8);
      cfg.friction.f_s = jf.contains("f_s") ? get_vector(jf.at("f_s"), n, "friction.f_s")
                                            : VectorXd::Constant(n, 1.2);
      cfg.friction.f_v = jf.contains("f_v") ? get_vector(jf.at("f_v"), n, "friction.f_v")
                                            : VectorXd::Constant(n, 0.4);
      cfg.friction.v_s = jf.contains("v_s") ? get_vector(jf.at("v_s"), n, "friction.v_s")
                                            : VectorXd::Constant(n, 0.1);
      cfg.friction.kappa_f = jf.value("kappa_f", 25.0);
    }
    {
      const json jw = j.value("wrench", json::object());
      if (jw.contains("peak")) {
        const auto& pk = jw.at("peak");
        for (int i = 0; i < 6; ++i) cfg.wrench.peak[i] = pk.at(i).get<double>();
      } else {
        cfg.wrench.peak << 20.0, 20.0, -15.0, 0.0, 0.0, 0.0;
      }
      cfg.wrench.t0 = jw.contains("window") ? jw.at("window").at(0).get<double>() : 5.0;
      cfg.wrench.t1 = jw.contains("window") ? jw.at("window").at(1).get<double>() : 7.0;
      cfg.wrench.envelope_width =
          jw.value("envelope_width", (cfg.wrench.t1 - cfg.wrench.t0) / 4.0);
    }
    if (j.contains("z_d")) {
      rbd::Pose zd;
      const auto& jz = j.at("z_d");
      const auto& p = jz.at("position");
      zd.position = Vector3d(p.at(0).get<double>(), p.at(1).get<double>(),
                             p.at(2).get<double>());
      const auto& q = jz.at("quaternion");  // scalar-first
      zd.orientation = Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                   q.at(2).get<double>(), q.at(3).get<double>());
      if (std::abs(zd.orientation.norm() - 1.0) > 1e-9)
        throw ConfigError("z_d quaternion must be unit length");
      cfg.z_d = zd;
    }
    const json jlog = j.value("log", json::object());
    cfg.log_fmax = jlog.value("f_max", false);
    cfg.log_weights = jlog.value("weights", false);
  } catch (const json::exception& e) {
    throw ConfigError("scenario file " + path + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string resolved_config_json(const ScenarioConfig& cfg) {
  const int n = cfg.limits.n();
  json j;
  j["version"] = cfg.version;
  j["robot"] = cfg.robot_file;
  j["mismatch"] = {{"level", cfg.mismatch_level}, {"seed", cfg.mismatch_seed}};
  j["mode"] = controller::mode_to_string(cfg.mode);
  j["duration"] = cfg.duration;
  j["dt"] = cfg.dt;
  j["initial"]["q"] = std::vector<double>(cfg.q0.data(), cfg.q0.data() + n);
  j["initial"]["qd"] = std::vector<double>(cfg.qd0.data(), cfg.qd0.data() + n);
  j["torque_limits"]["tau_max"] =
      std::vector<double>(cfg.tau_max.data(), cfg.tau_max.data() + n);
  j["torque_limits"]["tau_min"] =
      std::vector<double>(cfg.tau_min.data(), cfg.tau_min.data() + n);
  for (const auto& lim : cfg.limits.joints) {
    json je;
    je["kind"] = lim.kind == safety::LimitKind::kVelocityOnly ? "velocity"
                                                              : "position_velocity";
    if (lim.kind == safety::LimitKind::kPositionAndVelocity) je["q_max"] = lim.q_max;
    je["qd_max"] = lim.qd_max;
    j["joint_limits"].push_back(je);
  }
  auto diag_of = [](const Matrix6d& m) {
    std::vector<double> d(6);
    for (int i = 0; i < 6; ++i) d[static_cast<size_t>(i)] = m(i, i);
    return d;
  };
  j["impedance"] = {{"M_d", diag_of(cfg.impedance_params.M_d)},
                    {"B_d", diag_of(cfg.impedance_params.B_d)},
                    {"K_d", diag_of(cfg.impedance_params.K_d)}};
  j["dls"] = {{"k_max", cfg.dls.k_max},
              {"alpha_s", cfg.dls.alpha_s},
              {"sigma_low", cfg.dls.sigma_low},
              {"sigma_high", cfg.dls.sigma_high},
              {"k_damp", cfg.dls.K_damp(0, 0)}};
  j["safety"] = {{"l", cfg.safety_cfg.l},
                 {"gamma_v", cfg.safety_cfg.gamma_v},
                 {"gamma_p", cfg.safety_cfg.gamma_p},
                 {"nu", cfg.safety_cfg.nu},
                 {"beta", cfg.safety_cfg.beta},
                 {"omega1_bar", cfg.safety_cfg.omega1_bar},
                 {"alpha_o", cfg.safety_cfg.alpha_o}};
  j["fls"] = {{"mf_width", cfg.fls.mf_width},
              {"fou_factor", cfg.fls.fou_factor},
              {"xi_bar_scale", cfg.fls.xi_bar_scale}};
  j["adapt"] = {{"gamma_theta", cfg.gains.gamma_theta},
                {"gamma_w", cfg.gains.gamma_w},
                {"sigma_w", cfg.gains.sigma_w},
                {"eps_smc", cfg.gains.eps_smc[0]},
                {"kappa", cfg.gains.kappa},
                {"theta_bound", cfg.gains.theta_bound},
                {"eps_proj", cfg.gains.eps_proj},
                {"alpha_c", cfg.gains.alpha_c},
                {"k_r", cfg.gains.K_r_diag[0]},
                {"lambda", cfg.gains.Lambda_diag[0]}};
  j["qp"] = {{"rho", cfg.qp.rho}, {"eps_s", cfg.qp.eps_s}};
  auto vec_of = [n](const VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + n);
  };
  j["friction"] = {{"f_c", vec_of(cfg.friction.f_c)},
                   {"f_s", vec_of(cfg.friction.f_s)},
                   {"f_v", vec_of(cfg.friction.f_v)},
                   {"v_s", vec_of(cfg.friction.v_s)},
                   {"kappa_f", cfg.friction.kappa_f}};
  j["wrench"] = {{"peak", std::vector<double>(cfg.wrench.peak.data(),
                                              cfg.wrench.peak.data() + 6)},
                 {"window", {cfg.wrench.t0, cfg.wrench.t1}},
                 {"envelope_width", cfg.wrench.envelope_width}};
  j["log"] = {{"f_max", cfg.log_fmax}, {"weights", cfg.log_weights}};
  return j.dump(2);
}

namespace {

controller::ControllerConfig make_controller_config(const ScenarioConfig& cfg,
                                                    const rbd::RobotModel& model_true) {
  controller::ControllerConfig cc;
  cc.model_hat = rbd::perturb_model(model_true, cfg.mismatch_level, cfg.mismatch_seed);
  cc.impedance = cfg.impedance_params;
  cc.dls = cfg.dls;
  cc.limits = cfg.limits;
  cc.safety = cfg.safety_cfg;
  cc.fls = cfg.fls;
  cc.gains = cfg.gains;
  cc.qp = cfg.qp;
  cc.tau_min = cfg.tau_min;
  cc.tau_max = cfg.tau_max;
  cc.z_d = cfg.z_d ? *cfg.z_d : rbd::forward_kinematics(model_true, cfg.q0);
  cc.mode = cfg.mode;
  return cc;
}

controller::LoopState initial_loop_state(const ScenarioConfig& cfg) {
  const int n = cfg.limits.n();
  controller::LoopState s;
  s.q = cfg.q0;
  s.qd = cfg.qd0;
  s.q_imp = cfg.q0;
  s.qd_imp = cfg.qd0;
  s.x_ref = VectorXd::Zero(2 * n);
  s.x_ref.head(n) = cfg.q0;
  s.x_ref.tail(n) = cfg.qd0;
  s.theta = VectorXd::Zero(adapt::kWeightsPerJoint * n);
  s.w_hat = VectorXd::Zero(n);
  // observers initialized offline so the estimates start at zero
  s.ell_c = -cfg.gains.alpha_c * cfg.qd0;
  s.ell_o = -cfg.gains.alpha_o * cfg.qd0;
  return s;
}

VectorXd pack_derivative(const plant::StateDerivative& dx,
                         const controller::ControllerDerivatives& cd) {
  const int n = static_cast<int>(dx.qd.size());
  controller::LoopState d;
  d.q = dx.qd;
  d.qd = dx.qdd;
  d.q_imp = cd.qd_imp;
  d.qd_imp = cd.qdd_imp;
  d.x_ref = cd.x_ref_dot;
  d.theta = cd.theta_dot;
  d.w_hat = cd.w_hat_dot;
  d.ell_c = cd.ell_c_dot;
  d.ell_o = cd.ell_o_dot;
  (void)n;
  return d.flatten();
}

}  // namespace

Trace run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const rbd::RobotModel model_true = rbd::load_robot(cfg.robot_file);
  if (model_true.n() != cfg.limits.n())
    throw ConfigError("robot model and limit table disagree on joint count");
  const int n = model_true.n();

  controller::Controller ctrl(make_controller_config(cfg, model_true));
  const rbd::Pose z_d = ctrl.config().z_d;

  controller::LoopState state = initial_loop_state(cfg);
  VectorXd y = state.flatten();

  auto derivative = [&](double t, const VectorXd& yy) -> VectorXd {
    const controller::LoopState s = controller::LoopState::unflatten(yy, n);
    const Vector6d F_h = plant::wrench_at(t, cfg.wrench);
    const controller::StepResult res = ctrl.eval(s, t, F_h);
    const plant::JointState x{s.q, s.qd};
    const plant::StateDerivative dx =
        plant::plant_derivative(model_true, x, res.u, F_h, cfg.friction);
    return pack_derivative(dx, res.deriv);
  };

  Trace trace;
  trace.rows.reserve(cfg.steps());
  const int steps = cfg.steps();
  for (int k = 0; k < steps; ++k) {
    const double t = k * cfg.dt;
    try {
      const controller::LoopState s = controller::LoopState::unflatten(y, n);
      const Vector6d F_h = plant::wrench_at(t, cfg.wrench);
      const controller::StepResult res =
          ctrl.eval(s, t, F_h, /*want_hard_feasible=*/true,
                    /*want_fmax=*/cfg.log_fmax);

      TraceRow row;
      row.t = t;
      row.q = s.q;
      row.qd = s.qd;
      row.q_ref = s.x_ref.head(n);
      row.qd_ref = s.x_ref.tail(n);
      row.q_imp = s.q_imp;
      row.qd_imp = s.qd_imp;
      row.u = res.diag.u;
      row.s_star = res.diag.s_star;
      row.r = res.diag.r;
      row.r_imp = res.diag.r_imp;
      row.min_h_velocity = res.diag.min_h_velocity;
      row.min_h_position = res.diag.min_h_position;
      row.min_h = res.diag.min_h;
      row.fh_norm = F_h.norm();
      row.f_max = res.diag.f_max;
      const rbd::Pose z_imp = rbd::forward_kinematics(model_true, s.q_imp);
      const rbd::Pose z = rbd::forward_kinematics(model_true, s.q);
      row.imp_err = impedance::task_error(z_imp, z).norm();
      row.f_theta = res.diag.f_theta;
      row.min_sigma = res.diag.min_sigma;
      row.qp_iterations = res.diag.qp_iterations;
      row.qp_kkt_residual = res.diag.qp_kkt_residual;
      row.hard_feasible = res.diag.hard_feasible;
      trace.rows.push_back(std::move(row));

      y = plant::rk4_step(derivative, y, t, cfg.dt);
    } catch (const Fault& f) {
      trace.fault = true;
      trace.fault_message = f.what();
      break;
    }
    (void)z_d;
  }
  trace.final_state = controller::LoopState::unflatten(y, n);
  return trace;
}

SweepResult sweep_mismatch(const ScenarioConfig& base, const std::vector<double>& levels,
                           const std::vector<std::uint64_t>& seeds) {
  for (double level : levels)
    if (level < 0.0 || level > 0.7 + 1e-12)
      throw ConfigError("sweep levels must lie in [0, 0.7]");

  SweepResult out;
  out.levels = levels;
  out.seeds = seeds;
  out.rms = MatrixXd::Zero(static_cast<int>(levels.size()),
                           static_cast<int>(seeds.size()));
  out.faults.assign(levels.size() * seeds.size(), "");

  std::vector<std::future<std::pair<double, std::string>>> jobs;
  jobs.reserve(levels.size() * seeds.size());
  for (size_t li = 0; li < levels.size(); ++li) {
    for (size_t si = 0; si < seeds.size(); ++si) {
      ScenarioConfig cfg = base;
      cfg.mode = controller::Mode::kProposed;
      cfg.mismatch_level = levels[li];
      cfg.mismatch_seed = seeds[si];
      cfg.log_fmax = false;
      jobs.push_back(std::async(std::launch::async, [cfg]() {
        std::pair<double, std::string> r{0.0, ""};
        try {
          const Trace tr = run_scenario(cfg);
          if (tr.fault) {
            r.second = tr.fault_message;
            return r;
          }
          double acc = 0.0;
          for (const TraceRow& row : tr.rows) acc += row.imp_err * row.imp_err;
          r.first = std::sqrt(acc / static_cast<double>(tr.rows.size()));
        } catch (const std::exception& e) {
          r.second = e.what();
        }
        return r;
      }));
    }
  }
  for (size_t li = 0; li < levels.size(); ++li)
    for (size_t si = 0; si < seeds.size(); ++si) {
      auto [rms, err] = jobs[li * seeds.size() + si].get();
      out.rms(static_cast<int>(li), static_cast<int>(si)) = rms;
      out.faults[li * seeds.size() + si] = err;
    }
  return out;
}

Metrics compute_metrics(const Trace& trace, const VectorXd& tau_min,
                        const VectorXd& tau_max, double dt, double window_start,
                        double window_end) {
  Metrics m;
  if (trace.rows.empty()) return m;
  const int n = static_cast<int>(trace.rows.front().u.size());
  m.torque_sign_changes.assign(n, 0);
  m.min_min_h = std::numeric_limits<double>::infinity();
  m.min_min_h_velocity = std::numeric_limits<double>::infinity();
  m.min_min_h_position = std::numeric_limits<double>::infinity();

  constexpr double kTorqueTol = 1e-6;     // matches the step-level guarantee
  constexpr double kIncrementDead = 1e-6; // ignore roundoff wiggle [N m]

  double acc = 0.0;
  std::vector<int> last_sign(n, 0);
  bool in_infeasible = false;
  double infeasible_start = 0.0;
  for (size_t k = 0; k < trace.rows.size(); ++k) {
    const TraceRow& row = trace.rows[k];
    acc += row.imp_err * row.imp_err;
    m.min_min_h = std::min(m.min_min_h, row.min_h);
    m.min_min_h_velocity = std::min(m.min_min_h_velocity, row.min_h_velocity);
    m.min_min_h_position = std::min(m.min_min_h_position, row.min_h_position);
    m.max_s_star = std::max(m.max_s_star, row.s_star.lpNorm<Eigen::Infinity>());
    m.max_r_norm = std::max(m.max_r_norm, row.r.norm());
    for (int i = 0; i < n; ++i) {
      const double over = std::max(row.u[i] - tau_max[i], tau_min[i] - row.u[i]);
      if (over > kTorqueTol) {
        ++m.torque_violation_count;
        m.max_torque_violation = std::max(m.max_torque_violation, over);
      }
    }
    if (k > 0) {
      const VectorXd du = row.u - trace.rows[k - 1].u;
      m.max_torque_increment =
          std::max(m.max_torque_increment, du.lpNorm<Eigen::Infinity>());
      if (row.t >= window_start && row.t <= window_end) {
        for (int i = 0; i < n; ++i) {
          if (std::abs(du[i]) <= kIncrementDead) continue;
          const int sign = du[i] > 0.0 ? 1 : -1;
          if (last_sign[i] != 0 && sign != last_sign[i]) ++m.torque_sign_changes[i];
          last_sign[i] = sign;
        }
      }
    }
    const bool infeasible = std::isfinite(row.f_max) && row.fh_norm > row.f_max;
    if (infeasible && !in_infeasible) {
      in_infeasible = true;
      infeasible_start = row.t;
    } else if (!infeasible && in_infeasible) {
      in_infeasible = false;
      m.infeasible_intervals.emplace_back(infeasible_start, row.t);
      m.infeasible_time += row.t - infeasible_start;
    }
  }
  if (in_infeasible) {
    const double t_end = trace.rows.back().t + dt;
    m.infeasible_intervals.emplace_back(infeasible_start, t_end);
    m.infeasible_time += t_end - infeasible_start;
  }
  m.rms_imp_err = std::sqrt(acc / static_cast<double>(trace.rows.size()));
  return m;
}

std::string metrics_json(const Metrics& m) {
  json j;
  j["rms_imp_err"] = m.rms_imp_err;
  j["min_min_h"] = m.min_min_h;
  j["min_min_h_velocity"] = m.min_min_h_velocity;
  j["min_min_h_position"] = m.min_min_h_position;
  j["torque_violation_count"] = m.torque_violation_count;
  j["max_torque_violation"] = m.max_torque_violation;
  j["max_s_star"] = m.max_s_star;
  j["torque_sign_changes"] = m.torque_sign_changes;
  j["max_r_norm"] = m.max_r_norm;
  j["max_torque_increment"] = m.max_torque_increment;
  json intervals = json::array();
  for (const auto& [a, b] : m.infeasible_intervals) intervals.push_back({a, b});
  j["infeasible_intervals"] = intervals;
  j["infeasible_time"] = m.infeasible_time;
  return j.dump(2);
}

namespace {

void header_vec(std::ostringstream& os, const char* base, int n) {
  for (int i = 0; i < n; ++i) os << "," << base << i + 1;
}

void row_vec(std::ostringstream& os, const VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << "," << fmt(v[i]);
}

}  // namespace

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ostringstream os;
  os << "# units: t [s]; q,q_ref,q_imp [rad]; qd,qd_ref,qd_imp [rad/s]; "
        "u,s_star [N m]; r,r_imp [rad/s]; min_h families [barrier units]; "
        "fh_norm,f_max [N]; imp_err [m-quaternion norm]\n";
  if (trace.fault) os << "# FAULT: " << trace.fault_message << "\n";
  const int n = trace.rows.empty() ? 0 : static_cast<int>(trace.rows.front().q.size());
  os << "t";
  header_vec(os, "q", n);
  header_vec(os, "qd", n);
  header_vec(os, "q_ref", n);
  header_vec(os, "qd_ref", n);
  header_vec(os, "q_imp", n);
  header_vec(os, "qd_imp", n);
  header_vec(os, "u", n);
  header_vec(os, "s_star", n);
  header_vec(os, "r", n);
  header_vec(os, "r_imp", n);
  os << ",min_h_velocity,min_h_position,min_h,fh_norm,f_max,imp_err,f_theta,"
        "min_sigma,qp_iterations,qp_kkt_residual,hard_feasible\n";
  for (const TraceRow& row : trace.rows) {
    os << fmt(row.t);
    row_vec(os, row.q);
    row_vec(os, row.qd);
    row_vec(os, row.q_ref);
    row_vec(os, row.qd_ref);
    row_vec(os, row.q_imp);
    row_vec(os, row.qd_imp);
    row_vec(os, row.u);
    row_vec(os, row.s_star);
    row_vec(os, row.r);
    row_vec(os, row.r_imp);
    os << "," << fmt(row.min_h_velocity) << "," << fmt(row.min_h_position) << ","
       << fmt(row.min_h) << "," << fmt(row.fh_norm) << "," << fmt(row.f_max) << ","
       << fmt(row.imp_err) << "," << fmt(row.f_theta) << "," << fmt(row.min_sigma)
       << "," << row.qp_iterations << "," << fmt(row.qp_kkt_residual) << ","
       << (row.hard_feasible ? 1 : 0) << "\n";
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Fault("cannot write trace file: " + path);
  out << os.str();
}

std::map<std::string, std::vector<double>> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file: " + path);
  std::string line;
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> cols;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    if (names.empty()) {
      while (std::getline(ss, cell, ',')) {
        names.push_back(cell);
        cols[cell] = {};
      }
      continue;
    }
    size_t i = 0;
    while (std::getline(ss, cell, ',')) {
      if (i >= names.size()) throw ConfigError("trace CSV row wider than header");
      double v;
      if (cell == "nan" || cell == "-nan")
        v = std::numeric_limits<double>::quiet_NaN();
      else if (cell == "inf")
        v = std::numeric_limits<double>::infinity();
      else if (cell == "-inf")
        v = -std::numeric_limits<double>::infinity();
      else
        v = std::stod(cell);
      cols[names[i]].push_back(v);
      ++i;
    }
  }
  return cols;
}

void write_weight_dump(const ScenarioConfig& cfg, const controller::LoopState& fin,
                       const std::string& path) {
  json j;
  j["theta"] = std::vector<double>(fin.theta.data(), fin.theta.data() + fin.theta.size());
  j["w_hat"] = std::vector<double>(fin.w_hat.data(), fin.w_hat.data() + fin.w_hat.size());
  j["membership"] = {{"centers", {cfg.fls.mf_centers[0], cfg.fls.mf_centers[1],
                                  cfg.fls.mf_centers[2]}},
                     {"width", cfg.fls.mf_width},
                     {"fou_factor", cfg.fls.fou_factor},
                     {"xi_bar_scale", cfg.fls.xi_bar_scale}};
  std::ofstream out(path);
  if (!out) throw Fault("cannot write weight dump: " + path);
  out << j.dump(2);
}

FeasibilityReport feasibility_report(const ScenarioConfig& cfg) {
  FeasibilityReport rep;
  rep.all_inside = true;
  for (int i = 0; i < cfg.limits.n(); ++i) {
    const safety::JointLimit& lim = cfg.limits.joints[i];
    FeasibilityReport::JointRow row;
    row.joint = i + 1;
    row.position_joint = lim.kind == safety::LimitKind::kPositionAndVelocity;
    row.gamma_used =
        row.position_joint ? cfg.safety_cfg.gamma_p : cfg.safety_cfg.gamma_v;
    const auto interval = safety::gamma_feasible_interval(lim, cfg.safety_cfg);
    if (interval) {
      row.has_interval = true;
      row.lo = interval->lo;
      row.hi = interval->hi;
      row.gamma_inside = row.gamma_used > row.lo && row.gamma_used < row.hi;
    }
    rep.all_inside = rep.all_inside && row.gamma_inside;
    rep.joints.push_back(row);
  }
  return rep;
}

std::string feasibility_json(const FeasibilityReport& r) {
  json j;
  j["all_gamma_inside"] = r.all_inside;
  for (const auto& row : r.joints) {
    json je;
    je["joint"] = row.joint;
    je["kind"] = row.position_joint ? "position_velocity" : "velocity";
    je["gamma_used"] = row.gamma_used;
    je["has_interval"] = row.has_interval;
    if (row.has_interval) {
      je["gamma_min"] = row.lo;
      je["gamma_max"] = row.hi;
      je["gamma_inside"] = row.gamma_inside;
    }
    j["joints"].push_back(je);
  }
  return j.dump(2);
}

}  // namespace sail::harness
