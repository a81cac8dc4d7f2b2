/**
 * @file harness.hpp
 * @brief Scenario definition, closed-loop execution, metrics and file
 *        outputs for the simulation studies.
 */

#ifndef SAIL_HARNESS_HPP_
#define SAIL_HARNESS_HPP_

#include "sail/controller.hpp"
#include "sail/common.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sail::harness {

struct ScenarioConfig {
  int version = 1;
  std::string robot_file;
  double mismatch_level = 0.5;
  std::uint64_t mismatch_seed = 1;
  controller::Mode mode = controller::Mode::kProposed;
  VectorXd tau_min, tau_max;
  safety::JointLimits limits;
  impedance::ImpedanceParams impedance_params;
  impedance::DlsConfig dls;
  safety::SafetyConfig safety_cfg;
  adapt::FlsConfig fls;
  adapt::AdaptGains gains;
  optim::CommandQpConfig qp;
  plant::FrictionParams friction;
  plant::WrenchProfile wrench;
  double duration = 10.0;
  double dt = 0.01;
  VectorXd q0, qd0;
  std::optional<rbd::Pose> z_d;  ///< fixed task pose; default fk(q0)
  bool log_fmax = false;
  bool log_weights = false;

  int steps() const;
  void validate() const;
};

/// Parse a scenario JSON file. Missing blocks take the documented defaults.
ScenarioConfig load_scenario(const std::string& path);

/// Serialize the fully-resolved configuration (defaults materialized).
std::string resolved_config_json(const ScenarioConfig& cfg);

struct TraceRow {
  double t = 0.0;
  VectorXd q, qd;
  VectorXd q_ref, qd_ref;
  VectorXd q_imp, qd_imp;
  VectorXd u, s_star, r, r_imp;
  double min_h_velocity = 0.0;
  double min_h_position = 0.0;
  double min_h = 0.0;
  double fh_norm = 0.0;
  double f_max = std::numeric_limits<double>::quiet_NaN();
  double imp_err = 0.0;  ///< |z_imp - z| with quaternion-vector orientation part
  double f_theta = 0.0;
  double min_sigma = 0.0;
  int qp_iterations = 0;
  double qp_kkt_residual = 0.0;
  bool hard_feasible = true;
};

struct Trace {
  std::vector<TraceRow> rows;
  bool fault = false;
  std::string fault_message;
  controller::LoopState final_state;  ///< state after the last step
};

/// Deterministic closed-loop run; the partial trace is returned flagged on a
/// plant/controller fault.
Trace run_scenario(const ScenarioConfig& cfg);

struct SweepResult {
  std::vector<double> levels;
  std::vector<std::uint64_t> seeds;
  MatrixXd rms;  ///< levels x seeds, RMS impedance tracking error
  std::vector<std::string> faults;  ///< non-empty entries mark failed runs
};

/// RMS impedance error per mismatch level (proposed controller); levels and
/// seeds run in parallel, one isolated simulation each.
SweepResult sweep_mismatch(const ScenarioConfig& base, const std::vector<double>& levels,
                           const std::vector<std::uint64_t>& seeds);

struct Metrics {
  double rms_imp_err = 0.0;
  double min_min_h = 0.0;
  double min_min_h_velocity = 0.0;
  double min_min_h_position = 0.0;
  int torque_violation_count = 0;      ///< joint-step pairs beyond limits (+1e-6)
  double max_torque_violation = 0.0;   ///< largest excess [N m]
  double max_s_star = 0.0;             ///< max over time of |s*|_inf
  std::vector<int> torque_sign_changes;  ///< sign flips of the torque increment
                                         ///< per joint inside the window
  double max_r_norm = 0.0;
  double max_torque_increment = 0.0;   ///< max over steps of |u_k - u_{k-1}|_inf
  std::vector<std::pair<double, double>> infeasible_intervals;  ///< |F_h| > F_max
  double infeasible_time = 0.0;
};

/// One-pass metrics over a trace. The sign-change window defaults to the
/// wrench interaction window extended by one second.
Metrics compute_metrics(const Trace& trace, const VectorXd& tau_min,
                        const VectorXd& tau_max, double dt, double window_start,
                        double window_end);

std::string metrics_json(const Metrics& m);

void write_trace_csv(const Trace& trace, const std::string& path);

/// Column-name -> values map of a trace CSV (used by the plot command and by
/// the independent metrics re-reader).
std::map<std::string, std::vector<double>> read_trace_csv(const std::string& path);

void write_weight_dump(const ScenarioConfig& cfg, const controller::LoopState& fin,
                       const std::string& path);

/// Per-joint gamma tuning-feasibility report.
struct FeasibilityReport {
  struct JointRow {
    int joint = 0;
    bool position_joint = false;
    bool has_interval = false;
    double lo = 0.0, hi = 0.0;
    double gamma_used = 0.0;
    bool gamma_inside = false;
  };
  std::vector<JointRow> joints;
  bool all_inside = false;
};

FeasibilityReport feasibility_report(const ScenarioConfig& cfg);
std::string feasibility_json(const FeasibilityReport& r);

}  // namespace sail::harness

#endif  // SAIL_HARNESS_HPP_
