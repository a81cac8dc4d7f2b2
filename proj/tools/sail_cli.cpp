// Command-line front end: run scenarios, sweep model mismatch, report gamma
// tuning feasibility, compare controller modes and render SVG plots.

#include "sail/harness.hpp"
#include "sail/svg_plot.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

namespace {

using namespace sail;
namespace fs = std::filesystem;

struct CommonOpts {
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  double dt = 0.0;
  double duration = 0.0;
  std::string mode;
};

void apply_overrides(harness::ScenarioConfig& cfg, const CommonOpts& o) {
  if (o.seed_set) cfg.mismatch_seed = o.seed;
  if (o.dt > 0.0) cfg.dt = o.dt;
  if (o.duration > 0.0) cfg.duration = o.duration;
  if (!o.mode.empty()) cfg.mode = controller::mode_from_string(o.mode);
  cfg.validate();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Fault("cannot write " + path.string());
  out << content;
}

std::vector<double> column(const std::map<std::string, std::vector<double>>& cols,
                           const std::string& name) {
  const auto it = cols.find(name);
  if (it == cols.end()) throw ConfigError("trace is missing column " + name);
  return it->second;
}

svg::Panel trace_panel(const std::map<std::string, std::vector<double>>& cols,
                       const std::string& title, const std::string& col,
                       const std::string& y_label, const std::string& color) {
  svg::Panel p;
  p.title = title;
  p.y_label = y_label;
  svg::Series s;
  s.color = color;
  s.x = column(cols, "t");
  s.y = column(cols, col);
  p.series.push_back(std::move(s));
  return p;
}

void plot_trace(const std::string& trace_path, const std::string& out_path,
                double tau_max_joint2) {
  const auto cols = harness::read_trace_csv(trace_path);
  std::vector<svg::Panel> panels;

  panels.push_back(trace_panel(cols, "Impedance tracking error", "imp_err",
                               "|z_imp - z|", "#2a7e43"));

  {
    svg::Panel p = trace_panel(cols, "Joint 2 torque", "u2", "u [N m]", "#1f4e9c");
    if (tau_max_joint2 > 0.0) {
      p.thresholds.push_back({tau_max_joint2, "#444444", true});
      p.thresholds.push_back({-tau_max_joint2, "#444444", true});
      const auto& u2 = column(cols, "u2");
      double umax = 0.0;
      for (double v : u2) umax = std::max(umax, std::abs(v));
      if (umax > tau_max_joint2) {
        p.bands.push_back({tau_max_joint2, umax * 1.05, "#55aa5544"});
        p.bands.push_back({-umax * 1.05, -tau_max_joint2, "#55aa5544"});
      }
    }
    panels.push_back(std::move(p));
  }

  {
    svg::Panel p = trace_panel(cols, "Minimum NCBF over joints", "min_h", "min h",
                               "#8a2a7e");
    p.thresholds.push_back({0.0, "#444444", true});
    const auto& mh = column(cols, "min_h");
    const double lo = *std::min_element(mh.begin(), mh.end());
    if (lo < 0.0) p.bands.push_back({lo * 1.05, 0.0, "#55aa5544"});
    panels.push_back(std::move(p));
  }

  {
    svg::Panel p;
    p.title = "Reference-model learning error";
    p.y_label = "|r|";
    svg::Series s;
    s.color = "#b05716";
    s.x = column(cols, "t");
    const int n = [&] {
      int k = 0;
      while (cols.count("r" + std::to_string(k + 1))) ++k;
      return k;
    }();
    s.y.resize(s.x.size(), 0.0);
    for (int i = 1; i <= n; ++i) {
      const auto& ri = column(cols, "r" + std::to_string(i));
      for (size_t k = 0; k < s.y.size(); ++k) s.y[k] += ri[k] * ri[k];
    }
    for (double& v : s.y) v = std::sqrt(v);
    p.series.push_back(std::move(s));
    panels.push_back(std::move(p));
  }

  {
    svg::Panel p;
    p.title = "Applied wrench vs feasibility metric";
    p.y_label = "[N]";
    svg::Series fh;
    fh.label = "|F_h|";
    fh.color = "#1f4e9c";
    fh.x = column(cols, "t");
    fh.y = column(cols, "fh_norm");
    svg::Series fm;
    fm.label = "F_max";
    fm.color = "#b01616";
    fm.x = fh.x;
    fm.y = column(cols, "f_max");
    p.series.push_back(std::move(fh));
    p.series.push_back(std::move(fm));
    panels.push_back(std::move(p));
  }

  svg::write_svg(out_path, panels, 3);
}

int run_command(const std::string& config_path, const CommonOpts& o) {
  harness::ScenarioConfig cfg = harness::load_scenario(config_path);
  apply_overrides(cfg, o);
  fs::create_directories(o.out_dir);

  const harness::Trace trace = harness::run_scenario(cfg);
  harness::write_trace_csv(trace, (fs::path(o.out_dir) / "trace.csv").string());
  write_file(fs::path(o.out_dir) / "resolved_config.json", resolved_config_json(cfg));
  const harness::Metrics metrics = harness::compute_metrics(
      trace, cfg.tau_min, cfg.tau_max, cfg.dt, cfg.wrench.t0, cfg.wrench.t1 + 1.0);
  write_file(fs::path(o.out_dir) / "summary.json", harness::metrics_json(metrics));
  if (cfg.log_weights)
    harness::write_weight_dump(cfg, trace.final_state,
                               (fs::path(o.out_dir) / "weights.json").string());
  if (trace.fault) {
    std::cerr << nlohmann::json{{"error", "fault"},
                                {"message", trace.fault_message}}
                     .dump()
              << "\n";
    return 1;
  }
  std::cout << "wrote " << (fs::path(o.out_dir) / "trace.csv").string() << " ("
            << trace.rows.size() << " rows)\n";
  return 0;
}

int sweep_command(const std::string& config_path, const CommonOpts& o,
                  std::vector<double> levels, std::vector<std::uint64_t> seeds) {
  harness::ScenarioConfig cfg = harness::load_scenario(config_path);
  apply_overrides(cfg, o);
  if (levels.empty()) levels = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  if (seeds.empty()) seeds = {1, 2, 3};
  fs::create_directories(o.out_dir);

  const harness::SweepResult res = harness::sweep_mismatch(cfg, levels, seeds);

  std::ostringstream csv;
  csv << "level";
  for (auto s : seeds) csv << ",seed" << s;
  csv << ",mean\n";
  nlohmann::json jlevels = nlohmann::json::array();
  svg::Panel panel;
  panel.title = "RMS impedance tracking error vs mismatch";
  panel.x_label = "perturbation level";
  panel.y_label = "RMS |z_imp - z|";
  svg::Series mean_series;
  mean_series.color = "#2a7e43";
  bool any_fault = false;
  for (size_t li = 0; li < levels.size(); ++li) {
    csv << levels[li];
    double mean = 0.0;
    nlohmann::json jrow;
    jrow["level"] = levels[li];
    for (size_t si = 0; si < seeds.size(); ++si) {
      const double rms = res.rms(static_cast<int>(li), static_cast<int>(si));
      const std::string& fault = res.faults[li * seeds.size() + si];
      any_fault = any_fault || !fault.empty();
      csv << "," << rms;
      jrow["rms"].push_back(rms);
      if (!fault.empty()) jrow["faults"].push_back(fault);
      mean += rms;
    }
    mean /= static_cast<double>(seeds.size());
    csv << "," << mean << "\n";
    jrow["mean"] = mean;
    jlevels.push_back(jrow);
    mean_series.x.push_back(levels[li]);
    mean_series.y.push_back(mean);
  }
  panel.series.push_back(mean_series);
  write_file(fs::path(o.out_dir) / "sweep.csv", csv.str());
  write_file(fs::path(o.out_dir) / "sweep.json",
             nlohmann::json{{"levels", jlevels}}.dump(2));
  svg::write_svg((fs::path(o.out_dir) / "sweep.svg").string(), {panel}, 1);
  std::cout << "wrote " << (fs::path(o.out_dir) / "sweep.csv").string() << "\n";
  return any_fault ? 1 : 0;
}

int feasibility_command(const std::string& config_path, const CommonOpts& o) {
  harness::ScenarioConfig cfg = harness::load_scenario(config_path);
  apply_overrides(cfg, o);
  const harness::FeasibilityReport rep = harness::feasibility_report(cfg);
  for (const auto& row : rep.joints) {
    std::cout << "joint " << row.joint << " ("
              << (row.position_joint ? "position+velocity" : "velocity")
              << "): gamma = " << row.gamma_used;
    if (row.has_interval)
      std::cout << ", feasible interval (" << row.lo << ", " << row.hi << ") -> "
                << (row.gamma_inside ? "inside" : "OUTSIDE");
    else
      std::cout << ", no feasible interval (discriminant <= 0)";
    std::cout << "\n";
  }
  std::cout << (rep.all_inside ? "gamma lies inside every joint interval"
                               : "gamma is not inside every joint interval")
            << "\n";
  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / "feasibility.json", harness::feasibility_json(rep));
  return 0;
}

int compare_command(const std::string& config_path, const CommonOpts& o,
                    const std::string& modes_csv) {
  harness::ScenarioConfig base = harness::load_scenario(config_path);
  apply_overrides(base, o);
  std::vector<std::string> modes;
  std::stringstream ss(modes_csv);
  std::string item;
  while (std::getline(ss, item, ',')) modes.push_back(item);
  if (modes.empty()) throw ConfigError("compare: no modes given");
  fs::create_directories(o.out_dir);

  std::vector<std::future<harness::Trace>> jobs;
  for (const std::string& m : modes) {
    harness::ScenarioConfig cfg = base;
    cfg.mode = controller::mode_from_string(m);
    jobs.push_back(std::async(std::launch::async,
                              [cfg]() { return harness::run_scenario(cfg); }));
  }
  nlohmann::json summary;
  bool any_fault = false;
  for (size_t i = 0; i < modes.size(); ++i) {
    const harness::Trace trace = jobs[i].get();
    const std::string trace_path =
        (fs::path(o.out_dir) / ("trace_" + modes[i] + ".csv")).string();
    harness::write_trace_csv(trace, trace_path);
    const harness::Metrics m = harness::compute_metrics(
        trace, base.tau_min, base.tau_max, base.dt, base.wrench.t0,
        base.wrench.t1 + 1.0);
    summary[modes[i]] = nlohmann::json::parse(harness::metrics_json(m));
    summary[modes[i]]["fault"] = trace.fault;
    any_fault = any_fault || trace.fault;
  }
  write_file(fs::path(o.out_dir) / "compare.json", summary.dump(2));
  std::cout << "wrote " << (fs::path(o.out_dir) / "compare.json").string() << "\n";
  return any_fault ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"safety-filtered adaptive impedance control scenario harness"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string config_path, trace_path, out_svg = "plot.svg";
  std::vector<double> levels;
  std::vector<std::uint64_t> seeds;
  std::string modes = "proposed,nic,aworm";
  double tau2 = 0.0;

  auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
    if (needs_config)
      cmd->add_option("config", config_path, "scenario JSON file")->required();
    cmd->add_option("--out-dir", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "mismatch seed override")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--dt", opts.dt, "integrator step override [s]");
    cmd->add_option("--duration", opts.duration, "horizon override [s]");
  };

  CLI::App* run = app.add_subcommand("run", "run one scenario -> CSV + summary");
  add_common(run);
  run->add_option("--mode", opts.mode, "controller mode: proposed|nic|aworm");

  CLI::App* sweep = app.add_subcommand("sweep", "mismatch sweep -> RMS table");
  add_common(sweep);
  sweep->add_option("--levels", levels, "perturbation levels in [0, 0.7]");
  sweep->add_option("--seeds", seeds, "mismatch seeds");

  CLI::App* feas = app.add_subcommand("feasibility", "gamma tuning intervals");
  add_common(feas);

  CLI::App* cmp = app.add_subcommand("compare", "run several controller modes");
  add_common(cmp);
  cmp->add_option("--modes", modes, "comma-separated mode list");

  CLI::App* plot = app.add_subcommand("plot", "render SVG panels from a trace CSV");
  plot->add_option("trace", trace_path, "trace.csv produced by run")->required();
  plot->add_option("--out", out_svg, "output SVG path");
  plot->add_option("--tau-max-joint2", tau2, "threshold line for the torque panel");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path, opts);
    if (sweep->parsed()) return sweep_command(config_path, opts, levels, seeds);
    if (feas->parsed()) return feasibility_command(config_path, opts);
    if (cmp->parsed()) return compare_command(config_path, opts, modes);
    if (plot->parsed()) {
      plot_trace(trace_path, out_svg, tau2);
      std::cout << "wrote " << out_svg << "\n";
      return 0;
    }
  } catch (const sail::ConfigError& e) {
    std::cerr << nlohmann::json{{"error", "config"}, {"message", e.what()}}.dump()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "fault"}, {"message", e.what()}}.dump()
              << "\n";
    return 1;
  }
  return 2;
}
