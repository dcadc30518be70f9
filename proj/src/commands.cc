#include "foldctl/commands.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "foldctl/errors.h"
#include "foldctl/output.h"
#include "json.hpp"

namespace foldctl {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

std::string coordinate_header(int n_s) {
  std::string h;
  for (int i = 1; i <= n_s; ++i) h += "x" + std::to_string(i) + ",";
  return h + "z";
}

std::string join_point(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_number(v[i]);
  return out;
}

const BackstepGains& require_gains(const Scenario& s) {
  if (!s.gains) {
    throw ScenarioError(ScenarioError::Kind::kSchema, "/controller: missing required key");
  }
  return *s.gains;
}

// Exact-mode rank checks run over the region the scenario will visit.
ChartController design_controller(const Scenario& s) {
  const BackstepGains& gains = require_gains(s);
  const DesingularizedSystem des(s.system);
  std::vector<ChartPoint> domain;
  if (s.mode == ControlMode::kExact) {
    double rho_max = 0.0;
    for (double eps : s.eps) rho_max = std::max(rho_max, std::cbrt(eps));
    double radius = 1.0;
    for (const auto& ic : s.initial_conditions) {
      if (ic.frame == IcFrame::kBlownUp) radius = std::max(radius, ic.state.norm());
    }
    domain = annulus_grid(s.system.n_s(), 256, 1e-3, radius, rho_max, s.verify.seed);
    domain.push_back({rho_max, Eigen::VectorXd::Zero(s.system.n_s() + 1)});
  }
  return synthesize_injection(des, gains, s.mode, domain);
}

CheckReport negative_control(CheckReport inner, const std::string& name, double min_residual) {
  CheckReport r = inner;
  r.name = name;
  r.passed = !inner.passed && inner.worst_residual > min_residual;
  r.note = "negative control: the inner check must fail with residual > " +
           format_number(min_residual);
  if (!inner.note.empty()) r.note += "; " + inner.note;
  return r;
}

}  // namespace

fs::path output_directory(const Scenario& s, const CommandOptions& opts) {
  if (opts.out_dir) return *opts.out_dir;
  if (!s.output_dir.empty()) return s.output_dir;
  return "foldctl-out";
}

int run_analyze(const Scenario& s, const CommandOptions& opts, std::ostream& log) {
  const fs::path out = output_directory(s, opts);
  const int n_s = s.system.n_s();
  std::vector<Eigen::VectorXd> points = s.analyze.points;
  if (points.empty()) points.push_back(Eigen::VectorXd::Zero(n_s + 1));

  std::string csv = coordinate_header(n_s) + ",kind,eigenvalue,g,g_zz,g_x1\n";
  for (const auto& p : points) {
    const CriticalClassification c =
        classify_critical_point(s.system, p.head(n_s), p[n_s], s.analyze.tol);
    csv += join_point(p) + "," + to_string(c.kind) + "," + format_number(c.eigenvalue) + "," +
           format_number(c.g) + "," + format_number(c.g_zz) + "," + format_number(c.g_x1) + "\n";
    log << "(" << join_point(p) << "): " << to_string(c.kind) << "\n";
  }
  write_file_atomic(out / "classification.csv", csv);

  if (!s.analyze.baseline) return kExitOk;
  const BaselineSpec& spec = *s.analyze.baseline;
  const GenericSFS generic = GenericSFS::from_fold(s.system);
  const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(s.system.m());

  // Normal-hyperbolicity map along the branch, continued in z from the seed.
  std::string map_csv = coordinate_header(n_s) + ",kind,eigenvalue\n";
  std::vector<double> x1s, rates;
  double z = spec.branch.z_seed;
  for (int i = 0; i < spec.branch.samples; ++i) {
    const double t = static_cast<double>(i) / (spec.branch.samples - 1);
    const Eigen::VectorXd x = (1.0 - t) * spec.branch.x_start + t * spec.branch.x_end;
    z = solve_critical_root(generic, x, u0, z);
    const CriticalClassification c = classify_critical_point(generic, x, z, u0, spec.gains.tol);
    Eigen::VectorXd p(n_s + 1);
    p << x, z;
    map_csv += join_point(p) + "," + to_string(c.kind) + "," + format_number(c.eigenvalue) + "\n";
    x1s.push_back(x[0]);
    rates.push_back(c.eigenvalue);
  }
  write_file_atomic(out / "nh_map.csv", map_csv);
  if (opts.plot) {
    write_file_atomic(out / "nh_map.svg",
                      line_chart_svg("dg/dz along the critical branch", "x1", x1s,
                                     {{"dg/dz", rates}}));
  }

  json result;
  try {
    const CompositeController ctrl = composite_baseline(generic, spec.branch, spec.gains);
    result = {{"status", "ok"},
              {"operating_point", to_json(ctrl.operating_point())},
              {"equilibrium_input", to_json(ctrl.equilibrium_input())}};
    json K = json::array();
    for (Eigen::Index r = 0; r < ctrl.feedback_gain().rows(); ++r) {
      K.push_back(to_json(ctrl.feedback_gain().row(r).transpose()));
    }
    result["feedback_gain"] = K;
    log << "composite baseline: ok\n";
  } catch (const BranchError& e) {
    result = {{"status", "not-normally-hyperbolic"},
              {"message", e.what()},
              {"witness", {{"x", to_json(e.x())}, {"z", e.z()}}}};
    log << "composite baseline: " << e.what() << "\n";
  }
  write_file_atomic(out / "baseline.json", result.dump(2) + "\n");
  return kExitOk;
}

std::string controller_json(const Scenario& s) {
  const ChartController ctrl = design_controller(s);
  const BackstepGains& g = ctrl.gains();
  const LyapunovCertificate cert(g);
  const int n_s = s.system.n_s();

  json doc;
  doc["name"] = s.name;
  doc["chart"] = to_string(ChartId::kEpsBar);
  doc["mode"] = to_string(ctrl.mode());
  doc["gains"] = {{"c", g.c}, {"k", g.k}, {"k_rest", to_json(g.k_rest)}};
  doc["scaling_exponents"] = {{"x", 2.0 / 3.0}, {"z", 1.0 / 3.0}, {"time", 1.0 / 3.0}};
  doc["blow_down"] = "chi = eps^(-2/3) x, zeta = eps^(-1/3) z, s = eps^(1/3) tau";
  doc["virtual_control"] = "sigma(zeta) = c zeta - zeta^2, e = chi1 - sigma(zeta)";
  doc["lyapunov"] = "W = zeta^2/2 + e^2/2 + sum_{j>=2} chi_j^2/2";
  json per_eps = json::array();
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(n_s);
  for (double eps : s.eps) {
    const OriginalController oc = blow_down_controller(ctrl, eps);
    per_eps.push_back({{"eps", eps},
                       {"rho", oc.rho()},
                       {"u_at_origin", to_json(oc.evaluate(origin, 0.0))},
                       {"V_at_origin", oc.lyapunov(origin, 0.0)}});
  }
  doc["eps"] = per_eps;
  return doc.dump(2) + "\n";
}

int run_design(const Scenario& s, const CommandOptions& opts, std::ostream& log) {
  const std::string doc = controller_json(s);
  const fs::path path = output_directory(s, opts) / "controller.json";
  write_file_atomic(path, doc);
  log << "wrote " << path.string() << "\n";
  return kExitOk;
}

int run_simulate(const Scenario& s, const CommandOptions& opts, std::ostream& log) {
  const fs::path out = output_directory(s, opts);
  const int n_s = s.system.n_s();
  const int m = s.system.m();

  ControllerFactory factory;
  if (s.simulation.closed_loop) {
    const ChartController ctrl = design_controller(s);
    factory = [ctrl](double eps) { return std::optional(blow_down_controller(ctrl, eps)); };
  }
  SweepConfig cfg = s.simulation.sweep;
  cfg.keep_trajectories = s.simulation.write_trajectories || opts.plot;
  const SweepResult result = sweep_epsilon(s.system, factory, s.initial_conditions, s.eps, cfg);
  write_file_atomic(out / "summary.csv", sweep_summary_csv(result));

  bool failed = false;
  size_t converged = 0;
  for (size_t r = 0; r < result.rows.size(); ++r) {
    const SweepRow& row = result.rows[r];
    failed |= row.terminal == StopReason::kError;
    converged += row.converged ? 1 : 0;
    if (!cfg.keep_trajectories || row.terminal == StopReason::kError) continue;
    const size_t eps_index = r / std::max<size_t>(1, s.initial_conditions.size());
    const std::string stem =
        "trajectory_eps" + std::to_string(eps_index) + "_ic" + std::to_string(row.ic_index);
    const Trajectory& traj = result.trajectories[r];
    if (s.simulation.write_trajectories) {
      write_file_atomic(out / (stem + ".csv"), trajectory_csv(traj, n_s, m));
    }
    if (opts.plot) {
      std::vector<PlotSeries> states;
      for (int j = 0; j <= n_s; ++j) {
        PlotSeries series{j < n_s ? "x" + std::to_string(j + 1) : "z", {}};
        for (const auto& st : traj.states) series.values.push_back(st[j]);
        states.push_back(std::move(series));
      }
      const std::string title = "eps = " + format_number(row.eps) + ", ic " +
                                std::to_string(row.ic_index);
      write_file_atomic(out / (stem + "_states.svg"),
                        line_chart_svg("states, " + title, "fast time", traj.times, states));
      if (!traj.lyapunov.empty()) {
        write_file_atomic(out / (stem + "_V.svg"),
                          line_chart_svg("V, " + title, "fast time", traj.times,
                                         {{"V", traj.lyapunov}}, true));
      }
    }
  }
  log << converged << "/" << result.rows.size() << " runs reached the target ball\n";
  return failed ? kExitRuntime : kExitOk;
}

std::vector<CheckReport> verification_suite(const Scenario& s, std::uint64_t seed) {
  const VerifySpec& v = s.verify;
  const int n_s = s.system.n_s();
  const Weights w = Weights::fold(n_s);
  std::vector<CheckReport> reports;

  const std::vector<ChartId> charts = {ChartId::kEpsBar, ChartId::kPlusX1, ChartId::kMinusX1,
                                       ChartId::kPlusZ, ChartId::kMinusZ};
  reports.push_back(verify_chart_roundtrips(w, charts, v.samples, v.roundtrip_tol, seed));
  reports.push_back(verify_desingularization_factor(s.system, w, v.samples, v.factor_tol, seed));
  Weights wrong = w;
  wrong.m = 2;
  reports.push_back(negative_control(
      verify_desingularization_factor(s.system, wrong, v.samples, v.factor_tol, seed),
      "desingularization_factor_negative_control", v.factor_tol));
  reports.push_back(verify_quasi_degree_vanishing(n_s, v.quasi_degree_instances, seed));

  std::optional<ChartController> ctrl;
  if (s.gains) ctrl = design_controller(s);
  const Eigen::VectorXd start = ball_initial_conditions(n_s, 1, 0.5, seed).front().state;
  FlowConjugacyOptions fc;
  fc.horizon = v.conjugacy_horizon;
  fc.step = v.conjugacy_step;
  fc.tol = v.conjugacy_tol;
  fc.controller = ctrl;
  for (double rho : v.conjugacy_rho) {
    CheckReport r = verify_flow_conjugacy(s.system, {rho, start}, fc);
    r.name += "[rho=" + format_number(rho) + "]";
    r.seed = seed;
    reports.push_back(std::move(r));
  }
  fc.rescale = TimeRescale::kIdentity;
  CheckReport wrong_time = negative_control(
      verify_flow_conjugacy(s.system, {v.negative_control_rho, start}, fc),
      "flow_conjugacy_negative_control[rho=" + format_number(v.negative_control_rho) + "]", 1e-2);
  wrong_time.seed = seed;
  reports.push_back(std::move(wrong_time));

  if (ctrl && ctrl->mode() == ControlMode::kExact) {
    const auto grid =
        annulus_grid(n_s, v.grid_points, v.grid_r_min, v.grid_r_max, v.grid_rho_max, seed);
    CheckReport r = verify_lyapunov_grid(*ctrl, LyapunovCertificate(ctrl->gains()), grid,
                                         v.grid_tol);
    r.seed = seed;
    reports.push_back(std::move(r));
  }
  return reports;
}

std::string reports_json(const std::vector<CheckReport>& reports, std::uint64_t seed) {
  json checks = json::array();
  bool all = true;
  for (const auto& r : reports) {
    all &= r.passed;
    checks.push_back({{"name", r.name},
                      {"passed", r.passed},
                      {"worst_residual", r.worst_residual},
                      {"tolerance", r.tolerance},
                      {"witness", r.witness ? to_json(*r.witness) : json(nullptr)},
                      {"samples", r.samples},
                      {"skipped", r.skipped},
                      {"seed", r.seed},
                      {"note", r.note}});
  }
  json doc = {{"seed", seed}, {"passed", all}, {"checks", checks}};
  return doc.dump(2) + "\n";
}

int run_verify(const Scenario& s, const CommandOptions& opts, std::ostream& log) {
  const std::uint64_t seed = opts.seed.value_or(s.verify.seed);
  const std::vector<CheckReport> reports = verification_suite(s, seed);
  write_file_atomic(output_directory(s, opts) / "verify.json", reports_json(reports, seed));
  bool all = true;
  for (const auto& r : reports) {
    all &= r.passed;
    log << (r.passed ? "PASS " : "FAIL ") << r.name << "  residual " << r.worst_residual
        << " (tol " << r.tolerance << ")\n";
  }
  return all ? kExitOk : kExitVerifyFailure;
}

int dispatch(const std::string& subcommand, const fs::path& scenario_path,
             const CommandOptions& opts, std::ostream& log, std::ostream& err) {
  try {
    const Scenario s = parse_scenario(scenario_path);
    if (subcommand == "analyze") return run_analyze(s, opts, log);
    if (subcommand == "design") return run_design(s, opts, log);
    if (subcommand == "simulate") return run_simulate(s, opts, log);
    if (subcommand == "verify") return run_verify(s, opts, log);
    err << "unknown subcommand '" << subcommand << "'\n";
    return kExitSchema;
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ScenarioError::Kind::kMissingFile: return kExitMissingFile;
      case ScenarioError::Kind::kSchema: return kExitSchema;
      case ScenarioError::Kind::kInvariant: return kExitInvariant;
    }
  } catch (const InvariantError& e) {
    err << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const RankError& e) {
    err << "invariant violation: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitRuntime;
}

}  // namespace foldctl
