// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "foldctl/blowup.h"
#include "foldctl/control.h"
#include "foldctl/errors.h"
#include "foldctl/fold_system.h"
#include "foldctl/sim.h"
#include "foldctl/verify.h"
#include "test_systems.h"

namespace foldctl {
namespace {

using Vec = Eigen::VectorXd;

struct Outcome {
  bool passed{false};
  std::string detail;
};

const std::vector<double> kEpsList = {1e-1, 1e-2, 1e-3};
constexpr std::uint64_t kSeed = kDefaultSeed;

Vec v1(double a) { return Vec::Constant(1, a); }

FoldSFCS coupled_normal_form() {
  Vec A(2);
  A << 1.0, 0.0;
  Eigen::MatrixXd L1(2, 2);
  L1 << 0.0, 0.5, 0.0, 0.0;
  return FoldSFCS::with_constant_input(A, L1, Vec::Zero(2), Eigen::MatrixXd::Identity(2, 2));
}

ControllerFactory blown_down(const ChartController& ctrl) {
  return [ctrl](double eps) -> std::optional<OriginalController> {
    return blow_down_controller(ctrl, eps);
  };
}

Outcome stabilization_sweep() {
  std::ostringstream detail;
  bool ok = true;
  double worst_s = 0.0;
  for (int n_s : {1, 2}) {
    const FoldSFCS sys = n_s == 1 ? test::normal_form(1) : coupled_normal_form();
    const DesingularizedSystem des(sys);
    const BackstepGains gains(1.0, 1.0, Vec::Ones(n_s - 1));
    const ChartController ctrl = synthesize_injection(des, gains, ControlMode::kExact);
    const auto ics = ball_initial_conditions(n_s, 20, 0.5, kSeed);
    SweepConfig cfg;
    cfg.integrator.method = IntegrationMethod::kRk4;
    cfg.integrator.step = 0.01;
    cfg.integrator.horizon = 60.0;
    cfg.integrator.ball_radius = 1e-6;
    cfg.integrator.escape_radius = 1e3;
    cfg.desingularized_time = true;
    cfg.norm = NormFrame::kBlownUp;
    cfg.lyapunov_ball = 1e-9;
    cfg.parallel = true;
    const SweepResult result = sweep_epsilon(sys, blown_down(ctrl), ics, kEpsList, cfg);
    int good = 0;
    for (const SweepRow& row : result.rows) {
      const bool run_ok = row.converged && row.s_to_ball && *row.s_to_ball <= 60.0 &&
                          row.lyapunov_decreasing.value_or(false);
      if (run_ok) {
        ++good;
        worst_s = std::max(worst_s, *row.s_to_ball);
      }
    }
    ok &= good == static_cast<int>(result.rows.size()) && result.rows.size() == 60;
    detail << "n_s=" << n_s << ": " << good << "/" << result.rows.size() << " runs; ";
  }
  detail << "max s to 1e-6 ball " << worst_s;
  return {ok, detail.str()};
}

Outcome fold_jump() {
  const FoldSFCS sys = test::normal_form(1);
  const OriginalPlant plant(sys);
  std::ostringstream detail;
  bool ok = true;
  for (double eps : kEpsList) {
    IntegratorConfig cfg;
    cfg.step = 0.01;
    cfg.horizon = 10.0 / eps;
    cfg.escape_radius = 1e3;
    const Trajectory traj = integrate(plant, Vec{{-0.25, 0.5, eps}}, cfg);
    const bool escaped = traj.terminal == StopReason::kEscape;
    // The escape happens past the fold, x_1 > 0.
    const bool crossed = traj.states.back()[0] > 0.0;
    ok &= escaped && crossed;
    detail << "eps=" << eps << ": " << to_string(traj.terminal) << " at tau=" << traj.times.back()
           << "; ";
  }
  return {ok, detail.str()};
}

Outcome flow_conjugacy() {
  const FoldSFCS sys = test::normal_form(1);
  const DesingularizedSystem des(sys);
  const ChartController ctrl = synthesize_injection(des, BackstepGains(), ControlMode::kExact);
  const Vec start = ball_initial_conditions(1, 1, 0.5, kSeed)[0].state;
  std::ostringstream detail;
  bool ok = true;
  for (double rho : {0.1, 0.5}) {
    for (const bool closed : {false, true}) {
      FlowConjugacyOptions opts;
      opts.horizon = 1.0;
      opts.step = 1e-4;
      opts.tol = 1e-8;
      if (closed) opts.controller = ctrl;
      const CheckReport r = verify_flow_conjugacy(sys, ChartPoint{rho, start}, opts);
      ok &= r.passed && r.worst_residual <= 1e-8;
      detail << "rho=" << rho << (closed ? " closed" : " open") << " residual "
             << r.worst_residual << "; ";
    }
  }
  FlowConjugacyOptions wrong;
  wrong.horizon = 1.0;
  wrong.step = 1e-4;
  wrong.tol = 1e-8;
  wrong.rescale = TimeRescale::kIdentity;
  const CheckReport neg = verify_flow_conjugacy(sys, ChartPoint{0.5, start}, wrong);
  ok &= !neg.passed && neg.worst_residual > 1e-2;
  detail << "negative control (s = tau) residual " << neg.worst_residual;
  return {ok, detail.str()};
}

Outcome lyapunov_grid() {
  std::ostringstream detail;
  bool ok = true;
  for (int n_s : {1, 2}) {
    const FoldSFCS sys = n_s == 1 ? test::normal_form(1) : test::coupled_system();
    const DesingularizedSystem des(sys);
    const BackstepGains gains(1.0, 1.0, Vec::Ones(n_s - 1));
    const auto grid = annulus_grid(n_s, 10000, 1e-3, 10.0, 1.0, kSeed);
    const ChartController ctrl =
        synthesize_injection(des, gains, ControlMode::kExact, grid);
    const CheckReport r = verify_lyapunov_grid(ctrl, LyapunovCertificate(gains), grid, 1e-10);
    ok &= r.passed && r.samples == 10000;
    detail << "n_s=" << n_s << ": " << r.samples << " points, worst |dW| gap "
           << r.worst_residual << "; ";
  }
  return {ok, detail.str()};
}

Outcome geometry() {
  std::ostringstream detail;
  bool ok = true;
  const std::vector<ChartId> charts = {ChartId::kEpsBar, ChartId::kPlusX1, ChartId::kMinusX1,
                                       ChartId::kPlusZ, ChartId::kMinusZ};
  for (int n_s : {1, 2}) {
    const CheckReport r =
        verify_chart_roundtrips(Weights::fold(n_s), charts, 1000, 1e-12, kSeed);
    ok &= r.passed;
    detail << "round trips n_s=" << n_s << " residual " << r.worst_residual << "; ";
  }
  for (const FoldSFCS& sys : {test::normal_form(1), test::coupled_system()}) {
    const CheckReport r = verify_desingularization_factor(sys, Weights::fold(sys.n_s()), 1000,
                                                          1e-9, kSeed);
    ok &= r.passed;
    detail << "factor n_s=" << sys.n_s() << " residual " << r.worst_residual << "; ";
  }
  for (int n_s : {1, 2}) {
    const CheckReport r = verify_quasi_degree_vanishing(n_s, 50, kSeed);
    ok &= r.passed && r.samples == 50;
    detail << "quasi-degree n_s=" << n_s << " " << (r.passed ? "50/50" : "mismatch") << "; ";
  }
  return {ok, detail.str()};
}

double layer_error(double h) {
  const OriginalPlant plant(test::normal_form(1));
  IntegratorConfig cfg;
  cfg.step = h;
  cfg.horizon = 2.0;
  cfg.escape_radius.reset();
  const Trajectory traj = integrate(plant, Vec{{0.0, 1.0, 0.0}}, cfg);
  double worst = 0.0;
  for (size_t k = 0; k < traj.size(); ++k) {
    worst = std::max(worst, std::abs(traj.states[k][1] - 1.0 / (1.0 + traj.times[k])));
  }
  return worst;
}

Outcome integrator_order() {
  const double e1 = layer_error(0.1);
  const double e2 = layer_error(0.05);
  const double e3 = layer_error(0.025);
  const double p1 = std::log2(e1 / e2);
  const double p2 = std::log2(e2 / e3);
  std::ostringstream detail;
  detail << "observed order " << p1 << " (h 0.1 -> 0.05), " << p2 << " (h 0.05 -> 0.025)";
  return {std::min(p1, p2) >= 3.9, detail.str()};
}

Outcome nominal_mode() {
  const int nv = 3;
  PolyMap F(nv, {Polynomial(nv, {{1.0, {0, 3, 0}}})});
  const FoldSFCS sys = test::scalar_system(1.0, 1.5, 2.0, 1.0, F);
  const DesingularizedSystem des(sys);
  const ChartController ctrl = synthesize_injection(des, BackstepGains(), ControlMode::kNominal);
  const auto ics = ball_initial_conditions(1, 20, 0.1, kSeed);
  SweepConfig cfg;
  cfg.integrator.step = 0.01;
  cfg.integrator.horizon = 60.0;
  cfg.integrator.ball_radius = 1e-4;
  cfg.integrator.escape_radius = 1e3;
  cfg.parallel = true;
  auto run = [&](const std::vector<double>& rhos) {
    std::vector<double> eps;
    for (double rho : rhos) eps.push_back(rho * rho * rho);
    const SweepResult result = sweep_epsilon(sys, blown_down(ctrl), ics, eps, cfg);
    return static_cast<int>(std::count_if(result.rows.begin(), result.rows.end(),
                                          [](const SweepRow& r) { return r.converged; }));
  };
  const std::vector<double> small = {0.05, 0.02, 0.01, 0.001};
  const int good = run(small);
  const int large = run({0.8});
  std::ostringstream detail;
  detail << "rho in {0.05, 0.02, 0.01, 0.001}: " << good << "/" << 20 * small.size()
         << " runs reach 1e-4; rho=0.8 (not asserted): " << large << "/20";
  return {good == static_cast<int>(20 * small.size()), detail.str()};
}

Outcome composite_breakdown() {
  const GenericSFS sys = GenericSFS::from_fold(test::normal_form(1));
  std::ostringstream detail;
  bool ok = true;
  try {
    const CompositeController ctrl =
        composite_baseline(sys, CriticalBranch{v1(-1.0), v1(-0.25), 50, 1.0, v1(-0.5)},
                           CompositeGains{1.0, v1(1.0)});
    detail << "x1 in [-1, -0.25]: " << ctrl.nh_samples().size() << " hyperbolic samples; ";
  } catch (const Error& e) {
    ok = false;
    detail << "x1 in [-1, -0.25]: unexpected error " << e.what() << "; ";
  }
  try {
    composite_baseline(sys, CriticalBranch{v1(-1.0), v1(0.0), 50, 1.0, v1(-0.5)},
                       CompositeGains{1.0, v1(1.0)});
    ok = false;
    detail << "x1 in [-1, 0]: no error";
  } catch (const BranchError& e) {
    const bool at_fold = std::abs(e.x()[0]) < 1e-12 && std::abs(e.z()) < 1e-6;
    ok &= at_fold;
    detail << "x1 in [-1, 0]: non-hyperbolic at (x1, z) = (" << e.x()[0] << ", " << e.z() << ")";
  }
  return {ok, detail.str()};
}

}  // namespace
}  // namespace foldctl

int main() {
  using foldctl::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"stabilization sweep", foldctl::stabilization_sweep},
      {"fold-jump contrast", foldctl::fold_jump},
      {"flow conjugacy", foldctl::flow_conjugacy},
      {"Lyapunov certification", foldctl::lyapunov_grid},
      {"geometry identities", foldctl::geometry},
      {"integrator order", foldctl::integrator_order},
      {"nominal-mode regular perturbation", foldctl::nominal_mode},
      {"composite baseline breakdown", foldctl::composite_breakdown},
  };
  bool all = true;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all &= outcome.passed;
    while (!outcome.detail.empty() &&
           (outcome.detail.back() == ' ' || outcome.detail.back() == ';')) {
      outcome.detail.pop_back();
    }
    std::printf("%s criterion %zu (%s): %s [%.2fs]\n", outcome.passed ? "PASS" : "FAIL", i + 1,
                criteria[i].first, outcome.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
