#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "foldctl/blowup.h"
#include "foldctl/commands.h"
#include "foldctl/control.h"
#include "foldctl/errors.h"
#include "foldctl/fold_system.h"
#include "foldctl/scenario.h"
#include "foldctl/sim.h"
#include "foldctl/verify.h"

namespace py = pybind11;
using namespace foldctl;

namespace {

using Terms = std::vector<std::pair<double, std::vector<int>>>;

Polynomial polynomial_from_terms(int num_vars, const Terms& terms) {
  std::vector<Monomial> monomials;
  for (const auto& [coeff, exponents] : terms) monomials.push_back({coeff, exponents});
  return Polynomial(num_vars, monomials);
}

FoldSFCS make_system(const Eigen::VectorXd& A, const Eigen::MatrixXd& L1,
                     const Eigen::VectorXd& L2, const Eigen::MatrixXd& B,
                     const std::vector<Terms>& F) {
  const int n_s = static_cast<int>(A.size());
  if (F.empty()) return FoldSFCS::with_constant_input(A, L1, L2, B);
  std::vector<Polynomial> components;
  for (const Terms& t : F) components.push_back(polynomial_from_terms(n_s + 2, t));
  return FoldSFCS::with_constant_input(A, L1, L2, B, PolyMap(n_s + 2, std::move(components)));
}

py::dict trajectory_dict(const Trajectory& traj) {
  py::dict d;
  d["time"] = traj.times;
  d["states"] = traj.states;
  d["inputs"] = traj.inputs;
  d["lyapunov"] = traj.lyapunov;
  d["terminal"] = to_string(traj.terminal);
  return d;
}

py::dict report_dict(const CheckReport& r) {
  py::dict d;
  d["name"] = r.name;
  d["passed"] = r.passed;
  d["worst_residual"] = r.worst_residual;
  d["tolerance"] = r.tolerance;
  d["witness"] = r.witness;
  d["samples"] = r.samples;
  d["skipped"] = r.skipped;
  d["seed"] = r.seed;
  d["note"] = r.note;
  return d;
}

ChartId chart_id(const std::string& name) { return chart_from_string(name); }

}  // namespace

PYBIND11_MODULE(_foldctl, m) {
  m.doc() = "Blow-up based stabilization of slow-fast systems at a fold point.";

  py::register_exception<Error>(m, "FoldctlError", PyExc_RuntimeError);
  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);

  py::class_<FoldSFCS>(m, "FoldSystem")
      .def(py::init(&make_system), py::arg("A"), py::arg("L1"), py::arg("L2"), py::arg("B"),
           py::arg("F") = std::vector<Terms>{},
           "Constant-input fold system. F holds one list of (coeff, exponents) terms per "
           "slow component, exponents over (x_1..x_n_s, z, eps).")
      .def_static(
          "from_scenario",
          [](const std::filesystem::path& path) { return parse_scenario(path).system; },
          py::arg("path"))
      .def_property_readonly("n_s", &FoldSFCS::n_s)
      .def_property_readonly("m", &FoldSFCS::m)
      .def("fast_field", &FoldSFCS::fast_field, py::arg("x"), py::arg("z"))
      .def("slow_field", &FoldSFCS::slow_field, py::arg("x"), py::arg("z"), py::arg("eps"),
           py::arg("u"))
      .def("input_matrix", &FoldSFCS::input_matrix, py::arg("x"), py::arg("z"), py::arg("eps"));

  m.def(
      "classify",
      [](const FoldSFCS& sys, const Eigen::VectorXd& x, double z, double tol) {
        const CriticalClassification c = classify_critical_point(sys, x, z, tol);
        py::dict d;
        d["kind"] = to_string(c.kind);
        d["eigenvalue"] = c.eigenvalue;
        d["g"] = c.g;
        d["g_zz"] = c.g_zz;
        d["g_x1"] = c.g_x1;
        return d;
      },
      py::arg("system"), py::arg("x"), py::arg("z"), py::arg("tol") = kDefaultClassificationTol);

  m.def(
      "blow_up",
      [](const std::string& chart, double r, const Eigen::VectorXd& coords) {
        const Weights w = Weights::fold(static_cast<int>(coords.size()) - 1);
        const OriginalPoint p = blow_up_point(chart_id(chart), w, ChartPoint{r, coords});
        return py::make_tuple(p.x, p.z, p.eps);
      },
      py::arg("chart"), py::arg("r"), py::arg("coords"),
      "Maps chart coordinates to (x, z, eps).");
  m.def(
      "blow_down",
      [](const std::string& chart, const Eigen::VectorXd& x, double z, double eps) {
        const ChartPoint p =
            blow_down_point(chart_id(chart), Weights::fold(static_cast<int>(x.size())), x, z, eps);
        return py::make_tuple(p.r, p.coords);
      },
      py::arg("chart"), py::arg("x"), py::arg("z"), py::arg("eps"));

  py::class_<ChartController>(m, "Controller")
      .def(py::init([](const FoldSFCS& sys, double c, double k, const Eigen::VectorXd& k_rest,
                       const std::string& mode) {
             return synthesize_injection(DesingularizedSystem(sys), BackstepGains(c, k, k_rest),
                                         control_mode_from_string(mode));
           }),
           py::arg("system"), py::arg("c") = 1.0, py::arg("k") = 1.0,
           py::arg("k_rest") = Eigen::VectorXd(), py::arg("mode") = "exact")
      .def(
          "__call__",
          [](const ChartController& ctrl, double rho, const Eigen::VectorXd& chi, double zeta) {
            return ctrl.evaluate(rho, chi, zeta);
          },
          py::arg("rho"), py::arg("chi"), py::arg("zeta"))
      .def(
          "original_input",
          [](const ChartController& ctrl, double eps, const Eigen::VectorXd& x, double z) {
            return blow_down_controller(ctrl, eps).evaluate(x, z);
          },
          py::arg("eps"), py::arg("x"), py::arg("z"))
      .def(
          "lyapunov",
          [](const ChartController& ctrl, const Eigen::VectorXd& chi, double zeta) {
            return LyapunovCertificate(ctrl.gains()).value(chi, zeta);
          },
          py::arg("chi"), py::arg("zeta"))
      .def(
          "lyapunov_rate",
          [](const ChartController& ctrl, double rho, const Eigen::VectorXd& chi, double zeta) {
            return lyapunov_rate_numeric(LyapunovCertificate(ctrl.gains()), ctrl, rho, chi,
                                         zeta);
          },
          py::arg("rho"), py::arg("chi"), py::arg("zeta"));

  m.def(
      "simulate",
      [](const FoldSFCS& sys, const std::optional<ChartController>& ctrl, double eps,
         const Eigen::VectorXd& x, double z, double step, double horizon,
         std::optional<double> ball_radius, std::optional<double> escape_radius) {
        std::optional<OriginalController> original;
        if (ctrl) original = blow_down_controller(*ctrl, eps);
        const OriginalPlant plant(sys, original, NormFrame::kBlownUp);
        IntegratorConfig cfg;
        cfg.step = step;
        cfg.horizon = horizon;
        cfg.ball_radius = ball_radius;
        cfg.escape_radius = escape_radius;
        py::gil_scoped_release release;
        Trajectory traj = integrate(plant, sys.pack(x, z, eps), cfg);
        py::gil_scoped_acquire acquire;
        return trajectory_dict(traj);
      },
      py::arg("system"), py::arg("controller"), py::arg("eps"), py::arg("x"), py::arg("z"),
      py::arg("step") = 1e-2, py::arg("horizon") = 10.0, py::arg("ball_radius") = py::none(),
      py::arg("escape_radius") = 1e3,
      "Fixed-step RK4 in fast time from (x, z). Open loop when controller is None.");

  m.def(
      "verify",
      [](const std::filesystem::path& scenario, std::optional<std::uint64_t> seed) {
        const Scenario s = parse_scenario(scenario);
        std::vector<CheckReport> reports;
        {
          py::gil_scoped_release release;
          reports = verification_suite(s, seed.value_or(s.verify.seed));
        }
        py::list out;
        for (const auto& r : reports) out.append(report_dict(r));
        return out;
      },
      py::arg("scenario"), py::arg("seed") = py::none());

  m.def(
      "run",
      [](const std::string& command, const std::filesystem::path& scenario,
         std::optional<std::filesystem::path> out, bool plot, std::optional<std::uint64_t> seed) {
        CommandOptions opts{std::move(out), plot, seed};
        std::ostringstream log, err;
        int code;
        {
          py::gil_scoped_release release;
          code = dispatch(command, scenario, opts, log, err);
        }
        return py::make_tuple(code, log.str(), err.str());
      },
      py::arg("command"), py::arg("scenario"), py::arg("out") = py::none(),
      py::arg("plot") = false, py::arg("seed") = py::none(),
      "Runs a foldctl subcommand; returns (exit_code, log, errors).");

  m.attr("DEFAULT_SEED") = kDefaultSeed;
}
