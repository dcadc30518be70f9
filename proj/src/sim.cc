#include "foldctl/sim.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>

#include <boost/numeric/odeint.hpp>

#include "foldctl/errors.h"

namespace odeint = boost::numeric::odeint;

namespace foldctl {
namespace {

using OdeState = std::vector<double>;

Eigen::VectorXd to_eigen(const OdeState& s) {
  return Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
}

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

class Recorder {
 public:
  Recorder(const Plant& plant, const IntegratorConfig& cfg, Trajectory& traj)
      : plant_(plant), cfg_(cfg), traj_(traj) {}

  // Records the sample and reports whether a stop rule fired.
  bool record(double t, const Eigen::VectorXd& state) {
    traj_.times.push_back(t);
    traj_.states.push_back(state);
    if (!finite(state)) {
      traj_.terminal = StopReason::kEscape;
      return true;
    }
    if (auto u = plant_.input(state)) traj_.inputs.push_back(*u);
    if (auto v = plant_.lyapunov(state)) traj_.lyapunov.push_back(*v);
    const double n = plant_.norm(state);
    if (!std::isfinite(n) || (cfg_.escape_radius && n >= *cfg_.escape_radius)) {
      traj_.terminal = StopReason::kEscape;
      return true;
    }
    if (cfg_.ball_radius && n <= *cfg_.ball_radius) {
      traj_.terminal = StopReason::kBallEntry;
      return true;
    }
    return false;
  }

 private:
  const Plant& plant_;
  const IntegratorConfig& cfg_;
  Trajectory& traj_;
};

}  // namespace

std::string to_string(IntegrationMethod method) {
  return method == IntegrationMethod::kRk4 ? "rk4" : "rkf45";
}

IntegrationMethod integration_method_from_string(const std::string& name) {
  if (name == "rk4") return IntegrationMethod::kRk4;
  if (name == "rkf45") return IntegrationMethod::kRkf45;
  throw InvariantError("unknown integration method '" + name + "'");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kTimeOut: return "time-out";
    case StopReason::kBallEntry: return "ball-entry";
    case StopReason::kEscape: return "escape";
    case StopReason::kError: return "error";
  }
  return "unknown";
}

void IntegratorConfig::validate() const {
  if (!(step > 0.0)) throw InvariantError("integrator step must be positive");
  if (!(horizon >= 0.0)) throw InvariantError("horizon must be non-negative");
  if (method == IntegrationMethod::kRkf45) {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw InvariantError("rtol and atol must be positive");
    if (!(min_step > 0.0) || !(max_step >= min_step)) {
      throw InvariantError("need 0 < min_step <= max_step");
    }
  }
  if (ball_radius && !(*ball_radius > 0.0)) throw InvariantError("ball radius must be positive");
  if (escape_radius && !(*escape_radius > 0.0)) {
    throw InvariantError("escape radius must be positive");
  }
}

Trajectory Trajectory::relabeled(double factor) const {
  Trajectory out = *this;
  for (double& t : out.times) t *= factor;
  return out;
}

std::optional<Eigen::VectorXd> Plant::input(const Eigen::VectorXd&) const { return std::nullopt; }
std::optional<double> Plant::lyapunov(const Eigen::VectorXd&) const { return std::nullopt; }

OriginalPlant::OriginalPlant(FoldSFCS sys, std::optional<OriginalController> ctrl,
                             NormFrame frame)
    : sys_(std::move(sys)), ctrl_(std::move(ctrl)), frame_(frame) {
  if (ctrl_ && ctrl_->chart_controller().system().n_s() != sys_.n_s()) {
    throw DimensionError("controller and system dimensions differ");
  }
}

OriginalPlant::OriginalPlant(FoldSFCS sys, Feedback feedback, NormFrame frame)
    : sys_(std::move(sys)), feedback_(std::move(feedback)), frame_(frame) {}

Eigen::VectorXd OriginalPlant::derivative(const Eigen::VectorXd& state) const {
  const int n_s = sys_.n_s();
  const Eigen::VectorXd x = state.head(n_s);
  const double z = state[n_s];
  const double eps = state[n_s + 1];
  const Eigen::VectorXd u = input(state).value_or(Eigen::VectorXd::Zero(sys_.m()));
  const FastTimeVelocity v = eval_fast_field(sys_, x, z, eps, u);
  Eigen::VectorXd d(n_s + 2);
  d << v.xdot, v.zdot, 0.0;
  return d;
}

std::optional<Eigen::VectorXd> OriginalPlant::input(const Eigen::VectorXd& state) const {
  const int n_s = sys_.n_s();
  if (ctrl_) return ctrl_->evaluate(state.head(n_s), state[n_s]);
  if (feedback_) return feedback_(state.head(n_s), state[n_s]);
  return std::nullopt;
}

std::optional<double> OriginalPlant::lyapunov(const Eigen::VectorXd& state) const {
  if (!ctrl_) return std::nullopt;
  const int n_s = sys_.n_s();
  return ctrl_->lyapunov(state.head(n_s), state[n_s]);
}

double OriginalPlant::norm(const Eigen::VectorXd& state) const {
  const int n_s = sys_.n_s();
  if (frame_ == NormFrame::kOriginal) return state.head(n_s + 1).norm();
  const double eps = state[n_s + 1];
  if (!(eps > 0.0)) throw DomainError("blown-up norm needs eps > 0");
  const double rho = std::cbrt(eps);
  Eigen::VectorXd scaled = state.head(n_s + 1);
  scaled.head(n_s) /= rho * rho;
  scaled[n_s] /= rho;
  return scaled.norm();
}

ChartPlant::ChartPlant(DesingularizedSystem des, std::optional<ChartController> ctrl)
    : des_(std::move(des)), ctrl_(std::move(ctrl)) {}

Eigen::VectorXd ChartPlant::derivative(const Eigen::VectorXd& state) const {
  const int n_s = des_.n_s();
  const Eigen::VectorXd u = input(state).value_or(Eigen::VectorXd::Zero(des_.m()));
  const auto v = des_.evaluate(state[0], state.segment(1, n_s), state[n_s + 1], u);
  Eigen::VectorXd d(n_s + 2);
  d << v.rho_dot, v.chi_dot, v.zeta_dot;
  return d;
}

std::optional<Eigen::VectorXd> ChartPlant::input(const Eigen::VectorXd& state) const {
  if (!ctrl_) return std::nullopt;
  const int n_s = des_.n_s();
  return ctrl_->evaluate(state[0], state.segment(1, n_s), state[n_s + 1]);
}

std::optional<double> ChartPlant::lyapunov(const Eigen::VectorXd& state) const {
  if (!ctrl_) return std::nullopt;
  const int n_s = des_.n_s();
  return LyapunovCertificate(ctrl_->gains()).value(state.segment(1, n_s), state[n_s + 1]);
}

double ChartPlant::norm(const Eigen::VectorXd& state) const {
  return state.tail(des_.n_s() + 1).norm();
}

Trajectory integrate(const Plant& plant, const Eigen::VectorXd& initial_state,
                     const IntegratorConfig& cfg) {
  cfg.validate();
  if (initial_state.size() != plant.dimension()) {
    throw DimensionError("initial state has " + std::to_string(initial_state.size()) +
                         " entries, plant dimension is " + std::to_string(plant.dimension()));
  }
  Trajectory traj;
  Recorder rec(plant, cfg, traj);
  if (rec.record(0.0, initial_state)) return traj;

  auto rhs = [&plant](const OdeState& s, OdeState& ds, double /*t*/) {
    const Eigen::VectorXd d = plant.derivative(to_eigen(s));
    ds.assign(d.data(), d.data() + d.size());
  };
  OdeState state(initial_state.data(), initial_state.data() + initial_state.size());

  if (cfg.method == IntegrationMethod::kRk4) {
    odeint::runge_kutta4<OdeState> stepper;
    const auto n_steps = static_cast<long long>(std::ceil(cfg.horizon / cfg.step - 1e-9));
    double t = 0.0;
    for (long long k = 1; k <= n_steps; ++k) {
      const double t_next = std::min(static_cast<double>(k) * cfg.step, cfg.horizon);
      stepper.do_step(rhs, state, t, t_next - t);
      t = t_next;
      if (rec.record(t, to_eigen(state))) return traj;
    }
    traj.terminal = StopReason::kTimeOut;
    return traj;
  }

  auto stepper = odeint::make_controlled(cfg.atol, cfg.rtol,
                                         odeint::runge_kutta_cash_karp54<OdeState>());
  double t = 0.0;
  double dt = std::min(cfg.step, cfg.max_step);
  while (t < cfg.horizon) {
    dt = std::min({dt, cfg.max_step, cfg.horizon - t});
    const bool last = dt == cfg.horizon - t;
    const double t_before = t;
    if (stepper.try_step(rhs, state, t, dt) == odeint::success) {
      if (last) t = cfg.horizon;
      if (rec.record(t, to_eigen(state))) return traj;
      continue;
    }
    if (dt < cfg.min_step) {
      throw IntegrationError("adaptive step fell below min_step at t = " +
                                 std::to_string(t_before),
                             t_before, to_eigen(state));
    }
  }
  traj.terminal = StopReason::kTimeOut;
  return traj;
}

std::optional<size_t> first_lyapunov_increase(const Trajectory& traj, const Plant& plant,
                                              double ball) {
  if (traj.lyapunov.size() != traj.size()) return std::nullopt;
  for (size_t k = 0; k + 1 < traj.size(); ++k) {
    if (plant.norm(traj.states[k]) <= ball) continue;
    if (!(traj.lyapunov[k + 1] < traj.lyapunov[k])) return k;
  }
  return std::nullopt;
}

std::vector<InitialCondition> ball_initial_conditions(int n_s, int count, double radius,
                                                      std::uint64_t seed) {
  if (n_s < 1 || count < 0 || !(radius > 0.0)) throw InvariantError("invalid ball sampling request");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const int dim = n_s + 1;
  std::vector<InitialCondition> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    Eigen::VectorXd d(dim);
    for (int i = 0; i < dim; ++i) d[i] = normal(rng);
    const double n = d.norm();
    if (n == 0.0) continue;
    const double r = radius * std::pow(uniform(rng), 1.0 / dim);
    out.push_back({IcFrame::kBlownUp, d * (r / n)});
  }
  return out;
}

Eigen::VectorXd original_state(const InitialCondition& ic, int n_s, double eps) {
  if (ic.state.size() != n_s + 1) throw DimensionError("initial condition must have n_s + 1 entries");
  Eigen::VectorXd s(n_s + 2);
  if (ic.frame == IcFrame::kOriginal) {
    s << ic.state, eps;
    return s;
  }
  const OriginalPoint q =
      blow_up_point(ChartId::kEpsBar, Weights::fold(n_s), {std::cbrt(eps), ic.state});
  s << q.x, q.z, eps;
  return s;
}

namespace {

struct CellResult {
  SweepRow row;
  Trajectory traj;
};

CellResult run_cell(const FoldSFCS& sys, const ControllerFactory& factory,
                    const InitialCondition& ic, size_t ic_index, double eps,
                    const SweepConfig& cfg) {
  CellResult out;
  SweepRow& row = out.row;
  row.eps = eps;
  row.ic_index = ic_index;
  try {
    if (!(eps > 0.0)) throw DomainError("sweep eps values must be positive");
    const double rho = std::cbrt(eps);
    IntegratorConfig icfg = cfg.integrator;
    if (cfg.desingularized_time) {
      icfg.step /= rho;
      icfg.horizon /= rho;
      icfg.min_step /= rho;
      icfg.max_step /= rho;
    }
    std::optional<OriginalController> ctrl = factory ? factory(eps) : std::nullopt;
    const OriginalPlant plant(sys, ctrl, cfg.norm);
    Trajectory traj = integrate(plant, original_state(ic, sys.n_s(), eps), icfg);
    row.terminal = traj.terminal;
    row.converged = traj.terminal == StopReason::kBallEntry;
    row.final_time = traj.times.back();
    row.final_norm = plant.norm(traj.states.back());
    if (row.converged) {
      row.time_to_ball = row.final_time;
      row.s_to_ball = rho * row.final_time;
    }
    for (const auto& u : traj.inputs) row.peak_input = std::max(row.peak_input, u.lpNorm<Eigen::Infinity>());
    if (ctrl) row.lyapunov_decreasing = !first_lyapunov_increase(traj, plant, cfg.lyapunov_ball);
    if (cfg.keep_trajectories) out.traj = std::move(traj);
  } catch (const Error& e) {
    row.converged = false;
    row.terminal = StopReason::kError;
    row.error = e.what();
  }
  return out;
}

}  // namespace

SweepResult sweep_epsilon(const FoldSFCS& sys, const ControllerFactory& factory,
                          std::span<const InitialCondition> ics,
                          std::span<const double> eps_list, const SweepConfig& cfg) {
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw DomainError("sweep eps values must be positive");
  }
  std::vector<CellResult> cells;
  if (cfg.parallel) {
    std::vector<std::future<CellResult>> futures;
    for (double eps : eps_list) {
      for (size_t i = 0; i < ics.size(); ++i) {
        futures.push_back(std::async(std::launch::async, run_cell, std::cref(sys),
                                     std::cref(factory), std::cref(ics[i]), i, eps,
                                     std::cref(cfg)));
      }
    }
    for (auto& f : futures) cells.push_back(f.get());
  } else {
    for (double eps : eps_list) {
      for (size_t i = 0; i < ics.size(); ++i) {
        cells.push_back(run_cell(sys, factory, ics[i], i, eps, cfg));
      }
    }
  }
  SweepResult result;
  for (auto& c : cells) {
    result.rows.push_back(std::move(c.row));
    if (cfg.keep_trajectories) result.trajectories.push_back(std::move(c.traj));
  }
  return result;
}

}  // namespace foldctl
