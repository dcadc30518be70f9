#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "foldctl/blowup.h"
#include "foldctl/control.h"
#include "foldctl/fold_system.h"

namespace foldctl {

enum class IntegrationMethod { kRk4, kRkf45 };

std::string to_string(IntegrationMethod method);
IntegrationMethod integration_method_from_string(const std::string& name);

enum class StopReason { kTimeOut, kBallEntry, kEscape, kError };

std::string to_string(StopReason reason);

struct IntegratorConfig {
  IntegrationMethod method{IntegrationMethod::kRk4};
  /// Fixed step (rk4) or initial step (rkf45).
  double step{1e-3};
  double rtol{1e-9};
  double atol{1e-9};
  double min_step{1e-14};
  double max_step{1.0};
  double horizon{1.0};
  /// Stop once the plant norm drops to this radius.
  std::optional<double> ball_radius;
  /// Stop once the plant norm reaches this radius (or the state is not finite).
  std::optional<double> escape_radius{1e3};

  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  /// Empty when the plant has no feedback.
  std::vector<Eigen::VectorXd> inputs;
  /// Empty when the plant has no certificate.
  std::vector<double> lyapunov;
  StopReason terminal{StopReason::kTimeOut};

  size_t size() const { return times.size(); }
  /// Copy with every time multiplied by `factor` (t = eps * tau for slow time).
  Trajectory relabeled(double factor) const;
};

/// An autonomous closed- or open-loop vector field together with the norm
/// used for stop rules.
class Plant {
 public:
  virtual ~Plant() = default;
  virtual int dimension() const = 0;
  virtual Eigen::VectorXd derivative(const Eigen::VectorXd& state) const = 0;
  virtual std::optional<Eigen::VectorXd> input(const Eigen::VectorXd& state) const;
  virtual std::optional<double> lyapunov(const Eigen::VectorXd& state) const;
  virtual double norm(const Eigen::VectorXd& state) const = 0;
};

enum class NormFrame {
  /// |(x, z)|
  kOriginal,
  /// |(eps^-2/3 x, eps^-1/3 z)|, the norm of the central-chart point.
  kBlownUp,
};

using Feedback = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double z)>;

/// Extended fast-time field x' = eps f, z' = g, eps' = 0 on states
/// (x_1..x_n_s, z, eps).
class OriginalPlant : public Plant {
 public:
  explicit OriginalPlant(FoldSFCS sys, std::optional<OriginalController> ctrl = std::nullopt,
                         NormFrame frame = NormFrame::kOriginal);
  OriginalPlant(FoldSFCS sys, Feedback feedback, NormFrame frame = NormFrame::kOriginal);

  const FoldSFCS& system() const { return sys_; }
  int dimension() const override { return sys_.n_s() + 2; }
  Eigen::VectorXd derivative(const Eigen::VectorXd& state) const override;
  std::optional<Eigen::VectorXd> input(const Eigen::VectorXd& state) const override;
  std::optional<double> lyapunov(const Eigen::VectorXd& state) const override;
  double norm(const Eigen::VectorXd& state) const override;

 private:
  FoldSFCS sys_;
  std::optional<OriginalController> ctrl_;
  Feedback feedback_;
  NormFrame frame_;
};

/// Central-chart field rho' = 0, chi' = ..., zeta' = ... on states
/// (rho, chi_1..chi_n_s, zeta), in desingularized time s.
class ChartPlant : public Plant {
 public:
  explicit ChartPlant(DesingularizedSystem des,
                      std::optional<ChartController> ctrl = std::nullopt);

  int dimension() const override { return des_.n_s() + 2; }
  Eigen::VectorXd derivative(const Eigen::VectorXd& state) const override;
  std::optional<Eigen::VectorXd> input(const Eigen::VectorXd& state) const override;
  std::optional<double> lyapunov(const Eigen::VectorXd& state) const override;
  /// |(chi, zeta)|
  double norm(const Eigen::VectorXd& state) const override;

 private:
  DesingularizedSystem des_;
  std::optional<ChartController> ctrl_;
};

Trajectory integrate(const Plant& plant, const Eigen::VectorXd& initial_state,
                     const IntegratorConfig& cfg);

/// Index k of the first recorded step with W(t_{k+1}) >= W(t_k) while the
/// state at t_k lies outside the ball of radius `ball`.
std::optional<size_t> first_lyapunov_increase(const Trajectory& traj, const Plant& plant,
                                              double ball);

enum class IcFrame {
  /// (x_1..x_n_s, z)
  kOriginal,
  /// (chi_1..chi_n_s, zeta), mapped through the central chart at each eps.
  kBlownUp,
};

struct InitialCondition {
  IcFrame frame{IcFrame::kBlownUp};
  Eigen::VectorXd state;
};

/// `count` points drawn uniformly from the ball of the given radius in
/// R^(n_s+1), in the blown-up frame. Deterministic in `seed`.
std::vector<InitialCondition> ball_initial_conditions(int n_s, int count, double radius,
                                                      std::uint64_t seed);

/// Original-coordinate state (x, z, eps) of an initial condition.
Eigen::VectorXd original_state(const InitialCondition& ic, int n_s, double eps);

struct SweepConfig {
  IntegratorConfig integrator;
  /// Interpret step, horizon and min/max step in desingularized time
  /// s = eps^(1/3) tau instead of fast time.
  bool desingularized_time{true};
  NormFrame norm{NormFrame::kBlownUp};
  double lyapunov_ball{1e-9};
  bool keep_trajectories{false};
  bool parallel{false};
};

/// Returns the blown-down controller for eps, or nullopt for open loop.
using ControllerFactory = std::function<std::optional<OriginalController>(double eps)>;

struct SweepRow {
  double eps{0.0};
  size_t ic_index{0};
  bool converged{false};
  StopReason terminal{StopReason::kTimeOut};
  /// Fast time and desingularized time at ball entry.
  std::optional<double> time_to_ball;
  std::optional<double> s_to_ball;
  double final_time{0.0};
  double final_norm{0.0};
  double peak_input{0.0};
  std::optional<bool> lyapunov_decreasing;
  std::string error;
};

struct SweepResult {
  /// Sorted by (eps, ic index) in the order of the inputs.
  std::vector<SweepRow> rows;
  /// Same order as rows when keep_trajectories is set.
  std::vector<Trajectory> trajectories;
};

SweepResult sweep_epsilon(const FoldSFCS& sys, const ControllerFactory& factory,
                          std::span<const InitialCondition> ics,
                          std::span<const double> eps_list, const SweepConfig& cfg);

}  // namespace foldctl
