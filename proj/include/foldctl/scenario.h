#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "foldctl/control.h"
#include "foldctl/fold_system.h"
#include "foldctl/sim.h"
#include "foldctl/verify.h"

namespace foldctl {

/// Failure to load a scenario. `kind` selects the process exit code.
class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { kMissingFile, kSchema, kInvariant };

  ScenarioError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct RandomIcSpec {
  int count{20};
  double radius{0.5};
  std::uint64_t seed{1};
};

/// Sweeps default to the adaptive integrator (rtol = atol = 1e-9).
struct SimulationSpec {
  SimulationSpec() { sweep.integrator.method = IntegrationMethod::kRkf45; }

  bool closed_loop{true};
  SweepConfig sweep;
  bool write_trajectories{true};
};

struct BaselineSpec {
  CriticalBranch branch;
  CompositeGains gains;
};

struct AnalyzeSpec {
  /// (x_1..x_n_s, z) points to classify; the origin when empty.
  std::vector<Eigen::VectorXd> points;
  double tol{kDefaultClassificationTol};
  std::optional<BaselineSpec> baseline;
};

struct VerifySpec {
  std::uint64_t seed{kDefaultSeed};
  std::size_t samples{1000};
  std::size_t grid_points{10000};
  double grid_r_min{1e-3};
  double grid_r_max{10.0};
  double grid_rho_max{1.0};
  double grid_tol{1e-10};
  std::vector<double> conjugacy_rho{0.1, 0.5};
  double conjugacy_horizon{1.0};
  double conjugacy_step{1e-4};
  double conjugacy_tol{1e-8};
  double negative_control_rho{0.5};
  double roundtrip_tol{1e-12};
  double factor_tol{1e-9};
  std::size_t quasi_degree_instances{50};
};

struct Scenario {
  explicit Scenario(FoldSFCS sys) : system(std::move(sys)) {}

  FoldSFCS system;
  std::string name;
  std::optional<BackstepGains> gains;
  ControlMode mode{ControlMode::kExact};
  std::vector<double> eps;
  std::vector<InitialCondition> initial_conditions;
  std::optional<RandomIcSpec> random_ics;
  SimulationSpec simulation;
  AnalyzeSpec analyze;
  VerifySpec verify;
  std::string output_dir;
};

/// Parses and validates a scenario document. Unknown keys are rejected;
/// messages name the offending field as a JSON pointer.
Scenario parse_scenario_string(const std::string& text);
Scenario parse_scenario(const std::filesystem::path& path);

}  // namespace foldctl
