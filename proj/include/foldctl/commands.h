#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "foldctl/scenario.h"
#include "foldctl/verify.h"

namespace foldctl {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailure = 1,
  kExitMissingFile = 2,
  kExitSchema = 3,
  kExitInvariant = 4,
  kExitRuntime = 5,
};

struct CommandOptions {
  /// Overrides the scenario's output directory when set.
  std::optional<std::filesystem::path> out_dir;
  bool plot{false};
  /// Overrides the scenario's verification seed when set.
  std::optional<std::uint64_t> seed;
};

/// Output directory: the override, else the scenario's, else "foldctl-out".
std::filesystem::path output_directory(const Scenario& s, const CommandOptions& opts);

/// Each command writes its artifacts, logs a short summary to `log` and
/// returns an exit code. Library errors propagate.
int run_analyze(const Scenario& s, const CommandOptions& opts, std::ostream& log);
int run_design(const Scenario& s, const CommandOptions& opts, std::ostream& log);
int run_simulate(const Scenario& s, const CommandOptions& opts, std::ostream& log);
int run_verify(const Scenario& s, const CommandOptions& opts, std::ostream& log);

/// The property suite run by `verify`: chart round trips, desingularization
/// factor (with its m = 2 negative control), quasi-degree vanishing, flow
/// conjugacy (with the s = tau negative control) and, for exact-mode
/// controllers, the Lyapunov grid.
std::vector<CheckReport> verification_suite(const Scenario& s, std::uint64_t seed);

std::string reports_json(const std::vector<CheckReport>& reports, std::uint64_t seed);
std::string controller_json(const Scenario& s);

/// Loads the scenario, runs `subcommand` and maps every failure to its exit
/// code, printing the message to `err`.
int dispatch(const std::string& subcommand, const std::filesystem::path& scenario_path,
             const CommandOptions& opts, std::ostream& log, std::ostream& err);

}  // namespace foldctl
