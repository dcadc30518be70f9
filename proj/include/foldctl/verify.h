#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "foldctl/blowup.h"
#include "foldctl/control.h"
#include "foldctl/fold_system.h"

namespace foldctl {

struct CheckReport {
  std::string name;
  bool passed{false};
  double worst_residual{0.0};
  /// Point of the worst residual (always set when the check fails).
  std::optional<Eigen::VectorXd> witness;
  double tolerance{0.0};
  std::uint64_t seed{0};
  std::size_t samples{0};
  std::size_t skipped{0};
  std::string note;
};

inline constexpr std::uint64_t kDefaultSeed = 20240917;

enum class TimeRescale {
  /// s = rho * tau, the correct relation for the desingularized field.
  kDesingularized,
  /// s = tau; a negative control that must fail for rho != 1.
  kIdentity,
};

struct FlowConjugacyOptions {
  double horizon{1.0};
  double step{1e-4};
  double tol{1e-8};
  TimeRescale rescale{TimeRescale::kDesingularized};
  /// Closed loop when set; open loop (u = 0) otherwise.
  std::optional<ChartController> controller;
};

/// Integrates X from Phi(p) in fast time and the central-chart field from p,
/// maps the chart trajectory through Phi, and reports the sup-norm
/// difference on the shared grid. `p` is a central-chart point
/// (rho, chi, zeta) with rho > 0.
CheckReport verify_flow_conjugacy(const FoldSFCS& sys, const ChartPoint& p,
                                  const FlowConjugacyOptions& opts);

/// Exact-mode controller required. Checks Wdot_numeric < 0 off the origin
/// and |Wdot_numeric - Wdot_closed_form| <= tol on every grid point.
CheckReport verify_lyapunov_grid(const ChartController& ctrl, const LyapunovCertificate& cert,
                                 std::span<const ChartPoint> grid, double tol);

/// Points (rho, chi, zeta) with rho uniform in [0, rho_max] and |(chi, zeta)|
/// log-uniform in [r_min, r_max].
std::vector<ChartPoint> annulus_grid(int n_s, std::size_t count, double r_min, double r_max,
                                     double rho_max, std::uint64_t seed);

/// Round trips blow_up/blow_down in every chart of `charts`, plus the
/// eps-bar <-> +x1 transition commutation when both are listed. Samples that
/// fall outside an overlap are skipped and counted.
CheckReport verify_chart_roundtrips(const Weights& w, std::span<const ChartId> charts,
                                    std::size_t n_samples, double tol,
                                    std::uint64_t seed = kDefaultSeed);

/// Compares the numeric blown-up field with r^m times the closed-form
/// central-chart field at samples with r in [1e-3, 1].
CheckReport verify_desingularization_factor(const FoldSFCS& sys, const Weights& w,
                                            std::size_t n_samples, double tol,
                                            std::uint64_t seed = kDefaultSeed);

/// quasi_degree(F) >= 1 iff Fbar(0, chi, zeta) = 0, on random polynomial
/// maps F (some with constant terms).
CheckReport verify_quasi_degree_vanishing(int n_s, std::size_t n_instances,
                                          std::uint64_t seed = kDefaultSeed);

}  // namespace foldctl
