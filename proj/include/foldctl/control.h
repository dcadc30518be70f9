#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "foldctl/blowup.h"
#include "foldctl/fold_system.h"

namespace foldctl {

/// Rates of the hyperbolicity-injection law: c for the fast channel, k for
/// the backstepping error, k_rest for chi_2..chi_n_s.
struct BackstepGains {
  double c{1.0};
  double k{1.0};
  Eigen::VectorXd k_rest;

  BackstepGains() = default;
  BackstepGains(double c, double k, Eigen::VectorXd k_rest = {});

  /// Throws InvariantError unless every gain is strictly positive and
  /// k_rest has n_s - 1 entries.
  void validate(int n_s) const;
};

enum class ControlMode {
  /// rho = 0 law applied for all rho: u = B0^+ (-A + v).
  kNominal,
  /// Exact cancellation: u = Bbar^+ (-drift + v).
  kExact,
};

std::string to_string(ControlMode mode);
ControlMode control_mode_from_string(const std::string& name);

/// Right inverse of a full-row-rank matrix: B^-1 when square, otherwise
/// B^T (B B^T)^-1. Throws RankError (with `where` as witness) when the rank
/// is deficient.
Eigen::MatrixXd right_inverse(const Eigen::MatrixXd& B, const Eigen::VectorXd& where);

/// Feedback in the central chart that makes the unactuated fold variable
/// hyperbolic. With sigma(zeta) = c zeta - zeta^2 and e = chi_1 - sigma(zeta)
/// the exact-mode closed loop is the linear cascade
///
///   zeta' = -c zeta - e,   e' = -k e + zeta,   chi_j' = -k_j chi_j.
class ChartController {
 public:
  ChartController(DesingularizedSystem des, BackstepGains gains, ControlMode mode);

  const DesingularizedSystem& system() const { return des_; }
  const BackstepGains& gains() const { return gains_; }
  ControlMode mode() const { return mode_; }

  /// Desired chi' (the cascade right-hand side).
  Eigen::VectorXd virtual_input(const Eigen::Ref<const Eigen::VectorXd>& chi,
                                double zeta) const;

  Eigen::VectorXd evaluate(double rho, const Eigen::Ref<const Eigen::VectorXd>& chi,
                           double zeta) const;

 private:
  DesingularizedSystem des_;
  BackstepGains gains_;
  ControlMode mode_;
  Eigen::MatrixXd nominal_inverse_;
};

/// Builds the controller and checks the rank condition: at rho = 0 in
/// nominal mode, and additionally at every point of `rank_domain` (points of
/// the central chart) in exact mode.
ChartController synthesize_injection(const DesingularizedSystem& des,
                                     const BackstepGains& gains, ControlMode mode,
                                     std::span<const ChartPoint> rank_domain = {});

Eigen::VectorXd eval_controller(const ChartController& ctrl, double rho,
                                const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta);

/// W(chi, zeta) = zeta^2/2 + e^2/2 + sum_{j>=2} chi_j^2/2, and its blow-down
/// V_eps(x, z) = W(eps^-2/3 x, eps^-1/3 z).
class LyapunovCertificate {
 public:
  explicit LyapunovCertificate(BackstepGains gains);

  const BackstepGains& gains() const { return gains_; }

  double error(const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta) const;
  double value(const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta) const;
  /// (dW/dchi_1..dW/dchi_n_s, dW/dzeta).
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta) const;
  /// -c zeta^2 - k e^2 - sum k_j chi_j^2; the exact-mode rate.
  double rate_closed_form(const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta) const;
  double original_value(double eps, const Eigen::Ref<const Eigen::VectorXd>& x,
                        double z) const;

 private:
  BackstepGains gains_;
};

double lyapunov_value(const LyapunovCertificate& cert,
                      const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta);
double lyapunov_rate_closed_form(const LyapunovCertificate& cert,
                                 const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta);
/// grad W . Xtilde_cl at (rho, chi, zeta), from the chart system and the
/// controller, independent of the closed form.
double lyapunov_rate_numeric(const LyapunovCertificate& cert, const ChartController& ctrl,
                             double rho, const Eigen::Ref<const Eigen::VectorXd>& chi,
                             double zeta);

/// Chart controller transported to the original coordinates at fixed eps.
class OriginalController {
 public:
  OriginalController(ChartController chart, double eps);

  double eps() const { return eps_; }
  double rho() const { return rho_; }
  const ChartController& chart_controller() const { return chart_; }
  LyapunovCertificate certificate() const { return LyapunovCertificate(chart_.gains()); }

  ChartPoint to_chart(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const;
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const;
  double lyapunov(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const;

 private:
  ChartController chart_;
  double eps_;
  double rho_;
};

OriginalController blow_down_controller(const ChartController& ctrl, double eps);

/// A segment of the critical manifold sampled between x_start and x_end; z
/// is found by Newton continuation from z_seed.
struct CriticalBranch {
  Eigen::VectorXd x_start;
  Eigen::VectorXd x_end;
  int samples{50};
  double z_seed{1.0};
  /// Equilibrium to stabilize on the branch; defaults to the midpoint.
  Eigen::VectorXd operating_point;
};

struct CompositeGains {
  /// Closed-loop rate of the linearized reduced flow.
  double reduced_rate{1.0};
  /// u_f = -fast_gain * (z - h(x, u_s(x))); length m (zero if empty).
  Eigen::VectorXd fast_gain;
  double tol{kDefaultClassificationTol};
};

struct BranchSample {
  Eigen::VectorXd x;
  double z{0.0};
  CriticalClassification classification;
};

/// Classical composite control u = u_s(x) + u_f(x, z) on a normally
/// hyperbolic branch.
class CompositeController {
 public:
  CompositeController(GenericSFS sys, Eigen::VectorXd x_star, Eigen::VectorXd u_star,
                      Eigen::MatrixXd K, Eigen::VectorXd fast_gain, double z_seed,
                      std::vector<BranchSample> samples);

  const Eigen::VectorXd& operating_point() const { return x_star_; }
  const Eigen::VectorXd& equilibrium_input() const { return u_star_; }
  const Eigen::MatrixXd& feedback_gain() const { return K_; }
  const std::vector<BranchSample>& nh_samples() const { return samples_; }

  Eigen::VectorXd slow(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd fast(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const;
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const;
  /// h(x, u): root of g(x, z, 0, u) = 0 on this branch.
  double critical_root(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& u) const;

 private:
  GenericSFS sys_;
  Eigen::VectorXd x_star_;
  Eigen::VectorXd u_star_;
  Eigen::MatrixXd K_;
  Eigen::VectorXd fast_gain_;
  double z_seed_;
  std::vector<BranchSample> samples_;
};

/// Newton iteration for g(x, z, 0, u) = 0 in z starting at `seed`.
double solve_critical_root(const GenericSFS& sys, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& u, double seed);

/// Throws BranchError at the first sample that is not hyperbolic.
CompositeController composite_baseline(const GenericSFS& sys, const CriticalBranch& branch,
                                       const CompositeGains& gains);

}  // namespace foldctl
