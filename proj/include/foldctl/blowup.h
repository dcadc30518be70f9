#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "foldctl/fold_system.h"
#include "foldctl/polynomial.h"

namespace foldctl {

/// Quasi-homogeneous blow-up weights
///
///   (x, z, eps) = (r^alpha * xbar, r^beta * zbar, r^gamma * epsbar)
///
/// together with the desingularization exponent m (the blown-up field is
/// divided by r^m).
struct Weights {
  std::vector<int> alpha;
  int beta{1};
  int gamma{3};
  int m{1};

  /// alpha = (2, ..., 2), beta = 1, gamma = 3, m = 1.
  static Weights fold(int n_s);

  int n_s() const { return static_cast<int>(alpha.size()); }
  /// Weight of variable `var` in the (x_1..x_n_s, z, eps) ordering.
  int weight(int var) const;
  void validate() const;

  friend bool operator==(const Weights&, const Weights&) = default;
};

/// Charts are obtained by fixing one sphere coordinate to +1 or -1.
enum class ChartId { kEpsBar, kPlusX1, kMinusX1, kPlusZ, kMinusZ };

std::string to_string(ChartId chart);
ChartId chart_from_string(const std::string& name);
/// Index of the fixed sphere coordinate in (xbar_1..xbar_n_s, zbar, epsbar).
int fixed_index(ChartId chart, int n_s);
double fixed_sign(ChartId chart);

/// A point in chart coordinates. `coords` holds the n_s + 1 free sphere
/// coordinates in (xbar, zbar, epsbar) order with the fixed one removed:
///   kEpsBar:   (chi_1..chi_n_s, zeta)
///   kPlusX1:   (x_2..x_n_s, z_1, eps_1)
///   kPlusZ:    (x_1..x_n_s, eps_2)
struct ChartPoint {
  double r{0.0};
  Eigen::VectorXd coords;
};

struct OriginalPoint {
  Eigen::VectorXd x;
  double z{0.0};
  double eps{0.0};

  Eigen::VectorXd packed() const;
};

/// Sphere coordinates of `p`, with the fixed entry set to +-1.
Eigen::VectorXd sphere_coordinates(ChartId chart, const ChartPoint& p);

OriginalPoint blow_up_point(ChartId chart, const Weights& w, const ChartPoint& p);

/// Inverse of blow_up_point on its injectivity domain (eps > 0 for kEpsBar,
/// +-x_1 > 0 or +-z > 0 and eps >= 0 for the directional charts).
ChartPoint blow_down_point(ChartId chart, const Weights& w,
                           const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                           double eps);

/// Change of coordinates between overlapping charts. Well defined at r = 0.
ChartPoint chart_transition(ChartId from, ChartId to, const Weights& w,
                            const ChartPoint& p);

/// d(x, z, eps) / d(r, coords) of the chart map.
Eigen::MatrixXd blow_up_jacobian(ChartId chart, const Weights& w, const ChartPoint& p);

/// Minimum over all monomials x^a z^b eps^c of w.alpha.a + w.beta*b + w.gamma*c.
int quasi_degree(const Polynomial& p, const Weights& w);
int quasi_degree(const PolyMap& p, const Weights& w);

/// Images of (x, z, eps) as monomials in the chart variables (r, coords).
std::vector<MonomialImage> chart_substitution(ChartId chart, const Weights& w);

/// p(Phi(r, coords)): a polynomial map over the chart variables.
PolyMap pull_back(const PolyMap& p, ChartId chart, const Weights& w);

/// Desingularized chart field of a polynomial vector field Y over (x, z, eps):
/// the pushforward through the chart map divided by r^m, computed exactly on
/// polynomials. Output components are ordered (r, coords).
PolyMap desingularize_in_chart(const PolyMap& field, ChartId chart, const Weights& w);

struct ChartVelocity {
  double r_dot{0.0};
  Eigen::VectorXd coords_dot;

  Eigen::VectorXd packed() const;
};

/// Closed-form desingularized control system of a FoldSFCS in any chart,
/// affine in u: drift + sum_k u_k * column_k.
class ChartField {
 public:
  ChartField(const FoldSFCS& sys, ChartId chart, const Weights& w);

  ChartId chart() const { return chart_; }
  const PolyMap& drift() const { return drift_; }
  const std::vector<PolyMap>& input_columns() const { return columns_; }

  ChartVelocity evaluate(const ChartPoint& p,
                         const Eigen::Ref<const Eigen::VectorXd>& u) const;

 private:
  ChartId chart_;
  int n_s_;
  PolyMap drift_;
  std::vector<PolyMap> columns_;
};

/// The fold system in the central chart, after dividing by rho:
///
///   rho'  = 0
///   chi'  = A + rho^2 L1 chi + rho L2 zeta + Bbar u + Fbar
///   zeta' = -(zeta^2 + chi_1)
///
/// with Bbar = B(rho^2 chi, rho zeta, rho^3) and Fbar likewise. rho is a
/// regular parameter here; Fbar vanishes identically at rho = 0.
class DesingularizedSystem {
 public:
  explicit DesingularizedSystem(FoldSFCS base);

  const FoldSFCS& base() const { return base_; }
  int n_s() const { return base_.n_s(); }
  int m() const { return base_.m(); }

  /// Bbar and Fbar as polynomials over (rho, chi_1..chi_n_s, zeta).
  const PolyMap& input_matrix_poly() const { return Bbar_; }
  const PolyMap& nonlinearity_poly() const { return Fbar_; }

  Eigen::MatrixXd input_matrix(double rho, const Eigen::Ref<const Eigen::VectorXd>& chi,
                               double zeta) const;
  Eigen::VectorXd nonlinearity(double rho, const Eigen::Ref<const Eigen::VectorXd>& chi,
                               double zeta) const;
  /// A + rho^2 L1 chi + rho L2 zeta + Fbar: everything in chi' except Bbar u.
  Eigen::VectorXd drift(double rho, const Eigen::Ref<const Eigen::VectorXd>& chi,
                        double zeta) const;

  struct Velocity {
    double rho_dot{0.0};
    Eigen::VectorXd chi_dot;
    double zeta_dot{0.0};
  };

  Velocity evaluate(double rho, const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta,
                    const Eigen::Ref<const Eigen::VectorXd>& u) const;

 private:
  Eigen::VectorXd pack(double rho, const Eigen::Ref<const Eigen::VectorXd>& chi,
                       double zeta) const;

  FoldSFCS base_;
  PolyMap Bbar_;
  PolyMap Fbar_;
};

DesingularizedSystem build_central_chart_system(const FoldSFCS& sys);

enum class PushforwardMethod {
  /// Solve DPhi * v = X(Phi(p)) and divide by r^m. Requires r > 0.
  kNumeric,
  /// Closed-form chart equations; valid at r = 0.
  kClosedForm,
};

/// Desingularized field at p.
ChartVelocity pushforward_desingularized(const FoldSFCS& sys, ChartId chart,
                                         const Weights& w, const ChartPoint& p,
                                         const Eigen::Ref<const Eigen::VectorXd>& u,
                                         PushforwardMethod method);

/// Blown-up field DPhi^-1 X(Phi(p)) before division by r^m. Requires r > 0.
ChartVelocity pushforward_blown_up(const FoldSFCS& sys, ChartId chart, const Weights& w,
                                   const ChartPoint& p,
                                   const Eigen::Ref<const Eigen::VectorXd>& u);

}  // namespace foldctl
