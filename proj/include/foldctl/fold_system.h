#pragma once

#include <string>

#include <Eigen/Core>

#include "foldctl/polynomial.h"

namespace foldctl {

/// Fold-normal-form slow-fast control system, in fast time:
///
///   x' = eps * (A + L1 x + L2 z + B(x, z, eps) u + F(x, z, eps))
///   z' = -(z^2 + x_1)
///
/// with x in R^n_s, a single fast variable z and u in R^m. B and F are
/// polynomial in (x_1..x_n_s, z, eps); B is stored as an n_s*m component map
/// in row-major order.
///
/// The constructor enforces F(0, 0, 0) = 0 and rank B(0, 0, 0) = n_s.
class FoldSFCS {
 public:
  FoldSFCS(int n_s, int m, Eigen::VectorXd A, Eigen::MatrixXd L1,
           Eigen::VectorXd L2, PolyMap B, PolyMap F);

  /// A, L1, L2 given, B constant, F zero.
  static FoldSFCS with_constant_input(Eigen::VectorXd A, Eigen::MatrixXd L1,
                                      Eigen::VectorXd L2, const Eigen::MatrixXd& B,
                                      PolyMap F = {});

  int n_s() const { return n_s_; }
  int m() const { return m_; }
  /// Number of variables of B and F: n_s + 2.
  int num_vars() const { return n_s_ + 2; }
  int z_index() const { return n_s_; }
  int eps_index() const { return n_s_ + 1; }

  const Eigen::VectorXd& A() const { return A_; }
  const Eigen::MatrixXd& L1() const { return L1_; }
  const Eigen::VectorXd& L2() const { return L2_; }
  const PolyMap& B() const { return B_; }
  const PolyMap& F() const { return F_; }

  Eigen::MatrixXd input_matrix(const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                               double eps) const;
  const Eigen::MatrixXd& input_matrix_at_origin() const { return B0_; }

  /// f(x, z, eps, u).
  Eigen::VectorXd slow_field(const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                             double eps,
                             const Eigen::Ref<const Eigen::VectorXd>& u) const;
  /// g(x, z) = -(z^2 + x_1).
  double fast_field(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const;
  /// g as a polynomial over (x, z, eps).
  Polynomial fast_polynomial() const;

  Eigen::VectorXd pack(const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                       double eps) const;

 private:
  int n_s_;
  int m_;
  Eigen::VectorXd A_;
  Eigen::MatrixXd L1_;
  Eigen::VectorXd L2_;
  PolyMap B_;
  PolyMap F_;
  Eigen::MatrixXd B0_;
};

/// General slow-fast control system x' = eps f, z' = g with f, g polynomial
/// over (x_1..x_n_s, z, eps, u_1..u_m).
struct GenericSFS {
  int n_s{0};
  int m{0};
  PolyMap f;
  PolyMap g;

  GenericSFS(int n_s, int m, PolyMap f, PolyMap g);
  static GenericSFS from_fold(const FoldSFCS& sys);

  int num_vars() const { return n_s + 2 + m; }
  Eigen::VectorXd pack(const Eigen::Ref<const Eigen::VectorXd>& x, double z, double eps,
                       const Eigen::Ref<const Eigen::VectorXd>& u) const;
};

struct FastTimeVelocity {
  Eigen::VectorXd xdot;
  double zdot{0.0};
};

FastTimeVelocity eval_fast_field(const FoldSFCS& sys,
                                 const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                                 double eps,
                                 const Eigen::Ref<const Eigen::VectorXd>& u);

/// g(x, z, 0) with x frozen.
double eval_layer_field(const FoldSFCS& sys, const Eigen::Ref<const Eigen::VectorXd>& x,
                        double z);

enum class CriticalKind {
  kHyperbolicAttracting,
  kHyperbolicRepelling,
  kFold,
  kDegenerate,
  kOffManifold,
};

std::string to_string(CriticalKind kind);

struct CriticalClassification {
  CriticalKind kind{CriticalKind::kOffManifold};
  /// dg/dz at the point; the single eigenvalue of the layer linearization.
  double eigenvalue{0.0};
  double g{0.0};
  double g_zz{0.0};
  double g_x1{0.0};
};

inline constexpr double kDefaultClassificationTol = 1e-9;

/// Classifies a point of the layer problem z' = g(x, z, 0).
CriticalClassification classify_critical_point(const FoldSFCS& sys,
                                               const Eigen::Ref<const Eigen::VectorXd>& x,
                                               double z,
                                               double tol = kDefaultClassificationTol);

/// Same test for a general fast field g over (x, z, eps, u...), evaluated at
/// eps = 0 and the given input.
CriticalClassification classify_critical_point(const GenericSFS& sys,
                                               const Eigen::Ref<const Eigen::VectorXd>& x,
                                               double z,
                                               const Eigen::Ref<const Eigen::VectorXd>& u,
                                               double tol = kDefaultClassificationTol);

}  // namespace foldctl
