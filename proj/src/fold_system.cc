#include "foldctl/fold_system.h"

#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "foldctl/errors.h"

namespace foldctl {
namespace {

void require_size(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": size " + std::to_string(got) +
                         ", expected " + std::to_string(want));
  }
}

int numerical_rank(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0;
  const double tol = std::max(M.rows(), M.cols()) * s[0] * 1e-12;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > tol) ++rank;
  }
  return rank;
}

CriticalClassification classify(const Polynomial& g, int z_index, int x1_index,
                                const Eigen::VectorXd& point, double tol) {
  if (!(tol > 0.0)) throw InvariantError("classification tolerance must be positive");
  CriticalClassification c;
  const Polynomial gz = g.derivative(z_index);
  c.g = g.evaluate(point);
  c.eigenvalue = gz.evaluate(point);
  c.g_zz = gz.derivative(z_index).evaluate(point);
  c.g_x1 = g.derivative(x1_index).evaluate(point);
  if (std::abs(c.g) > tol) {
    c.kind = CriticalKind::kOffManifold;
  } else if (c.eigenvalue < -tol) {
    c.kind = CriticalKind::kHyperbolicAttracting;
  } else if (c.eigenvalue > tol) {
    c.kind = CriticalKind::kHyperbolicRepelling;
  } else if (std::abs(c.g_zz) > tol && std::abs(c.g_x1) > tol) {
    c.kind = CriticalKind::kFold;
  } else {
    c.kind = CriticalKind::kDegenerate;
  }
  return c;
}

}  // namespace

FoldSFCS::FoldSFCS(int n_s, int m, Eigen::VectorXd A, Eigen::MatrixXd L1,
                   Eigen::VectorXd L2, PolyMap B, PolyMap F)
    : n_s_(n_s),
      m_(m),
      A_(std::move(A)),
      L1_(std::move(L1)),
      L2_(std::move(L2)),
      B_(std::move(B)),
      F_(std::move(F)) {
  if (n_s < 1) throw DimensionError("n_s must be at least 1");
  if (m < 1) throw DimensionError("m must be at least 1");
  require_size(A_.size(), n_s, "A");
  require_size(L1_.rows(), n_s, "L1 rows");
  require_size(L1_.cols(), n_s, "L1 cols");
  require_size(L2_.size(), n_s, "L2");
  if (F_.n_out() == 0 && F_.num_vars() == 0) F_ = PolyMap::zero(num_vars(), n_s);
  require_size(B_.num_vars(), num_vars(), "B variables");
  require_size(B_.n_out(), n_s * m, "B entries");
  require_size(F_.num_vars(), num_vars(), "F variables");
  require_size(F_.n_out(), n_s, "F components");

  for (int i = 0; i < n_s; ++i) {
    if (F_[i].constant_term() != 0.0) {
      throw InvariantError("F component " + std::to_string(i) +
                           " has a constant term (quasi_degree 0); F(0,0,0) must vanish");
    }
  }
  B0_ = input_matrix(Eigen::VectorXd::Zero(n_s), 0.0, 0.0);
  if (numerical_rank(B0_) != n_s) {
    throw InvariantError("rank B(0,0,0) = " + std::to_string(numerical_rank(B0_)) +
                         " < n_s = " + std::to_string(n_s));
  }
}

FoldSFCS FoldSFCS::with_constant_input(Eigen::VectorXd A, Eigen::MatrixXd L1,
                                       Eigen::VectorXd L2, const Eigen::MatrixXd& B,
                                       PolyMap F) {
  const int n_s = static_cast<int>(B.rows());
  const int m = static_cast<int>(B.cols());
  std::vector<Polynomial> entries;
  for (int i = 0; i < n_s; ++i) {
    for (int j = 0; j < m; ++j) entries.push_back(Polynomial::constant(n_s + 2, B(i, j)));
  }
  return FoldSFCS(n_s, m, std::move(A), std::move(L1), std::move(L2),
                  PolyMap(n_s + 2, std::move(entries)), std::move(F));
}

Eigen::VectorXd FoldSFCS::pack(const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                               double eps) const {
  require_size(x.size(), n_s_, "x");
  Eigen::VectorXd p(num_vars());
  p << x, z, eps;
  return p;
}

Eigen::MatrixXd FoldSFCS::input_matrix(const Eigen::Ref<const Eigen::VectorXd>& x,
                                       double z, double eps) const {
  const Eigen::VectorXd flat = B_.evaluate(pack(x, z, eps));
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(flat.data(), n_s_, m_);
}

Eigen::VectorXd FoldSFCS::slow_field(const Eigen::Ref<const Eigen::VectorXd>& x,
                                     double z, double eps,
                                     const Eigen::Ref<const Eigen::VectorXd>& u) const {
  require_size(u.size(), m_, "u");
  const Eigen::VectorXd p = pack(x, z, eps);
  Eigen::VectorXd f = A_ + L1_ * x + L2_ * z + F_.evaluate(p);
  const Eigen::VectorXd flat = B_.evaluate(p);
  for (int i = 0; i < n_s_; ++i) {
    for (int j = 0; j < m_; ++j) f[i] += flat[i * m_ + j] * u[j];
  }
  return f;
}

double FoldSFCS::fast_field(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const {
  require_size(x.size(), n_s_, "x");
  return -(z * z + x[0]);
}

Polynomial FoldSFCS::fast_polynomial() const {
  const int n = num_vars();
  std::vector<int> zz(n, 0), x1(n, 0);
  zz[z_index()] = 2;
  x1[0] = 1;
  return Polynomial(n, {{-1.0, zz}, {-1.0, x1}});
}

GenericSFS::GenericSFS(int n_s_in, int m_in, PolyMap f_in, PolyMap g_in)
    : n_s(n_s_in), m(m_in), f(std::move(f_in)), g(std::move(g_in)) {
  if (n_s < 1 || m < 0) throw DimensionError("GenericSFS: invalid dimensions");
  require_size(f.num_vars(), num_vars(), "f variables");
  require_size(g.num_vars(), num_vars(), "g variables");
  require_size(f.n_out(), n_s, "f components");
  require_size(g.n_out(), 1, "g components");
}

GenericSFS GenericSFS::from_fold(const FoldSFCS& sys) {
  const int n_s = sys.n_s();
  const int m = sys.m();
  const int nv = n_s + 2 + m;
  std::vector<int> var_map(n_s + 2);
  std::iota(var_map.begin(), var_map.end(), 0);

  std::vector<Polynomial> f;
  for (int i = 0; i < n_s; ++i) {
    Polynomial fi = Polynomial::constant(nv, sys.A()[i]);
    for (int j = 0; j < n_s; ++j) fi += sys.L1()(i, j) * Polynomial::variable(nv, j);
    fi += sys.L2()[i] * Polynomial::variable(nv, n_s);
    fi += sys.F()[i].embed(nv, var_map);
    for (int k = 0; k < m; ++k) {
      fi += sys.B()[i * m + k].embed(nv, var_map) * Polynomial::variable(nv, n_s + 2 + k);
    }
    f.push_back(std::move(fi));
  }
  std::vector<Polynomial> g{sys.fast_polynomial().embed(nv, var_map)};
  return GenericSFS(n_s, m, PolyMap(nv, std::move(f)), PolyMap(nv, std::move(g)));
}

Eigen::VectorXd GenericSFS::pack(const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                                 double eps,
                                 const Eigen::Ref<const Eigen::VectorXd>& u) const {
  require_size(x.size(), n_s, "x");
  require_size(u.size(), m, "u");
  Eigen::VectorXd p(num_vars());
  p << x, z, eps, u;
  return p;
}

FastTimeVelocity eval_fast_field(const FoldSFCS& sys,
                                 const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                                 double eps,
                                 const Eigen::Ref<const Eigen::VectorXd>& u) {
  if (eps < 0.0) throw DomainError("eps must be non-negative");
  return {eps * sys.slow_field(x, z, eps, u), sys.fast_field(x, z)};
}

double eval_layer_field(const FoldSFCS& sys, const Eigen::Ref<const Eigen::VectorXd>& x,
                        double z) {
  return sys.fast_field(x, z);
}

std::string to_string(CriticalKind kind) {
  switch (kind) {
    case CriticalKind::kHyperbolicAttracting: return "hyperbolic-attracting";
    case CriticalKind::kHyperbolicRepelling: return "hyperbolic-repelling";
    case CriticalKind::kFold: return "fold";
    case CriticalKind::kDegenerate: return "degenerate";
    case CriticalKind::kOffManifold: return "off-manifold";
  }
  return "unknown";
}

CriticalClassification classify_critical_point(const FoldSFCS& sys,
                                               const Eigen::Ref<const Eigen::VectorXd>& x,
                                               double z, double tol) {
  return classify(sys.fast_polynomial(), sys.z_index(), 0, sys.pack(x, z, 0.0), tol);
}

CriticalClassification classify_critical_point(const GenericSFS& sys,
                                               const Eigen::Ref<const Eigen::VectorXd>& x,
                                               double z,
                                               const Eigen::Ref<const Eigen::VectorXd>& u,
                                               double tol) {
  return classify(sys.g[0], sys.n_s, 0, sys.pack(x, z, 0.0, u), tol);
}

}  // namespace foldctl
