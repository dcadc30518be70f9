#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace foldctl {

/// coeff * prod_i v_i^exponents[i]
struct Monomial {
  double coeff{0.0};
  std::vector<int> exponents;
};

/// Image of one variable under a monomial substitution:
/// v_i -> scale * prod_j w_j^exponents[j].
struct MonomialImage {
  double scale{1.0};
  std::vector<int> exponents;
};

/// Sparse multivariate polynomial with real coefficients.
///
/// Terms are kept in canonical form: like monomials merged, zero
/// coefficients dropped, ordered by exponent vector. All arithmetic is exact
/// on the monomial structure; only the coefficients are floating point.
class Polynomial {
 public:
  explicit Polynomial(int num_vars = 0);
  Polynomial(int num_vars, const std::vector<Monomial>& terms);

  static Polynomial constant(int num_vars, double value);
  static Polynomial variable(int num_vars, int index);

  int num_vars() const { return num_vars_; }
  const std::map<std::vector<int>, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  double constant_term() const;

  /// Smallest exponent of `var` over all terms (0 for the zero polynomial).
  int min_exponent(int var) const;

  double evaluate(std::span<const double> point) const;
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& point) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& point) const;

  Polynomial derivative(int var) const;

  /// Divides every term by var^power; throws InvariantError when some term
  /// has a lower power of `var`.
  Polynomial divide_by_power(int var, int power) const;

  /// Replaces variable i by images[i], yielding a polynomial in
  /// `new_num_vars` variables.
  Polynomial substitute(const std::vector<MonomialImage>& images,
                        int new_num_vars) const;

  /// Re-indexes variable i to var_map[i] in a space of `new_num_vars`.
  Polynomial embed(int new_num_vars, std::span<const int> var_map) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

  std::vector<Monomial> monomials() const;

 private:
  void add_term(const std::vector<int>& exponents, double coeff);
  void check_compatible(const Polynomial& other) const;

  int num_vars_;
  std::map<std::vector<int>, double> terms_;
};

/// Polynomial map R^num_vars -> R^n_out.
class PolyMap {
 public:
  PolyMap() = default;
  PolyMap(int num_vars, std::vector<Polynomial> components);

  static PolyMap zero(int num_vars, int n_out);
  static PolyMap from_terms(int num_vars,
                            const std::vector<std::vector<Monomial>>& terms);

  int num_vars() const { return num_vars_; }
  int n_out() const { return static_cast<int>(components_.size()); }
  const Polynomial& operator[](int i) const { return components_.at(i); }
  const std::vector<Polynomial>& components() const { return components_; }
  bool is_zero() const;

  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& point) const;
  Eigen::MatrixXd jacobian(const Eigen::Ref<const Eigen::VectorXd>& point) const;

  PolyMap substitute(const std::vector<MonomialImage>& images,
                     int new_num_vars) const;

 private:
  int num_vars_{0};
  std::vector<Polynomial> components_;
};

struct ValueAndJacobian {
  Eigen::VectorXd value;
  Eigen::MatrixXd jacobian;
};

/// Value and Jacobian by term-wise differentiation. Throws DimensionError if
/// the point length differs from p.num_vars().
ValueAndJacobian poly_eval_jacobian(const PolyMap& p,
                                    const Eigen::Ref<const Eigen::VectorXd>& point);

/// x^n by repeated squaring; n >= 0.
double ipow(double x, int n);

}  // namespace foldctl
