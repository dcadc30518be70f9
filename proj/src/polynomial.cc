#include "foldctl/polynomial.h"

#include <algorithm>
#include <string>

#include "foldctl/errors.h"

namespace foldctl {

double ipow(double x, int n) {
  double result = 1.0;
  while (n > 0) {
    if (n & 1) result *= x;
    x *= x;
    n >>= 1;
  }
  return result;
}

Polynomial::Polynomial(int num_vars) : num_vars_(num_vars) {
  if (num_vars < 0) throw DimensionError("negative variable count");
}

Polynomial::Polynomial(int num_vars, const std::vector<Monomial>& terms)
    : Polynomial(num_vars) {
  for (const auto& t : terms) {
    if (static_cast<int>(t.exponents.size()) != num_vars) {
      throw DimensionError("monomial has " + std::to_string(t.exponents.size()) +
                           " exponents, expected " + std::to_string(num_vars));
    }
    for (int e : t.exponents) {
      if (e < 0) throw InvariantError("negative exponent in monomial");
    }
    add_term(t.exponents, t.coeff);
  }
}

Polynomial Polynomial::constant(int num_vars, double value) {
  Polynomial p(num_vars);
  p.add_term(std::vector<int>(num_vars, 0), value);
  return p;
}

Polynomial Polynomial::variable(int num_vars, int index) {
  if (index < 0 || index >= num_vars) throw DimensionError("variable index out of range");
  Polynomial p(num_vars);
  std::vector<int> e(num_vars, 0);
  e[index] = 1;
  p.add_term(e, 1.0);
  return p;
}

void Polynomial::add_term(const std::vector<int>& exponents, double coeff) {
  if (coeff == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(exponents, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

void Polynomial::check_compatible(const Polynomial& other) const {
  if (other.num_vars_ != num_vars_) {
    throw DimensionError("polynomials live in different variable spaces");
  }
}

double Polynomial::constant_term() const {
  auto it = terms_.find(std::vector<int>(num_vars_, 0));
  return it == terms_.end() ? 0.0 : it->second;
}

int Polynomial::min_exponent(int var) const {
  if (terms_.empty()) return 0;
  int lo = terms_.begin()->first.at(var);
  for (const auto& [e, c] : terms_) lo = std::min(lo, e[var]);
  return lo;
}

double Polynomial::evaluate(std::span<const double> point) const {
  if (static_cast<int>(point.size()) != num_vars_) {
    throw DimensionError("point has " + std::to_string(point.size()) +
                         " coordinates, expected " + std::to_string(num_vars_));
  }
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double term = c;
    for (int i = 0; i < num_vars_; ++i) {
      if (e[i] != 0) term *= ipow(point[i], e[i]);
    }
    sum += term;
  }
  return sum;
}

double Polynomial::evaluate(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  return evaluate(std::span<const double>(point.data(), point.size()));
}

Eigen::VectorXd Polynomial::gradient(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  if (point.size() != num_vars_) throw DimensionError("gradient: point size mismatch");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(num_vars_);
  for (const auto& [e, c] : terms_) {
    for (int j = 0; j < num_vars_; ++j) {
      if (e[j] == 0) continue;
      double term = c * e[j];
      for (int i = 0; i < num_vars_; ++i) {
        const int power = (i == j) ? e[i] - 1 : e[i];
        if (power != 0) term *= ipow(point[i], power);
      }
      grad[j] += term;
    }
  }
  return grad;
}

Polynomial Polynomial::derivative(int var) const {
  if (var < 0 || var >= num_vars_) throw DimensionError("derivative: variable out of range");
  Polynomial d(num_vars_);
  for (const auto& [e, c] : terms_) {
    if (e[var] == 0) continue;
    auto lowered = e;
    lowered[var] -= 1;
    d.add_term(lowered, c * e[var]);
  }
  return d;
}

Polynomial Polynomial::divide_by_power(int var, int power) const {
  Polynomial q(num_vars_);
  for (const auto& [e, c] : terms_) {
    if (e[var] < power) {
      throw InvariantError("term is not divisible by variable " + std::to_string(var) +
                           "^" + std::to_string(power));
    }
    auto lowered = e;
    lowered[var] -= power;
    q.add_term(lowered, c);
  }
  return q;
}

Polynomial Polynomial::substitute(const std::vector<MonomialImage>& images,
                                  int new_num_vars) const {
  if (static_cast<int>(images.size()) != num_vars_) {
    throw DimensionError("substitute: one image per variable required");
  }
  for (const auto& img : images) {
    if (static_cast<int>(img.exponents.size()) != new_num_vars) {
      throw DimensionError("substitute: image exponent length mismatch");
    }
  }
  Polynomial out(new_num_vars);
  for (const auto& [e, c] : terms_) {
    double coeff = c;
    std::vector<int> ne(new_num_vars, 0);
    for (int i = 0; i < num_vars_; ++i) {
      if (e[i] == 0) continue;
      coeff *= ipow(images[i].scale, e[i]);
      for (int j = 0; j < new_num_vars; ++j) ne[j] += e[i] * images[i].exponents[j];
    }
    out.add_term(ne, coeff);
  }
  return out;
}

Polynomial Polynomial::embed(int new_num_vars, std::span<const int> var_map) const {
  if (static_cast<int>(var_map.size()) != num_vars_) {
    throw DimensionError("embed: one target index per variable required");
  }
  Polynomial out(new_num_vars);
  for (const auto& [e, c] : terms_) {
    std::vector<int> ne(new_num_vars, 0);
    for (int i = 0; i < num_vars_; ++i) ne.at(var_map[i]) += e[i];
    out.add_term(ne, c);
  }
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  check_compatible(other);
  for (const auto& [e, c] : other.terms_) add_term(e, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  check_compatible(other);
  for (const auto& [e, c] : other.terms_) add_term(e, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, c] : terms_) c *= s;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  a.check_compatible(b);
  Polynomial out(a.num_vars_);
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) {
      std::vector<int> e(ea.size());
      for (size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

std::vector<Monomial> Polynomial::monomials() const {
  std::vector<Monomial> out;
  out.reserve(terms_.size());
  for (const auto& [e, c] : terms_) out.push_back({c, e});
  return out;
}

PolyMap::PolyMap(int num_vars, std::vector<Polynomial> components)
    : num_vars_(num_vars), components_(std::move(components)) {
  for (const auto& c : components_) {
    if (c.num_vars() != num_vars_) throw DimensionError("PolyMap component variable count mismatch");
  }
}

PolyMap PolyMap::zero(int num_vars, int n_out) {
  return PolyMap(num_vars, std::vector<Polynomial>(n_out, Polynomial(num_vars)));
}

PolyMap PolyMap::from_terms(int num_vars,
                            const std::vector<std::vector<Monomial>>& terms) {
  std::vector<Polynomial> comps;
  comps.reserve(terms.size());
  for (const auto& t : terms) comps.emplace_back(num_vars, t);
  return PolyMap(num_vars, std::move(comps));
}

bool PolyMap::is_zero() const {
  return std::all_of(components_.begin(), components_.end(),
                     [](const Polynomial& p) { return p.is_zero(); });
}

Eigen::VectorXd PolyMap::evaluate(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  if (point.size() != num_vars_) {
    throw DimensionError("PolyMap: point has " + std::to_string(point.size()) +
                         " coordinates, expected " + std::to_string(num_vars_));
  }
  Eigen::VectorXd out(n_out());
  for (int i = 0; i < n_out(); ++i) out[i] = components_[i].evaluate(point);
  return out;
}

Eigen::MatrixXd PolyMap::jacobian(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  if (point.size() != num_vars_) throw DimensionError("PolyMap: jacobian point size mismatch");
  Eigen::MatrixXd jac(n_out(), num_vars_);
  for (int i = 0; i < n_out(); ++i) jac.row(i) = components_[i].gradient(point).transpose();
  return jac;
}

PolyMap PolyMap::substitute(const std::vector<MonomialImage>& images,
                            int new_num_vars) const {
  std::vector<Polynomial> comps;
  comps.reserve(components_.size());
  for (const auto& c : components_) comps.push_back(c.substitute(images, new_num_vars));
  return PolyMap(new_num_vars, std::move(comps));
}

ValueAndJacobian poly_eval_jacobian(const PolyMap& p,
                                    const Eigen::Ref<const Eigen::VectorXd>& point) {
  return {p.evaluate(point), p.jacobian(point)};
}

}  // namespace foldctl
