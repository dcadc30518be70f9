#include "foldctl/blowup.h"

#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "foldctl/errors.h"

namespace foldctl {
namespace {

// v^(1/n) for v > 0.
double root(double v, int n) {
  switch (n) {
    case 1: return v;
    case 2: return std::sqrt(v);
    case 3: return std::cbrt(v);
    default: return std::pow(v, 1.0 / n);
  }
}

void check_chart_point(ChartId chart, const Weights& w, const ChartPoint& p) {
  if (p.coords.size() != w.n_s() + 1) {
    throw DimensionError("chart point has " + std::to_string(p.coords.size()) +
                         " coordinates, expected " + std::to_string(w.n_s() + 1));
  }
  if (!(p.r >= 0.0)) throw DomainError("chart radius must be non-negative");
  const Eigen::VectorXd s = sphere_coordinates(chart, p);
  if (s[w.n_s() + 1] < 0.0) {
    throw DomainError("eps-coordinate of " + to_string(chart) + " must be non-negative");
  }
}

// Position in the free-coordinate list of sphere index `i`, or -1 if fixed.
int free_position(int i, int fixed) {
  if (i == fixed) return -1;
  return i < fixed ? i : i - 1;
}

}  // namespace

Weights Weights::fold(int n_s) {
  if (n_s < 1) throw DimensionError("n_s must be at least 1");
  return Weights{std::vector<int>(n_s, 2), 1, 3, 1};
}

int Weights::weight(int var) const {
  if (var < n_s()) return alpha.at(var);
  if (var == n_s()) return beta;
  if (var == n_s() + 1) return gamma;
  throw DimensionError("weight index out of range");
}

void Weights::validate() const {
  if (alpha.empty()) throw InvariantError("weights need at least one slow variable");
  for (int a : alpha) {
    if (a < 1) throw InvariantError("alpha weights must be positive");
  }
  if (beta < 1 || gamma < 1) throw InvariantError("beta and gamma must be positive");
  if (m < 0) throw InvariantError("desingularization exponent must be non-negative");
}

std::string to_string(ChartId chart) {
  switch (chart) {
    case ChartId::kEpsBar: return "eps-bar";
    case ChartId::kPlusX1: return "+x1";
    case ChartId::kMinusX1: return "-x1";
    case ChartId::kPlusZ: return "+z";
    case ChartId::kMinusZ: return "-z";
  }
  return "unknown";
}

ChartId chart_from_string(const std::string& name) {
  for (ChartId c : {ChartId::kEpsBar, ChartId::kPlusX1, ChartId::kMinusX1, ChartId::kPlusZ,
                    ChartId::kMinusZ}) {
    if (to_string(c) == name) return c;
  }
  throw InvariantError("unknown chart '" + name + "'");
}

int fixed_index(ChartId chart, int n_s) {
  switch (chart) {
    case ChartId::kEpsBar: return n_s + 1;
    case ChartId::kPlusX1:
    case ChartId::kMinusX1: return 0;
    case ChartId::kPlusZ:
    case ChartId::kMinusZ: return n_s;
  }
  return -1;
}

double fixed_sign(ChartId chart) {
  return (chart == ChartId::kMinusX1 || chart == ChartId::kMinusZ) ? -1.0 : 1.0;
}

Eigen::VectorXd OriginalPoint::packed() const {
  Eigen::VectorXd p(x.size() + 2);
  p << x, z, eps;
  return p;
}

Eigen::VectorXd ChartVelocity::packed() const {
  Eigen::VectorXd v(coords_dot.size() + 1);
  v << r_dot, coords_dot;
  return v;
}

Eigen::VectorXd sphere_coordinates(ChartId chart, const ChartPoint& p) {
  const int n = static_cast<int>(p.coords.size()) + 1;
  const int n_s = n - 2;
  if (n_s < 1) throw DimensionError("chart point needs at least two coordinates");
  const int j = fixed_index(chart, n_s);
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) {
    const int pos = free_position(i, j);
    s[i] = pos < 0 ? fixed_sign(chart) : p.coords[pos];
  }
  return s;
}

OriginalPoint blow_up_point(ChartId chart, const Weights& w, const ChartPoint& p) {
  w.validate();
  check_chart_point(chart, w, p);
  const int n_s = w.n_s();
  const Eigen::VectorXd s = sphere_coordinates(chart, p);
  OriginalPoint q;
  q.x.resize(n_s);
  for (int i = 0; i < n_s; ++i) q.x[i] = ipow(p.r, w.alpha[i]) * s[i];
  q.z = ipow(p.r, w.beta) * s[n_s];
  q.eps = ipow(p.r, w.gamma) * s[n_s + 1];
  return q;
}

ChartPoint blow_down_point(ChartId chart, const Weights& w,
                           const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                           double eps) {
  w.validate();
  const int n_s = w.n_s();
  if (x.size() != n_s) throw DimensionError("blow_down_point: x has wrong size");
  if (eps < 0.0) throw DomainError("blow_down_point: eps must be non-negative");
  Eigen::VectorXd q(n_s + 2);
  q << x, z, eps;
  const int j = fixed_index(chart, n_s);
  const double sigma = fixed_sign(chart);
  if (!(sigma * q[j] > 0.0)) {
    throw DomainError("blow_down_point: point outside chart " + to_string(chart) +
                      " (fixed coordinate has value " + std::to_string(q[j]) + ")");
  }
  ChartPoint p;
  p.r = root(sigma * q[j], w.weight(j));
  p.coords.resize(n_s + 1);
  for (int i = 0; i < n_s + 2; ++i) {
    const int pos = free_position(i, j);
    if (pos >= 0) p.coords[pos] = q[i] / ipow(p.r, w.weight(i));
  }
  return p;
}

ChartPoint chart_transition(ChartId from, ChartId to, const Weights& w,
                            const ChartPoint& p) {
  w.validate();
  check_chart_point(from, w, p);
  const int n_s = w.n_s();
  const Eigen::VectorXd s = sphere_coordinates(from, p);
  const int j = fixed_index(to, n_s);
  const double sigma = fixed_sign(to);
  if (!(sigma * s[j] > 0.0)) {
    throw DomainError("chart_transition: point not in the overlap of " + to_string(from) +
                      " and " + to_string(to));
  }
  // Rescale along the weighted orbit so that the target coordinate becomes +-1.
  const double lambda = root(sigma * s[j], w.weight(j));
  ChartPoint out;
  out.r = p.r * lambda;
  out.coords.resize(n_s + 1);
  for (int i = 0; i < n_s + 2; ++i) {
    const int pos = free_position(i, j);
    if (pos >= 0) out.coords[pos] = s[i] / ipow(lambda, w.weight(i));
  }
  return out;
}

Eigen::MatrixXd blow_up_jacobian(ChartId chart, const Weights& w, const ChartPoint& p) {
  w.validate();
  check_chart_point(chart, w, p);
  const int n = w.n_s() + 2;
  const int j = fixed_index(chart, w.n_s());
  const Eigen::VectorXd s = sphere_coordinates(chart, p);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int wi = w.weight(i);
    J(i, 0) = wi * ipow(p.r, wi - 1) * s[i];
    const int pos = free_position(i, j);
    if (pos >= 0) J(i, pos + 1) = ipow(p.r, wi);
  }
  return J;
}

int quasi_degree(const Polynomial& p, const Weights& w) {
  if (p.num_vars() != w.n_s() + 2) throw DimensionError("quasi_degree: variable count mismatch");
  if (p.is_zero()) throw InvariantError("quasi_degree of the zero polynomial is undefined");
  int best = std::numeric_limits<int>::max();
  for (const auto& [e, c] : p.terms()) {
    int d = 0;
    for (int i = 0; i < p.num_vars(); ++i) d += w.weight(i) * e[i];
    best = std::min(best, d);
  }
  return best;
}

int quasi_degree(const PolyMap& p, const Weights& w) {
  if (p.is_zero()) throw InvariantError("quasi_degree of the zero map is undefined");
  int best = std::numeric_limits<int>::max();
  for (const auto& c : p.components()) {
    if (!c.is_zero()) best = std::min(best, quasi_degree(c, w));
  }
  return best;
}

std::vector<MonomialImage> chart_substitution(ChartId chart, const Weights& w) {
  w.validate();
  const int n = w.n_s() + 2;
  const int j = fixed_index(chart, w.n_s());
  std::vector<MonomialImage> images(n);
  for (int i = 0; i < n; ++i) {
    images[i].exponents.assign(n, 0);
    images[i].exponents[0] = w.weight(i);
    const int pos = free_position(i, j);
    if (pos < 0) {
      images[i].scale = fixed_sign(chart);
    } else {
      images[i].exponents[pos + 1] = 1;
    }
  }
  return images;
}

PolyMap pull_back(const PolyMap& p, ChartId chart, const Weights& w) {
  if (p.num_vars() != w.n_s() + 2) throw DimensionError("pull_back: variable count mismatch");
  return p.substitute(chart_substitution(chart, w), w.n_s() + 2);
}

PolyMap desingularize_in_chart(const PolyMap& field, ChartId chart, const Weights& w) {
  const int n = w.n_s() + 2;
  if (field.n_out() != n) throw DimensionError("desingularize_in_chart: field must have n_s+2 components");
  const PolyMap pulled = pull_back(field, chart, w);
  const int j = fixed_index(chart, w.n_s());
  const double sigma = fixed_sign(chart);

  // q_i = X_i(Phi) / r^(w_i + m); then
  //   r'   = sigma r q_j / w_j
  //   s_i' = q_i - (w_i / w_j) sigma s_i q_j
  std::vector<Polynomial> q;
  q.reserve(n);
  for (int i = 0; i < n; ++i) q.push_back(pulled[i].divide_by_power(0, w.weight(i) + w.m));

  std::vector<Polynomial> out(n, Polynomial(n));
  const double wj = w.weight(j);
  out[0] = (sigma / wj) * (Polynomial::variable(n, 0) * q[j]);
  for (int i = 0; i < n; ++i) {
    const int pos = free_position(i, j);
    if (pos < 0) continue;
    out[pos + 1] = q[i] - (sigma * w.weight(i) / wj) * (Polynomial::variable(n, pos + 1) * q[j]);
  }
  return PolyMap(n, std::move(out));
}

ChartField::ChartField(const FoldSFCS& sys, ChartId chart, const Weights& w)
    : chart_(chart), n_s_(sys.n_s()) {
  if (w.n_s() != sys.n_s()) throw DimensionError("ChartField: weights do not match n_s");
  const int n_s = sys.n_s();
  const int n = sys.num_vars();
  const Polynomial eps = Polynomial::variable(n, sys.eps_index());

  std::vector<Polynomial> drift(n, Polynomial(n));
  for (int i = 0; i < n_s; ++i) {
    Polynomial fi = Polynomial::constant(n, sys.A()[i]) + sys.F()[i];
    for (int k = 0; k < n_s; ++k) fi += sys.L1()(i, k) * Polynomial::variable(n, k);
    fi += sys.L2()[i] * Polynomial::variable(n, sys.z_index());
    drift[i] = eps * fi;
  }
  drift[sys.z_index()] = sys.fast_polynomial();
  drift_ = desingularize_in_chart(PolyMap(n, std::move(drift)), chart, w);

  for (int k = 0; k < sys.m(); ++k) {
    std::vector<Polynomial> col(n, Polynomial(n));
    for (int i = 0; i < n_s; ++i) col[i] = eps * sys.B()[i * sys.m() + k];
    columns_.push_back(desingularize_in_chart(PolyMap(n, std::move(col)), chart, w));
  }
}

ChartVelocity ChartField::evaluate(const ChartPoint& p,
                                   const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (u.size() != static_cast<Eigen::Index>(columns_.size())) {
    throw DimensionError("ChartField: u has wrong size");
  }
  Eigen::VectorXd point(n_s_ + 2);
  point << p.r, p.coords;
  Eigen::VectorXd v = drift_.evaluate(point);
  for (size_t k = 0; k < columns_.size(); ++k) v += u[k] * columns_[k].evaluate(point);
  return {v[0], v.tail(n_s_ + 1)};
}

DesingularizedSystem::DesingularizedSystem(FoldSFCS base) : base_(std::move(base)) {
  const Weights w = Weights::fold(base_.n_s());
  Bbar_ = pull_back(base_.B(), ChartId::kEpsBar, w);
  Fbar_ = pull_back(base_.F(), ChartId::kEpsBar, w);
}

Eigen::VectorXd DesingularizedSystem::pack(double rho,
                                           const Eigen::Ref<const Eigen::VectorXd>& chi,
                                           double zeta) const {
  if (chi.size() != n_s()) throw DimensionError("chi has wrong size");
  Eigen::VectorXd p(n_s() + 2);
  p << rho, chi, zeta;
  return p;
}

Eigen::MatrixXd DesingularizedSystem::input_matrix(
    double rho, const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta) const {
  const Eigen::VectorXd flat = Bbar_.evaluate(pack(rho, chi, zeta));
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(flat.data(), n_s(), m());
}

Eigen::VectorXd DesingularizedSystem::nonlinearity(
    double rho, const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta) const {
  return Fbar_.evaluate(pack(rho, chi, zeta));
}

Eigen::VectorXd DesingularizedSystem::drift(double rho,
                                            const Eigen::Ref<const Eigen::VectorXd>& chi,
                                            double zeta) const {
  return base_.A() + rho * rho * (base_.L1() * chi) + rho * zeta * base_.L2() +
         nonlinearity(rho, chi, zeta);
}

DesingularizedSystem::Velocity DesingularizedSystem::evaluate(
    double rho, const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta,
    const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (u.size() != m()) throw DimensionError("u has wrong size");
  Velocity v;
  v.rho_dot = 0.0;
  v.chi_dot = drift(rho, chi, zeta) + input_matrix(rho, chi, zeta) * u;
  v.zeta_dot = -(zeta * zeta + chi[0]);
  return v;
}

DesingularizedSystem build_central_chart_system(const FoldSFCS& sys) {
  return DesingularizedSystem(sys);
}

ChartVelocity pushforward_blown_up(const FoldSFCS& sys, ChartId chart, const Weights& w,
                                   const ChartPoint& p,
                                   const Eigen::Ref<const Eigen::VectorXd>& u) {
  if (w.n_s() != sys.n_s()) throw DimensionError("weights do not match n_s");
  if (!(p.r > 0.0)) {
    throw DomainError("numeric pushforward is singular at r = 0; use the closed form");
  }
  const OriginalPoint q = blow_up_point(chart, w, p);
  const FastTimeVelocity X = eval_fast_field(sys, q.x, q.z, q.eps, u);
  Eigen::VectorXd rhs(sys.n_s() + 2);
  rhs << X.xdot, X.zdot, 0.0;

  // Column equilibration keeps the solve well scaled for small r.
  Eigen::MatrixXd J = blow_up_jacobian(chart, w, p);
  Eigen::VectorXd scale(J.cols());
  for (Eigen::Index c = 0; c < J.cols(); ++c) {
    const double norm = J.col(c).norm();
    scale[c] = norm > 0.0 ? 1.0 / norm : 1.0;
  }
  const Eigen::VectorXd y = (J * scale.asDiagonal()).fullPivLu().solve(rhs);
  const Eigen::VectorXd v = scale.asDiagonal() * y;
  return {v[0], v.tail(sys.n_s() + 1)};
}

ChartVelocity pushforward_desingularized(const FoldSFCS& sys, ChartId chart,
                                         const Weights& w, const ChartPoint& p,
                                         const Eigen::Ref<const Eigen::VectorXd>& u,
                                         PushforwardMethod method) {
  if (method == PushforwardMethod::kNumeric) {
    ChartVelocity v = pushforward_blown_up(sys, chart, w, p, u);
    const double factor = ipow(p.r, w.m);
    v.r_dot /= factor;
    v.coords_dot /= factor;
    return v;
  }
  check_chart_point(chart, w, p);
  if (chart == ChartId::kEpsBar && w == Weights::fold(sys.n_s())) {
    const DesingularizedSystem des(sys);
    const auto v = des.evaluate(p.r, p.coords.head(sys.n_s()), p.coords[sys.n_s()], u);
    Eigen::VectorXd coords(sys.n_s() + 1);
    coords << v.chi_dot, v.zeta_dot;
    return {v.rho_dot, coords};
  }
  return ChartField(sys, chart, w).evaluate(p, u);
}

}  // namespace foldctl
