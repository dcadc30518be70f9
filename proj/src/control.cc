#include "foldctl/control.h"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "foldctl/errors.h"

namespace foldctl {
namespace {

std::string format_point(const Eigen::VectorXd& p) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

Eigen::VectorXd chart_vector(double rho, const Eigen::Ref<const Eigen::VectorXd>& chi,
                             double zeta) {
  Eigen::VectorXd p(chi.size() + 2);
  p << rho, chi, zeta;
  return p;
}

}  // namespace

BackstepGains::BackstepGains(double c_in, double k_in, Eigen::VectorXd k_rest_in)
    : c(c_in), k(k_in), k_rest(std::move(k_rest_in)) {}

void BackstepGains::validate(int n_s) const {
  if (!(c > 0.0)) throw InvariantError("gain c must be positive (got " + std::to_string(c) + ")");
  if (!(k > 0.0)) throw InvariantError("gain k must be positive (got " + std::to_string(k) + ")");
  if (k_rest.size() != n_s - 1) {
    throw InvariantError("k_rest needs n_s - 1 = " + std::to_string(n_s - 1) + " entries, got " +
                         std::to_string(k_rest.size()));
  }
  for (Eigen::Index j = 0; j < k_rest.size(); ++j) {
    if (!(k_rest[j] > 0.0)) throw InvariantError("k_rest entries must be positive");
  }
}

std::string to_string(ControlMode mode) {
  return mode == ControlMode::kExact ? "exact" : "nominal";
}

ControlMode control_mode_from_string(const std::string& name) {
  if (name == "exact") return ControlMode::kExact;
  if (name == "nominal") return ControlMode::kNominal;
  throw InvariantError("unknown control mode '" + name + "'");
}

Eigen::MatrixXd right_inverse(const Eigen::MatrixXd& B, const Eigen::VectorXd& where) {
  if (B.rows() > B.cols()) {
    throw RankError("input matrix has more rows than columns at " + format_point(where), where);
  }
  if (B.rows() == B.cols()) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (!lu.isInvertible()) {
      throw RankError("input matrix is singular at " + format_point(where), where);
    }
    return lu.inverse();
  }
  const Eigen::MatrixXd gram = B * B.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (!lu.isInvertible()) {
    throw RankError("input matrix loses row rank at " + format_point(where), where);
  }
  return B.transpose() * lu.inverse();
}

ChartController::ChartController(DesingularizedSystem des, BackstepGains gains,
                                 ControlMode mode)
    : des_(std::move(des)), gains_(std::move(gains)), mode_(mode) {
  gains_.validate(des_.n_s());
  nominal_inverse_ = right_inverse(des_.base().input_matrix_at_origin(),
                                   Eigen::VectorXd::Zero(des_.n_s() + 2));
}

Eigen::VectorXd ChartController::virtual_input(const Eigen::Ref<const Eigen::VectorXd>& chi,
                                               double zeta) const {
  const int n_s = des_.n_s();
  if (chi.size() != n_s) throw DimensionError("chi has wrong size");
  const double c = gains_.c;
  const double sigma = c * zeta - zeta * zeta;
  const double e = chi[0] - sigma;
  const double zeta_dot = -(zeta * zeta + chi[0]);
  Eigen::VectorXd v(n_s);
  v[0] = (c - 2.0 * zeta) * zeta_dot - gains_.k * e + zeta;
  for (int j = 1; j < n_s; ++j) v[j] = -gains_.k_rest[j - 1] * chi[j];
  return v;
}

Eigen::VectorXd ChartController::evaluate(double rho,
                                          const Eigen::Ref<const Eigen::VectorXd>& chi,
                                          double zeta) const {
  const Eigen::VectorXd v = virtual_input(chi, zeta);
  if (mode_ == ControlMode::kNominal) {
    return nominal_inverse_ * (v - des_.base().A());
  }
  const Eigen::MatrixXd Bbar = des_.input_matrix(rho, chi, zeta);
  return right_inverse(Bbar, chart_vector(rho, chi, zeta)) * (v - des_.drift(rho, chi, zeta));
}

ChartController synthesize_injection(const DesingularizedSystem& des,
                                     const BackstepGains& gains, ControlMode mode,
                                     std::span<const ChartPoint> rank_domain) {
  ChartController ctrl(des, gains, mode);
  if (mode == ControlMode::kExact) {
    for (const auto& p : rank_domain) {
      if (p.coords.size() != des.n_s() + 1) throw DimensionError("rank domain point has wrong size");
      const Eigen::VectorXd chi = p.coords.head(des.n_s());
      const double zeta = p.coords[des.n_s()];
      right_inverse(des.input_matrix(p.r, chi, zeta), chart_vector(p.r, chi, zeta));
    }
  }
  return ctrl;
}

Eigen::VectorXd eval_controller(const ChartController& ctrl, double rho,
                                const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta) {
  return ctrl.evaluate(rho, chi, zeta);
}

LyapunovCertificate::LyapunovCertificate(BackstepGains gains) : gains_(std::move(gains)) {
  gains_.validate(static_cast<int>(gains_.k_rest.size()) + 1);
}

double LyapunovCertificate::error(const Eigen::Ref<const Eigen::VectorXd>& chi,
                                  double zeta) const {
  return chi[0] - (gains_.c * zeta - zeta * zeta);
}

double LyapunovCertificate::value(const Eigen::Ref<const Eigen::VectorXd>& chi,
                                  double zeta) const {
  if (chi.size() != gains_.k_rest.size() + 1) throw DimensionError("chi has wrong size");
  const double e = error(chi, zeta);
  return 0.5 * zeta * zeta + 0.5 * e * e + 0.5 * chi.tail(chi.size() - 1).squaredNorm();
}

Eigen::VectorXd LyapunovCertificate::gradient(const Eigen::Ref<const Eigen::VectorXd>& chi,
                                              double zeta) const {
  if (chi.size() != gains_.k_rest.size() + 1) throw DimensionError("chi has wrong size");
  const double e = error(chi, zeta);
  Eigen::VectorXd g(chi.size() + 1);
  g[0] = e;
  for (Eigen::Index j = 1; j < chi.size(); ++j) g[j] = chi[j];
  g[chi.size()] = zeta - e * (gains_.c - 2.0 * zeta);
  return g;
}

double LyapunovCertificate::rate_closed_form(const Eigen::Ref<const Eigen::VectorXd>& chi,
                                             double zeta) const {
  if (chi.size() != gains_.k_rest.size() + 1) throw DimensionError("chi has wrong size");
  const double e = error(chi, zeta);
  double rate = -gains_.c * zeta * zeta - gains_.k * e * e;
  for (Eigen::Index j = 1; j < chi.size(); ++j) rate -= gains_.k_rest[j - 1] * chi[j] * chi[j];
  return rate;
}

double LyapunovCertificate::original_value(double eps,
                                           const Eigen::Ref<const Eigen::VectorXd>& x,
                                           double z) const {
  const ChartPoint p = blow_down_point(ChartId::kEpsBar, Weights::fold(x.size()), x, z, eps);
  return value(p.coords.head(x.size()), p.coords[x.size()]);
}

double lyapunov_value(const LyapunovCertificate& cert,
                      const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta) {
  return cert.value(chi, zeta);
}

double lyapunov_rate_closed_form(const LyapunovCertificate& cert,
                                 const Eigen::Ref<const Eigen::VectorXd>& chi, double zeta) {
  return cert.rate_closed_form(chi, zeta);
}

double lyapunov_rate_numeric(const LyapunovCertificate& cert, const ChartController& ctrl,
                             double rho, const Eigen::Ref<const Eigen::VectorXd>& chi,
                             double zeta) {
  const Eigen::VectorXd u = ctrl.evaluate(rho, chi, zeta);
  const auto v = ctrl.system().evaluate(rho, chi, zeta, u);
  const Eigen::VectorXd grad = cert.gradient(chi, zeta);
  return grad.head(chi.size()).dot(v.chi_dot) + grad[chi.size()] * v.zeta_dot;
}

OriginalController::OriginalController(ChartController chart, double eps)
    : chart_(std::move(chart)), eps_(eps) {
  if (!(eps > 0.0)) throw DomainError("blow-down of a controller needs eps > 0");
  rho_ = std::cbrt(eps);
}

ChartPoint OriginalController::to_chart(const Eigen::Ref<const Eigen::VectorXd>& x,
                                        double z) const {
  return blow_down_point(ChartId::kEpsBar, Weights::fold(chart_.system().n_s()), x, z, eps_);
}

Eigen::VectorXd OriginalController::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x,
                                             double z) const {
  const ChartPoint p = to_chart(x, z);
  const int n_s = chart_.system().n_s();
  return chart_.evaluate(p.r, p.coords.head(n_s), p.coords[n_s]);
}

double OriginalController::lyapunov(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    double z) const {
  return certificate().original_value(eps_, x, z);
}

OriginalController blow_down_controller(const ChartController& ctrl, double eps) {
  return OriginalController(ctrl, eps);
}

double solve_critical_root(const GenericSFS& sys, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& u, double seed) {
  const Polynomial& g = sys.g[0];
  const Polynomial gz = g.derivative(sys.n_s);
  Eigen::VectorXd p = sys.pack(x, seed, 0.0, u);
  double& z = p[sys.n_s];
  for (int it = 0; it < 200; ++it) {
    const double value = g.evaluate(p);
    if (value == 0.0) break;
    const double slope = gz.evaluate(p);
    if (slope == 0.0) break;
    const double step = value / slope;
    z -= step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
  }
  return z;
}

CompositeController::CompositeController(GenericSFS sys, Eigen::VectorXd x_star,
                                         Eigen::VectorXd u_star, Eigen::MatrixXd K,
                                         Eigen::VectorXd fast_gain, double z_seed,
                                         std::vector<BranchSample> samples)
    : sys_(std::move(sys)),
      x_star_(std::move(x_star)),
      u_star_(std::move(u_star)),
      K_(std::move(K)),
      fast_gain_(std::move(fast_gain)),
      z_seed_(z_seed),
      samples_(std::move(samples)) {}

Eigen::VectorXd CompositeController::slow(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return u_star_ + K_ * (x - x_star_);
}

double CompositeController::critical_root(const Eigen::Ref<const Eigen::VectorXd>& x,
                                          const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return solve_critical_root(sys_, x, u, z_seed_);
}

Eigen::VectorXd CompositeController::fast(const Eigen::Ref<const Eigen::VectorXd>& x,
                                          double z) const {
  const Eigen::VectorXd us = slow(x);
  return -fast_gain_ * (z - critical_root(x, us));
}

Eigen::VectorXd CompositeController::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x,
                                              double z) const {
  return slow(x) + fast(x, z);
}

CompositeController composite_baseline(const GenericSFS& sys, const CriticalBranch& branch,
                                       const CompositeGains& gains) {
  const int n_s = sys.n_s;
  const int m = sys.m;
  if (branch.x_start.size() != n_s || branch.x_end.size() != n_s) {
    throw DimensionError("branch endpoints must have n_s entries");
  }
  if (branch.samples < 2) throw InvariantError("branch needs at least two samples");
  if (!(gains.reduced_rate > 0.0)) throw InvariantError("reduced_rate must be positive");
  Eigen::VectorXd fast_gain = gains.fast_gain.size() ? gains.fast_gain : Eigen::VectorXd::Zero(m);
  if (fast_gain.size() != m) throw DimensionError("fast_gain must have m entries");
  const Eigen::VectorXd x_star = branch.operating_point.size()
                                     ? branch.operating_point
                                     : Eigen::VectorXd(0.5 * (branch.x_start + branch.x_end));
  if (x_star.size() != n_s) throw DimensionError("operating point must have n_s entries");

  auto hyperbolic = [&](const Eigen::VectorXd& x, double z, const Eigen::VectorXd& u) {
    const CriticalClassification c = classify_critical_point(sys, x, z, u, gains.tol);
    if (c.kind != CriticalKind::kHyperbolicAttracting &&
        c.kind != CriticalKind::kHyperbolicRepelling) {
      std::ostringstream os;
      os << "critical manifold is not normally hyperbolic at x = " << format_point(x)
         << ", z = " << z << " (" << to_string(c.kind) << ", dg/dz = " << c.eigenvalue << ")";
      throw BranchError(os.str(), x, z);
    }
    return c;
  };

  // Equilibrium input of the reduced flow xdot = f(x, h(x, u), 0, u) at x*.
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
  double z = branch.z_seed;
  Eigen::MatrixXd reduced_fx, reduced_fu;
  for (int it = 0; it < 50; ++it) {
    z = solve_critical_root(sys, x_star, u, z);
    const CriticalClassification c = hyperbolic(x_star, z, u);
    const Eigen::VectorXd p = sys.pack(x_star, z, 0.0, u);
    const ValueAndJacobian f = poly_eval_jacobian(sys.f, p);
    const Eigen::RowVectorXd gj = sys.g.jacobian(p).row(0);
    const double gz = c.eigenvalue;
    const Eigen::RowVectorXd hx = -gj.head(n_s) / gz;
    const Eigen::RowVectorXd hu = -gj.tail(m) / gz;
    reduced_fx = f.jacobian.leftCols(n_s) + f.jacobian.col(n_s) * hx;
    reduced_fu = f.jacobian.rightCols(m) + f.jacobian.col(n_s) * hu;
    const Eigen::VectorXd step = right_inverse(reduced_fu, p) * f.value;
    u -= step;
    if (step.norm() <= 1e-14 * std::max(1.0, u.norm())) break;
  }
  const Eigen::MatrixXd target =
      -gains.reduced_rate * Eigen::MatrixXd::Identity(n_s, n_s) - reduced_fx;
  const Eigen::MatrixXd K =
      right_inverse(reduced_fu, sys.pack(x_star, z, 0.0, u)) * target;

  std::vector<BranchSample> samples;
  samples.reserve(branch.samples);
  double seed = branch.z_seed;
  for (int i = 0; i < branch.samples; ++i) {
    const double t = static_cast<double>(i) / (branch.samples - 1);
    const Eigen::VectorXd x = (1.0 - t) * branch.x_start + t * branch.x_end;
    const Eigen::VectorXd us = u + K * (x - x_star);
    seed = solve_critical_root(sys, x, us, seed);
    samples.push_back({x, seed, hyperbolic(x, seed, us)});
  }
  return CompositeController(sys, x_star, u, K, fast_gain, branch.z_seed, std::move(samples));
}

}  // namespace foldctl
