#include "foldctl/verify.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "foldctl/errors.h"
#include "foldctl/sim.h"

namespace foldctl {
namespace {

Eigen::VectorXd packed(const ChartPoint& p) {
  Eigen::VectorXd v(p.coords.size() + 1);
  v << p.r, p.coords;
  return v;
}

double relative_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(a.norm(), 1e-300);
}

// Tracks the worst residual and its witness.
struct Worst {
  double residual{0.0};
  std::optional<Eigen::VectorXd> witness;

  void update(double r, const Eigen::VectorXd& where) {
    if (!witness || r > residual || std::isnan(r)) {
      residual = std::isnan(r) ? std::numeric_limits<double>::infinity() : r;
      witness = where;
    }
  }
};

CheckReport finish(std::string name, const Worst& worst, double tol, std::uint64_t seed,
                   std::size_t samples, std::size_t skipped, bool extra_ok = true,
                   std::string note = {}) {
  CheckReport r;
  r.name = std::move(name);
  r.worst_residual = worst.residual;
  r.tolerance = tol;
  r.seed = seed;
  r.samples = samples;
  r.skipped = skipped;
  r.passed = extra_ok && worst.residual <= tol;
  r.witness = worst.witness;
  r.note = std::move(note);
  return r;
}

ChartPoint random_chart_point(ChartId chart, int n_s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> radius(0.01, 1.5);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  std::uniform_real_distribution<double> positive(0.0, 2.0);
  ChartPoint p;
  p.r = radius(rng);
  p.coords.resize(n_s + 1);
  for (int i = 0; i < n_s + 1; ++i) p.coords[i] = coord(rng);
  // The eps-coordinate of a directional chart is the last free coordinate.
  if (chart != ChartId::kEpsBar) p.coords[n_s] = positive(rng);
  return p;
}

}  // namespace

CheckReport verify_flow_conjugacy(const FoldSFCS& sys, const ChartPoint& p,
                                  const FlowConjugacyOptions& opts) {
  const int n_s = sys.n_s();
  if (p.coords.size() != n_s + 1) throw DimensionError("chart point has wrong size");
  if (!(p.r > 0.0)) throw DomainError("flow conjugacy needs rho > 0");
  const double rho = p.r;
  const double eps = rho * rho * rho;
  const Weights w = Weights::fold(n_s);
  const DesingularizedSystem des(sys);

  std::optional<OriginalController> original_ctrl;
  if (opts.controller) original_ctrl = blow_down_controller(*opts.controller, eps);
  const OriginalPlant original(sys, original_ctrl);
  const ChartPlant chart(des, opts.controller);

  IntegratorConfig fast;
  fast.step = opts.step;
  fast.horizon = opts.horizon;
  fast.escape_radius.reset();
  IntegratorConfig slow = fast;
  if (opts.rescale == TimeRescale::kDesingularized) {
    slow.step *= rho;
    slow.horizon *= rho;
  }

  const OriginalPoint q0 = blow_up_point(ChartId::kEpsBar, w, p);
  Eigen::VectorXd chart_ic(n_s + 2);
  chart_ic << p.r, p.coords;
  const Trajectory a = integrate(original, q0.packed(), fast);
  const Trajectory b = integrate(chart, chart_ic, slow);

  Worst worst;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t k = 0; k < n; ++k) {
    const ChartPoint pk{b.states[k][0], b.states[k].tail(n_s + 1)};
    const Eigen::VectorXd mapped = blow_up_point(ChartId::kEpsBar, w, pk).packed();
    Eigen::VectorXd where(n_s + 2);
    where << a.times[k], a.states[k].head(n_s + 1);
    worst.update((mapped - a.states[k]).lpNorm<Eigen::Infinity>(), where);
  }
  std::string note = opts.rescale == TimeRescale::kIdentity ? "time rescale s = tau" : "";
  return finish("flow_conjugacy", worst, opts.tol, 0, n, 0, a.size() == b.size(), note);
}

std::vector<ChartPoint> annulus_grid(int n_s, std::size_t count, double r_min, double r_max,
                                     double rho_max, std::uint64_t seed) {
  if (!(r_min > 0.0) || !(r_max >= r_min) || !(rho_max >= 0.0)) {
    throw InvariantError("invalid annulus bounds");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ChartPoint> grid;
  grid.reserve(count);
  const double log_lo = std::log(r_min);
  const double log_hi = std::log(r_max);
  while (grid.size() < count) {
    Eigen::VectorXd d(n_s + 1);
    for (int i = 0; i < n_s + 1; ++i) d[i] = normal(rng);
    const double n = d.norm();
    if (n == 0.0) continue;
    const double radius = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
    grid.push_back({rho_max * unit(rng), d * (radius / n)});
  }
  return grid;
}

CheckReport verify_lyapunov_grid(const ChartController& ctrl, const LyapunovCertificate& cert,
                                 std::span<const ChartPoint> grid, double tol) {
  if (ctrl.mode() != ControlMode::kExact) {
    throw InvariantError("the closed-form Lyapunov rate needs an exact-mode controller");
  }
  const int n_s = ctrl.system().n_s();
  Worst worst;
  std::optional<Eigen::VectorXd> positive_rate;
  std::size_t boundary = 0;
  for (const auto& p : grid) {
    const Eigen::VectorXd chi = p.coords.head(n_s);
    const double zeta = p.coords[n_s];
    const double numeric = lyapunov_rate_numeric(cert, ctrl, p.r, chi, zeta);
    const double closed = cert.rate_closed_form(chi, zeta);
    worst.update(std::abs(numeric - closed), packed(p));
    if (p.coords.isZero(0.0)) {
      ++boundary;
    } else if (!(numeric < 0.0) && !positive_rate) {
      positive_rate = packed(p);
    }
  }
  CheckReport r = finish("lyapunov_grid", worst, tol, 0, grid.size(), 0, !positive_rate,
                         boundary ? std::to_string(boundary) + " origin point(s), Wdot = 0" : "");
  if (positive_rate) {
    r.witness = positive_rate;
    r.note = "Wdot >= 0 at witness";
  }
  return r;
}

CheckReport verify_chart_roundtrips(const Weights& w, std::span<const ChartId> charts,
                                    std::size_t n_samples, double tol, std::uint64_t seed) {
  w.validate();
  const int n_s = w.n_s();
  std::mt19937_64 rng(seed);
  Worst worst;
  std::size_t samples = 0;
  std::size_t skipped = 0;

  for (ChartId chart : charts) {
    for (std::size_t i = 0; i < n_samples; ++i) {
      // chart -> original -> chart
      const ChartPoint p = random_chart_point(chart, n_s, rng);
      const OriginalPoint q = blow_up_point(chart, w, p);
      const ChartPoint back = blow_down_point(chart, w, q.x, q.z, q.eps);
      worst.update(relative_gap(packed(p), packed(back)), packed(p));

      // original -> chart -> original
      const ChartPoint p2 = random_chart_point(chart, n_s, rng);
      const OriginalPoint q2 = blow_up_point(chart, w, p2);
      const ChartPoint down = blow_down_point(chart, w, q2.x, q2.z, q2.eps);
      worst.update(relative_gap(q2.packed(), blow_up_point(chart, w, down).packed()), q2.packed());
      samples += 2;
    }
  }

  for (ChartId from : charts) {
    for (ChartId to : charts) {
      if (from == to) continue;
      for (std::size_t i = 0; i < n_samples; ++i) {
        const ChartPoint p = random_chart_point(from, n_s, rng);
        ChartPoint t;
        try {
          t = chart_transition(from, to, w, p);
        } catch (const DomainError&) {
          ++skipped;
          continue;
        }
        const Eigen::VectorXd direct = blow_up_point(from, w, p).packed();
        const Eigen::VectorXd via = blow_up_point(to, w, t).packed();
        worst.update(relative_gap(direct, via), packed(p));
        const ChartPoint back = chart_transition(to, from, w, t);
        worst.update(relative_gap(packed(p), packed(back)), packed(p));
        ++samples;
      }
    }
  }
  return finish("chart_roundtrips", worst, tol, seed, samples, skipped);
}

CheckReport verify_desingularization_factor(const FoldSFCS& sys, const Weights& w,
                                            std::size_t n_samples, double tol,
                                            std::uint64_t seed) {
  const int n_s = sys.n_s();
  const Weights fold = Weights::fold(n_s);
  if (w.alpha != fold.alpha || w.beta != fold.beta || w.gamma != fold.gamma) {
    throw InvariantError("desingularization factor check uses the fold weights (2, 1, 3)");
  }
  const DesingularizedSystem des(sys);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(1e-3, 1.0);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  Worst worst;
  for (std::size_t i = 0; i < n_samples; ++i) {
    ChartPoint p;
    p.r = i == 0 ? 1e-3 : (i == 1 ? 1.0 : radius(rng));
    p.coords.resize(n_s + 1);
    for (int j = 0; j < n_s + 1; ++j) p.coords[j] = coord(rng);
    Eigen::VectorXd u(sys.m());
    for (int j = 0; j < sys.m(); ++j) u[j] = coord(rng);

    const ChartVelocity blown = pushforward_blown_up(sys, ChartId::kEpsBar, w, p, u);
    const auto v = des.evaluate(p.r, p.coords.head(n_s), p.coords[n_s], u);
    Eigen::VectorXd closed(n_s + 2);
    closed << v.rho_dot, v.chi_dot, v.zeta_dot;
    const double factor = ipow(p.r, w.m);
    worst.update((blown.packed() - factor * closed).lpNorm<Eigen::Infinity>(), packed(p));
  }
  return finish("desingularization_factor", worst, tol, seed, n_samples, 0, true,
                "m = " + std::to_string(w.m));
}

CheckReport verify_quasi_degree_vanishing(int n_s, std::size_t n_instances,
                                          std::uint64_t seed) {
  const Weights w = Weights::fold(n_s);
  const int nv = n_s + 2;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_terms(1, 4);
  std::uniform_int_distribution<int> exponent(0, 2);
  std::uniform_real_distribution<double> magnitude(0.5, 2.0);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  Worst worst;
  std::size_t with_constant = 0;
  for (std::size_t i = 0; i < n_instances; ++i) {
    const bool force_constant = coin(rng);
    std::vector<Polynomial> comps;
    for (int c = 0; c < n_s; ++c) {
      std::vector<Monomial> terms;
      const int count = n_terms(rng);
      for (int t = 0; t < count; ++t) {
        Monomial mono{(coin(rng) ? 1.0 : -1.0) * magnitude(rng), std::vector<int>(nv)};
        int total = 0;
        for (int v = 0; v < nv; ++v) total += mono.exponents[v] = exponent(rng);
        if (total == 0) mono.exponents[nv - 1] = 1;
        terms.push_back(mono);
      }
      if (force_constant && c == 0) terms.push_back({magnitude(rng), std::vector<int>(nv, 0)});
      comps.emplace_back(nv, terms);
    }
    const PolyMap F(nv, std::move(comps));
    if (F.is_zero()) continue;
    const bool degree_ok = quasi_degree(F, w) >= 1;
    with_constant += degree_ok ? 0 : 1;

    const PolyMap Fbar = pull_back(F, ChartId::kEpsBar, w);
    double largest = 0.0;
    for (int s = 0; s < 5; ++s) {
      Eigen::VectorXd point(nv);
      point[0] = 0.0;
      for (int v = 1; v < nv; ++v) point[v] = 2.0 * coord(rng);
      largest = std::max(largest, Fbar.evaluate(point).lpNorm<Eigen::Infinity>());
    }
    const bool vanishes = largest == 0.0;
    Eigen::VectorXd where(2);
    where << static_cast<double>(i), largest;
    worst.update(degree_ok == vanishes ? 0.0 : 1.0, where);
  }
  return finish("quasi_degree_vanishing", worst, 0.0, seed, n_instances, 0, true,
                std::to_string(with_constant) + " instance(s) with a constant term");
}

}  // namespace foldctl
