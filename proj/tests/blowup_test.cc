#include "foldctl/blowup.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "foldctl/errors.h"
#include "test_systems.h"

namespace foldctl {
namespace {

using Vec = Eigen::VectorXd;

Vec vec(std::initializer_list<double> values) {
  Vec v(values.size());
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

const Weights kFold1 = Weights::fold(1);

GTEST_TEST(BlowupTest, CentralChartMap) {
  const OriginalPoint q = blow_up_point(ChartId::kEpsBar, kFold1, {0.1, vec({1.0, 2.0})});
  EXPECT_NEAR(q.x[0], 0.01, 1e-17);
  EXPECT_NEAR(q.z, 0.2, 1e-16);
  EXPECT_NEAR(q.eps, 0.001, 1e-18);
}

GTEST_TEST(BlowupTest, ZeroRadiusCollapsesToOrigin) {
  const Weights w = Weights::fold(3);
  const OriginalPoint q = blow_up_point(ChartId::kEpsBar, w, {0.0, vec({5.0, -2.0, 7.0, 3.0})});
  EXPECT_TRUE(q.x.isZero(0.0));
  EXPECT_EQ(q.z, 0.0);
  EXPECT_EQ(q.eps, 0.0);
}

GTEST_TEST(BlowupTest, DirectionalChartMap) {
  const OriginalPoint q = blow_up_point(ChartId::kPlusX1, kFold1, {0.2, vec({1.0, 0.125})});
  EXPECT_NEAR(q.x[0], 0.04, 1e-17);
  EXPECT_NEAR(q.z, 0.2, 1e-16);
  EXPECT_NEAR(q.eps, 0.001, 1e-18);
}

GTEST_TEST(BlowupTest, InvalidChartPointsRejected) {
  EXPECT_THROW(blow_up_point(ChartId::kEpsBar, kFold1, {-0.1, vec({1.0, 2.0})}), DomainError);
  EXPECT_THROW(blow_up_point(ChartId::kPlusX1, kFold1, {0.1, vec({1.0, -0.5})}), DomainError);
  EXPECT_THROW(blow_up_point(ChartId::kEpsBar, kFold1, {0.1, vec({1.0})}), DimensionError);
}

GTEST_TEST(BlowupTest, CentralChartInverse) {
  const ChartPoint p = blow_down_point(ChartId::kEpsBar, kFold1, vec({0.01}), 0.2, 0.001);
  EXPECT_NEAR(p.r, 0.1, 1e-16);
  EXPECT_NEAR(p.coords[0], 1.0, 1e-14);
  EXPECT_NEAR(p.coords[1], 2.0, 1e-14);
  EXPECT_THROW(blow_down_point(ChartId::kEpsBar, kFold1, vec({0.01}), 0.2, 0.0), DomainError);
  EXPECT_THROW(blow_down_point(ChartId::kEpsBar, kFold1, vec({0.01}), 0.2, -1.0), DomainError);
}

GTEST_TEST(BlowupTest, DirectionalChartInverse) {
  const ChartPoint p = blow_down_point(ChartId::kPlusX1, kFold1, vec({0.04}), 0.2, 0.001);
  EXPECT_NEAR(p.r, 0.2, 1e-16);
  EXPECT_NEAR(p.coords[0], 1.0, 1e-14);
  EXPECT_NEAR(p.coords[1], 0.125, 1e-14);
  EXPECT_THROW(blow_down_point(ChartId::kPlusX1, kFold1, vec({-0.04}), 0.2, 0.001),
               DomainError);
  EXPECT_THROW(blow_down_point(ChartId::kMinusZ, kFold1, vec({0.04}), 0.2, 0.001),
               DomainError);
}

GTEST_TEST(BlowupTest, TransitionCentralToPlusX1) {
  const ChartPoint t =
      chart_transition(ChartId::kEpsBar, ChartId::kPlusX1, kFold1, {0.1, vec({4.0, 2.0})});
  EXPECT_NEAR(t.r, 0.2, 1e-15);
  EXPECT_NEAR(t.coords[0], 1.0, 1e-15);
  EXPECT_NEAR(t.coords[1], 0.125, 1e-15);
}

GTEST_TEST(BlowupTest, TransitionOnUnitSlice) {
  const ChartPoint t =
      chart_transition(ChartId::kEpsBar, ChartId::kPlusX1, kFold1, {0.3, vec({1.0, -0.7})});
  EXPECT_EQ(t.r, 0.3);
  EXPECT_EQ(t.coords[0], -0.7);
  EXPECT_EQ(t.coords[1], 1.0);
}

GTEST_TEST(BlowupTest, TransitionOutsideOverlap) {
  EXPECT_THROW(
      chart_transition(ChartId::kEpsBar, ChartId::kPlusX1, kFold1, {0.1, vec({-1.0, 2.0})}),
      DomainError);
}

GTEST_TEST(BlowupTest, TransitionAtZeroRadius) {
  const ChartPoint t =
      chart_transition(ChartId::kEpsBar, ChartId::kPlusZ, kFold1, {0.0, vec({0.5, 2.0})});
  EXPECT_EQ(t.r, 0.0);
  EXPECT_NEAR(t.coords[0], 0.125, 1e-16);
  EXPECT_NEAR(t.coords[1], 0.125, 1e-16);
}

GTEST_TEST(BlowupTest, HigherDimensionalTransitionFormula) {
  const Weights w = Weights::fold(2);
  const double rho = 0.3, chi1 = 2.0, chi2 = -1.5, zeta = 0.4;
  const ChartPoint t = chart_transition(ChartId::kEpsBar, ChartId::kPlusX1, w,
                                        {rho, vec({chi1, chi2, zeta})});
  EXPECT_NEAR(t.r, rho * std::sqrt(chi1), 1e-15);
  EXPECT_NEAR(t.coords[0], chi2 / chi1, 1e-15);
  EXPECT_NEAR(t.coords[1], zeta / std::sqrt(chi1), 1e-15);
  EXPECT_NEAR(t.coords[2], std::pow(chi1, -1.5), 1e-15);
}

GTEST_TEST(BlowupTest, RoundTripsInEveryChart) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> r(0.01, 2.0), c(-3.0, 3.0), pos(0.0, 3.0);
  for (int n_s : {1, 3}) {
    const Weights w = Weights::fold(n_s);
    for (ChartId chart : {ChartId::kEpsBar, ChartId::kPlusX1, ChartId::kMinusX1, ChartId::kPlusZ,
                          ChartId::kMinusZ}) {
      for (int i = 0; i < 1000; ++i) {
        ChartPoint p{r(rng), Vec(n_s + 1)};
        for (int j = 0; j <= n_s; ++j) p.coords[j] = c(rng);
        if (chart != ChartId::kEpsBar) p.coords[n_s] = pos(rng);
        const OriginalPoint q = blow_up_point(chart, w, p);
        const ChartPoint back = blow_down_point(chart, w, q.x, q.z, q.eps);
        Vec a(n_s + 2), b(n_s + 2);
        a << p.r, p.coords;
        b << back.r, back.coords;
        EXPECT_LE((a - b).norm(), 1e-12 * a.norm()) << to_string(chart);
        const OriginalPoint q2 = blow_up_point(chart, w, back);
        EXPECT_LE((q.packed() - q2.packed()).norm(), 1e-12 * q.packed().norm());
      }
    }
  }
}

GTEST_TEST(BlowupTest, TransitionsCommuteWithBlowUp) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> r(0.0, 2.0), c(-3.0, 3.0), pos(0.0, 3.0);
  const Weights w = Weights::fold(2);
  const ChartId charts[] = {ChartId::kEpsBar, ChartId::kPlusX1, ChartId::kMinusX1,
                            ChartId::kPlusZ, ChartId::kMinusZ};
  int checked = 0;
  for (ChartId from : charts) {
    for (ChartId to : charts) {
      if (from == to) continue;
      for (int i = 0; i < 300; ++i) {
        ChartPoint p{r(rng), Vec(3)};
        for (int j = 0; j < 3; ++j) p.coords[j] = c(rng);
        if (from != ChartId::kEpsBar) p.coords[2] = pos(rng);
        ChartPoint t;
        try {
          t = chart_transition(from, to, w, p);
        } catch (const DomainError&) {
          continue;
        }
        ++checked;
        const Vec a = blow_up_point(from, w, p).packed();
        const Vec b = blow_up_point(to, w, t).packed();
        EXPECT_LE((a - b).norm(), 1e-12 * std::max(a.norm(), 1e-300));
        const ChartPoint back = chart_transition(to, from, w, t);
        EXPECT_NEAR(back.r, p.r, 1e-12 * std::max(1.0, p.r));
        EXPECT_LE((back.coords - p.coords).norm(), 1e-12 * p.coords.norm());
      }
    }
  }
  EXPECT_GT(checked, 2000);
}

GTEST_TEST(BlowupTest, QuasiDegree) {
  const Weights w = Weights::fold(1);
  EXPECT_EQ(quasi_degree(PolyMap::from_terms(3, {{{1.0, {1, 1, 0}}}}), w), 3);
  EXPECT_EQ(quasi_degree(PolyMap::from_terms(3, {{{1.0, {0, 0, 1}}}}), w), 3);
  EXPECT_EQ(quasi_degree(PolyMap::from_terms(3, {{{1.0, {0, 0, 0}}}}), w), 0);
  EXPECT_EQ(quasi_degree(PolyMap::from_terms(3, {{{1.0, {0, 3, 0}}, {2.0, {0, 1, 0}}}}), w), 1);
  EXPECT_THROW(quasi_degree(PolyMap::zero(3, 1), w), InvariantError);
}

GTEST_TEST(BlowupTest, PullBackOfProduct) {
  // F = x1 z pulls back to rho^3 chi1 zeta.
  const FoldSFCS sys =
      test::scalar_system(1.0, 0.0, 0.0, 1.0, PolyMap::from_terms(3, {{{1.0, {1, 1, 0}}}}));
  const DesingularizedSystem des = build_central_chart_system(sys);
  const Polynomial& Fbar = des.nonlinearity_poly()[0];
  ASSERT_EQ(Fbar.terms().size(), 1u);
  EXPECT_EQ(Fbar.terms().at({3, 1, 1}), 1.0);
  EXPECT_EQ(des.nonlinearity(0.0, vec({2.0}), 3.0)[0], 0.0);
  EXPECT_NEAR(des.nonlinearity(0.5, vec({2.0}), 3.0)[0], 0.125 * 6.0, 1e-15);
}

GTEST_TEST(BlowupTest, ZeroAndConstantPullBacks) {
  const DesingularizedSystem des = build_central_chart_system(test::scalar_system(1, 0, 0, 2.5));
  EXPECT_TRUE(des.nonlinearity_poly().is_zero());
  for (double rho : {0.0, 0.3, 1.0, 5.0}) {
    EXPECT_EQ(des.input_matrix(rho, vec({1.0}), -2.0)(0, 0), 2.5);
  }
}

GTEST_TEST(BlowupTest, CentralChartAtOrigin) {
  const FoldSFCS sys = test::normal_form(1);
  const Vec u = vec({0.0});
  const ChartVelocity v = pushforward_desingularized(sys, ChartId::kEpsBar, kFold1,
                                                     {0.0, vec({0.0, 0.0})}, u,
                                                     PushforwardMethod::kClosedForm);
  EXPECT_EQ(v.r_dot, 0.0);
  EXPECT_EQ(v.coords_dot[0], 1.0);
  EXPECT_EQ(v.coords_dot[1], 0.0);
  const ChartVelocity v2 = pushforward_desingularized(sys, ChartId::kEpsBar, kFold1,
                                                      {0.0, vec({0.0, 1.0})}, u,
                                                      PushforwardMethod::kClosedForm);
  EXPECT_EQ(v2.coords_dot[1], -1.0);
}

GTEST_TEST(BlowupTest, CentralChartArithmetic) {
  const FoldSFCS sys = test::scalar_system(1.0, 2.0, 3.0, 1.0);
  const ChartPoint p{0.1, vec({1.0, 1.0})};
  for (auto method : {PushforwardMethod::kClosedForm, PushforwardMethod::kNumeric}) {
    const ChartVelocity v =
        pushforward_desingularized(sys, ChartId::kEpsBar, kFold1, p, vec({0.0}), method);
    EXPECT_NEAR(v.r_dot, 0.0, 1e-12);
    EXPECT_NEAR(v.coords_dot[0], 1.32, 1e-12);
    EXPECT_NEAR(v.coords_dot[1], -2.0, 1e-12);
  }
}

GTEST_TEST(BlowupTest, NumericPushforwardSingularAtZero) {
  const FoldSFCS sys = test::normal_form(1);
  EXPECT_THROW(pushforward_desingularized(sys, ChartId::kEpsBar, kFold1, {0.0, vec({0.0, 0.0})},
                                          vec({0.0}), PushforwardMethod::kNumeric),
               DomainError);
}

// Both pushforward paths agree in every chart for r in [1e-3, 1].
GTEST_TEST(BlowupTest, MethodAgreement) {
  const FoldSFCS sys = test::coupled_system();
  const Weights w = Weights::fold(2);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> r(1e-3, 1.0), c(-1.5, 1.5), pos(0.0, 1.5);
  for (ChartId chart : {ChartId::kEpsBar, ChartId::kPlusX1, ChartId::kMinusX1, ChartId::kPlusZ,
                        ChartId::kMinusZ}) {
    for (int i = 0; i < 300; ++i) {
      ChartPoint p{r(rng), Vec(3)};
      for (int j = 0; j < 3; ++j) p.coords[j] = c(rng);
      if (chart != ChartId::kEpsBar) p.coords[2] = pos(rng);
      const Vec u = test::random_vector(rng, 2, -1.0, 1.0);
      const Vec a =
          pushforward_desingularized(sys, chart, w, p, u, PushforwardMethod::kNumeric).packed();
      const Vec b =
          pushforward_desingularized(sys, chart, w, p, u, PushforwardMethod::kClosedForm).packed();
      EXPECT_LE((a - b).lpNorm<Eigen::Infinity>(), 1e-9 * std::max(1.0, b.lpNorm<Eigen::Infinity>()))
          << to_string(chart) << " r = " << p.r;
    }
  }
}

GTEST_TEST(BlowupTest, DesingularizationFactor) {
  const FoldSFCS sys = test::coupled_system();
  const Weights w = Weights::fold(2);
  const DesingularizedSystem des(sys);
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> r(1e-3, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const ChartPoint p{i == 0 ? 1.0 : r(rng), test::random_vector(rng, 3, -1.0, 1.0)};
    const Vec u = test::random_vector(rng, 2, -1.0, 1.0);
    const Vec blown = pushforward_blown_up(sys, ChartId::kEpsBar, w, p, u).packed();
    const auto v = des.evaluate(p.r, p.coords.head(2), p.coords[2], u);
    Vec closed(4);
    closed << v.rho_dot, v.chi_dot, v.zeta_dot;
    EXPECT_LE((blown - p.r * closed).lpNorm<Eigen::Infinity>(), 1e-9);
  }
}

GTEST_TEST(BlowupTest, RhoComponentVanishes) {
  const FoldSFCS sys = test::coupled_system();
  const DesingularizedSystem des(sys);
  std::mt19937_64 rng(41);
  for (int i = 0; i < 200; ++i) {
    const Vec s = test::random_vector(rng, 5, -2.0, 2.0);
    const auto v = des.evaluate(std::abs(s[0]), s.segment(1, 2), s[3], test::random_vector(rng, 2, -1, 1));
    EXPECT_EQ(v.rho_dot, 0.0);
    EXPECT_EQ(v.zeta_dot, -(s[3] * s[3] + s[1]));
  }
}

GTEST_TEST(BlowupTest, NonlinearityVanishesOnTheSphere) {
  const DesingularizedSystem des(test::coupled_system());
  std::mt19937_64 rng(43);
  for (int i = 0; i < 200; ++i) {
    const Vec s = test::random_vector(rng, 3, -10.0, 10.0);
    EXPECT_TRUE(des.nonlinearity(0.0, s.head(2), s[2]).isZero(0.0));
  }
}

GTEST_TEST(BlowupTest, ChartFieldMatchesDesingularizedSystem) {
  const FoldSFCS sys = test::coupled_system();
  const Weights w = Weights::fold(2);
  const ChartField field(sys, ChartId::kEpsBar, w);
  const DesingularizedSystem des(sys);
  std::mt19937_64 rng(47);
  for (int i = 0; i < 200; ++i) {
    const ChartPoint p{std::abs(test::random_vector(rng, 1, -1, 1)[0]),
                       test::random_vector(rng, 3, -2.0, 2.0)};
    const Vec u = test::random_vector(rng, 2, -1.0, 1.0);
    const auto v = des.evaluate(p.r, p.coords.head(2), p.coords[2], u);
    Vec closed(4);
    closed << v.rho_dot, v.chi_dot, v.zeta_dot;
    EXPECT_LE((field.evaluate(p, u).packed() - closed).lpNorm<Eigen::Infinity>(), 1e-12);
  }
}

GTEST_TEST(BlowupTest, DesingularizeRejectsNonDivisibleField) {
  // A constant field in x1 is not divisible by r after blow-up with m = 3.
  const Weights w{{2}, 1, 3, 3};
  const PolyMap field(3, {Polynomial::constant(3, 1.0), Polynomial(3), Polynomial(3)});
  EXPECT_THROW(desingularize_in_chart(field, ChartId::kEpsBar, w), InvariantError);
}

GTEST_TEST(BlowupTest, WeightsValidate) {
  EXPECT_NO_THROW(Weights::fold(4).validate());
  EXPECT_THROW((Weights{{}, 1, 3, 1}).validate(), InvariantError);
  EXPECT_THROW((Weights{{0}, 1, 3, 1}).validate(), InvariantError);
  EXPECT_EQ(chart_from_string(to_string(ChartId::kMinusZ)), ChartId::kMinusZ);
  EXPECT_THROW(chart_from_string("nowhere"), InvariantError);
}

}  // namespace
}  // namespace foldctl
