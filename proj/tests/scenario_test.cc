#include "foldctl/scenario.h"

#include <gtest/gtest.h>

namespace foldctl {
namespace {

const char* kMinimal = R"({
  "system": {"n_s": 1, "m": 1, "A": [1], "B": [[1]], "F": []}
})";

ScenarioError::Kind failure_kind(const std::string& text) {
  try {
    parse_scenario_string(text);
  } catch (const ScenarioError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "scenario unexpectedly loaded";
  return ScenarioError::Kind::kMissingFile;
}

std::string failure_message(const std::string& text) {
  try {
    parse_scenario_string(text);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

GTEST_TEST(ScenarioTest, MinimalLoads) {
  const Scenario s = parse_scenario_string(kMinimal);
  EXPECT_EQ(s.system.n_s(), 1);
  EXPECT_EQ(s.system.m(), 1);
  EXPECT_EQ(s.system.A()[0], 1.0);
  EXPECT_TRUE(s.system.F().is_zero());
  EXPECT_FALSE(s.gains.has_value());
  EXPECT_TRUE(s.eps.empty());
  EXPECT_TRUE(s.initial_conditions.empty());
  EXPECT_EQ(s.simulation.sweep.integrator.method, IntegrationMethod::kRkf45);
  EXPECT_EQ(s.simulation.sweep.integrator.rtol, 1e-9);
  EXPECT_EQ(s.simulation.sweep.integrator.atol, 1e-9);
  EXPECT_EQ(*s.simulation.sweep.integrator.escape_radius, 1e3);
}

GTEST_TEST(ScenarioTest, ConstantTermInF) {
  const std::string text = R"({
    "system": {"n_s": 1, "m": 1, "A": [1], "B": [[1]],
               "F": [[{"coeff": 0.5, "exponents": [0, 0, 0]}]]}
  })";
  EXPECT_EQ(failure_kind(text), ScenarioError::Kind::kInvariant);
  const std::string msg = failure_message(text);
  EXPECT_NE(msg.find("quasi_degree 0"), std::string::npos) << msg;
  EXPECT_EQ(msg.rfind("/system", 0), 0u) << msg;
}

GTEST_TEST(ScenarioTest, NonPositiveGain) {
  const std::string text = R"({
    "system": {"n_s": 1, "m": 1, "A": [1], "B": [[1]]},
    "controller": {"c": 0, "k": 1}
  })";
  EXPECT_EQ(failure_kind(text), ScenarioError::Kind::kInvariant);
  EXPECT_NE(failure_message(text).find("/controller"), std::string::npos);
}

GTEST_TEST(ScenarioTest, RankDeficientB) {
  const std::string text = R"({
    "system": {"n_s": 2, "m": 2, "A": [1, 0], "B": [[1, 2], [2, 4]]}
  })";
  EXPECT_EQ(failure_kind(text), ScenarioError::Kind::kInvariant);
}

GTEST_TEST(ScenarioTest, NonPositiveEps) {
  const std::string text = R"({
    "system": {"n_s": 1, "m": 1, "A": [1], "B": [[1]]},
    "eps": [0.1, -0.01]
  })";
  EXPECT_EQ(failure_kind(text), ScenarioError::Kind::kInvariant);
  EXPECT_NE(failure_message(text).find("/eps/1"), std::string::npos);
}

GTEST_TEST(ScenarioTest, UnknownKeysRejected) {
  EXPECT_EQ(failure_kind(R"({"system": {"n_s": 1, "m": 1, "A": [1], "B": [[1]]}, "extra": 1})"),
            ScenarioError::Kind::kSchema);
  const std::string nested = R"({"system": {"n_s": 1, "m": 1, "A": [1], "B": [[1]], "G": []}})";
  EXPECT_EQ(failure_kind(nested), ScenarioError::Kind::kSchema);
  EXPECT_NE(failure_message(nested).find("/system/G"), std::string::npos);
  const std::string term = R"({"system": {"n_s": 1, "m": 1, "A": [1],
    "B": [[[{"coeff": 1, "exponents": [0, 0, 0], "scale": 2}]]]}})";
  EXPECT_NE(failure_message(term).find("/system/B/0/0/0/scale"), std::string::npos);
}

GTEST_TEST(ScenarioTest, ShapeAndTypeErrors) {
  EXPECT_EQ(failure_kind(R"({"system": {"n_s": 2, "m": 1, "A": [1], "B": [[1], [0]]}})"),
            ScenarioError::Kind::kSchema);
  EXPECT_EQ(failure_kind(R"({"system": {"n_s": 1, "m": 1, "A": ["1"], "B": [[1]]}})"),
            ScenarioError::Kind::kSchema);
  EXPECT_EQ(failure_kind(R"({"system": {"n_s": 1.5, "m": 1, "A": [1], "B": [[1]]}})"),
            ScenarioError::Kind::kSchema);
  EXPECT_EQ(failure_kind(R"({"system": {"n_s": 1, "m": 1, "A": [1],
    "B": [[[{"coeff": 1, "exponents": [0, 1]}]]]}})"),
            ScenarioError::Kind::kSchema);
  EXPECT_EQ(failure_kind(R"({"system": {"n_s": 1, "m": 1, "A": [1],
    "B": [[[{"coeff": 1, "exponents": [0, -1, 0]}]]]}})"),
            ScenarioError::Kind::kSchema);
  EXPECT_EQ(failure_kind(R"({"system": {"n_s": 1, "m": 1, "A": [1]}})"),
            ScenarioError::Kind::kSchema);
  const std::string msg = failure_message(R"({"system": {"n_s": 1, "m": 1, "A": [1]}})");
  EXPECT_NE(msg.find("/system/B"), std::string::npos);
  EXPECT_EQ(failure_kind(R"({"system": {"n_s": 1, "m": 1, "A": [1], "B": [[1]]},
    "simulation": {"method": "euler"}})"),
            ScenarioError::Kind::kSchema);
}

GTEST_TEST(ScenarioTest, SyntaxErrorReportsLine) {
  const std::string text = "{\n  \"system\": {\n    \"n_s\": 1,,\n  }\n}";
  EXPECT_EQ(failure_kind(text), ScenarioError::Kind::kSchema);
  EXPECT_NE(failure_message(text).find("line 3"), std::string::npos) << failure_message(text);
}

GTEST_TEST(ScenarioTest, MissingFile) {
  try {
    parse_scenario("/nonexistent/scenario.json");
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_EQ(e.kind(), ScenarioError::Kind::kMissingFile);
  }
}

GTEST_TEST(ScenarioTest, FullScenario) {
  const Scenario s = parse_scenario_string(R"({
    "name": "coupled",
    "system": {
      "n_s": 2, "m": 2, "A": [1, 0],
      "L1": [[0, 0.5], [0.3, 0]], "L2": [0.1, 0.2],
      "B": [[1, [{"coeff": 0.1, "exponents": [1, 0, 0, 0]}]], [0, 1]],
      "F": [[{"coeff": 1, "exponents": [0, 0, 3, 0]}], []]
    },
    "controller": {"c": 2, "k": 3, "k_rest": [4], "mode": "nominal"},
    "eps": [0.1, 0.01],
    "initial_conditions": {"frame": "original", "points": [[0.1, 0.2, 0.3]],
                           "random": {"count": 4, "radius": 0.2, "seed": 9}},
    "simulation": {"closed_loop": false, "method": "rkf45", "step": 0.5, "horizon": 10,
                   "time_scale": "fast", "ball_radius": null, "escape_radius": 50,
                   "norm": "original", "write_trajectories": false, "parallel": true},
    "analyze": {"points": [[0, 0, 0]], "tol": 1e-8,
                "baseline": {"x_start": [-1, 0], "x_end": [-0.25, 0], "samples": 10}},
    "verify": {"seed": 5, "samples": 10, "conjugacy_rho": [0.2]},
    "output": {"dir": "somewhere"}
  })");
  EXPECT_EQ(s.name, "coupled");
  EXPECT_EQ(s.system.L1()(0, 1), 0.5);
  EXPECT_EQ(s.system.B()[1].terms().at({1, 0, 0, 0}), 0.1);
  EXPECT_EQ(s.system.F()[0].terms().at({0, 0, 3, 0}), 1.0);
  EXPECT_TRUE(s.system.F()[1].is_zero());
  EXPECT_EQ(s.gains->c, 2.0);
  EXPECT_EQ(s.gains->k_rest[0], 4.0);
  EXPECT_EQ(s.mode, ControlMode::kNominal);
  EXPECT_EQ(s.eps.size(), 2u);
  ASSERT_EQ(s.initial_conditions.size(), 5u);
  EXPECT_EQ(s.initial_conditions[0].frame, IcFrame::kOriginal);
  EXPECT_LE(s.initial_conditions[4].state.norm(), 0.2);
  EXPECT_FALSE(s.simulation.closed_loop);
  EXPECT_EQ(s.simulation.sweep.integrator.method, IntegrationMethod::kRkf45);
  EXPECT_FALSE(s.simulation.sweep.integrator.ball_radius.has_value());
  EXPECT_EQ(*s.simulation.sweep.integrator.escape_radius, 50.0);
  EXPECT_FALSE(s.simulation.sweep.desingularized_time);
  EXPECT_EQ(s.simulation.sweep.norm, NormFrame::kOriginal);
  EXPECT_TRUE(s.simulation.sweep.parallel);
  EXPECT_EQ(s.analyze.points.size(), 1u);
  ASSERT_TRUE(s.analyze.baseline.has_value());
  EXPECT_EQ(s.analyze.baseline->branch.samples, 10);
  EXPECT_EQ(s.verify.seed, 5u);
  EXPECT_EQ(s.verify.conjugacy_rho, std::vector<double>{0.2});
  EXPECT_EQ(s.output_dir, "somewhere");
}

GTEST_TEST(ScenarioTest, BundledScenarioLoads) {
  const Scenario s = parse_scenario(FOLDCTL_SCENARIO);
  EXPECT_EQ(s.initial_conditions.size(), 20u);
  EXPECT_EQ(s.eps.size(), 3u);
  EXPECT_TRUE(s.gains.has_value());
}

}  // namespace
}  // namespace foldctl
