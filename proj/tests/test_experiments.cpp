#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "plapdpp/experiments.hpp"

using namespace plapdpp;
namespace ex = plapdpp::experiments;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("plapdpp_exp_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, ParsesAndValidates) {
  auto tree = ex::Json::parse(R"({
    "experiment": "Solve",
    "domain": {"kind": "Annulus", "r_inner": 0.5, "r_outer": 1.0},
    "average": {"kind": "ConvexP", "p": "inf"},
    "boundary": {"kind": "wave"},
    "eps_list": [0.2, 0.1],
    "h_rule": {"kind": "Quadratic", "factor": 0.5}
  })");
  const auto cfg = ex::parse_config(tree);
  EXPECT_EQ(cfg.experiment, ex::ExperimentKind::Solve);
  EXPECT_TRUE(cfg.average.p.is_infinite());
  EXPECT_EQ(cfg.domain.name(), "Annulus");
  EXPECT_DOUBLE_EQ(cfg.h_rule(0.2), 0.02);
  EXPECT_EQ(cfg.output_path, "Solve.csv");
}

TEST(Config, FieldLevelErrors) {
  auto expect_config_error = [](const std::string& text, const std::string& field) {
    try {
      ex::parse_config(ex::Json::parse(text));
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  expect_config_error(R"({"experiment": "Nope"})", "experiment");
  expect_config_error(R"({"experiment": "Solve", "domain": {"kind": "Ball", "radius": 1},
                          "average": {"kind": "ConvexP", "p": 3}, "boundary": {"kind": "wave"},
                          "eps_list": [0.1, 0.2]})", "eps_list");
  expect_config_error(R"({"experiment": "Solve", "domain": {"kind": "Ball", "radius": -1}})", "domain");
  expect_config_error(R"({"experiment": "Solve", "average": {"kind": "ConvexP", "p": 1.5}})", "average");
  expect_config_error(R"({"experiment": "Solve", "average": {"kind": "ConvexP", "p": 3, "quadrature_order": 8}})",
                      "average");
  expect_config_error(R"({"experiment": "Solve", "domain": {"kind": "Ball", "radius": 1},
                          "average": {"kind": "ConvexP", "p": 3}, "boundary": {"kind": "wave"},
                          "eps_list": [0.1], "strip_width": 0.05})", "strip_width");
  expect_config_error(R"({"experiment": "Solve", "domain": {"kind": "Ball", "radius": 1},
                          "average": {"kind": "ConvexP", "p": 3}, "eps_list": [0.1]})", "boundary");
  expect_config_error(R"({"experiment": "ConsistencyTable", "average": {"kind": "ConvexP", "p": 3},
                          "function": {"kind": "wave"}, "points": [[0, 0]], "eps_list": [0.1]})", "function");
}

TEST(Config, Overrides) {
  ex::Json tree = ex::Json::parse(R"({"average": {"kind": "ConvexP", "p": 3}})");
  ex::apply_override(tree, "average.p=4");
  ex::apply_override(tree, "eps_list=[0.2,0.1]");
  ex::apply_override(tree, "output_path=out.csv");
  ex::apply_override(tree, "h_rule.kind=Cubic");
  EXPECT_EQ(tree["average"]["p"], 4);
  EXPECT_EQ(tree["eps_list"].size(), 2u);
  EXPECT_EQ(tree["output_path"], "out.csv");
  EXPECT_EQ(tree["h_rule"]["kind"], "Cubic");
  EXPECT_THROW(ex::apply_override(tree, "novalue"), Error);
}

TEST(Run, ConsistencyTableExample) {
  auto tree = ex::Json::parse(R"({
    "experiment": "ConsistencyTable",
    "average": {"kind": "ConvexP", "p": 4},
    "function": {"kind": "fundamental", "p": 4},
    "points": [[0.7, 0.0]],
    "eps_list": [0.2, 0.1, 0.05],
    "h_rule": {"kind": "Cubic"}
  })");
  tree["output_path"] = temp_path("consistency.csv");
  const auto status = ex::run(ex::parse_config(tree));
  EXPECT_EQ(status.exit_code, 0);
  const auto data = read_csv(tree["output_path"]);
  ASSERT_EQ(data.rows.size(), 3u);
  double prev = 1e300;
  for (const auto& row : data.rows) {
    const double r = std::stod(row[7]);
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(Run, MonotonicityIsReproducible) {
  auto tree = ex::Json::parse(R"({
    "experiment": "MonotonicityCheck",
    "domain": {"kind": "Ball", "radius": 1.0},
    "averages": [{"kind": "ConvexP", "p": 3}, {"kind": "Directional", "p": 3}],
    "eps_list": [0.2],
    "h_rule": {"kind": "Ratio", "ratio": 4},
    "trials": 200,
    "seed": 7
  })");
  tree["output_path"] = temp_path("mono_a.csv");
  EXPECT_EQ(ex::run(ex::parse_config(tree)).exit_code, 0);
  tree["output_path"] = temp_path("mono_b.csv");
  EXPECT_EQ(ex::run(ex::parse_config(tree)).exit_code, 0);
  EXPECT_EQ(slurp(temp_path("mono_a.csv")), slurp(temp_path("mono_b.csv")));
  EXPECT_FALSE(std::filesystem::exists(temp_path("mono_a.violations.csv")));
}

TEST(Run, NarrowStripIsExitCodeOne) {
  auto tree = ex::Json::parse(R"({
    "experiment": "Solve",
    "domain": {"kind": "Ball", "radius": 1.0},
    "average": {"kind": "ConvexP", "p": 3},
    "boundary": {"kind": "wave"},
    "eps_list": [0.1],
    "h_rule": {"kind": "Ratio", "ratio": 4},
    "strip_width": 0.08
  })");
  EXPECT_THROW(ex::parse_config(tree), Error);
  tree.erase("strip_width");
  tree["output_path"] = temp_path("solve.csv");
  tree["max_iters"] = 2;
  EXPECT_EQ(ex::run(ex::parse_config(tree)).exit_code, 2);
}

TEST(Run, SolveWritesSummaryFieldAndGrid) {
  auto tree = ex::Json::parse(R"({
    "experiment": "Solve",
    "domain": {"kind": "Ball", "radius": 0.6},
    "average": {"kind": "SupInfInfty"},
    "flavor": "DeltaWeighted",
    "boundary": {"kind": "affine", "slope": [1.0, -0.5], "offset": 0.25},
    "eps_list": [0.15],
    "h_rule": {"kind": "Ratio", "ratio": 3}
  })");
  tree["output_path"] = temp_path("solve_sum.csv");
  tree["field_path"] = temp_path("solve_field.csv");
  tree["grid_path"] = temp_path("solve.grid");
  EXPECT_EQ(ex::run(ex::parse_config(tree)).exit_code, 0);
  EXPECT_EQ(read_csv(tree["output_path"]).rows.size(), 1u);
  EXPECT_GT(read_csv(tree["field_path"]).rows.size(), 10u);
  EXPECT_DOUBLE_EQ(read_grid<2>(tree["grid_path"]).h, 0.05);
}

TEST(Run, BarrierSuiteIdentities) {
  auto tree = ex::Json::parse(R"({"experiment": "BarrierSuite"})");
  tree["output_path"] = temp_path("barriers.csv");
  EXPECT_EQ(ex::run(ex::parse_config(tree)).exit_code, 0);
  EXPECT_EQ(read_csv(tree["output_path"]).rows.size(), 9u * 5u * 2u);
}

TEST(Run, ComparisonSmall) {
  auto tree = ex::Json::parse(R"({
    "experiment": "ComparisonCheck",
    "domain": {"kind": "Ball", "radius": 0.6},
    "average": {"kind": "ConvexP", "p": 3},
    "eps_list": [0.15],
    "h_rule": {"kind": "Ratio", "ratio": 3},
    "pairs": 3,
    "seed": 2
  })");
  tree["output_path"] = temp_path("comparison.csv");
  EXPECT_EQ(ex::run(ex::parse_config(tree)).exit_code, 0);
  EXPECT_EQ(read_csv(tree["output_path"]).rows.size(), 3u);
}

TEST(Paths, SiblingPath) {
  EXPECT_EQ(ex::sibling_path("out/a.csv", ".violations.csv"), "out/a.violations.csv");
  EXPECT_EQ(ex::sibling_path("out.d/a", ".rings.csv"), "out.d/a.rings.csv");
}
