// Copyright 2026 The ssi Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "ssi/experiment.hpp"
#include "test_support.hpp"

namespace ssi {
namespace {

namespace fs = std::filesystem;

// --- preset grids -------------------------------------------------------------

TEST(PresetGrid, ThirtyFiveDistinctValidConfigs) {
  const auto grid = paper_preset_grid();
  ASSERT_EQ(grid.size(), 35u);
  std::set<std::string> ids;
  for (const auto& rc : grid) {
    EXPECT_NO_THROW(rc.validate()) << rc.config_id;
    ids.insert(rc.config_id);
    EXPECT_EQ(rc.config_id, describe_config(rc.injection, rc.cond));
  }
  EXPECT_EQ(ids.size(), 35u);
}

TEST(PresetGrid, ContainsTheKeyConfigurations) {
  std::set<std::string> ids;
  for (const auto& rc : paper_preset_grid()) ids.insert(rc.config_id);
  for (const char* id : {"g-fixed-0.50", "g-fixed-0.75", "g-fixed-0.90", "g-T-dec-0.75-linear", "g-T-inc-0.75-linear",
                         "g-L-dec-0.50-linear", "g-T-dec-0.75-cosine", "g-T-dec-0.75-sqrt",
                         "g-fixed-0.75+cn-fixed-0.25", "g-fixed-0.75+cn-T-dec-0.25-linear",
                         "g-T-dec-0.75-linear+cn-T-dec-0.25-linear", "g-T-dec-0.75-sqrt+cn-T-dec-0.25-linear"})
    EXPECT_TRUE(ids.count(id)) << id;
}

TEST(PresetGrid, CountsByFamily) {
  int fixed = 0, gamma_sched = 0, cn_only = 0, combined = 0;
  for (const auto& rc : paper_preset_grid()) {
    const bool g = rc.injection.gamma_axis != ControlAxis::none;
    if (!rc.cond.enabled) (g ? gamma_sched : fixed)++;
    else (g ? combined : cn_only)++;
  }
  EXPECT_EQ(fixed, 3);
  EXPECT_EQ(gamma_sched, 16);
  EXPECT_EQ(cn_only, 12);
  EXPECT_EQ(combined, 4);
}

TEST(PresetGrid, SmokeGridHasFourPairs) {
  const auto grid = smoke_grid();
  ASSERT_EQ(grid.size(), 1u);
  EXPECT_EQ(grid[0].n_content * grid[0].n_style, 4);
}

TEST(RunConfig, ValidationNamesKeys) {
  RunConfig rc;
  rc.steps = 0;
  try {
    rc.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "steps");
  }
  rc = {};
  rc.config_id = "a,b";
  EXPECT_THROW(rc.validate(), ConfigError);
  rc = {};
  rc.steps = 1;
  rc.injection.gamma_axis = ControlAxis::timestep;
  EXPECT_THROW(rc.validate(), ConfigError);
}

// --- Pareto -------------------------------------------------------------------

std::vector<ParetoPoint> brute_force_front(const std::vector<ParetoPoint>& pts) {
  std::vector<ParetoPoint> out;
  for (const auto& p : pts) {
    bool dominated = false;
    for (const auto& q : pts) dominated = dominated || (q.x <= p.x && q.y <= p.y && (q.x < p.x || q.y < p.y));
    if (!dominated) out.push_back(p);
  }
  return out;
}

std::vector<ParetoPoint> canonical(std::vector<ParetoPoint> v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return std::tie(a.x, a.y, a.id) < std::tie(b.x, b.y, b.id); });
  return v;
}

TEST(Pareto, MatchesBruteForceOnRandomSets) {
  std::mt19937_64 gen(2718);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 200);
    const bool lattice = trial % 3 == 0;  // coarse coordinates force ties
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ParetoPoint> pts;
    for (int i = 0; i < n; ++i) {
      double x = u(gen), y = u(gen);
      if (lattice) {
        x = std::floor(x * 6);
        y = std::floor(y * 6);
      }
      pts.push_back({x, y, "p" + std::to_string(i)});
    }
    const auto got = pareto_front(pts);
    ASSERT_EQ(canonical(got), canonical(brute_force_front(pts))) << "trial " << trial;
    for (std::size_t i = 1; i < got.size(); ++i) EXPECT_LE(got[i - 1].x, got[i].x);
  }
}

TEST(Pareto, EdgeCases) {
  EXPECT_TRUE(pareto_front({}).empty());
  const std::vector<ParetoPoint> dup = {{1, 1, "a"}, {1, 1, "b"}, {2, 2, "c"}};
  EXPECT_EQ(pareto_front(dup), (std::vector<ParetoPoint>{{1, 1, "a"}, {1, 1, "b"}}));
  const std::vector<ParetoPoint> same_x = {{1, 3, "a"}, {1, 2, "b"}, {0, 5, "c"}};
  EXPECT_EQ(pareto_front(same_x), (std::vector<ParetoPoint>{{0, 5, "c"}, {1, 2, "b"}}));
  EXPECT_THROW(pareto_front({{std::nan(""), 0, "n"}}), DomainError);
  EXPECT_TRUE(dominates({0, 0, ""}, {0, 1, ""}));
  EXPECT_FALSE(dominates({0, 0, ""}, {0, 0, ""}));
}

// --- additivity and directional comparisons ----------------------------------

RunResult synthetic(RunConfig rc, double s, double c) {
  RunResult r;
  rc.config_id = describe_config(rc.injection, rc.cond);
  r.config = rc;
  r.aggregate = MetricRecord::make(s, c, 0.0);
  return r;
}

TEST(Additivity, ResidualArithmetic) {
  EXPECT_NEAR(additivity_residual(18.135, 16.250, 18.384, 16.476), -0.023, 1e-9);
  EXPECT_DOUBLE_EQ(additivity_residual(1.0, 0.5, 1.5, 1.0), 0.0);
  const auto r = additivity_residual(MetricRecord::make(1, 1, 0), MetricRecord::make(0.5, 1.2, 0),
                                     MetricRecord::make(1.1, 0.9, 0), MetricRecord::make(0.7, 1.0, 0));
  EXPECT_NEAR(r.style, 0.7 - 0.6, 1e-12);
  EXPECT_NEAR(r.content, 1.0 - 1.1, 1e-12);
}

TEST(Additivity, FindsCompleteSetsOnly) {
  const auto grid = paper_preset_grid();
  auto by_id = [&](const std::string& id) {
    for (const auto& rc : grid)
      if (rc.config_id == id) return rc;
    throw std::runtime_error(id);
  };
  std::vector<RunResult> results = {
      synthetic(by_id("g-fixed-0.75"), 1.0, 1.0),
      synthetic(by_id("g-T-dec-0.75-linear"), 0.8, 1.2),
      synthetic(by_id("g-fixed-0.75+cn-T-dec-0.25-linear"), 1.1, 0.9),
      synthetic(by_id("g-T-dec-0.75-linear+cn-T-dec-0.25-linear"), 0.95, 1.05),
      synthetic(by_id("g-T-dec-0.75-cosine+cn-T-dec-0.25-linear"), 0.9, 1.1),  // no cosine gamma-only run
  };
  const auto sets = find_additivity_sets(results);
  ASSERT_EQ(sets.size(), 1u);
  EXPECT_EQ(sets[0].base_id, "g-fixed-0.75");
  EXPECT_EQ(sets[0].gamma_id, "g-T-dec-0.75-linear");
  EXPECT_EQ(sets[0].cn_id, "g-fixed-0.75+cn-T-dec-0.25-linear");
  EXPECT_NEAR(sets[0].residual.style, 0.95 - 0.9, 1e-12);
  EXPECT_NEAR(sets[0].residual.content, 1.05 - 1.1, 1e-12);
}

TEST(Directional, PairsDecreasingWithIncreasing) {
  std::vector<RunResult> results;
  for (const auto& rc : paper_preset_grid()) results.push_back(synthetic(rc, 1.0, 1.0));
  const auto dirs = directional_comparisons(results);
  // gamma: 3 bases x 2 axes; conditioning: base 0.25 x 2 axes.
  EXPECT_EQ(dirs.size(), 8u);
  for (const auto& d : dirs) {
    EXPECT_NE(d.decreasing_id, d.increasing_id);
    EXPECT_NE(d.decreasing_id.find("dec"), std::string::npos);
    EXPECT_NE(d.increasing_id.find("inc"), std::string::npos);
  }
}

TEST(Report, DeterministicAndComplete) {
  std::vector<RunResult> results;
  double s = 1.0;
  for (const auto& rc : paper_preset_grid()) {
    results.push_back(synthetic(rc, s, 2.0 - s));
    s += 0.01;
  }
  results[3].wall_time_s = 12.5;
  const auto front = pareto_front(pareto_points(results));
  const auto published = load_table_fixture(fs::path(SSI_DATA_DIR) / "published_tables.csv");
  const Report a = emit_report(results, front, find_additivity_sets(results), published);
  results[3].wall_time_s = 99.0;
  const Report b = emit_report(results, front, find_additivity_sets(results), published);
  EXPECT_EQ(a.markdown, b.markdown);
  EXPECT_EQ(a.svg, b.svg);
  EXPECT_NE(a.markdown.find(kNonReproducibilityNote), std::string::npos);
  EXPECT_NE(a.markdown.find("Decreasing vs increasing"), std::string::npos);
  EXPECT_NE(a.markdown.find("Additivity"), std::string::npos);
  EXPECT_NE(a.markdown.find("-0.023"), std::string::npos);
  EXPECT_EQ(a.svg.rfind("<svg", 0), 0u);
  EXPECT_THROW(emit_report({}, {}, {}), ParameterError);
}

// --- grid runner --------------------------------------------------------------

class GridRun : public ::testing::Test {
 protected:
  fs::path dir = testing::cache_path("grid_run");
  void SetUp() override { fs::remove_all(dir); }

  static std::vector<RunConfig> tiny_grid() {
    std::vector<RunConfig> grid;
    for (double g : {0.0, 1.0}) {
      RunConfig rc;
      rc.injection.gamma_base = g;
      rc.config_id = describe_config(rc.injection, rc.cond);
      rc.steps = 4;
      rc.n_content = 2;
      rc.n_style = 2;
      grid.push_back(rc);
    }
    return grid;
  }

  static GridOptions options(const fs::path& csv, int threads) {
    GridOptions opt;
    opt.model.mode = WeightsMode::seeded_random;
    opt.results_csv = csv;
    opt.threads = threads;
    return opt;
  }
};

TEST_F(GridRun, WritesRowsAndAggregates) {
  const auto csv = dir / "results.csv";
  const auto res = run_grid(tiny_grid(), options(csv, 1));
  ASSERT_EQ(res.size(), 2u);
  for (const auto& r : res) {
    ASSERT_EQ(r.pairs.size(), 4u);
    EXPECT_EQ(r.pairs[0].pair_id, "c000_s000");
    EXPECT_EQ(r.pairs[3].pair_id, "c001_s001");
    EXPECT_EQ(r.aggregate.style, aggregate_pairs(r.pairs).style);
    EXPECT_FALSE(r.resumed);
  }
  std::istringstream in(detail::read_file(csv));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kResultsHeader);
  int rows = 0;
  while (std::getline(in, line)) rows += !line.empty();
  EXPECT_EQ(rows, 10);
}

TEST_F(GridRun, ThreadCountDoesNotChangeResults) {
  const auto one = run_grid(tiny_grid(), options({}, 1));
  const auto three = run_grid(tiny_grid(), options({}, 3));
  for (std::size_t i = 0; i < one.size(); ++i)
    for (std::size_t p = 0; p < one[i].pairs.size(); ++p) {
      EXPECT_EQ(one[i].pairs[p].pair_id, three[i].pairs[p].pair_id);
      EXPECT_EQ(one[i].pairs[p].metrics.style, three[i].pairs[p].metrics.style);
      EXPECT_EQ(one[i].pairs[p].metrics.content, three[i].pairs[p].metrics.content);
    }
}

TEST_F(GridRun, ResumesCompletedConfigs) {
  const auto csv = dir / "results.csv";
  auto grid = tiny_grid();
  const auto first = run_grid({grid[0]}, options(csv, 1));
  const auto second = run_grid(grid, options(csv, 1));
  EXPECT_TRUE(second[0].resumed);
  EXPECT_FALSE(second[1].resumed);
  EXPECT_DOUBLE_EQ(second[0].aggregate.style, std::stod(detail::csv_number(first[0].aggregate.style)));
  const auto loaded = load_results(csv);
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded[1].config.config_id, grid[1].config_id);
  EXPECT_EQ(loaded[1].config.injection.gamma_base, 1.0);
  EXPECT_EQ(loaded[1].pairs.size(), 4u);
}

TEST_F(GridRun, RejectsBadGrids) {
  EXPECT_THROW(run_grid({}, options({}, 1)), ParameterError);
  auto grid = tiny_grid();
  grid[1].config_id = grid[0].config_id;
  EXPECT_THROW(run_grid(grid, options({}, 1)), ParameterError);
  grid = tiny_grid();
  grid[0].n_style = 0;
  EXPECT_THROW(run_grid(grid, options({}, 1)), ParameterError);
  EXPECT_THROW(run_grid(tiny_grid(), options({}, 0)), ConfigError);
}

TEST(LoadResults, RejectsMissingOrMalformedFiles) {
  EXPECT_THROW(load_results(testing::cache_path("no_such_results.csv")), IoError);
  const auto path = testing::cache_path("bad_results.csv");
  detail::write_file(path, std::string(kResultsHeader) + "\nonly,three,fields\n");
  EXPECT_THROW(load_results(path), IoError);
}

TEST(AggregatePairs, IsTheMeanOfPairs) {
  const std::vector<PairRow> rows = {{"a", MetricRecord::make(1, 2, 3)}, {"b", MetricRecord::make(3, 4, 5)}};
  const auto m = aggregate_pairs(rows);
  EXPECT_DOUBLE_EQ(m.style, 2.0);
  EXPECT_DOUBLE_EQ(m.content, 3.0);
  EXPECT_DOUBLE_EQ(m.structure, 4.0);
  EXPECT_DOUBLE_EQ(m.combined, 12.0);
}

}  // namespace
}  // namespace ssi
