#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "gradsolve/bench.hpp"
#include "gradsolve/error.hpp"
#include "json.hpp"

using namespace gradsolve;

namespace {

const std::string kData = GRADSOLVE_TEST_DATA;

BenchSpec small_spec() {
  BenchSpec spec = BenchSpec::defaults();
  spec.problems = {"diag:n=200,loguniform,kmax=1e3,seed=2"};
  spec.thresholds = {1e-1, 1e-3, 1e-6};
  spec.max_iter = 2000;
  return spec;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    out.push_back(text.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace

TEST(BenchSpec, Defaults) {
  const BenchSpec spec = BenchSpec::defaults();
  EXPECT_EQ(spec.methods, (std::vector<std::string>{"cg", "cy:l=4,m=3", "csd:m=3", "cbb:m=4", "dy", "bb1", "sd"}));
  EXPECT_EQ(spec.thresholds, (std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}));
  EXPECT_EQ(spec.max_iter, 10000u);
  EXPECT_EQ(spec.repetitions, 1u);
}

TEST(BenchSpec, ValidationErrors) {
  BenchSpec spec = small_spec();
  EXPECT_NO_THROW(spec.validate());

  BenchSpec s = spec;
  s.thresholds = {1e-3, 1e-2};
  EXPECT_THROW(s.validate(), ConfigError);
  s = spec;
  s.thresholds = {1e-2, 1e-2};
  EXPECT_THROW(s.validate(), ConfigError);
  s = spec;
  s.thresholds = {};
  EXPECT_THROW(s.validate(), ConfigError);
  s = spec;
  s.thresholds = {2.0};
  EXPECT_THROW(s.validate(), ConfigError);
  s = spec;
  s.methods = {"sd", "bogus"};
  EXPECT_THROW(s.validate(), ConfigError);
  s = spec;
  s.methods = {};
  EXPECT_THROW(s.validate(), ConfigError);
  s = spec;
  s.problems = {};
  EXPECT_THROW(s.validate(), ConfigError);
  s = spec;
  s.repetitions = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = spec;
  s.problems = {"nosuch:n=3"};
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(BenchLabels, UpperCasedAndDisambiguated) {
  EXPECT_EQ(bench_labels({"cg", "cy:l=4,m=3", "sd"}), (std::vector<std::string>{"CG", "CY", "SD"}));
  EXPECT_EQ(bench_labels({"cy:l=4,m=3", "cy:l=1,m=1", "dy"}),
            (std::vector<std::string>{"cy:l=4,m=3", "cy:l=1,m=1", "DY"}));
}

TEST(RunBench, SentinelsAndMinima) {
  BenchSpec spec = small_spec();
  spec.methods = {"cg", "sd", "cy:l=4,m=3"};
  spec.max_iter = 300;
  const BenchTable table = run_bench(spec);
  ASSERT_EQ(table.problems.size(), 1u);
  const auto& rows = table.problems[0].rows;
  ASSERT_EQ(rows.size(), 3u);

  // SD cannot reach 1e-6 on kappa=1e3 within 300 steps.
  EXPECT_FALSE(rows[1].cells[2].mean_iterations.has_value());
  EXPECT_EQ(rows[1].cells[2].max_iter_reached, 1u);
  ASSERT_TRUE(rows[0].cells[2].mean_iterations.has_value());
  for (const auto& row : rows) {
    for (std::size_t i = 1; i < row.cells.size(); ++i) {
      if (row.cells[i].mean_iterations && row.cells[i - 1].mean_iterations) {
        EXPECT_LE(*row.cells[i - 1].mean_iterations, *row.cells[i].mean_iterations);
      }
    }
  }

  const auto csv = lines_of(render_csv(table));
  ASSERT_EQ(csv.size(), 4u);
  EXPECT_EQ(csv[0], "problem,method,1e-1,1e-3,1e-6");
  EXPECT_EQ(csv[2].substr(csv[2].size() - 1), ",");

  const std::string md = render_markdown(table);
  EXPECT_NE(md.find(" \\ |"), std::string::npos);
  const auto md_lines = lines_of(md);
  const std::string cg_line = md_lines[4];
  EXPECT_EQ(cg_line.rfind("| CG |", 0), 0u);
  // CG is never beaten at the tightest threshold.
  EXPECT_EQ(cg_line.substr(cg_line.rfind('|', cg_line.size() - 2)).find("**"), 2u);

  const auto doc = nlohmann::json::parse(render_json(table));
  EXPECT_TRUE(doc["problems"][0]["rows"][1]["cells"][2]["iterations"].is_null());
  EXPECT_EQ(doc["problems"][0]["rows"][1]["cells"][2]["status_counts"]["max_iter_reached"], 1);
  EXPECT_TRUE(doc["problems"][0]["rows"][0]["timings"].contains("seconds"));
}

TEST(RunBench, DeterministicCsv) {
  BenchSpec spec = small_spec();
  spec.methods = {"sd", "bb1", "cy:l=4,m=3"};
  spec.repetitions = 2;
  EXPECT_EQ(render_csv(run_bench(spec)), render_csv(run_bench(spec)));
}

TEST(RunBench, RepetitionsAverage) {
  BenchSpec spec = small_spec();
  spec.methods = {"bb1"};
  spec.repetitions = 3;
  const BenchTable table = run_bench(spec);
  double sum = 0.0;
  for (std::size_t r = 0; r < 3; ++r) {
    BenchSpec one = small_spec();
    one.methods = {"bb1"};
    one.problems = {"diag:n=200,loguniform,kmax=1e3,seed=" + std::to_string(2 + r)};
    sum += *run_bench(one).problems[0].rows[0].cells[2].mean_iterations;
  }
  EXPECT_DOUBLE_EQ(*table.problems[0].rows[0].cells[2].mean_iterations, sum / 3.0);
}

TEST(RunBench, BreakdownRecordedInCell) {
  BenchSpec spec = small_spec();
  spec.problems = {"mm:" + kData + "/nonpositive_diag.mtx", "diag:n=50,uniform,kmax=10,seed=1"};
  spec.methods = {"sd", "cg"};
  const BenchTable table = run_bench(spec);
  ASSERT_EQ(table.problems.size(), 2u);
  for (const auto& row : table.problems[0].rows) {
    EXPECT_FALSE(row.cells[0].mean_iterations.has_value());
    EXPECT_EQ(row.cells[0].breakdowns, 1u);
  }
  EXPECT_TRUE(table.problems[1].rows[0].cells[2].mean_iterations.has_value());
}
