#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gradsolve/problems.hpp"
#include "gradsolve/solver.hpp"

namespace gradsolve {

enum class BenchFormat { CSV, JSON, Markdown };

/// A grid of methods x residual thresholds over one or more problems.
/// Methods are rule strings plus the special method `cg`.
struct BenchSpec {
  std::vector<std::string> problems;
  std::vector<std::string> methods;
  std::vector<double> thresholds;
  std::size_t repetitions = 1;
  std::size_t max_iter = 10000;
  BenchFormat format = BenchFormat::Markdown;
  StopNorm stop_norm = StopNorm::InitialGradient;
  RhsPolicy rhs_policy;

  /// CG, CY (l=4, m=3), CSD (m=3), CBB (m=4), DY, BB1, SD over thresholds
  /// 1e-1 .. 1e-6 with a 10000-iteration cap.
  static BenchSpec defaults();
  static std::vector<std::string> default_methods();
  static std::vector<double> default_thresholds();

  /// Throws ConfigError on empty lists, unsorted thresholds or bad rules.
  void validate() const;
};

struct BenchCell {
  double threshold = 0.0;
  /// Mean first-crossing iteration; empty unless every repetition crossed
  /// within the cap.
  std::optional<double> mean_iterations;
  std::size_t reached = 0;
  std::size_t repetitions = 0;
  std::size_t converged = 0;
  std::size_t max_iter_reached = 0;
  std::size_t breakdowns = 0;
};

struct BenchRow {
  std::string label;
  std::string method;
  std::vector<BenchCell> cells;
  double seconds = 0.0;
};

struct BenchProblemTable {
  std::string label;
  std::vector<BenchRow> rows;
};

struct BenchTable {
  std::vector<double> thresholds;
  std::size_t max_iter = 0;
  std::size_t repetitions = 0;
  std::vector<BenchProblemTable> problems;
};

/// Runs every (problem, method, repetition) once to the smallest threshold and
/// reads the first crossing of each threshold from the history. Repetition r
/// shifts generator seeds by r. A solve that breaks down is recorded in its
/// cells and never aborts the grid.
BenchTable run_bench(const BenchSpec& spec);

/// Table row label: the upper-cased rule name, or the full rule string when
/// two methods share a name.
std::vector<std::string> bench_labels(const std::vector<std::string>& methods);

/// CSV: problem,method,<thresholds...>; cells that miss the cap are empty.
std::string render_csv(const BenchTable& table);
/// Markdown table per problem; per-column minima in bold, `\` for cells that
/// miss the cap.
std::string render_markdown(const BenchTable& table);
/// JSON with per-cell status counts and per-row timings; missed cells are null.
std::string render_json(const BenchTable& table, int indent = 2);
std::string render(const BenchTable& table, BenchFormat format);

}  // namespace gradsolve
