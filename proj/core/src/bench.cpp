#include "gradsolve/bench.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "gradsolve/error.hpp"
#include "json.hpp"
#include "text.hpp"

namespace gradsolve {

std::vector<std::string> BenchSpec::default_methods() {
  return {"cg", "cy:l=4,m=3", "csd:m=3", "cbb:m=4", "dy", "bb1", "sd"};
}

std::vector<double> BenchSpec::default_thresholds() {
  return {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
}

BenchSpec BenchSpec::defaults() {
  BenchSpec spec;
  spec.methods = default_methods();
  spec.thresholds = default_thresholds();
  return spec;
}

void BenchSpec::validate() const {
  if (problems.empty()) throw ConfigError("bench needs at least one problem");
  if (methods.empty()) throw ConfigError("bench needs at least one method");
  if (thresholds.empty()) throw ConfigError("bench needs at least one threshold");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0) || !(thresholds[i] < 1.0)) {
      throw ConfigError("bench thresholds must lie in (0, 1)");
    }
    if (i > 0 && !(thresholds[i] < thresholds[i - 1])) {
      throw ConfigError("bench thresholds must be strictly decreasing");
    }
  }
  if (repetitions < 1) throw ConfigError("bench repetitions must be at least 1");
  if (max_iter < 1) throw ConfigError("bench max_iter must be at least 1");
  for (const auto& m : methods) {
    if (m != "cg") SteplengthRule::parse(m);
  }
  for (const auto& p : problems) ProblemRef::parse(p);
}

std::vector<std::string> bench_labels(const std::vector<std::string>& methods) {
  std::vector<std::string> names;
  std::map<std::string, int> counts;
  for (const auto& m : methods) {
    std::string name = m.substr(0, m.find(':'));
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    ++counts[name];
    names.push_back(std::move(name));
  }
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (counts[names[i]] > 1) names[i] = methods[i];
  }
  return names;
}

BenchTable run_bench(const BenchSpec& spec) {
  spec.validate();
  BenchTable table;
  table.thresholds = spec.thresholds;
  table.max_iter = spec.max_iter;
  table.repetitions = spec.repetitions;
  const auto labels = bench_labels(spec.methods);

  for (const auto& problem_text : spec.problems) {
    const ProblemRef ref = ProblemRef::parse(problem_text);
    BenchProblemTable ptable;
    ptable.label = problem_text;

    for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
      const std::string& method = spec.methods[mi];
      BenchRow row;
      row.label = labels[mi];
      row.method = method;
      for (double t : spec.thresholds) {
        BenchCell cell;
        cell.threshold = t;
        row.cells.push_back(cell);
      }
      std::vector<double> sums(spec.thresholds.size(), 0.0);

      for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
        RhsPolicy rhs = spec.rhs_policy;
        rhs.seed += rep;
        const ProblemInstance problem = resolve_problem(ref.with_seed_offset(rep), rhs);

        SolveConfig config;
        config.tol = spec.thresholds.back();
        config.max_iter = spec.max_iter;
        config.stop_norm = spec.stop_norm;
        const bool is_cg = method == "cg";
        if (!is_cg) config.rule = SteplengthRule::parse(method);
        const ConvergenceHistory history =
            is_cg ? solve_cg(problem, config) : solve_gradient(problem, config);
        row.seconds += history.seconds;

        for (std::size_t ti = 0; ti < spec.thresholds.size(); ++ti) {
          BenchCell& cell = row.cells[ti];
          ++cell.repetitions;
          const double bound = spec.thresholds[ti] * history.reference_norm;
          const auto hit = std::find_if(history.records.begin(), history.records.end(),
                                        [&](const IterationRecord& r) { return r.grad_norm <= bound; });
          if (hit != history.records.end()) {
            ++cell.reached;
            ++cell.converged;
            sums[ti] += static_cast<double>(hit->k);
          } else if (history.status == SolveStatus::NumericalBreakdown) {
            ++cell.breakdowns;
          } else {
            ++cell.max_iter_reached;
          }
        }
      }
      for (std::size_t ti = 0; ti < spec.thresholds.size(); ++ti) {
        BenchCell& cell = row.cells[ti];
        if (cell.reached == cell.repetitions) {
          cell.mean_iterations = sums[ti] / static_cast<double>(cell.repetitions);
        }
      }
      ptable.rows.push_back(std::move(row));
    }
    table.problems.push_back(std::move(ptable));
  }
  return table;
}

namespace {

std::string threshold_label(double t) {
  const double e = std::log10(t);
  const double rounded = std::round(e);
  if (std::abs(e - rounded) < 1e-12 && std::pow(10.0, rounded) == t) {
    return "1e" + std::to_string(static_cast<int>(rounded));
  }
  return detail::format_double(t);
}

std::string cell_text(const BenchCell& cell) {
  return cell.mean_iterations ? detail::format_double(*cell.mean_iterations) : std::string{};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string render_csv(const BenchTable& table) {
  std::ostringstream out;
  out << "problem,method";
  for (double t : table.thresholds) out << ',' << threshold_label(t);
  out << '\n';
  for (const auto& p : table.problems) {
    for (const auto& row : p.rows) {
      out << csv_field(p.label) << ',' << row.label;
      for (const auto& cell : row.cells) out << ',' << cell_text(cell);
      out << '\n';
    }
  }
  return out.str();
}

std::string render_markdown(const BenchTable& table) {
  std::ostringstream out;
  bool first = true;
  for (const auto& p : table.problems) {
    if (!first) out << '\n';
    first = false;
    out << "### " << p.label << "\n\n";
    out << "| |";
    for (double t : table.thresholds) out << ' ' << threshold_label(t) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < table.thresholds.size(); ++i) out << "---|";
    out << '\n';

    std::vector<double> best(table.thresholds.size(), std::numeric_limits<double>::infinity());
    for (const auto& row : p.rows) {
      for (std::size_t i = 0; i < row.cells.size(); ++i) {
        if (row.cells[i].mean_iterations) best[i] = std::min(best[i], *row.cells[i].mean_iterations);
      }
    }
    for (const auto& row : p.rows) {
      out << "| " << row.label << " |";
      for (std::size_t i = 0; i < row.cells.size(); ++i) {
        const BenchCell& cell = row.cells[i];
        if (!cell.mean_iterations) {
          out << " \\ |";
        } else if (*cell.mean_iterations == best[i]) {
          out << " **" << cell_text(cell) << "** |";
        } else {
          out << ' ' << cell_text(cell) << " |";
        }
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string render_json(const BenchTable& table, int indent) {
  using nlohmann::json;
  json doc;
  doc["max_iter"] = table.max_iter;
  doc["repetitions"] = table.repetitions;
  doc["thresholds"] = table.thresholds;
  json problems = json::array();
  for (const auto& p : table.problems) {
    json rows = json::array();
    for (const auto& row : p.rows) {
      json cells = json::array();
      for (const auto& cell : row.cells) {
        cells.push_back({
            {"threshold", cell.threshold},
            {"iterations", cell.mean_iterations ? json(*cell.mean_iterations) : json(nullptr)},
            {"reached", cell.reached},
            {"repetitions", cell.repetitions},
            {"status_counts",
             {{"converged", cell.converged},
              {"max_iter_reached", cell.max_iter_reached},
              {"breakdown", cell.breakdowns}}},
        });
      }
      rows.push_back({{"label", row.label},
                      {"method", row.method},
                      {"timings", {{"seconds", row.seconds}}},
                      {"cells", std::move(cells)}});
    }
    problems.push_back({{"label", p.label}, {"rows", std::move(rows)}});
  }
  doc["problems"] = std::move(problems);
  return doc.dump(indent);
}

std::string render(const BenchTable& table, BenchFormat format) {
  switch (format) {
    case BenchFormat::CSV: return render_csv(table);
    case BenchFormat::JSON: return render_json(table);
    case BenchFormat::Markdown: return render_markdown(table);
  }
  return {};
}

}  // namespace gradsolve
