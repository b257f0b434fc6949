// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any
// criterion fails. An optional argument names a directory for the bench table.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gradsolve/bench.hpp"
#include "gradsolve/error.hpp"
#include "gradsolve/parallel_sim.hpp"
#include "gradsolve/problems.hpp"
#include "gradsolve/solver.hpp"
#include "oracles.hpp"

using namespace gradsolve;
namespace fs = std::filesystem;

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
const char* const kStandIn = "diag:n=50000,loguniform,kmax=1e4,seed=1,rhs=ones";

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

SolveConfig config_for(const std::string& rule, double tol, std::size_t max_iter = 10000) {
  SolveConfig c;
  c.rule = SteplengthRule::parse(rule);
  c.tol = tol;
  c.max_iter = max_iter;
  return c;
}

ProblemInstance diagonal(std::size_t n, double kmax, std::uint64_t seed,
                         SpectrumDistribution dist = SpectrumDistribution::LogUniform) {
  SpectrumSpec spec;
  spec.n = n;
  spec.lambda_max = kmax;
  spec.seed = seed;
  spec.distribution = dist;
  return generate_diagonal(spec);
}

Vector gradient_at(const ProblemInstance& p, const Vector& x) {
  Vector g = matvec(p.op, x);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= p.rhs[i];
  return g;
}

// 1. Hand trace on diag(1, 2).
Outcome hand_trace() {
  Outcome o;
  const auto p = make_problem(SpdOperator::diagonal({1, 2}), Vector{0, 0}, Vector{1, 1}, "trace");
  SolveConfig c = config_for("cy:l=1,m=1", 1e-300, 3);
  c.record_iterates = true;
  const auto h = solve_gradient(p, c);
  if (h.records.size() < 3) {
    o.fail("run ended after " + std::to_string(h.iterations) + " steps");
    return o;
  }
  auto near = [&](double got, double want, const std::string& what) {
    if (std::abs(got - want) > 1e-15) o.fail(what + "=" + fmt(got) + " expected " + fmt(want));
  };
  near(*h.records[0].alpha, 5.0 / 9.0, "alpha_0");
  near((*h.records[1].iterate)[0], 4.0 / 9.0, "x_1[0]");
  near((*h.records[1].iterate)[1], -1.0 / 9.0, "x_1[1]");
  if (h.records[1].branch != Branch::Y) o.fail("step 1 is not a Yuan step");
  near(*h.records[1].alpha, 0.5, "alpha_1");
  near((*h.records[2].iterate)[0], 2.0 / 9.0, "x_2[0]");
  near((*h.records[2].iterate)[1], 0.0, "x_2[1]");
  near(*h.records[2].alpha, 1.0, "alpha_2");
  const double g3 = h.records.size() > 3 ? h.records[3].grad_norm : h.records.back().grad_norm;
  if (!(g3 <= 1e-14)) o.fail("||g_3||=" + fmt(g3));
  if (o.pass) o.detail = "||g_3||=" + fmt(g3);
  return o;
}

// 2. Termination within three steps on random 2x2 SPD systems.
Outcome two_dimensional_termination() {
  Outcome o;
  std::string summary;
  for (const char* rule : {"dy", "yb", "cy:l=1,m=1", "cy:l=4,m=3", "cy:l=2,m=5"}) {
    std::size_t misses = 0, worst = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto h = solve_gradient(generate_spd_2d(seed, 1e3), config_for(rule, 1e-10, 10));
      const std::size_t k = h.status == SolveStatus::Converged ? h.iterations : 11;
      worst = std::max(worst, k);
      if (k > 3) ++misses;
    }
    summary += std::string(summary.empty() ? "" : ", ") + rule + " max k=" + std::to_string(worst);
    if (misses > 0) o.fail(std::string(rule) + " exceeds k=3 on " + std::to_string(misses) + "/100 seeds");
  }
  o.detail += (o.detail.empty() ? "" : "; ") + summary;
  return o;
}

// 3. Condition 1 of Property A for CY.
Outcome property_a_condition_one() {
  Outcome o;
  std::size_t steps = 0;
  for (double lmax : {1e2, 1e4}) {
    for (auto dist : {SpectrumDistribution::LogUniform, SpectrumDistribution::Uniform}) {
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto p = diagonal(100, lmax, seed, dist);
        for (const char* rule : {"cy:l=4,m=3", "cy:l=1,m=1", "cy:l=2,m=5"}) {
          const auto h = solve_gradient(p, config_for(rule, 1e-8, 100000));
          if (h.status != SolveStatus::Converged) o.fail(std::string(rule) + " did not converge");
          for (const auto& r : h.records) {
            if (!r.alpha) continue;
            ++steps;
            const double inv = 1.0 / *r.alpha;
            if (inv < 1.0 || inv > 2.0 * lmax + 1e-9) {
              o.fail(std::string(rule) + " k=" + std::to_string(r.k) + " 1/alpha=" + fmt(inv));
            }
          }
        }
      }
    }
  }
  if (o.pass) o.detail = std::to_string(steps) + " steps checked";
  return o;
}

// 4. Yuan bracket at every Y step of the runs below.
Outcome yuan_bracket() {
  Outcome o;
  std::size_t total = 0, after_sd = 0, lower_after_sd = 0, lower_after_y = 0, upper = 0;
  auto scan = [&](const ProblemInstance& p, const std::string& rule, double tol) {
    SolveConfig c = config_for(rule, tol, 20000);
    c.record_iterates = true;
    const auto h = solve_gradient(p, c);
    double sd_prev = 0.0;
    std::optional<Branch> prev;
    for (std::size_t k = 0; k + 1 < h.records.size(); ++k) {
      const double sd = rayleigh_step(p.op, gradient_at(p, *h.records[k].iterate), 0);
      if (h.records[k].branch == Branch::Y) {
        ++total;
        const double a = *h.records[k].alpha;
        const double lower = 1.0 / (1.0 / sd_prev + 1.0 / sd);
        const bool lower_ok = a > lower * (1.0 - 1e-12);
        if (!(a < std::min(sd_prev, sd) * (1.0 + 1e-12))) ++upper;
        if (prev == Branch::SD) {
          ++after_sd;
          if (!lower_ok) ++lower_after_sd;
        } else if (!lower_ok) {
          ++lower_after_y;
        }
      }
      prev = h.records[k].branch;
      sd_prev = sd;
    }
  };
  const std::vector<std::string> rules{"dy", "yb", "ybr:m=2", "cy:l=1,m=1", "cy:l=4,m=3", "cy:l=2,m=5"};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = generate_spd_2d(seed, 1e3);
    for (const auto& rule : rules) scan(p, rule, 1e-10);
  }
  for (double lmax : {1e2, 1e4}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto p = diagonal(100, lmax, seed);
      for (const auto& rule : rules) scan(p, rule, 1e-8);
    }
  }
  scan(diagonal(1000, 1e4, 1), "cy:l=4,m=3", 1e-6);
  scan(diagonal(1000, 1e4, 1), "dy", 1e-6);

  const std::size_t violations = upper + lower_after_sd + lower_after_y;
  o.detail = std::to_string(total) + " Y steps, " + std::to_string(after_sd) + " after an SD step; violations: upper " +
             std::to_string(upper) + ", lower after SD " + std::to_string(lower_after_sd) +
             ", lower after Y " + std::to_string(lower_after_y);
  o.pass = violations == 0;
  return o;
}

// 5. GMR reduces to SD and BB1.
Outcome gmr_equivalence() {
  Outcome o;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = diagonal(50, 1e3, seed);
    auto run = [&](const std::string& rule) {
      SolveConfig c = config_for(rule, 1e-300, 200);
      c.record_iterates = true;
      return solve_gradient(p, c);
    };
    for (const auto& [gmr, base] : std::vector<std::pair<std::string, std::string>>{
             {"gmr:tau=cur,rho=0", "sd"}, {"gmr:tau=lag1,rho=0", "bb1"}}) {
      const auto a = run(gmr);
      const auto b = run(base);
      if (a.records.size() != b.records.size()) {
        o.fail(gmr + " length differs from " + base);
        continue;
      }
      for (std::size_t k = 0; k < a.records.size(); ++k) {
        if (a.records[k].alpha != b.records[k].alpha || a.records[k].iterate != b.records[k].iterate) {
          o.fail(gmr + " differs from " + base + " at k=" + std::to_string(k) + " seed " + std::to_string(seed));
          break;
        }
      }
      if (a.iterations < 200 && a.status != SolveStatus::Converged) o.fail(gmr + " stopped early");
    }
  }
  if (o.pass) o.detail = "bit-identical over 200 iterations, 5 seeds";
  return o;
}

// 6. R-linear decay of CY(4,3).
Outcome r_linear_decay() {
  Outcome o;
  const auto p = diagonal(1000, 1e4, 1);
  const auto h = solve_gradient(p, config_for("cy:l=4,m=3", 1e-6, 10000));
  if (h.status != SolveStatus::Converged) o.fail("status " + std::string(to_string(h.status)));
  // Envelope: max_{j >= k} ||g_j||, fitted by least squares in log scale.
  std::vector<double> env(h.records.size());
  double run = 0.0;
  for (std::size_t i = h.records.size(); i-- > 0;) {
    run = std::max(run, h.records[i].grad_norm);
    env[i] = std::log(run);
  }
  const double n = static_cast<double>(env.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < env.size(); ++k) {
    const double x = static_cast<double>(k);
    sx += x;
    sy += env[k];
    sxx += x * x;
    sxy += x * env[k];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (!(slope < 0.0)) o.fail("slope " + fmt(slope));
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("iterations=") + std::to_string(h.iterations) +
              ", log slope=" + fmt(slope);
  return o;
}

// 7. Bench protocol on the stand-in problem.
Outcome bench_protocol(const std::string& artifact_dir) {
  Outcome o;
  BenchSpec spec = BenchSpec::defaults();
  spec.problems = {kStandIn};
  const auto table = run_bench(spec);
  const auto& rows = table.problems.at(0).rows;
  const std::vector<std::string> want{"CG", "CY", "CSD", "CBB", "DY", "BB1", "SD"};
  std::vector<std::string> got;
  for (const auto& r : rows) got.push_back(r.label);
  if (got != want) o.fail("row labels differ");
  if (table.thresholds != std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) o.fail("thresholds differ");
  if (table.max_iter != 10000) o.fail("cap differs");
  if (spec.methods[1] != "cy:l=4,m=3" || spec.methods[2] != "csd:m=3" || spec.methods[3] != "cbb:m=4") {
    o.fail("default parameters differ");
  }
  auto cell = [&](const std::string& label, double t) -> const BenchCell& {
    const auto row = std::find_if(rows.begin(), rows.end(), [&](const BenchRow& r) { return r.label == label; });
    const auto i = std::find(table.thresholds.begin(), table.thresholds.end(), t) - table.thresholds.begin();
    return row->cells.at(static_cast<std::size_t>(i));
  };
  if (o.pass) {
    if (cell("SD", 1e-3).mean_iterations) o.fail("SD reached 1e-3 in " + fmt(*cell("SD", 1e-3).mean_iterations));
    if (!cell("CY", 1e-5).mean_iterations) o.fail("CY missed 1e-5");
  }
  if (!artifact_dir.empty()) {
    fs::create_directories(artifact_dir);
    std::ofstream(fs::path(artifact_dir) / "bench.md") << render_markdown(table);
    std::ofstream(fs::path(artifact_dir) / "bench.csv") << render_csv(table);
  }
  if (o.pass) {
    o.detail = "CY reaches 1e-5 in " + fmt(*cell("CY", 1e-5).mean_iterations) + ", SD misses 1e-3";
  }
  return o;
}

// 8. CG on 50 distinct eigenvalues.
Outcome cg_termination() {
  Outcome o;
  std::size_t worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = diagonal(50, 1e2, seed, SpectrumDistribution::Uniform);
    std::vector<double> lambda = p.op.as_diagonal()->values;
    std::sort(lambda.begin(), lambda.end());
    if (std::adjacent_find(lambda.begin(), lambda.end()) != lambda.end()) o.fail("repeated eigenvalue");
    const auto h = solve_cg(p, config_for("sd", 1e-12, 1000));
    worst = std::max(worst, h.iterations);
    if (h.status != SolveStatus::Converged || h.iterations > 55) {
      o.fail("seed " + std::to_string(seed) + ": " + std::to_string(h.iterations) + " iterations");
    }
  }
  if (o.pass) o.detail = "max iterations " + std::to_string(worst);
  return o;
}

double relative_gap(const Vector& x, const Vector& ref) {
  long double num = 0.0L, den = 0.0L;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += static_cast<long double>(x[i] - ref[i]) * (x[i] - ref[i]);
    den += static_cast<long double>(ref[i]) * ref[i];
  }
  return static_cast<double>(std::sqrt(num / den));
}

// 9. GA exactness, RA boundedness and traffic.
Outcome parallel_strategies() {
  Outcome o;
  const auto p = diagonal(1000, 1e4, 5);
  for (const char* rule : {"sd", "bb1", "bb2", "dy", "cy:l=4,m=3", "csd:m=3", "cbb:m=4"}) {
    const SolveConfig c = config_for(rule, 1e-8, 20000);
    const auto seq = solve_gradient(p, c);
    for (std::size_t procs : {1u, 2u, 4u, 8u}) {
      const auto ga = simulate_parallel_solve(p, c.rule, partition_rows(1000, procs), Strategy::GA, c);
      bool same = ga.history.records.size() == seq.records.size() && ga.history.final_x == seq.final_x;
      for (std::size_t k = 0; same && k < seq.records.size(); ++k) {
        same = ga.history.records[k].alpha == seq.records[k].alpha;
      }
      if (!same) o.fail(std::string("GA ") + rule + " p=" + std::to_string(procs) + " not bit-identical");
    }
  }

  // Known solution so that both runs can be compared to x*.
  SpectrumSpec spec;
  spec.n = 1000;
  spec.lambda_max = 1e4;
  spec.seed = 5;
  const auto lambda = generate_spectrum(spec);
  oracle::Gen gen(77);
  std::vector<double> xs(1000), b(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    xs[i] = gen.normal();
    b[i] = lambda[i] * xs[i];
  }
  const auto q = make_problem(SpdOperator::diagonal(lambda), Vector(b), Vector(1000, 0.0), "known");
  double worst_div = 0.0, worst_gap = 0.0;
  for (const char* rule : {"sd", "bb1", "cy:l=4,m=3", "dy"}) {
    SolveConfig c = config_for(rule, 1e-12, 200000);
    const auto seq = solve_gradient(q, c);
    for (ReduceOrder order : {ReduceOrder::Ascending, ReduceOrder::Tree}) {
      const auto ra = simulate_parallel_solve(q, c.rule, partition_rows(1000, 8), Strategy::RA, c, order);
      for (const auto& r : ra.trace.records) worst_div = std::max(worst_div, r.alpha_divergence);
      const double gap = relative_gap(ra.history.final_x, seq.final_x);
      worst_gap = std::max(worst_gap, gap);
      if (ra.history.status != SolveStatus::Converged) o.fail(std::string("RA ") + rule + " did not converge");
      if (gap > 1e-8) o.fail(std::string("RA ") + rule + " final x gap " + fmt(gap));
    }
  }
  if (worst_div > 10.0 * 1000 * kEps) o.fail("RA divergence " + fmt(worst_div));

  // Per-steplength traffic as n and p vary.
  for (std::size_t n : {1000u, 2000u, 4000u}) {
    for (std::size_t procs : {2u, 4u, 8u}) {
      const auto r = diagonal(n, 1e2, 1);
      SolveConfig c = config_for("sd", 1e-6, 5);
      const auto ga = simulate_parallel_solve(r, c.rule, partition_rows(n, procs), Strategy::GA, c);
      const auto ra = simulate_parallel_solve(r, c.rule, partition_rows(n, procs), Strategy::RA, c);
      for (const auto& rec : ga.trace.records) {
        if (rec.scalars_sent != (procs - 1) * n) o.fail("GA traffic is not (p-1)n");
      }
      for (const auto& rec : ra.trace.records) {
        if (rec.scalars_sent != procs - 1) o.fail("RA traffic is not p-1");
      }
    }
  }
  if (o.pass) o.detail = "max RA divergence " + fmt(worst_div) + ", max RA gap " + fmt(worst_gap);
  return o;
}

// 10. Bundled Matrix Market files against a dense multiply.
Outcome matrix_market_oracle() {
  Outcome o;
  std::size_t files = 0, rejected = 0;
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(GRADSOLVE_TEST_DATA)) {
    if (entry.path().extension() == ".mtx") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  double worst = 0.0;
  for (const auto& path : paths) {
    std::optional<ProblemInstance> p;
    try {
      p = load_matrix_market(path, RhsPolicy{});
    } catch (const Error&) {
      ++rejected;
      continue;
    }
    if (p->op.dimension() > 200) continue;
    ++files;
    const auto dense = oracle::read_dense_mtx(path.string());
    oracle::Gen gen(files);
    for (int trial = 0; trial < 10; ++trial) {
      const std::vector<double> x = gen.vector(dense.n);
      const Vector y = matvec(p->op, Vector(x));
      const std::vector<double> ref = oracle::multiply(dense, x);
      for (std::size_t i = 0; i < dense.n; ++i) {
        const double scale = oracle::row_magnitude(dense, x, i);
        const double err = scale == 0.0 ? std::abs(y[i]) : std::abs(y[i] - ref[i]) / scale;
        worst = std::max(worst, err);
        if (err > 1e-13) o.fail(path.filename().string() + " row " + std::to_string(i) + " error " + fmt(err));
      }
    }
  }
  if (files == 0) o.fail("no matrices found");
  if (o.pass) {
    o.detail = std::to_string(files) + " matrices (" + std::to_string(rejected) + " invalid files rejected), max error " +
               fmt(worst);
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string artifact_dir = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"hand trace", hand_trace},
      {"two-dimensional termination", two_dimensional_termination},
      {"Property A condition 1 for CY", property_a_condition_one},
      {"Yuan bracket", yuan_bracket},
      {"GMR specialization equivalence", gmr_equivalence},
      {"R-linear decay", r_linear_decay},
      {"bench protocol", [&] { return bench_protocol(artifact_dir); }},
      {"CG finite termination", cg_termination},
      {"GA exactness and RA boundedness", parallel_strategies},
      {"Matrix Market oracle equivalence", matrix_market_oracle},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
