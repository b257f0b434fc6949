#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "gradsolve/linalg.hpp"
#include "gradsolve/parallel_sim.hpp"
#include "gradsolve/problems.hpp"
#include "gradsolve/solver.hpp"

using namespace gradsolve;

namespace {

ProblemInstance loguniform(std::size_t n) {
  SpectrumSpec spec;
  spec.n = n;
  spec.lambda_max = 1e4;
  spec.seed = 1;
  return generate_diagonal(spec);
}

// Tridiagonal 1-D Laplacian, stored as CSR.
SpdOperator laplacian(std::size_t n) {
  std::vector<std::size_t> offsets{0}, cols;
  std::vector<double> vals;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      cols.push_back(i - 1);
      vals.push_back(-1.0);
    }
    cols.push_back(i);
    vals.push_back(2.0);
    if (i + 1 < n) {
      cols.push_back(i + 1);
      vals.push_back(-1.0);
    }
    offsets.push_back(cols.size());
  }
  return SpdOperator::csr(n, std::move(offsets), std::move(cols), std::move(vals));
}

Vector random_vector(std::size_t n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return Vector(std::move(v));
}

void BM_MatvecDiagonal(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = loguniform(n);
  const Vector x = random_vector(n);
  Vector y(n);
  for (auto _ : state) {
    matvec_into(p.op, x, y);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MatvecDiagonal)->RangeMultiplier(10)->Range(1000, 100000);

void BM_MatvecCsr(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const SpdOperator a = laplacian(n);
  const Vector x = random_vector(n);
  Vector y(n);
  for (auto _ : state) {
    matvec_into(a, x, y);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(a.nonzeros()));
}
BENCHMARK(BM_MatvecCsr)->RangeMultiplier(10)->Range(1000, 100000);

// Cost per iteration of each steplength rule on a fixed problem.
void BM_SolveRule(benchmark::State& state, const std::string& rule) {
  const auto p = loguniform(10000);
  SolveConfig c;
  c.rule = SteplengthRule::parse(rule);
  c.tol = 1e-300;
  c.max_iter = 200;
  c.record_history = false;
  for (auto _ : state) {
    const auto h = solve_gradient(p, c);
    benchmark::DoNotOptimize(h.final_grad_norm);
  }
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK_CAPTURE(BM_SolveRule, sd, std::string("sd"));
BENCHMARK_CAPTURE(BM_SolveRule, bb1, std::string("bb1"));
BENCHMARK_CAPTURE(BM_SolveRule, bb2, std::string("bb2"));
BENCHMARK_CAPTURE(BM_SolveRule, dy, std::string("dy"));
BENCHMARK_CAPTURE(BM_SolveRule, cy, std::string("cy:l=4,m=3"));
BENCHMARK_CAPTURE(BM_SolveRule, csd, std::string("csd:m=3"));
BENCHMARK_CAPTURE(BM_SolveRule, gmr, std::string("gmr:tau=lag2,rho=0/1"));

void BM_Steplength(benchmark::State& state, Strategy strategy) {
  const std::size_t n = 100000;
  const auto p = loguniform(n);
  const Vector g = random_vector(n);
  const PartitionPlan plan = partition_rows(n, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const auto r = strategy == Strategy::GA ? ga_steplength(plan, p.op, g) : ra_steplength(plan, p.op, g);
    benchmark::DoNotOptimize(r.first);
  }
}
BENCHMARK_CAPTURE(BM_Steplength, ga, Strategy::GA)->Arg(1)->Arg(8)->Arg(64);
BENCHMARK_CAPTURE(BM_Steplength, ra, Strategy::RA)->Arg(1)->Arg(8)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
