#include "gradsolve/parallel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "gradsolve/error.hpp"
#include "text.hpp"

namespace gradsolve {

PartitionPlan partition_rows(std::size_t n, std::size_t p) {
  if (p < 1) throw ConfigError("processor count must be at least 1");
  if (p > n) {
    throw ConfigError("processor count p=" + std::to_string(p) + " exceeds dimension n=" +
                      std::to_string(n));
  }
  PartitionPlan plan;
  plan.n = n;
  const std::size_t base = n / p;
  const std::size_t extra = n % p;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    plan.ranges.emplace_back(begin, begin + len);
    begin += len;
  }
  return plan;
}

std::string_view to_string(Strategy s) noexcept { return s == Strategy::GA ? "GA" : "RA"; }

std::uint64_t CommTrace::total_scalars() const noexcept {
  std::uint64_t total = 0;
  for (const auto& r : records) total += r.scalars_sent;
  return total;
}

std::uint64_t CommTrace::total_gather() const noexcept {
  std::uint64_t total = 0;
  for (const auto& r : records) total += r.gather_volume;
  return total;
}

double CommTrace::max_divergence() const noexcept {
  double worst = 0.0;
  for (const auto& r : records) worst = std::max(worst, r.alpha_divergence);
  return worst;
}

namespace {

void require_plan(const PartitionPlan& plan, const SpdOperator& a, const Vector& g) {
  if (plan.n != a.dimension() || g.size() != a.dimension()) {
    throw DimensionError("partition plan, operator and gradient dimensions differ");
  }
}

/// Every processor receives the rows it does not own.
std::uint64_t allgather_volume(const PartitionPlan& plan) {
  std::uint64_t volume = 0;
  for (const auto& [begin, end] : plan.ranges) volume += plan.n - (end - begin);
  return volume;
}

/// Block-local products A_i v, assembled into one vector. The assembly is the
/// simulated all-gather.
Vector blockwise_matvec(const PartitionPlan& plan, const SpdOperator& a, const Vector& v) {
  Vector out(plan.n);
  for (const auto& [begin, end] : plan.ranges) {
    matvec_rows(a, v, begin, end, out.view().subspan(begin, end - begin));
  }
  return out;
}

std::vector<double> local_dots(const PartitionPlan& plan, const Vector& u, const Vector& v) {
  std::vector<double> partials;
  partials.reserve(plan.processors());
  for (const auto& [begin, end] : plan.ranges) {
    partials.push_back(dot(u.view().subspan(begin, end - begin), v.view().subspan(begin, end - begin)));
  }
  return partials;
}

double reduce(std::vector<double> partials, ReduceOrder order) {
  if (order == ReduceOrder::Ascending) {
    double sum = 0.0;
    for (double c : partials) sum += c;
    return sum;
  }
  while (partials.size() > 1) {
    std::vector<double> next;
    next.reserve((partials.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < partials.size(); i += 2) next.push_back(partials[i] + partials[i + 1]);
    if (partials.size() % 2 == 1) next.push_back(partials.back());
    partials = std::move(next);
  }
  return partials.front();
}

struct Evaluation {
  double alpha = 0.0;
  std::uint64_t scalars = 0;
};

Evaluation evaluate(const PartitionPlan& plan, const SpdOperator& a, const Vector& g, int rho,
                    Strategy strategy, ReduceOrder order) {
  if (rho < 0) throw ScheduleViolation("matrix power must be non-negative");
  require_plan(plan, a, g);
  if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) {
    throw ConvergedSignal("steplength requested for a zero gradient");
  }
  const std::uint64_t p = plan.processors();
  const std::uint64_t gather = allgather_volume(plan);
  Evaluation ev;

  // Powers A^rho g: each product needs the full previous vector on every block.
  Vector power = g;
  for (int i = 0; i < rho; ++i) {
    power = blockwise_matvec(plan, a, power);
    ev.scalars += gather;
  }
  const Vector q = blockwise_matvec(plan, a, power);

  double num = 0.0;
  double den = 0.0;
  if (strategy == Strategy::GA) {
    ev.scalars += gather;
    num = dot(g, power);
    den = dot(g, q);
  } else {
    den = reduce(local_dots(plan, g, q), order);
    ev.scalars += p - 1;
    if (rho == 0) {
      num = dot(g, g);
    } else {
      num = reduce(local_dots(plan, g, power), order);
      ev.scalars += p - 1;
    }
  }
  ev.alpha = num / den;
  if (!std::isfinite(ev.alpha) || ev.alpha <= 0.0) {
    throw NumericalBreakdown("Rayleigh quotient steplength is not finite and positive");
  }
  return ev;
}

double relative_divergence(double value, double reference) {
  return std::abs(value - reference) / std::abs(reference);
}

}  // namespace

std::pair<double, CommRecord> ga_steplength(const PartitionPlan& plan, const SpdOperator& a,
                                            const Vector& g) {
  const Evaluation ev = evaluate(plan, a, g, 0, Strategy::GA, ReduceOrder::Ascending);
  CommRecord rec;
  rec.strategy = Strategy::GA;
  rec.scalars_sent = ev.scalars;
  rec.alpha = ev.alpha;
  rec.alpha_divergence = relative_divergence(ev.alpha, rayleigh_step(a, g, 0));
  return {ev.alpha, rec};
}

std::pair<double, CommRecord> ra_steplength(const PartitionPlan& plan, const SpdOperator& a,
                                            const Vector& g, ReduceOrder order) {
  const Evaluation ev = evaluate(plan, a, g, 0, Strategy::RA, order);
  CommRecord rec;
  rec.strategy = Strategy::RA;
  rec.scalars_sent = ev.scalars;
  rec.alpha = ev.alpha;
  rec.alpha_divergence = relative_divergence(ev.alpha, rayleigh_step(a, g, 0));
  return {ev.alpha, rec};
}

StrategyKernel::StrategyKernel(PartitionPlan plan, Strategy strategy, ReduceOrder order)
    : plan_(std::move(plan)), strategy_(strategy), order_(order) {}

double StrategyKernel::rayleigh(const SpdOperator& a, const Vector& g, int rho) {
  const Evaluation ev = evaluate(plan_, a, g, rho, strategy_, order_);
  scalars_ += ev.scalars;
  divergence_ = std::max(divergence_, relative_divergence(ev.alpha, rayleigh_step(a, g, rho)));
  return ev.alpha;
}

CommRecord StrategyKernel::take(std::size_t k, double alpha) {
  CommRecord rec;
  rec.k = k;
  rec.strategy = strategy_;
  rec.scalars_sent = scalars_;
  rec.gather_volume = allgather_volume(plan_);
  rec.alpha = alpha;
  rec.alpha_divergence = divergence_;
  scalars_ = 0;
  divergence_ = 0.0;
  return rec;
}

SimulationResult simulate_parallel_solve(const ProblemInstance& problem, const SteplengthRule& rule,
                                         const PartitionPlan& plan, Strategy strategy,
                                         SolveConfig config, ReduceOrder order) {
  if (plan.n != problem.op.dimension()) {
    throw DimensionError("partition plan does not match the problem dimension");
  }
  config.rule = rule;
  StrategyKernel kernel(plan, strategy, order);
  SimulationResult result;
  result.history = solve_gradient(problem, config, &kernel, [&](std::size_t k, const StepResult& step) {
    result.trace.records.push_back(kernel.take(k, step.alpha));
  });
  return result;
}

void write_comm_trace_csv(std::ostream& out, const CommTrace& trace) {
  out << "k,strategy,scalars_sent,gather_volume,alpha,divergence\n";
  for (const CommRecord& r : trace.records) {
    out << r.k << ',' << to_string(r.strategy) << ',' << r.scalars_sent << ',' << r.gather_volume
        << ',' << detail::format_double(r.alpha) << ',' << detail::format_double(r.alpha_divergence)
        << '\n';
  }
}

}  // namespace gradsolve
