#include "gradsolve/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "gradsolve/error.hpp"
#include "json.hpp"
#include "text.hpp"

namespace gradsolve {

PropertyACheckConfig PropertyACheckConfig::for_cy(const SpectrumInfo& spectrum,
                                                  std::vector<std::size_t> mu_list) {
  PropertyACheckConfig cfg;
  cfg.xi = 1;
  cfg.m1 = 2.0 * spectrum.lambda_max;
  cfg.m2 = 2.0;
  cfg.mu_list = std::move(mu_list);
  return cfg;
}

void SolveConfig::validate() const {
  if (!(tol > 0.0) || !(tol < 1.0)) throw ConfigError("tolerance must lie in (0, 1)");
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (diagnostics) {
    if (diagnostics->xi < 1) throw ConfigError("diagnostics xi must be at least 1");
    if (!(diagnostics->m2 > 0.0)) throw ConfigError("diagnostics M2 must be positive");
  }
  rule.validate();
}

std::string_view to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIterReached: return "MaxIterReached";
    case SolveStatus::NumericalBreakdown: return "NumericalBreakdown";
  }
  return "?";
}

double partial_gradient_energy(const Vector& g, std::size_t mu) {
  if (mu < 1 || mu > g.size()) {
    throw IndexError("partial energy index mu=" + std::to_string(mu) + " outside 1.." +
                     std::to_string(g.size()));
  }
  return dot(g.view().first(mu), g.view().first(mu));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::size_t> resolve_mu_list(const SolveConfig& config, std::size_t n) {
  if (!config.diagnostics) return {};
  std::vector<std::size_t> mus = config.diagnostics->mu_list;
  if (mus.empty()) {
    for (std::size_t mu = 1; mu < n; ++mu) mus.push_back(mu);
  }
  for (std::size_t mu : mus) {
    if (mu < 1 || mu >= n) {
      throw IndexError("diagnostic mu=" + std::to_string(mu) + " outside 1.." +
                       std::to_string(n - 1));
    }
  }
  return mus;
}

std::vector<EnergyProbe> probe_energies(const Vector& g, const std::vector<std::size_t>& mus) {
  std::vector<EnergyProbe> probes;
  probes.reserve(mus.size());
  for (std::size_t mu : mus) {
    probes.push_back({partial_gradient_energy(g, mu), g[mu] * g[mu]});
  }
  return probes;
}

/// f(x) = x'Ax/2 - b'x written with g = Ax - b.
double objective_from_gradient(const Vector& x, const Vector& g, const Vector& b) {
  return 0.5 * (dot(x, g) - dot(b, x));
}

Vector gradient_at(const SpdOperator& a, const Vector& x, const Vector& b) {
  Vector g = matvec(a, x);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= b[i];
  return g;
}

double reference_norm(const SolveConfig& config, double g0_norm, const Vector& b) {
  if (config.stop_norm == StopNorm::InitialGradient) return g0_norm;
  const double bn = norm2(b);
  if (!(bn > 0.0)) throw ConfigError("stopping relative to ||b|| needs a nonzero right-hand side");
  return bn;
}

}  // namespace

ConvergenceHistory solve_gradient(const ProblemInstance& problem, const SolveConfig& config) {
  return solve_gradient(problem, config, nullptr);
}

ConvergenceHistory solve_gradient(const ProblemInstance& problem, const SolveConfig& config,
                                  RayleighKernel* kernel, const StepObserver& observer) {
  config.validate();
  const auto start = Clock::now();
  const SpdOperator& a = problem.op;
  const Vector& b = problem.rhs;

  ConvergenceHistory history;
  history.method = config.rule.to_string();
  history.mu_list = resolve_mu_list(config, a.dimension());

  Vector x = problem.x0;
  Vector g = gradient_at(a, x, b);
  history.final_x = x;
  if (!g.all_finite()) {
    history.status = SolveStatus::NumericalBreakdown;
    history.breakdown_reason = "initial gradient is not finite";
    history.seconds = seconds_since(start);
    return history;
  }
  const double g0_norm = norm2(g);
  history.initial_grad_norm = g0_norm;
  history.reference_norm = reference_norm(config, g0_norm, b);
  const double threshold = config.tol * history.reference_norm;

  SolverContext ctx(a, std::move(g), kernel, config.rule.history_depth());
  std::size_t k = 0;
  double grad_norm = g0_norm;

  while (true) {
    const Vector& gk = ctx.g_curr();
    IterationRecord record;
    record.k = k;
    record.grad_norm = grad_norm;
    if (config.record_history) {
      if (config.record_objective) record.objective = objective_from_gradient(x, gk, b);
      if (!history.mu_list.empty()) record.energies = probe_energies(gk, history.mu_list);
      if (config.record_iterates) record.iterate = x;
    }

    if (grad_norm <= threshold) {
      history.status = SolveStatus::Converged;
      if (config.record_history) history.records.push_back(std::move(record));
      break;
    }
    if (k >= config.max_iter) {
      history.status = SolveStatus::MaxIterReached;
      if (config.record_history) history.records.push_back(std::move(record));
      break;
    }

    StepResult step;
    try {
      step = next_step(config.rule, ctx);
    } catch (const NumericalBreakdown& e) {
      history.status = SolveStatus::NumericalBreakdown;
      history.breakdown_reason = e.what();
      if (config.record_history) history.records.push_back(std::move(record));
      break;
    } catch (const ConvergedSignal& e) {
      history.status = SolveStatus::NumericalBreakdown;
      history.breakdown_reason = e.what();
      if (config.record_history) history.records.push_back(std::move(record));
      break;
    }
    record.alpha = step.alpha;
    record.branch = step.branch;
    if (observer) observer(k, step);

    Vector x_next = x;
    for (std::size_t i = 0; i < x_next.size(); ++i) x_next[i] -= step.alpha * gk[i];

    std::optional<Vector> g_next;
    if (config.update == GradientUpdate::Recompute) {
      g_next = gradient_at(a, x_next, b);
    } else {
      g_next = matvec(a, gk);
      for (std::size_t i = 0; i < g_next->size(); ++i) {
        (*g_next)[i] = gk[i] - step.alpha * (*g_next)[i];
      }
    }
    if (config.record_history) history.records.push_back(std::move(record));

    if (!x_next.all_finite() || !g_next->all_finite()) {
      history.status = SolveStatus::NumericalBreakdown;
      history.breakdown_reason = "iterate or gradient became non-finite at k=" + std::to_string(k + 1);
      break;
    }
    x = std::move(x_next);
    grad_norm = norm2(*g_next);
    ctx.advance(std::move(*g_next), step.alpha);
    ++k;
  }

  history.final_x = std::move(x);
  history.iterations = k;
  history.final_grad_norm = grad_norm;
  history.seconds = seconds_since(start);
  return history;
}

ConvergenceHistory solve_cg(const ProblemInstance& problem, const SolveConfig& config) {
  if (!(config.tol > 0.0) || !(config.tol < 1.0)) throw ConfigError("tolerance must lie in (0, 1)");
  if (config.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  const auto start = Clock::now();
  const SpdOperator& a = problem.op;
  const Vector& b = problem.rhs;
  const std::size_t n = a.dimension();

  ConvergenceHistory history;
  history.method = "cg";
  history.mu_list = resolve_mu_list(config, n);

  Vector x = problem.x0;
  Vector g = gradient_at(a, x, b);  // g = -r
  history.final_x = x;
  if (!g.all_finite()) {
    history.status = SolveStatus::NumericalBreakdown;
    history.breakdown_reason = "initial gradient is not finite";
    history.seconds = seconds_since(start);
    return history;
  }
  Vector r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = -g[i];
  Vector p = r;
  double rr = dot(r, r);
  const double g0_norm = std::sqrt(rr);
  history.initial_grad_norm = g0_norm;
  history.reference_norm = reference_norm(config, g0_norm, b);
  const double threshold = config.tol * history.reference_norm;

  std::size_t k = 0;
  double grad_norm = g0_norm;
  while (true) {
    IterationRecord record;
    record.k = k;
    record.grad_norm = grad_norm;
    if (config.record_history) {
      if (config.record_objective || !history.mu_list.empty()) {
        for (std::size_t i = 0; i < n; ++i) g[i] = -r[i];
        if (config.record_objective) record.objective = objective_from_gradient(x, g, b);
        if (!history.mu_list.empty()) record.energies = probe_energies(g, history.mu_list);
      }
      if (config.record_iterates) record.iterate = x;
    }
    if (grad_norm <= threshold) {
      history.status = SolveStatus::Converged;
      if (config.record_history) history.records.push_back(std::move(record));
      break;
    }
    if (k >= config.max_iter) {
      history.status = SolveStatus::MaxIterReached;
      if (config.record_history) history.records.push_back(std::move(record));
      break;
    }

    const Vector ap = matvec(a, p);
    const double curvature = dot(p, ap);
    if (!std::isfinite(curvature) || curvature <= 0.0) {
      history.status = SolveStatus::NumericalBreakdown;
      history.breakdown_reason = "nonpositive curvature p'Ap at k=" + std::to_string(k);
      if (config.record_history) history.records.push_back(std::move(record));
      break;
    }
    const double alpha = rr / curvature;
    record.alpha = alpha;
    if (config.record_history) history.records.push_back(std::move(record));

    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_next = dot(r, r);
    if (!std::isfinite(rr_next) || !x.all_finite()) {
      history.status = SolveStatus::NumericalBreakdown;
      history.breakdown_reason = "iterate or residual became non-finite at k=" + std::to_string(k + 1);
      ++k;
      break;
    }
    const double beta = rr_next / rr;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_next;
    grad_norm = std::sqrt(rr);
    ++k;
  }

  history.final_x = std::move(x);
  history.iterations = k;
  history.final_grad_norm = grad_norm;
  history.seconds = seconds_since(start);
  return history;
}

PropertyAReport check_property_a(const ConvergenceHistory& history, const SpectrumInfo& spectrum,
                                 const PropertyACheckConfig& cfg) {
  if (history.mu_list.empty()) {
    throw MissingDiagnosticsError("history was recorded without partial gradient energies");
  }
  if (!spectrum.exact || spectrum.eigenvalues.empty()) {
    throw MissingDiagnosticsError("steplength conditions need the exact sorted spectrum");
  }
  for (std::size_t i = 0; i < history.records.size(); ++i) {
    const IterationRecord& rec = history.records[i];
    if (rec.k != i || rec.energies.size() != history.mu_list.size()) {
      throw MissingDiagnosticsError("history records are incomplete at position " + std::to_string(i));
    }
  }
  const double lambda_1 = spectrum.eigenvalues.front();
  const double lower = lambda_1 * (1.0 - cfg.slack);
  const double upper = cfg.m1 * (1.0 + cfg.slack);

  PropertyAReport report;
  for (const IterationRecord& rec : history.records) {
    if (!rec.alpha) continue;
    const Branch branch = rec.branch.value_or(Branch::SD);
    PropertyAIteration it;
    it.k = rec.k;
    it.branch = branch;
    it.inverse_alpha = 1.0 / *rec.alpha;
    it.condition1 = it.inverse_alpha >= lower && it.inverse_alpha <= upper;
    if (!it.condition1) {
      report.violations.push_back({rec.k, 1, 0, branch, it.inverse_alpha,
                                   it.inverse_alpha < lower ? lambda_1 : cfg.m1});
    }

    const std::size_t window = std::min<std::size_t>(rec.k, static_cast<std::size_t>(cfg.xi));
    for (std::size_t t = 0; window > 0 && t < history.mu_list.size(); ++t) {
      double eps = 0.0;
      double min_next = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < window; ++j) {
        const EnergyProbe& probe = history.records[rec.k - j].energies[t];
        eps = std::max(eps, probe.partial);
        min_next = std::min(min_next, probe.next_sq);
      }
      if (!(min_next > 0.0) || min_next < cfg.m2 * eps) continue;
      ++it.condition2_checks;
      const std::size_t mu = history.mu_list[t];
      const double bound = 2.0 / 3.0 * spectrum.eigenvalues[mu];
      if (it.inverse_alpha < bound * (1.0 - cfg.slack)) {
        ++it.condition2_failures;
        report.violations.push_back({rec.k, 2, mu, branch, it.inverse_alpha, bound});
      }
    }
    report.iterations.push_back(it);
  }
  return report;
}

namespace {

std::string branch_label(const IterationRecord& rec) {
  if (rec.branch) return std::string(to_string(*rec.branch));
  return rec.alpha ? "CG" : "";
}

}  // namespace

void write_history_csv(std::ostream& out, const ConvergenceHistory& history) {
  out << "k,branch,alpha,grad_norm\n";
  for (const IterationRecord& rec : history.records) {
    out << rec.k << ',' << branch_label(rec) << ','
        << (rec.alpha ? detail::format_double(*rec.alpha) : std::string{}) << ','
        << detail::format_double(rec.grad_norm) << '\n';
  }
}

std::string history_to_json(const ConvergenceHistory& history, const SolveConfig& config,
                            const std::string& problem_label, int indent) {
  using nlohmann::json;
  json doc;
  doc["problem"] = problem_label;
  doc["method"] = history.method;
  doc["config"] = {
      {"rule", config.rule.to_string()},
      {"tol", config.tol},
      {"max_iter", config.max_iter},
      {"stop_norm", config.stop_norm == StopNorm::InitialGradient ? "initial_gradient" : "rhs"},
      {"gradient_update", config.update == GradientUpdate::Recompute ? "recompute" : "recurrence"},
  };
  doc["status"] = std::string(to_string(history.status));
  if (!history.breakdown_reason.empty()) doc["breakdown_reason"] = history.breakdown_reason;
  doc["iterations"] = history.iterations;
  doc["initial_grad_norm"] = history.initial_grad_norm;
  doc["final_grad_norm"] = history.final_grad_norm;
  doc["reference_norm"] = history.reference_norm;
  doc["timings"] = {{"seconds", history.seconds}};
  json records = json::array();
  for (const IterationRecord& rec : history.records) {
    json r = {{"k", rec.k}, {"grad_norm", rec.grad_norm}};
    r["branch"] = rec.alpha ? json(branch_label(rec)) : json(nullptr);
    r["alpha"] = rec.alpha ? json(*rec.alpha) : json(nullptr);
    if (rec.objective) r["objective"] = *rec.objective;
    records.push_back(std::move(r));
  }
  doc["records"] = std::move(records);
  return doc.dump(indent);
}

}  // namespace gradsolve
