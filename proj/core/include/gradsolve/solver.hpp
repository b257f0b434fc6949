#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gradsolve/linalg.hpp"
#include "gradsolve/problems.hpp"
#include "gradsolve/steplength.hpp"

namespace gradsolve {

/// Parameters of the two-condition steplength criterion checked by
/// `check_property_a`. `mu_list` holds 1-based indices in 1..n-1; empty means
/// every index.
struct PropertyACheckConfig {
  int xi = 1;
  double m1 = 0.0;
  double m2 = 2.0;
  std::vector<std::size_t> mu_list;
  /// Relative slack applied to each bound.
  double slack = 1e-12;

  /// xi = 1, M1 = 2 lambda_max, M2 = 2: the constants that work for the
  /// cyclic Yuan rule.
  static PropertyACheckConfig for_cy(const SpectrumInfo& spectrum,
                                     std::vector<std::size_t> mu_list = {});
};

enum class StopNorm {
  InitialGradient,  ///< ||g_k|| <= tol * ||g_0||
  RightHandSide,    ///< ||g_k|| <= tol * ||b||
};

enum class GradientUpdate {
  Recompute,   ///< g_{k+1} = A x_{k+1} - b
  Recurrence,  ///< g_{k+1} = g_k - alpha_k A g_k
};

struct SolveConfig {
  SteplengthRule rule;
  double tol = 1e-6;
  std::size_t max_iter = 10000;
  bool record_history = true;
  /// Store x_k in every record (memory heavy; small problems only).
  bool record_iterates = false;
  bool record_objective = false;
  std::optional<PropertyACheckConfig> diagnostics;
  StopNorm stop_norm = StopNorm::InitialGradient;
  GradientUpdate update = GradientUpdate::Recompute;

  void validate() const;
};

enum class SolveStatus { Converged, MaxIterReached, NumericalBreakdown };

std::string_view to_string(SolveStatus status) noexcept;

/// G(k, mu) and g_{mu+1,k}^2 for one probed mu.
struct EnergyProbe {
  double partial = 0.0;
  double next_sq = 0.0;
};

/// One iteration. The last record of a run has no step; CG records carry
/// alpha but no branch.
struct IterationRecord {
  std::size_t k = 0;
  std::optional<double> alpha;
  std::optional<Branch> branch;
  double grad_norm = 0.0;
  std::optional<double> objective;
  std::vector<EnergyProbe> energies;
  std::optional<Vector> iterate;
};

struct ConvergenceHistory {
  std::string method;
  std::vector<IterationRecord> records;
  SolveStatus status = SolveStatus::MaxIterReached;
  std::string breakdown_reason;
  Vector final_x{0.0};
  std::size_t iterations = 0;
  double initial_grad_norm = 0.0;
  double final_grad_norm = 0.0;
  /// The norm the tolerance is measured against.
  double reference_norm = 0.0;
  /// 1-based mu values behind each record's `energies`.
  std::vector<std::size_t> mu_list;
  double seconds = 0.0;
};

/// Called after each steplength is chosen, before the iterate moves.
using StepObserver = std::function<void(std::size_t k, const StepResult& step)>;

/// Gradient iteration x_{k+1} = x_k - alpha_k g_k driven by `config.rule`.
///
/// Stops when ||g_k|| <= tol * reference, at max_iter, or on breakdown. A
/// breakdown ends the run with status NumericalBreakdown and keeps every
/// record produced so far.
ConvergenceHistory solve_gradient(const ProblemInstance& problem, const SolveConfig& config);

/// As above with steplength dot products routed through `kernel`.
ConvergenceHistory solve_gradient(const ProblemInstance& problem, const SolveConfig& config,
                                  RayleighKernel* kernel, const StepObserver& observer = {});

/// Hestenes-Stiefel conjugate gradients with the same stopping contract and
/// history schema. `config.rule` is ignored. Nonpositive curvature p'Ap ends
/// the run as a breakdown.
ConvergenceHistory solve_cg(const ProblemInstance& problem, const SolveConfig& config);

/// sum_{i=1..mu} g_i^2 for 1 <= mu <= n.
double partial_gradient_energy(const Vector& g, std::size_t mu);

struct PropertyAIteration {
  std::size_t k = 0;
  Branch branch = Branch::SD;
  double inverse_alpha = 0.0;
  bool condition1 = true;
  std::size_t condition2_checks = 0;
  std::size_t condition2_failures = 0;
};

struct PropertyAViolation {
  std::size_t k = 0;
  int condition = 1;
  std::size_t mu = 0;  ///< 0 for condition 1
  Branch branch = Branch::SD;
  double inverse_alpha = 0.0;
  double bound = 0.0;
};

struct PropertyAReport {
  std::vector<PropertyAIteration> iterations;
  std::vector<PropertyAViolation> violations;

  bool passed() const noexcept { return violations.empty(); }
};

/// Checks every recorded step against the two steplength conditions:
///   (1) lambda_1 <= 1/alpha_k <= M1;
///   (2) for each probed mu, whenever some eps > 0 has G(k-j, mu) <= eps and
///       g_{mu+1,k-j}^2 >= M2 eps for all j < min(k, xi), then
///       1/alpha_k >= (2/3) lambda_{mu+1}.
/// Requires a history recorded with diagnostics and an exact spectrum.
PropertyAReport check_property_a(const ConvergenceHistory& history, const SpectrumInfo& spectrum,
                                 const PropertyACheckConfig& cfg);

/// CSV with columns k,branch,alpha,grad_norm. The final record leaves branch
/// and alpha empty; CG steps are tagged `CG`.
void write_history_csv(std::ostream& out, const ConvergenceHistory& history);

/// JSON document with the config echo, status, counts, timing and records.
std::string history_to_json(const ConvergenceHistory& history, const SolveConfig& config,
                            const std::string& problem_label, int indent = 2);

}  // namespace gradsolve
