#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gradsolve/linalg.hpp"

namespace gradsolve {

enum class RuleKind { SD, BB1, BB2, Y, DY, YB, YBR, CSD, CBB, CY, GMR };

enum class Branch { SD, Y, BB1, BB2, Hold, GMR };

std::string_view to_string(RuleKind kind) noexcept;
std::string_view to_string(Branch branch) noexcept;

/// Which stored gradient a retarded step uses at iteration k.
struct TauSchedule {
  enum class Kind {
    Current,     ///< tau(k) = k
    Lag,         ///< tau(k) = max(0, k - shift)
    CycleStart,  ///< tau(k) = k - (k mod shift)
  };
  Kind kind = Kind::Current;
  std::size_t shift = 0;

  std::size_t operator()(std::size_t k) const noexcept;
  /// Smallest retard m for which the schedule stays inside max(0, k-m)..k.
  std::size_t required_retard() const noexcept;

  friend bool operator==(const TauSchedule&, const TauSchedule&) = default;
};

/// Matrix power used at iteration k, cycling through `values`.
struct RhoSchedule {
  std::vector<int> values{0};

  int operator()(std::size_t k) const noexcept { return values[k % values.size()]; }

  friend bool operator==(const RhoSchedule&, const RhoSchedule&) = default;
};

/// A steplength rule and its parameters.
///
/// String form: `sd`, `bb1`, `bb2`, `y`, `dy`, `yb`, `ybr:m=2`, `csd:m=3`,
/// `cbb:m=4`, `cy:l=4,m=3`, `gmr:tau=lag1,rho=0`. Tau schedules are `cur`,
/// `lagN` and `cycN`; rho schedules are slash-separated powers, e.g. `0/1`.
/// GMR accepts an explicit retard `m=`, defaulting to the smallest window the
/// tau schedule needs.
struct SteplengthRule {
  RuleKind kind = RuleKind::SD;
  int l = 0;
  int m = 0;
  TauSchedule tau;
  RhoSchedule rho;

  static SteplengthRule of(RuleKind kind) {
    SteplengthRule r;
    r.kind = kind;
    return r;
  }
  static SteplengthRule sd() { return of(RuleKind::SD); }
  static SteplengthRule bb1() { return of(RuleKind::BB1); }
  static SteplengthRule bb2() { return of(RuleKind::BB2); }
  static SteplengthRule yuan() { return of(RuleKind::Y); }
  static SteplengthRule dy() { return of(RuleKind::DY); }
  static SteplengthRule yb() { return of(RuleKind::YB); }
  static SteplengthRule ybr(int m);
  static SteplengthRule csd(int m);
  static SteplengthRule cbb(int m);
  static SteplengthRule cy(int l, int m);
  static SteplengthRule gmr(TauSchedule tau, RhoSchedule rho,
                            std::optional<int> retard = std::nullopt);

  /// Throws ConfigError when a parameter is out of range.
  void validate() const;

  /// Previous gradients the rule may reference (GMR ring-buffer depth).
  std::size_t history_depth() const noexcept;

  std::string to_string() const;
  static SteplengthRule parse(std::string_view text);

  friend bool operator==(const SteplengthRule&, const SteplengthRule&) = default;
};

struct StepResult {
  double alpha = 0.0;
  Branch branch = Branch::SD;
};

/// Evaluates generalized Rayleigh-quotient steplengths. The default routes
/// straight to `rayleigh_step`; the parallel simulator substitutes its own.
class RayleighKernel {
public:
  virtual ~RayleighKernel() = default;
  virtual double rayleigh(const SpdOperator& a, const Vector& g, int rho) = 0;
};

class SequentialKernel final : public RayleighKernel {
public:
  double rayleigh(const SpdOperator& a, const Vector& g, int rho) override {
    return rayleigh_step(a, g, rho);
  }
};

/// Per-iteration state consumed by the steplength rules.
///
/// At k = 0 every "previous" quantity is absent. `advance` shifts the current
/// gradient into the past and records s_{k-1}' s_{k-1} as
/// alpha^2 * g_{k-1}' g_{k-1}. The SD quotient of the current gradient is
/// computed on first use and carried over as `sd_prev` only if some rule
/// actually asked for it.
class SolverContext {
public:
  SolverContext(const SpdOperator& a, Vector g0, RayleighKernel* kernel = nullptr,
                std::size_t history_depth = 1);
  // The context keeps a pointer to the operator.
  SolverContext(SpdOperator&&, Vector, RayleighKernel* = nullptr, std::size_t = 1) = delete;

  std::size_t k() const noexcept { return k_; }
  const SpdOperator& op() const noexcept { return *op_; }

  const Vector& g_curr() const noexcept { return g_curr_; }
  const Vector* g_prev() const noexcept { return past_.empty() ? nullptr : &past_.front(); }
  std::optional<double> alpha_prev() const noexcept { return alpha_prev_; }
  std::optional<double> sd_prev() const noexcept { return sd_prev_; }
  std::optional<double> s_prev_sq() const noexcept { return s_prev_sq_; }
  std::optional<double> cached_sd_curr() const noexcept { return sd_curr_; }

  /// alpha_k^SD, computed through the kernel and cached.
  double sd_curr();
  double g_curr_norm_sq();

  /// g_j for j in [k - history_depth, k]; ScheduleViolation otherwise.
  const Vector& gradient_at(std::size_t j) const;

  double rayleigh(const Vector& g, int rho);

  void advance(Vector g_next, double alpha);

private:
  const SpdOperator* op_;
  RayleighKernel* kernel_;  // null: sequential rayleigh_step
  std::size_t depth_;
  std::size_t k_ = 0;
  Vector g_curr_;
  std::deque<Vector> past_;  // g_{k-1}, g_{k-2}, ...
  std::optional<double> alpha_prev_;
  std::optional<double> sd_prev_;
  std::optional<double> s_prev_sq_;
  std::optional<double> sd_curr_;
  std::optional<double> g_norm_sq_;
};

/// The Yuan steplength from two consecutive SD quotients, the current
/// gradient energy and the previous displacement energy.
double yuan_formula(double sd_prev, double sd_curr, double g_norm_sq, double s_prev_sq);

StepResult sd_step(SolverContext& ctx);
/// Falls back to the SD steplength at k = 0.
StepResult bb1_step(SolverContext& ctx);
/// Falls back to the SD steplength at k = 0.
StepResult bb2_step(SolverContext& ctx);
StepResult yuan_step(SolverContext& ctx);

StepResult dy_rule(SolverContext& ctx);
StepResult yb_rule(SolverContext& ctx);
StepResult ybr_rule(SolverContext& ctx, int m);
StepResult csd_rule(SolverContext& ctx, int m);
StepResult cbb_rule(SolverContext& ctx, int m);
StepResult cy_rule(SolverContext& ctx, int l, int m);
StepResult gmr_rule(SolverContext& ctx, const TauSchedule& tau, const RhoSchedule& rho,
                    int m);

/// Dispatches on `rule.kind`. The pure Yuan rule takes an SD step at k = 0.
StepResult next_step(const SteplengthRule& rule, SolverContext& ctx);

}  // namespace gradsolve
