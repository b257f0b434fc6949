#include "gradsolve/steplength.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "gradsolve/error.hpp"

namespace gradsolve {

std::string_view to_string(RuleKind kind) noexcept {
  switch (kind) {
    case RuleKind::SD: return "sd";
    case RuleKind::BB1: return "bb1";
    case RuleKind::BB2: return "bb2";
    case RuleKind::Y: return "y";
    case RuleKind::DY: return "dy";
    case RuleKind::YB: return "yb";
    case RuleKind::YBR: return "ybr";
    case RuleKind::CSD: return "csd";
    case RuleKind::CBB: return "cbb";
    case RuleKind::CY: return "cy";
    case RuleKind::GMR: return "gmr";
  }
  return "?";
}

std::string_view to_string(Branch branch) noexcept {
  switch (branch) {
    case Branch::SD: return "SD";
    case Branch::Y: return "Y";
    case Branch::BB1: return "BB1";
    case Branch::BB2: return "BB2";
    case Branch::Hold: return "HOLD";
    case Branch::GMR: return "GMR";
  }
  return "?";
}

std::size_t TauSchedule::operator()(std::size_t k) const noexcept {
  switch (kind) {
    case Kind::Current: return k;
    case Kind::Lag: return k > shift ? k - shift : 0;
    case Kind::CycleStart: return shift == 0 ? k : k - k % shift;
  }
  return k;
}

std::size_t TauSchedule::required_retard() const noexcept {
  switch (kind) {
    case Kind::Current: return 0;
    case Kind::Lag: return shift;
    case Kind::CycleStart: return shift == 0 ? 0 : shift - 1;
  }
  return 0;
}

SteplengthRule SteplengthRule::ybr(int m) {
  SteplengthRule r = of(RuleKind::YBR);
  r.m = m;
  return r;
}

SteplengthRule SteplengthRule::csd(int m) {
  SteplengthRule r = of(RuleKind::CSD);
  r.m = m;
  return r;
}

SteplengthRule SteplengthRule::cbb(int m) {
  SteplengthRule r = of(RuleKind::CBB);
  r.m = m;
  return r;
}

SteplengthRule SteplengthRule::cy(int l, int m) {
  SteplengthRule r = of(RuleKind::CY);
  r.l = l;
  r.m = m;
  return r;
}

SteplengthRule SteplengthRule::gmr(TauSchedule tau, RhoSchedule rho, std::optional<int> retard) {
  SteplengthRule r = of(RuleKind::GMR);
  r.tau = tau;
  r.rho = std::move(rho);
  r.m = retard.value_or(static_cast<int>(tau.required_retard()));
  return r;
}

void SteplengthRule::validate() const {
  switch (kind) {
    case RuleKind::CY:
      if (l < 1) throw ConfigError("cy rule requires l >= 1, got l=" + std::to_string(l));
      if (m < 1) throw ConfigError("cy rule requires m >= 1, got m=" + std::to_string(m));
      break;
    case RuleKind::YBR:
    case RuleKind::CSD:
    case RuleKind::CBB:
      if (m < 1) {
        throw ConfigError(std::string(gradsolve::to_string(kind)) +
                          " rule requires m >= 1, got m=" + std::to_string(m));
      }
      break;
    case RuleKind::GMR:
      if (m < 0) throw ConfigError("gmr rule requires m >= 0, got m=" + std::to_string(m));
      if (rho.values.empty()) throw ConfigError("gmr rule requires a nonempty rho schedule");
      if ((tau.kind == TauSchedule::Kind::Lag || tau.kind == TauSchedule::Kind::CycleStart) &&
          tau.shift == 0) {
        throw ConfigError("gmr tau schedule needs a positive shift");
      }
      break;
    default:
      break;
  }
}

std::size_t SteplengthRule::history_depth() const noexcept {
  return kind == RuleKind::GMR ? static_cast<std::size_t>(m < 1 ? 1 : m) : 1;
}

namespace {

std::string tau_to_string(const TauSchedule& tau) {
  switch (tau.kind) {
    case TauSchedule::Kind::Current: return "cur";
    case TauSchedule::Kind::Lag: return "lag" + std::to_string(tau.shift);
    case TauSchedule::Kind::CycleStart: return "cyc" + std::to_string(tau.shift);
  }
  return "cur";
}

std::string rho_to_string(const RhoSchedule& rho) {
  std::string out;
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    if (i > 0) out += '/';
    out += std::to_string(rho.values[i]);
  }
  return out;
}

int parse_int(std::string_view text, std::string_view token) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("rule string: invalid integer in '" + std::string(token) + "'");
  }
  return value;
}

TauSchedule parse_tau(std::string_view text, std::string_view token) {
  if (text == "cur") return {};
  auto shifted = [&](std::string_view prefix, TauSchedule::Kind kind) -> std::optional<TauSchedule> {
    if (text.substr(0, prefix.size()) != prefix) return std::nullopt;
    const int shift = parse_int(text.substr(prefix.size()), token);
    if (shift < 1) throw ConfigError("rule string: tau shift must be positive in '" + std::string(token) + "'");
    return TauSchedule{kind, static_cast<std::size_t>(shift)};
  };
  if (auto t = shifted("lag", TauSchedule::Kind::Lag)) return *t;
  if (auto t = shifted("cyc", TauSchedule::Kind::CycleStart)) return *t;
  throw ConfigError("rule string: unknown tau schedule in '" + std::string(token) + "'");
}

RhoSchedule parse_rho(std::string_view text, std::string_view token) {
  RhoSchedule rho;
  rho.values.clear();
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t slash = text.find('/', start);
    const std::size_t stop = slash == std::string_view::npos ? text.size() : slash;
    rho.values.push_back(parse_int(text.substr(start, stop - start), token));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return rho;
}

std::optional<RuleKind> kind_from_name(std::string_view name) {
  for (RuleKind k : {RuleKind::SD, RuleKind::BB1, RuleKind::BB2, RuleKind::Y, RuleKind::DY,
                     RuleKind::YB, RuleKind::YBR, RuleKind::CSD, RuleKind::CBB, RuleKind::CY,
                     RuleKind::GMR}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

}  // namespace

std::string SteplengthRule::to_string() const {
  std::string out(gradsolve::to_string(kind));
  switch (kind) {
    case RuleKind::YBR:
    case RuleKind::CSD:
    case RuleKind::CBB:
      out += ":m=" + std::to_string(m);
      break;
    case RuleKind::CY:
      out += ":l=" + std::to_string(l) + ",m=" + std::to_string(m);
      break;
    case RuleKind::GMR:
      out += ":tau=" + tau_to_string(tau) + ",rho=" + rho_to_string(rho) +
             ",m=" + std::to_string(m);
      break;
    default:
      break;
  }
  return out;
}

SteplengthRule SteplengthRule::parse(std::string_view text) {
  const std::size_t colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const auto kind = kind_from_name(name);
  if (!kind) throw ConfigError("rule string: unknown rule '" + std::string(name) + "'");

  SteplengthRule rule = of(*kind);
  // Omitted cycle parameters take the benchmark defaults.
  if (*kind == RuleKind::CY) {
    rule.l = 4;
    rule.m = 3;
  } else if (*kind == RuleKind::CSD) {
    rule.m = 3;
  } else if (*kind == RuleKind::CBB) {
    rule.m = 4;
  }
  bool explicit_m = false;
  bool seen_m = false;

  if (colon != std::string_view::npos) {
    std::string_view params = text.substr(colon + 1);
    if (params.empty()) throw ConfigError("rule string: empty parameter list after '" + std::string(name) + ":'");
    std::size_t start = 0;
    while (start <= params.size()) {
      const std::size_t comma = params.find(',', start);
      const std::size_t stop = comma == std::string_view::npos ? params.size() : comma;
      const std::string_view token = params.substr(start, stop - start);
      const std::size_t eq = token.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("rule string: expected key=value, got '" + std::string(token) + "'");
      }
      const std::string_view key = token.substr(0, eq);
      const std::string_view value = token.substr(eq + 1);
      const bool cyclic = *kind == RuleKind::CY || *kind == RuleKind::YBR ||
                          *kind == RuleKind::CSD || *kind == RuleKind::CBB;
      if (key == "m" && (cyclic || *kind == RuleKind::GMR)) {
        rule.m = parse_int(value, token);
        explicit_m = true;
        seen_m = true;
      } else if (key == "l" && *kind == RuleKind::CY) {
        rule.l = parse_int(value, token);
      } else if (key == "tau" && *kind == RuleKind::GMR) {
        rule.tau = parse_tau(value, token);
      } else if (key == "rho" && *kind == RuleKind::GMR) {
        rule.rho = parse_rho(value, token);
      } else {
        throw ConfigError("rule string: unexpected parameter '" + std::string(token) +
                          "' for rule '" + std::string(name) + "'");
      }
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }

  if (*kind == RuleKind::YBR && !seen_m) throw ConfigError("rule string: ybr requires 'm='");
  if (*kind == RuleKind::GMR && !explicit_m) {
    rule.m = static_cast<int>(rule.tau.required_retard());
  }
  rule.validate();
  return rule;
}

SolverContext::SolverContext(const SpdOperator& a, Vector g0, RayleighKernel* kernel,
                             std::size_t history_depth)
    : op_(&a), kernel_(kernel), depth_(history_depth < 1 ? 1 : history_depth),
      g_curr_(std::move(g0)) {
  if (g_curr_.size() != a.dimension()) {
    throw DimensionError("gradient length does not match operator dimension");
  }
}

double SolverContext::rayleigh(const Vector& g, int rho) {
  return kernel_ ? kernel_->rayleigh(*op_, g, rho) : rayleigh_step(*op_, g, rho);
}

double SolverContext::sd_curr() {
  if (!sd_curr_) sd_curr_ = rayleigh(g_curr_, 0);
  return *sd_curr_;
}

double SolverContext::g_curr_norm_sq() {
  if (!g_norm_sq_) g_norm_sq_ = dot(g_curr_, g_curr_);
  return *g_norm_sq_;
}

const Vector& SolverContext::gradient_at(std::size_t j) const {
  if (j == k_) return g_curr_;
  if (j > k_ || k_ - 1 - j >= past_.size()) {
    throw ScheduleViolation("gradient g_" + std::to_string(j) +
                            " is not retained at iteration " + std::to_string(k_));
  }
  return past_[k_ - 1 - j];
}

void SolverContext::advance(Vector g_next, double alpha) {
  if (g_next.size() != g_curr_.size()) throw DimensionError("gradient length changed");
  s_prev_sq_ = alpha * alpha * g_curr_norm_sq();
  sd_prev_ = sd_curr_;
  alpha_prev_ = alpha;
  past_.push_front(std::move(g_curr_));
  if (past_.size() > depth_) past_.pop_back();
  g_curr_ = std::move(g_next);
  sd_curr_.reset();
  g_norm_sq_.reset();
  ++k_;
}

double yuan_formula(double sd_prev, double sd_curr, double g_norm_sq, double s_prev_sq) {
  const double inv_prev = 1.0 / sd_prev;
  const double inv_curr = 1.0 / sd_curr;
  const double diff = inv_prev - inv_curr;
  const double root = std::sqrt(diff * diff + 4.0 * g_norm_sq / s_prev_sq);
  return 2.0 / (root + inv_prev + inv_curr);
}

namespace {

StepResult checked(double alpha, Branch branch) {
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw NumericalBreakdown(std::string("steplength from ") + std::string(to_string(branch)) +
                             " branch is not finite and positive");
  }
  return {alpha, branch};
}

StepResult hold(const SolverContext& ctx) {
  const auto alpha = ctx.alpha_prev();
  if (!alpha) throw RuleSequencingError("hold step requested before any steplength was taken");
  return {*alpha, Branch::Hold};
}

}  // namespace

StepResult sd_step(SolverContext& ctx) { return checked(ctx.sd_curr(), Branch::SD); }

StepResult bb1_step(SolverContext& ctx) {
  if (ctx.k() == 0) return checked(ctx.sd_curr(), Branch::BB1);
  if (const auto cached = ctx.sd_prev()) return checked(*cached, Branch::BB1);
  return checked(ctx.rayleigh(*ctx.g_prev(), 0), Branch::BB1);
}

StepResult bb2_step(SolverContext& ctx) {
  if (ctx.k() == 0) return checked(ctx.sd_curr(), Branch::BB2);
  return checked(ctx.rayleigh(*ctx.g_prev(), 1), Branch::BB2);
}

StepResult yuan_step(SolverContext& ctx) {
  const auto sd_prev = ctx.sd_prev();
  const auto s_prev_sq = ctx.s_prev_sq();
  if (ctx.k() == 0 || !sd_prev || !s_prev_sq) {
    throw RuleSequencingError("Yuan step at k=" + std::to_string(ctx.k()) +
                              " needs the SD quotient of the previous iteration");
  }
  if (*s_prev_sq == 0.0) throw ConvergedSignal("previous step was null");
  const double sd = ctx.sd_curr();
  return checked(yuan_formula(*sd_prev, sd, ctx.g_curr_norm_sq(), *s_prev_sq), Branch::Y);
}

StepResult dy_rule(SolverContext& ctx) {
  return ctx.k() % 4 < 2 ? sd_step(ctx) : yuan_step(ctx);
}

StepResult yb_rule(SolverContext& ctx) {
  return ctx.k() % 3 == 1 ? yuan_step(ctx) : sd_step(ctx);
}

StepResult ybr_rule(SolverContext& ctx, int m) {
  const std::size_t phase = ctx.k() % (3 + static_cast<std::size_t>(m));
  if (phase > 2) return hold(ctx);
  return phase == 1 ? yuan_step(ctx) : sd_step(ctx);
}

StepResult csd_rule(SolverContext& ctx, int m) {
  return ctx.k() % static_cast<std::size_t>(m) == 0 ? sd_step(ctx) : hold(ctx);
}

StepResult cbb_rule(SolverContext& ctx, int m) {
  return ctx.k() % static_cast<std::size_t>(m) == 0 ? bb1_step(ctx) : hold(ctx);
}

StepResult cy_rule(SolverContext& ctx, int l, int m) {
  const std::size_t period = static_cast<std::size_t>(l + m + 2);
  const std::size_t phase = ctx.k() % period;
  // phase 1 also satisfies the SD test; the Yuan case is listed first.
  if (phase == 1) return yuan_step(ctx);
  if (phase < static_cast<std::size_t>(l + 2)) return sd_step(ctx);
  return hold(ctx);
}

StepResult gmr_rule(SolverContext& ctx, const TauSchedule& tau, const RhoSchedule& rho, int m) {
  const std::size_t k = ctx.k();
  const std::size_t window = static_cast<std::size_t>(m);
  const std::size_t k_bar = k > window ? k - window : 0;
  const std::size_t t = tau(k);
  if (t < k_bar || t > k) {
    throw ScheduleViolation("tau(" + std::to_string(k) + ") = " + std::to_string(t) +
                            " lies outside [" + std::to_string(k_bar) + ", " +
                            std::to_string(k) + "]");
  }
  const int power = rho(k);
  if (power < 0) {
    throw ScheduleViolation("rho(" + std::to_string(k) + ") = " + std::to_string(power) +
                            " is negative");
  }
  if (t == k && power == 0) return checked(ctx.sd_curr(), Branch::GMR);
  return checked(ctx.rayleigh(ctx.gradient_at(t), power), Branch::GMR);
}

StepResult next_step(const SteplengthRule& rule, SolverContext& ctx) {
  switch (rule.kind) {
    case RuleKind::SD: return sd_step(ctx);
    case RuleKind::BB1: return bb1_step(ctx);
    case RuleKind::BB2: return bb2_step(ctx);
    case RuleKind::Y: {
      // Keep the SD quotient cached every iteration so the next Yuan step has it.
      if (ctx.k() == 0) return sd_step(ctx);
      return yuan_step(ctx);
    }
    case RuleKind::DY: return dy_rule(ctx);
    case RuleKind::YB: return yb_rule(ctx);
    case RuleKind::YBR: return ybr_rule(ctx, rule.m);
    case RuleKind::CSD: return csd_rule(ctx, rule.m);
    case RuleKind::CBB: return cbb_rule(ctx, rule.m);
    case RuleKind::CY: return cy_rule(ctx, rule.l, rule.m);
    case RuleKind::GMR: return gmr_rule(ctx, rule.tau, rule.rho, rule.m);
  }
  throw ConfigError("unknown rule kind");
}

}  // namespace gradsolve
