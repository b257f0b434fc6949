#include "gradsolve/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gradsolve/error.hpp"

namespace gradsolve {

namespace {

void require_finite(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericalBreakdown("vector entry " + std::to_string(i) +
                               " is not finite");
    }
  }
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length " + std::to_string(a) +
                         " does not match " + std::to_string(b));
  }
}

}  // namespace

Vector::Vector(std::size_t n, double fill) : values_(n, fill) {
  if (n == 0) throw DimensionError("vector length must be at least 1");
  require_finite(values_);
}

Vector::Vector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DimensionError("vector length must be at least 1");
  require_finite(values_);
}

Vector::Vector(std::initializer_list<double> values)
    : Vector(std::vector<double>(values)) {}

bool Vector::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

SpdOperator SpdOperator::diagonal(std::vector<double> lambdas) {
  if (lambdas.empty()) throw DimensionError("operator dimension must be at least 1");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!std::isfinite(lambdas[i]) || lambdas[i] <= 0.0) {
      throw ConfigError("diagonal entry " + std::to_string(i) +
                        " must be finite and positive");
    }
  }
  SpdOperator op;
  op.n_ = lambdas.size();
  op.diagonal_ = std::make_shared<const DiagonalStorage>(
      DiagonalStorage{std::move(lambdas)});
  return op;
}

SpdOperator SpdOperator::identity(std::size_t n) {
  return diagonal(std::vector<double>(n, 1.0));
}

SpdOperator SpdOperator::csr(std::size_t n, std::vector<std::size_t> row_offsets,
                             std::vector<std::size_t> columns,
                             std::vector<double> values) {
  if (n == 0) throw DimensionError("operator dimension must be at least 1");
  if (row_offsets.size() != n + 1) {
    throw DimensionError("CSR row offsets must have n + 1 entries");
  }
  if (row_offsets.front() != 0 || row_offsets.back() != columns.size() ||
      columns.size() != values.size()) {
    throw DimensionError("CSR offsets, columns and values are inconsistent");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (row_offsets[i] > row_offsets[i + 1]) {
      throw DimensionError("CSR row offsets must be nondecreasing");
    }
    for (std::size_t p = row_offsets[i]; p < row_offsets[i + 1]; ++p) {
      if (columns[p] >= n) {
        throw IndexError("CSR column index " + std::to_string(columns[p]) +
                         " out of range in row " + std::to_string(i));
      }
      if (p > row_offsets[i] && columns[p] <= columns[p - 1]) {
        throw FormatError("CSR column indices must be strictly increasing in row " +
                          std::to_string(i));
      }
      if (!std::isfinite(values[p])) {
        throw NumericalBreakdown("CSR value in row " + std::to_string(i) +
                                 " is not finite");
      }
    }
  }

  SpdOperator op;
  op.n_ = n;
  op.csr_ = std::make_shared<const CsrStorage>(
      CsrStorage{std::move(row_offsets), std::move(columns), std::move(values)});

  const CsrStorage& s = *op.csr_;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = s.row_offsets[i]; p < s.row_offsets[i + 1]; ++p) {
      const std::size_t j = s.columns[p];
      if (j == i) continue;
      const auto first = s.columns.begin() + static_cast<std::ptrdiff_t>(s.row_offsets[j]);
      const auto last = s.columns.begin() + static_cast<std::ptrdiff_t>(s.row_offsets[j + 1]);
      const auto it = std::lower_bound(first, last, i);
      if (it == last || *it != i) {
        throw SymmetryError("entry (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") has no symmetric counterpart");
      }
      const double v = s.values[p];
      const double w = s.values[static_cast<std::size_t>(it - s.columns.begin())];
      if (std::abs(v - w) > 1e-12 * std::max(std::abs(v), std::abs(w))) {
        throw SymmetryError("entries (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") and its transpose differ");
      }
    }
  }
  return op;
}

SpdOperator SpdOperator::from_dense(std::size_t n, std::span<const double> dense) {
  if (dense.size() != n * n) throw DimensionError("dense input must have n * n entries");
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = dense[i * n + j];
      if (v != 0.0) {
        cols.push_back(j);
        vals.push_back(v);
      }
    }
    offsets.push_back(cols.size());
  }
  return csr(n, std::move(offsets), std::move(cols), std::move(vals));
}

std::size_t SpdOperator::nonzeros() const noexcept {
  return diagonal_ ? n_ : csr_->values.size();
}

double SpdOperator::entry(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw IndexError("operator entry index out of range");
  if (diagonal_) return i == j ? diagonal_->values[i] : 0.0;
  const auto first = csr_->columns.begin() + static_cast<std::ptrdiff_t>(csr_->row_offsets[i]);
  const auto last = csr_->columns.begin() + static_cast<std::ptrdiff_t>(csr_->row_offsets[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return csr_->values[static_cast<std::size_t>(it - csr_->columns.begin())];
}

bool SpdOperator::has_positive_diagonal() const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (!(entry(i, i) > 0.0)) return false;
  }
  return true;
}

std::optional<SpectrumInfo> SpdOperator::exact_spectrum() const {
  if (!diagonal_) return std::nullopt;
  SpectrumInfo info;
  info.exact = true;
  info.eigenvalues = diagonal_->values;
  std::sort(info.eigenvalues.begin(), info.eigenvalues.end());
  info.lambda_min = info.eigenvalues.front();
  info.lambda_max = info.eigenvalues.back();
  return info;
}

double dot(std::span<const double> u, std::span<const double> v) {
  require_same_length(u.size(), v.size(), "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sum += u[i] * v[i];
  return sum;
}

double dot(const Vector& u, const Vector& v) { return dot(u.view(), v.view()); }

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

void matvec_rows(const SpdOperator& a, const Vector& x, std::size_t begin,
                 std::size_t end, std::span<double> out) {
  require_same_length(x.size(), a.dimension(), "matvec");
  if (begin > end || end > a.dimension()) throw IndexError("matvec row range out of bounds");
  require_same_length(out.size(), end - begin, "matvec output");
  if (const DiagonalStorage* d = a.as_diagonal()) {
    for (std::size_t i = begin; i < end; ++i) out[i - begin] = d->values[i] * x[i];
    return;
  }
  const CsrStorage& s = *a.as_csr();
  for (std::size_t i = begin; i < end; ++i) {
    double sum = 0.0;
    for (std::size_t p = s.row_offsets[i]; p < s.row_offsets[i + 1]; ++p) {
      sum += s.values[p] * x[s.columns[p]];
    }
    out[i - begin] = sum;
  }
}

void matvec_into(const SpdOperator& a, const Vector& x, Vector& out) {
  require_same_length(out.size(), a.dimension(), "matvec output");
  matvec_rows(a, x, 0, a.dimension(), out.view());
}

Vector matvec(const SpdOperator& a, const Vector& x) {
  require_same_length(x.size(), a.dimension(), "matvec");
  Vector out(a.dimension());
  matvec_into(a, x, out);
  return out;
}

Vector power_apply(const SpdOperator& a, const Vector& g, int rho) {
  if (rho < 0) throw ScheduleViolation("matrix power must be non-negative");
  Vector p = g;
  for (int i = 0; i < rho; ++i) p = matvec(a, p);
  return p;
}

double rayleigh_step(const SpdOperator& a, const Vector& g, int rho) {
  if (rho < 0) throw ScheduleViolation("matrix power must be non-negative");
  require_same_length(g.size(), a.dimension(), "rayleigh_step");
  if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) {
    throw ConvergedSignal("rayleigh_step called with a zero gradient");
  }
  double num = 0.0;
  double den = 0.0;
  if (rho == 0) {
    num = dot(g, g);
    den = dot(g, matvec(a, g));
  } else {
    const Vector p = power_apply(a, g, rho);
    num = dot(g, p);
    den = dot(g, matvec(a, p));
  }
  const double alpha = num / den;
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw NumericalBreakdown("Rayleigh quotient steplength is not finite and positive");
  }
  return alpha;
}

}  // namespace gradsolve
