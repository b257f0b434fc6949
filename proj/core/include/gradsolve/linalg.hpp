#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace gradsolve {

/// Fixed-length dense real vector.
///
/// Construction from caller data rejects empty input and non-finite entries.
/// Kernels write through the mutable accessors, so finiteness of computed
/// vectors is the solver's job to re-check (see `all_finite`).
class Vector {
public:
  explicit Vector(std::size_t n, double fill = 0.0);
  explicit Vector(std::vector<double> values);
  Vector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  std::span<const double> view() const noexcept { return values_; }
  std::span<double> view() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool all_finite() const noexcept;

  friend bool operator==(const Vector&, const Vector&) = default;

private:
  std::vector<double> values_;
};

struct DiagonalStorage {
  std::vector<double> values;
};

/// Compressed sparse row storage. Column indices are strictly increasing
/// within each row; `row_offsets` has n + 1 entries.
struct CsrStorage {
  std::vector<std::size_t> row_offsets;
  std::vector<std::size_t> columns;
  std::vector<double> values;
};

struct SpectrumInfo {
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  bool exact = false;
  /// Sorted ascending; filled only when `exact`.
  std::vector<double> eigenvalues;
};

/// Symmetric positive definite operator, stored either as an explicit
/// diagonal or as symmetric CSR.
///
/// CSR input is checked for structural and numerical symmetry (relative
/// 1e-12) at construction. Positive definiteness of CSR input is the caller's
/// obligation; `has_positive_diagonal` exposes the cheap necessary condition.
/// Copies share the immutable storage.
class SpdOperator {
public:
  static SpdOperator diagonal(std::vector<double> lambdas);
  static SpdOperator identity(std::size_t n);
  static SpdOperator csr(std::size_t n, std::vector<std::size_t> row_offsets,
                         std::vector<std::size_t> columns,
                         std::vector<double> values);
  /// Row-major dense input; zeros are dropped.
  static SpdOperator from_dense(std::size_t n, std::span<const double> dense);

  std::size_t dimension() const noexcept { return n_; }
  std::size_t nonzeros() const noexcept;
  bool is_diagonal() const noexcept { return diagonal_ != nullptr; }

  const DiagonalStorage* as_diagonal() const noexcept { return diagonal_.get(); }
  const CsrStorage* as_csr() const noexcept { return csr_.get(); }

  /// Value at (i, j), zero when not stored. O(log row length) for CSR.
  double entry(std::size_t i, std::size_t j) const;
  bool has_positive_diagonal() const;

  /// Exact extreme eigenvalues for diagonal storage; empty for CSR.
  std::optional<SpectrumInfo> exact_spectrum() const;

private:
  SpdOperator() = default;

  std::size_t n_ = 0;
  std::shared_ptr<const DiagonalStorage> diagonal_;
  std::shared_ptr<const CsrStorage> csr_;
};

/// Sum of u_i * v_i accumulated strictly left to right. Every trace the
/// solvers produce depends on this order being fixed.
double dot(const Vector& u, const Vector& v);
double dot(std::span<const double> u, std::span<const double> v);
double norm2(const Vector& v);

Vector matvec(const SpdOperator& a, const Vector& x);
void matvec_into(const SpdOperator& a, const Vector& x, Vector& out);

/// Rows [begin, end) of A x, written to `out` (length end - begin). Each row
/// is accumulated in the same order `matvec` uses.
void matvec_rows(const SpdOperator& a, const Vector& x, std::size_t begin,
                 std::size_t end, std::span<double> out);

/// A^rho g by rho successive matvec calls.
Vector power_apply(const SpdOperator& a, const Vector& g, int rho);

/// (g' A^rho g) / (g' A^(rho+1) g). For SPD A the result lies in
/// [1/lambda_max, 1/lambda_min].
///
/// Throws ConvergedSignal when g is the zero vector and NumericalBreakdown
/// when the quotient is not finite and positive.
double rayleigh_step(const SpdOperator& a, const Vector& g, int rho);

}  // namespace gradsolve
