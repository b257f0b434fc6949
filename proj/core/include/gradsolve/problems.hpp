#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gradsolve/linalg.hpp"

namespace gradsolve {

/// A linear system A x = b together with its starting point.
struct ProblemInstance {
  SpdOperator op;
  Vector rhs;
  Vector x0;
  /// Present (and exact) for diagonal operators.
  std::optional<SpectrumInfo> spectrum;
  std::string label;
  /// Non-fatal findings from ingestion, e.g. a nonpositive diagonal entry.
  std::vector<std::string> warnings;
};

/// Checks dimensions and fills `spectrum` from the operator when it is known.
ProblemInstance make_problem(SpdOperator op, Vector rhs, Vector x0, std::string label);

enum class SpectrumDistribution { Uniform, LogUniform, Clustered, Explicit };

/// Diagonal test spectrum normalized so that lambda_1 = 1.
///
/// Uniform, LogUniform and Clustered pin lambda_1 = 1 and lambda_n =
/// lambda_max and draw the interior from `seed`. Clustered splits the
/// interior between two narrow bands at the ends of the range. Explicit
/// takes `values` as given; their minimum must be exactly 1.
struct SpectrumSpec {
  std::size_t n = 2;
  SpectrumDistribution distribution = SpectrumDistribution::LogUniform;
  double lambda_max = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> values;
};

std::vector<double> generate_spectrum(const SpectrumSpec& spec);

/// Diagonal problem with b = 0 and x0 = ones, so x* = 0 and every
/// eigencomponent of the gradient starts excited.
ProblemInstance generate_diagonal(const SpectrumSpec& spec);

/// Random 2x2 SPD problem: a rotated diagonal with condition number in
/// [1, cond_max], with random b and x0. Stored as dense CSR.
ProblemInstance generate_spd_2d(std::uint64_t seed, double cond_max);

struct RhsPolicy {
  enum class Kind { Zero, Ones, FromFile, Random };
  Kind kind = Kind::Ones;
  std::filesystem::path path;
  std::uint64_t seed = 0;
};

struct MatrixMarketData {
  SpdOperator op;
  std::vector<std::string> warnings;
};

/// Reads real or integer, symmetric or general, coordinate or array Matrix
/// Market data into a symmetric CSR operator. Symmetric files may store either
/// triangle. Integer fields are promoted to real.
MatrixMarketData read_matrix_market(std::istream& in);

/// Writes the operator as `coordinate real symmetric`, lower triangle,
/// with round-trip precision.
void write_matrix_market(std::ostream& out, const SpdOperator& op);

/// x0 = 0; rhs per `rhs_policy`.
ProblemInstance load_matrix_market(const std::filesystem::path& path, const RhsPolicy& rhs_policy);

/// Plain text, one value per line; blank lines and lines starting with `%`
/// or `#` are skipped.
Vector read_vector(std::istream& in);
Vector read_vector_file(const std::filesystem::path& path);
void write_vector(std::ostream& out, const Vector& v);

/// A problem reference as used on the command line and in bench specs:
/// `diag:n=100,loguniform,kmax=1e2,seed=1`, `diag:n=2,explicit=1,2`,
/// `spd2d:seed=3,cond=100`, or a Matrix Market path (optionally `mm:`-prefixed).
struct ProblemRef {
  enum class Kind { Diagonal, Spd2d, MatrixMarket };
  Kind kind = Kind::Diagonal;
  SpectrumSpec spectrum;
  std::uint64_t seed = 0;
  double cond = 1.0;
  /// `rhs=ones` on a diag reference: b = ones and x0 = 0 instead of b = 0 and
  /// x0 = ones, the convention used for Matrix Market files.
  bool ones_rhs = false;
  std::filesystem::path path;

  static ProblemRef parse(std::string_view text);
  std::string to_string() const;
  /// The same reference with its random seed shifted, for repetitions.
  ProblemRef with_seed_offset(std::uint64_t offset) const;
};

ProblemInstance resolve_problem(const ProblemRef& ref, const RhsPolicy& rhs_policy = {});

}  // namespace gradsolve
