#include "gradsolve/problems.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>

#include "gradsolve/error.hpp"
#include "text.hpp"

namespace gradsolve {

using detail::format_double;
using detail::parse_double;
using detail::split;
using detail::trim;

ProblemInstance make_problem(SpdOperator op, Vector rhs, Vector x0, std::string label) {
  const std::size_t n = op.dimension();
  if (rhs.size() != n || x0.size() != n) {
    throw DimensionError("problem '" + label + "': operator, rhs and x0 dimensions differ");
  }
  auto spectrum = op.exact_spectrum();
  return ProblemInstance{std::move(op), std::move(rhs), std::move(x0), std::move(spectrum),
                         std::move(label), {}};
}

std::vector<double> generate_spectrum(const SpectrumSpec& spec) {
  if (spec.distribution == SpectrumDistribution::Explicit) {
    std::vector<double> values = spec.values;
    if (values.size() != spec.n) {
      throw ConfigError("explicit spectrum has " + std::to_string(values.size()) +
                        " values but n=" + std::to_string(spec.n));
    }
    if (values.size() < 2) throw ConfigError("diagonal problems need n >= 2");
    std::sort(values.begin(), values.end());
    if (values.front() != 1.0) {
      throw ConfigError("explicit spectrum must have smallest eigenvalue exactly 1");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw ConfigError("explicit spectrum values must be finite");
    }
    return values;
  }

  if (spec.n < 2) throw ConfigError("diagonal problems need n >= 2");
  if (!std::isfinite(spec.lambda_max) || spec.lambda_max < 1.0) {
    throw ConfigError("lambda_max must be finite and at least 1");
  }
  const double top = spec.lambda_max;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> values;
  values.reserve(spec.n);
  values.push_back(1.0);
  const std::size_t interior = spec.n - 2;
  for (std::size_t i = 0; i < interior; ++i) {
    const double u = unit(rng);
    double v = 1.0;
    switch (spec.distribution) {
      case SpectrumDistribution::Uniform:
        v = 1.0 + u * (top - 1.0);
        break;
      case SpectrumDistribution::LogUniform:
        v = std::pow(10.0, u * std::log10(top));
        break;
      case SpectrumDistribution::Clustered: {
        const double band = 0.05 * (top - 1.0);
        v = i < interior / 2 ? 1.0 + u * band : top - u * band;
        break;
      }
      case SpectrumDistribution::Explicit:
        break;
    }
    values.push_back(std::clamp(v, 1.0, top));
  }
  values.push_back(top);
  std::sort(values.begin(), values.end());
  return values;
}

ProblemInstance generate_diagonal(const SpectrumSpec& spec) {
  std::vector<double> values = generate_spectrum(spec);
  const std::size_t n = values.size();
  return make_problem(SpdOperator::diagonal(std::move(values)), Vector(n, 0.0), Vector(n, 1.0),
                      "diagonal");
}

ProblemInstance generate_spd_2d(std::uint64_t seed, double cond_max) {
  if (!std::isfinite(cond_max) || cond_max < 1.0) {
    throw ConfigError("cond_max must be finite and at least 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double scale = 0.5 + 1.5 * unit(rng);
  const double lambda1 = scale;
  const double lambda2 = scale * (1.0 + unit(rng) * (cond_max - 1.0));
  const double theta = std::numbers::pi * unit(rng);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double a11 = lambda1 * c * c + lambda2 * s * s;
  const double a22 = lambda1 * s * s + lambda2 * c * c;
  const double a12 = (lambda2 - lambda1) * c * s;
  const double dense[4] = {a11, a12, a12, a22};

  const double b0 = normal(rng);
  const double b1 = normal(rng);
  const double x0 = normal(rng);
  const double x1 = normal(rng);
  return make_problem(SpdOperator::from_dense(2, dense), Vector{b0, b1}, Vector{x0, x1},
                      "spd2d:seed=" + std::to_string(seed) + ",cond=" + format_double(cond_max));
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_comment_or_blank(std::string_view line) {
  const auto t = trim(line);
  return t.empty() || t.front() == '%';
}

double parse_value(std::string_view token, std::size_t line_no) {
  const auto v = parse_double(token);
  if (!v || !std::isfinite(*v)) {
    throw FormatError("Matrix Market line " + std::to_string(line_no) + ": invalid value '" +
                      std::string(token) + "'");
  }
  return *v;
}

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

MatrixMarketData read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw FormatError("Matrix Market: empty input");
  ++line_no;

  const auto header = fields_of(line);
  if (header.size() != 5 || lower(header[0]) != "%%matrixmarket" || lower(header[1]) != "matrix") {
    throw FormatError("Matrix Market: missing or malformed '%%MatrixMarket matrix' header");
  }
  const std::string format = lower(header[2]);
  const std::string field = lower(header[3]);
  const std::string symmetry = lower(header[4]);
  if (format != "coordinate" && format != "array") {
    throw FormatError("Matrix Market: unsupported format '" + format + "'");
  }
  if (field != "real" && field != "integer" && field != "double") {
    throw FormatError("Matrix Market: unsupported field '" + field + "'");
  }
  if (symmetry != "symmetric" && symmetry != "general") {
    throw FormatError("Matrix Market: unsupported symmetry '" + symmetry + "'");
  }
  const bool symmetric = symmetry == "symmetric";

  auto next_data_line = [&]() -> std::optional<std::string> {
    while (std::getline(in, line)) {
      ++line_no;
      if (!is_comment_or_blank(line)) return line;
    }
    return std::nullopt;
  };

  const auto size_line = next_data_line();
  if (!size_line) throw FormatError("Matrix Market: missing size line");
  const auto size_fields = fields_of(*size_line);
  const std::size_t expected_size_fields = format == "coordinate" ? 3 : 2;
  if (size_fields.size() != expected_size_fields) {
    throw FormatError("Matrix Market line " + std::to_string(line_no) + ": malformed size line");
  }
  std::vector<std::size_t> sizes;
  for (auto f : size_fields) {
    const auto v = detail::parse_integer<std::size_t>(f);
    if (!v) throw FormatError("Matrix Market line " + std::to_string(line_no) + ": invalid size '" + std::string(f) + "'");
    sizes.push_back(*v);
  }
  const std::size_t n = sizes[0];
  if (sizes[0] != sizes[1]) throw FormatError("Matrix Market: matrix is not square");
  if (n == 0) throw FormatError("Matrix Market: empty matrix");

  // (row, col, value), 0-based, upper entries of symmetric files mirrored below.
  std::vector<std::tuple<std::size_t, std::size_t, double>> triplets;

  if (format == "coordinate") {
    const std::size_t nnz = sizes[2];
    triplets.reserve(nnz);
    for (std::size_t e = 0; e < nnz; ++e) {
      const auto data = next_data_line();
      if (!data) throw FormatError("Matrix Market: expected " + std::to_string(nnz) + " entries, found " + std::to_string(e));
      const auto f = fields_of(*data);
      if (f.size() != 3) {
        throw FormatError("Matrix Market line " + std::to_string(line_no) + ": expected 'row col value'");
      }
      const auto i = detail::parse_integer<std::size_t>(f[0]);
      const auto j = detail::parse_integer<std::size_t>(f[1]);
      if (!i || !j || *i < 1 || *j < 1 || *i > n || *j > n) {
        throw FormatError("Matrix Market line " + std::to_string(line_no) + ": index out of range");
      }
      std::size_t r = *i - 1;
      std::size_t c = *j - 1;
      if (symmetric && r < c) std::swap(r, c);
      triplets.emplace_back(r, c, parse_value(f[2], line_no));
    }
  } else {
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t r = symmetric ? c : 0; r < n; ++r) {
        const auto data = next_data_line();
        if (!data) throw FormatError("Matrix Market: array data ends early");
        const auto f = fields_of(*data);
        if (f.size() != 1) {
          throw FormatError("Matrix Market line " + std::to_string(line_no) + ": expected one value");
        }
        const double v = parse_value(f[0], line_no);
        if (v != 0.0) triplets.emplace_back(r, c, v);
      }
    }
  }
  if (next_data_line()) {
    throw FormatError("Matrix Market line " + std::to_string(line_no) + ": unexpected trailing data");
  }

  std::sort(triplets.begin(), triplets.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });

  // Merge duplicates. General coordinate files sum them; a symmetric file
  // that lists an entry from both triangles is ambiguous.
  std::vector<std::tuple<std::size_t, std::size_t, double>> merged;
  for (const auto& t : triplets) {
    if (!merged.empty() && std::get<0>(merged.back()) == std::get<0>(t) &&
        std::get<1>(merged.back()) == std::get<1>(t)) {
      if (symmetric) {
        throw FormatError("Matrix Market: symmetric file lists entry (" +
                          std::to_string(std::get<0>(t) + 1) + ", " +
                          std::to_string(std::get<1>(t) + 1) + ") more than once");
      }
      std::get<2>(merged.back()) += std::get<2>(t);
    } else {
      merged.push_back(t);
    }
  }

  // Expand to full storage, row by row.
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
  for (const auto& [r, c, v] : merged) {
    rows[r].emplace_back(c, v);
    if (symmetric && r != c) rows[c].emplace_back(r, v);
  }
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(merged.size() * 2);
  vals.reserve(merged.size() * 2);
  for (auto& row : rows) {
    std::sort(row.begin(), row.end());
    for (const auto& [c, v] : row) {
      cols.push_back(c);
      vals.push_back(v);
    }
    offsets.push_back(cols.size());
  }

  std::optional<SpdOperator> op;
  try {
    op = SpdOperator::csr(n, std::move(offsets), std::move(cols), std::move(vals));
  } catch (const SymmetryError& e) {
    throw FormatError(std::string("Matrix Market: 'general' matrix is not symmetric: ") + e.what());
  }
  MatrixMarketData data{*op, {}};
  for (std::size_t i = 0; i < n; ++i) {
    if (!(data.op.entry(i, i) > 0.0)) {
      data.warnings.push_back("SPD violation: diagonal entry " + std::to_string(i + 1) +
                              " is not positive");
    }
  }
  return data;
}

void write_matrix_market(std::ostream& out, const SpdOperator& op) {
  const std::size_t n = op.dimension();
  std::vector<std::tuple<std::size_t, std::size_t, double>> lower_entries;
  if (const DiagonalStorage* d = op.as_diagonal()) {
    for (std::size_t i = 0; i < n; ++i) lower_entries.emplace_back(i, i, d->values[i]);
  } else {
    const CsrStorage& s = *op.as_csr();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = s.row_offsets[i]; p < s.row_offsets[i + 1]; ++p) {
        if (s.columns[p] <= i) lower_entries.emplace_back(i, s.columns[p], s.values[p]);
      }
    }
  }
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << n << ' ' << n << ' ' << lower_entries.size() << '\n';
  for (const auto& [r, c, v] : lower_entries) {
    out << r + 1 << ' ' << c + 1 << ' ' << format_double(v) << '\n';
  }
}

Vector read_vector(std::istream& in) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '%' || t.front() == '#') continue;
    const auto v = parse_double(t);
    if (!v || !std::isfinite(*v)) {
      throw FormatError("vector file line " + std::to_string(line_no) + ": invalid value '" +
                        std::string(t) + "'");
    }
    values.push_back(*v);
  }
  if (values.empty()) throw FormatError("vector file contains no values");
  return Vector(std::move(values));
}

Vector read_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vector file '" + path.string() + "'");
  return read_vector(in);
}

void write_vector(std::ostream& out, const Vector& v) {
  for (double x : v) out << format_double(x) << '\n';
}

ProblemInstance load_matrix_market(const std::filesystem::path& path, const RhsPolicy& rhs_policy) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open Matrix Market file '" + path.string() + "'");
  MatrixMarketData data = read_matrix_market(in);
  const std::size_t n = data.op.dimension();

  std::optional<Vector> rhs;
  switch (rhs_policy.kind) {
    case RhsPolicy::Kind::Zero: rhs.emplace(n, 0.0); break;
    case RhsPolicy::Kind::Ones: rhs.emplace(n, 1.0); break;
    case RhsPolicy::Kind::FromFile: {
      rhs.emplace(read_vector_file(rhs_policy.path));
      if (rhs->size() != n) {
        throw DimensionError("rhs file '" + rhs_policy.path.string() + "' has " +
                             std::to_string(rhs->size()) + " values, matrix has n=" +
                             std::to_string(n));
      }
      break;
    }
    case RhsPolicy::Kind::Random: {
      std::mt19937_64 rng(rhs_policy.seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      std::vector<double> values(n);
      for (double& v : values) v = normal(rng);
      rhs.emplace(std::move(values));
      break;
    }
  }
  ProblemInstance problem =
      make_problem(std::move(data.op), std::move(*rhs), Vector(n, 0.0), path.string());
  problem.warnings = std::move(data.warnings);
  return problem;
}

ProblemRef ProblemRef::parse(std::string_view text) {
  ProblemRef ref;
  const std::size_t colon = text.find(':');
  const std::string_view scheme = colon == std::string_view::npos ? std::string_view{} : text.substr(0, colon);

  if (scheme == "mm") {
    ref.kind = Kind::MatrixMarket;
    ref.path = std::string(text.substr(colon + 1));
    if (ref.path.empty()) throw ConfigError("problem ref: empty path in '" + std::string(text) + "'");
    return ref;
  }
  if (scheme != "diag" && scheme != "spd2d") {
    if (text.empty()) throw ConfigError("problem ref: empty reference");
    if (text.find('=') != std::string_view::npos && !std::filesystem::exists(std::string(text))) {
      throw ConfigError("problem ref: unknown generator '" + std::string(scheme) + "'");
    }
    ref.kind = Kind::MatrixMarket;
    ref.path = std::string(text);
    return ref;
  }

  const auto tokens = colon + 1 < text.size() ? split(text.substr(colon + 1), ',')
                                              : std::vector<std::string_view>{};
  auto number = [](std::string_view token, std::string_view value) {
    const auto v = parse_double(value);
    if (!v) throw ConfigError("problem ref: invalid number in '" + std::string(token) + "'");
    return *v;
  };
  auto count = [](std::string_view token, std::string_view value) {
    const auto v = detail::parse_integer<std::uint64_t>(value);
    if (!v) throw ConfigError("problem ref: invalid integer in '" + std::string(token) + "'");
    return *v;
  };

  if (scheme == "spd2d") {
    ref.kind = Kind::Spd2d;
    bool have_cond = false;
    for (auto token : tokens) {
      const auto eq = token.find('=');
      const auto key = token.substr(0, eq);
      const auto value = eq == std::string_view::npos ? std::string_view{} : token.substr(eq + 1);
      if (key == "seed" && eq != std::string_view::npos) {
        ref.seed = count(token, value);
      } else if (key == "cond" && eq != std::string_view::npos) {
        ref.cond = number(token, value);
        have_cond = true;
      } else {
        throw ConfigError("problem ref: unexpected token '" + std::string(token) + "'");
      }
    }
    if (!have_cond) throw ConfigError("problem ref: spd2d requires 'cond='");
    if (!(ref.cond >= 1.0)) throw ConfigError("problem ref: cond must be at least 1");
    return ref;
  }

  ref.kind = Kind::Diagonal;
  bool have_n = false;
  bool have_kmax = false;
  bool in_explicit = false;
  for (auto token : tokens) {
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) {
      if (token == "uniform") {
        ref.spectrum.distribution = SpectrumDistribution::Uniform;
      } else if (token == "loguniform") {
        ref.spectrum.distribution = SpectrumDistribution::LogUniform;
      } else if (token == "clustered") {
        ref.spectrum.distribution = SpectrumDistribution::Clustered;
      } else if (in_explicit && parse_double(token)) {
        ref.spectrum.values.push_back(*parse_double(token));
        continue;
      } else {
        throw ConfigError("problem ref: unexpected token '" + std::string(token) + "'");
      }
      in_explicit = false;
      continue;
    }
    in_explicit = false;
    const auto key = token.substr(0, eq);
    const auto value = token.substr(eq + 1);
    if (key == "n") {
      ref.spectrum.n = count(token, value);
      have_n = true;
    } else if (key == "kmax" || key == "lmax") {
      ref.spectrum.lambda_max = number(token, value);
      have_kmax = true;
    } else if (key == "seed") {
      ref.spectrum.seed = count(token, value);
    } else if (key == "rhs") {
      if (value == "ones") {
        ref.ones_rhs = true;
      } else if (value == "zero") {
        ref.ones_rhs = false;
      } else {
        throw ConfigError("problem ref: rhs must be 'ones' or 'zero' in '" + std::string(token) + "'");
      }
    } else if (key == "explicit") {
      ref.spectrum.distribution = SpectrumDistribution::Explicit;
      ref.spectrum.values.push_back(number(token, value));
      in_explicit = true;
    } else {
      throw ConfigError("problem ref: unexpected token '" + std::string(token) + "'");
    }
  }
  if (ref.spectrum.distribution == SpectrumDistribution::Explicit) {
    if (!have_n) ref.spectrum.n = ref.spectrum.values.size();
    if (have_kmax) throw ConfigError("problem ref: 'kmax=' does not apply to explicit spectra");
  } else {
    if (!have_n) throw ConfigError("problem ref: diag requires 'n='");
    if (!have_kmax) throw ConfigError("problem ref: diag requires 'kmax='");
  }
  ref.seed = ref.spectrum.seed;
  return ref;
}

std::string ProblemRef::to_string() const {
  switch (kind) {
    case Kind::MatrixMarket: return "mm:" + path.string();
    case Kind::Spd2d: return "spd2d:seed=" + std::to_string(seed) + ",cond=" + format_double(cond);
    case Kind::Diagonal: break;
  }
  std::string out = "diag:n=" + std::to_string(spectrum.n);
  switch (spectrum.distribution) {
    case SpectrumDistribution::Explicit: {
      out += ",explicit=";
      for (std::size_t i = 0; i < spectrum.values.size(); ++i) {
        if (i > 0) out += ',';
        out += format_double(spectrum.values[i]);
      }
      return ones_rhs ? out + ",rhs=ones" : out;
    }
    case SpectrumDistribution::Uniform: out += ",uniform"; break;
    case SpectrumDistribution::LogUniform: out += ",loguniform"; break;
    case SpectrumDistribution::Clustered: out += ",clustered"; break;
  }
  out += ",kmax=" + format_double(spectrum.lambda_max) + ",seed=" + std::to_string(spectrum.seed);
  return ones_rhs ? out + ",rhs=ones" : out;
}

ProblemRef ProblemRef::with_seed_offset(std::uint64_t offset) const {
  ProblemRef copy = *this;
  copy.seed += offset;
  copy.spectrum.seed += offset;
  return copy;
}

ProblemInstance resolve_problem(const ProblemRef& ref, const RhsPolicy& rhs_policy) {
  switch (ref.kind) {
    case ProblemRef::Kind::Diagonal: {
      ProblemInstance p = generate_diagonal(ref.spectrum);
      if (ref.ones_rhs) {
        const std::size_t n = p.op.dimension();
        p = make_problem(std::move(p.op), Vector(n, 1.0), Vector(n, 0.0), "");
      }
      p.label = ref.to_string();
      return p;
    }
    case ProblemRef::Kind::Spd2d: return generate_spd_2d(ref.seed, ref.cond);
    case ProblemRef::Kind::MatrixMarket: return load_matrix_market(ref.path, rhs_policy);
  }
  throw ConfigError("unknown problem kind");
}

}  // namespace gradsolve
