#pragma once

// Reference computations that share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

struct Dense {
  std::size_t n = 0;
  std::vector<double> a;  // row-major

  double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

// Brute-force reader for the Matrix Market variants bundled with the tests.
inline Dense read_dense_mtx(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("oracle: cannot open " + path);
  std::string line;
  std::getline(in, line);
  const bool array = line.find("array") != std::string::npos;
  const bool symmetric = line.find("symmetric") != std::string::npos;
  do {
    std::getline(in, line);
  } while (!line.empty() && line[0] == '%');
  std::istringstream size_line(line);
  Dense d;
  std::size_t cols = 0, nnz = 0;
  size_line >> d.n >> cols >> nnz;
  d.a.assign(d.n * d.n, 0.0);
  if (array) {
    for (std::size_t c = 0; c < d.n; ++c) {
      for (std::size_t r = symmetric ? c : 0; r < d.n; ++r) {
        double v;
        in >> v;
        d.at(r, c) = v;
        if (symmetric) d.at(c, r) = v;
      }
    }
  } else {
    for (std::size_t e = 0; e < nnz; ++e) {
      std::size_t i, j;
      double v;
      in >> i >> j >> v;
      d.at(i - 1, j - 1) += v;
      if (symmetric && i != j) d.at(j - 1, i - 1) += v;
    }
  }
  return d;
}

// Row sums taken in long double, independent of the library's kernel.
inline std::vector<double> multiply(const Dense& d, const std::vector<double>& x) {
  std::vector<double> y(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    long double s = 0.0L;
    for (std::size_t j = 0; j < d.n; ++j) s += static_cast<long double>(d.at(i, j)) * x[j];
    y[i] = static_cast<double>(s);
  }
  return y;
}

// Scale for a relative comparison of row i: sum_j |a_ij x_j|.
inline double row_magnitude(const Dense& d, const std::vector<double>& x, std::size_t i) {
  double s = 0.0;
  for (std::size_t j = 0; j < d.n; ++j) s += std::abs(d.at(i, j) * x[j]);
  return s;
}

inline long double dot_ld(const std::vector<double>& u, const std::vector<double>& v) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < u.size(); ++i) s += static_cast<long double>(u[i]) * v[i];
  return s;
}

// Eigenvalues of the symmetric 2x2 matrix [[a, b], [b, c]], ascending.
inline std::pair<double, double> eig2(double a, double b, double c) {
  const double mean = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), b);
  return {mean - rad, mean + rad};
}

class Gen {
public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  std::vector<double> vector(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }

  // Nonzero vector: at least one entry is pushed away from zero.
  std::vector<double> nonzero_vector(std::size_t n) {
    auto v = vector(n);
    v[index(0, n - 1)] += 2.0;
    return v;
  }

  // Positive spectrum in [1, kmax], sorted, with both ends present.
  std::vector<double> spectrum(std::size_t n, double kmax) {
    std::vector<double> s(n);
    for (auto& x : s) x = std::exp(uniform(0.0, std::log(kmax)));
    s.front() = 1.0;
    s.back() = kmax;
    std::sort(s.begin(), s.end());
    return s;
  }

  std::mt19937_64& engine() { return rng_; }

private:
  std::mt19937_64 rng_;
};

}  // namespace oracle
