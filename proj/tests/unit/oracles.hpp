#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library and favour obviousness over speed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace oracle {

/// Numerical Recipes LCG; reproducible from Python as (1664525 x + 1013904223) mod 2^32.
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed) : x_(seed % 4294967296ULL) {}
  double u() {
    x_ = (1664525ULL * x_ + 1013904223ULL) % 4294967296ULL;
    return static_cast<double>(x_) / 4294967296.0 - 0.5;
  }
  /// Sum of three centered uniforms.
  double e() {
    const double a = u();
    const double b = u();
    const double c = u();
    return a + b + c;
  }

 private:
  std::uint64_t x_;
};

inline std::vector<double> sorted_copy(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

/// Type 7 quantile straight from the order statistics.
inline double quantile7(std::vector<double> v, double p) {
  v = sorted_copy(std::move(v));
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Sample standard deviation in long double, two passes.
inline double sample_sd(const std::vector<double>& v) {
  long double m = 0.0L;
  for (double x : v) m += x;
  m /= static_cast<long double>(v.size());
  long double s = 0.0L;
  for (double x : v) s += (x - m) * (x - m);
  return static_cast<double>(std::sqrt(s / static_cast<long double>(v.size() - 1)));
}

inline double mean(const std::vector<double>& v) {
  long double s = 0.0L;
  for (double x : v) s += x;
  return static_cast<double>(s / static_cast<long double>(v.size()));
}

/// Solves the normal equations in long double by Gauss-Jordan with partial pivoting.
inline std::vector<double> normal_equations(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
  const std::size_t k = X[0].size();
  std::vector<std::vector<long double>> A(k, std::vector<long double>(k + 1, 0.0L));
  for (std::size_t r = 0; r < X.size(); ++r)
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) A[i][j] += static_cast<long double>(X[r][i]) * X[r][j];
      A[i][k] += static_cast<long double>(X[r][i]) * y[r];
    }
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r)
      if (std::fabs(static_cast<double>(A[r][c])) > std::fabs(static_cast<double>(A[piv][c]))) piv = r;
    std::swap(A[c], A[piv]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == c) continue;
      const long double f = A[r][c] / A[c][c];
      for (std::size_t j = c; j <= k; ++j) A[r][j] -= f * A[c][j];
    }
  }
  std::vector<double> b(k);
  for (std::size_t i = 0; i < k; ++i) b[i] = static_cast<double>(A[i][k] / A[i][i]);
  return b;
}

inline double ssr_of(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
  const auto b = normal_equations(X, y);
  long double s = 0.0L;
  for (std::size_t r = 0; r < X.size(); ++r) {
    long double fit = 0.0L;
    for (std::size_t j = 0; j < b.size(); ++j) fit += static_cast<long double>(b[j]) * X[r][j];
    s += (y[r] - fit) * (y[r] - fit);
  }
  return static_cast<double>(s);
}

inline double rel_diff(double a, double b) { return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)}); }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static int counter = 0;
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  auto p = std::filesystem::temp_directory_path() /
           ("fbtest-" + tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
