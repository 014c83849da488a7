#pragma once

// Test-side reference computations, written without the library's internals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Balancing loss by explicit arm enumeration. Without `covariates` the raw
// features are compared with column j dropped; otherwise covariates[j] is
// compared in full.
inline double balancing_loss(const Matrix& x, const Vector& w,
                             const std::vector<Matrix>* covariates = nullptr) {
  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  double total = 0.0;
  for (int j = 0; j < p; ++j) {
    double m1 = 0.0, m0 = 0.0;
    for (int i = 0; i < n; ++i) (x(i, j) == 1.0 ? m1 : m0) += w(i);
    if (m1 < 1e-12 || m0 < 1e-12) continue;
    const Matrix& c = covariates ? (*covariates)[j] : x;
    for (int k = 0; k < c.cols(); ++k) {
      if (!covariates && k == j) continue;
      double a1 = 0.0, a0 = 0.0;
      for (int i = 0; i < n; ++i) (x(i, j) == 1.0 ? a1 : a0) += w(i) * c(i, k);
      const double d = a1 / m1 - a0 / m0;
      total += d * d;
    }
  }
  return total;
}

// Largest arm-mean gap; a column with an empty arm scores 1.
inline double max_imbalance(const Matrix& x, const Vector& w) {
  double best = 0.0;
  for (int j = 0; j < x.cols(); ++j) {
    double m1 = 0.0, m0 = 0.0;
    for (int i = 0; i < x.rows(); ++i) (x(i, j) == 1.0 ? m1 : m0) += w(i);
    if (m1 < 1e-12 || m0 < 1e-12) return 1.0;
    for (int k = 0; k < x.cols(); ++k) {
      if (k == j) continue;
      double a1 = 0.0, a0 = 0.0;
      for (int i = 0; i < x.rows(); ++i) (x(i, j) == 1.0 ? a1 : a0) += w(i) * x(i, k);
      best = std::max(best, std::abs(a1 / m1 - a0 / m0));
    }
  }
  return best;
}

inline Matrix pattern_rows(const std::vector<int>& codes, int p) {
  Matrix x(codes.size(), p);
  for (std::size_t r = 0; r < codes.size(); ++r)
    for (int j = 0; j < p; ++j) x(r, j) = (codes[r] >> j) & 1;
  return x;
}

// Worst alpha over every set of m absent patterns. Exact balancing weights
// put equal mass on each present pattern, so one row per pattern suffices.
inline double brute_alpha(int p, int m) {
  const int cells = 1 << p;
  double worst = 0.0;
  for (int mask = 0; mask < (1 << cells); ++mask) {
    if (__builtin_popcount(mask) != cells - m) continue;
    std::vector<int> present;
    for (int c = 0; c < cells; ++c)
      if (mask >> c & 1) present.push_back(c);
    const Matrix x = pattern_rows(present, p);
    worst = std::max(worst, max_imbalance(x, Vector::Ones(x.rows())));
  }
  return worst;
}

struct MonteCarlo {
  double mean = 0.0;
  double std_error = 0.0;
};

// Draws occupancy compositions of n into 2^p cells uniformly (stars and
// bars) and averages g(p, number of empty cells).
inline MonteCarlo composition_alpha(int n, int p, int draws, std::uint64_t seed,
                                    const std::function<double(int)>& g) {
  const int cells = 1 << p;
  const int slots = n + cells - 1;
  std::mt19937_64 rng(seed);
  std::vector<int> idx(slots);
  double sum = 0.0, sum2 = 0.0;
  for (int d = 0; d < draws; ++d) {
    for (int i = 0; i < slots; ++i) idx[i] = i;
    // partial Fisher-Yates picks the bar positions
    for (int i = 0; i < cells - 1; ++i) {
      std::uniform_int_distribution<int> pick(i, slots - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<int> bars(idx.begin(), idx.begin() + (cells - 1));
    std::sort(bars.begin(), bars.end());
    int empty = 0, prev = -1;
    for (int b : bars) {
      if (b - prev - 1 == 0) ++empty;
      prev = b;
    }
    if (slots - prev - 1 == 0) ++empty;
    const double a = g(empty);
    sum += a;
    sum2 += a * a;
  }
  MonteCarlo out;
  out.mean = sum / draws;
  const double var = (sum2 - draws * out.mean * out.mean) / (draws - 1);
  out.std_error = std::sqrt(std::max(var, 0.0) / draws);
  return out;
}

// Unregularised logistic MLE without intercept by Newton's method, with
// P(Y=1 | x) = sigmoid(x . beta).
inline Vector newton_logistic(const Matrix& x, const Vector& y, int iters = 100) {
  Vector beta = Vector::Zero(x.cols());
  for (int it = 0; it < iters; ++it) {
    const Vector z = x * beta;
    Vector mu(z.size()), s(z.size());
    for (int i = 0; i < z.size(); ++i) {
      mu(i) = 1.0 / (1.0 + std::exp(-z(i)));
      s(i) = mu(i) * (1.0 - mu(i));
    }
    const Vector grad = x.transpose() * (y - mu);
    const Matrix hess = x.transpose() * s.asDiagonal() * x;
    const Vector delta = hess.ldlt().solve(grad);
    beta += delta;
    if (delta.norm() < 1e-13) break;
  }
  return beta;
}

// Central differences of f along every coordinate of `at`.
inline Vector central_diff(const std::function<double(const Vector&)>& f, const Vector& at,
                           double h = 1e-5) {
  Vector g(at.size());
  for (int i = 0; i < at.size(); ++i) {
    Vector a = at, b = at;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

}  // namespace oracle
