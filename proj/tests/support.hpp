#pragma once

// Hand-rolled generators and brute-force oracles shared by the test suites.

#include "rim/core.hpp"
#include "rim/rng.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace rim::testing {

inline Vector random_vector(Rng& rng, Index n, double lo = -1, double hi = 1) {
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = rng.uniform(lo, hi);
  return x;
}

inline Matrix random_matrix(Rng& rng, Index rows, Index cols, double lo = -1, double hi = 1) {
  Matrix A(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) A(i, j) = rng.uniform(lo, hi);
  return A;
}

struct ScalarMin {
  double x;
  double value;
};

/// Minimizer of a scalar function: a uniform grid over [lo, hi] with spacing
/// `h`, then golden-section refinement inside the best cell's neighbours.
inline ScalarMin brute_force_min(const std::function<double(double)>& f, double lo, double hi, double h) {
  const auto n = static_cast<long>(std::ceil((hi - lo) / h));
  double best_x = lo, best = f(lo);
  for (long k = 1; k <= n; ++k) {
    const double x = std::min(hi, lo + static_cast<double>(k) * h);
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - h), b = std::min(hi, best_x + h);
  const double g = (std::sqrt(5.0) - 1) / 2;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  ScalarMin out{best_x, best};
  // Kinks (0 for sqrt|x| and |x|) can beat the refined point.
  for (double x : {(a + b) / 2, 0.0}) {
    if (x < lo || x > hi) continue;
    const double v = f(x);
    if (v < out.value) out = {x, v};
  }
  return out;
}

inline bool non_increasing(const RunTrace& t, double tol = 0) {
  for (std::size_t i = 1; i < t.iterates.size(); ++i)
    if (t.iterates[i].value > t.iterates[i - 1].value + tol) return false;
  return true;
}

inline std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// ||a - b|| / max(1, ||b||).
inline double relative_error(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace rim::testing
