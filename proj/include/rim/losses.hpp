#pragma once

// Loss kernels used by both the solvers and the objective oracles.

#include "rim/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rim {

// Tukey bisquare -------------------------------------------------------------

inline double tukey_rho(double r, double r0) {
  const double c = r0 * r0 / 6;
  if (std::abs(r) >= r0) return c;
  const double u = 1 - (r / r0) * (r / r0);
  return c * (1 - u * u * u);
}

/// rho'(r) = r (1 - (r/r0)^2)^2 inside the cutoff, 0 outside.
inline double tukey_psi(double r, double r0) {
  if (std::abs(r) >= r0) return 0;
  const double u = 1 - (r / r0) * (r / r0);
  return r * u * u;
}

/// IRLS weight psi(r)/r.
inline double tukey_weight(double r, double r0) {
  if (std::abs(r) >= r0) return 0;
  const double u = 1 - (r / r0) * (r / r0);
  return u * u;
}

/// (1/n) sum rho(y_i - <beta, x_i>).
inline double tukey_loss(const Matrix& X, const Vector& y, const Vector& beta, double r0) {
  const Vector r = y - X * beta;
  double s = 0;
  for (Index i = 0; i < r.size(); ++i) s += tukey_rho(r[i], r0);
  return s / static_cast<double>(r.size());
}

// k-means ----------------------------------------------------------------------
//
// Data are rows of an n x d matrix; K centers are packed into one vector of
// length d*K with center j occupying [j*d, (j+1)*d).

inline Index center_count(const Matrix& data, const Vector& centers) {
  const Index d = data.cols();
  if (d == 0 || centers.size() % d != 0) throw std::invalid_argument("k-means: center vector does not match data dimension");
  return centers.size() / d;
}

inline double squared_distance(const Matrix& data, Index i, const Vector& centers, Index j) {
  const Index d = data.cols();
  double s = 0;
  for (Index c = 0; c < d; ++c) {
    const double t = data(i, c) - centers[j * d + c];
    s += t * t;
  }
  return s;
}

/// Nearest center of every point; ties go to the lowest index.
inline std::vector<Index> kmeans_labels(const Matrix& data, const Vector& centers) {
  const Index K = center_count(data, centers);
  std::vector<Index> labels(static_cast<std::size_t>(data.rows()));
  for (Index i = 0; i < data.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Index arg = 0;
    for (Index j = 0; j < K; ++j) {
      const double dist = squared_distance(data, i, centers, j);
      if (dist < best) {
        best = dist;
        arg = j;
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
  }
  return labels;
}

/// (1/2n) sum_i min_j ||x_i - z_j||^2.
inline double kmeans_loss(const Matrix& data, const Vector& centers) {
  const Index K = center_count(data, centers);
  double s = 0;
  for (Index i = 0; i < data.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < K; ++j) best = std::min(best, squared_distance(data, i, centers, j));
    s += best;
  }
  return s / (2.0 * static_cast<double>(data.rows()));
}

// Logistic ---------------------------------------------------------------------

/// log(1 + e^t) without overflow.
inline double softplus(double t) { return std::log1p(std::exp(-std::abs(t))) + std::max(t, 0.0); }

inline double sigmoid(double t) {
  if (t >= 0) return 1 / (1 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1 + e);
}

/// sum_i -log p(y_i | x_i; theta) for labels in {0, 1}, from margins t = X theta.
inline double logistic_loss_from_margins(const Vector& margins, const Vector& y) {
  double s = 0;
  for (Index i = 0; i < margins.size(); ++i) s += softplus(margins[i]) - y[i] * margins[i];
  return s;
}

inline double logistic_loss(const Matrix& X, const Vector& y, const Vector& theta) {
  return logistic_loss_from_margins(X * theta, y);
}

inline Vector logistic_gradient(const Matrix& X, const Vector& y, const Vector& theta) {
  const Vector t = X * theta;
  Vector s(t.size());
  for (Index i = 0; i < t.size(); ++i) s[i] = sigmoid(t[i]) - y[i];
  return X.transpose() * s;
}

}  // namespace rim
