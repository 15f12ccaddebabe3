#pragma once

// The "run" phase: descent solvers iterated to stagnation. Every runner
// returns a RunTrace whose final point is where an inspection should start.

#include "rim/core.hpp"
#include "rim/losses.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace rim {

struct RunnerConfig {
  double step = 1.0 / 40;
  std::size_t max_iterations = 100'000;
  double stagnation_tol = 1e-8;
  std::size_t patience = 5;

  void validate() const {
    if (!(step > 0)) throw std::invalid_argument("RunnerConfig: step must be positive");
    if (patience < 1) throw std::invalid_argument("RunnerConfig: patience must be at least 1");
    if (!(stagnation_tol >= 0)) throw std::invalid_argument("RunnerConfig: stagnation tolerance must be non-negative");
  }
};

namespace detail {

// Stagnation and divergence bookkeeping over a history of objective values.
class Monitor {
 public:
  explicit Monitor(const RunnerConfig& c) : config_(c) {}

  /// Records a value; returns a stop reason once one applies.
  std::optional<StopReason> push(double v) {
    if (!history_.empty() && v > history_.back())
      ++increases_;
    else
      increases_ = 0;
    history_.push_back(v);
    if (increases_ >= config_.patience) return StopReason::diverged;
    if (history_.size() > config_.patience) {
      const double old = history_[history_.size() - 1 - config_.patience];
      if (std::abs(v - old) <= config_.stagnation_tol) return StopReason::stagnated;
    }
    return std::nullopt;
  }

 private:
  const RunnerConfig& config_;
  std::vector<double> history_;
  std::size_t increases_ = 0;
};

// Lowest iterate seen.
struct Best {
  Vector x;
  double value;
  Best(const Vector& x0, double v0) : x(x0), value(v0) {}
  void offer(const Vector& p, double v) {
    if (v < value) {
      x = p;
      value = v;
    }
  }
};

inline void notify(const std::function<void(const Vector&, double)>& f, const Vector& x, double v) {
  if (f) f(x, v);
}

inline void finish(RunTrace& t, Vector x, double value, StopReason why) {
  t.final_point = std::move(x);
  t.final_value = value;
  t.stop = why;
}

}  // namespace detail

/// Called with every iterate (the start included) and its objective value.
using IterateObserver = std::function<void(const Vector& x, double value)>;

/// x <- x - step * grad F(x) until |F(x^t) - F(x^{t-patience})| <= tol.
/// After `patience` consecutive increases the run stops as diverged. The
/// reported point is the lowest iterate visited, so the output never lies
/// above the start even when the step is too long for the local curvature.
inline RunTrace gradient_descent(const Objective& objective, const Vector& x0, const RunnerConfig& config,
                                 const IterateObserver& observe = {}) {
  config.validate();
  Evaluator ev(objective);
  RunTrace trace;
  detail::Monitor monitor(config);
  Vector x = x0;
  double fx = ev.value(x);
  trace.record(Phase::run, fx);
  detail::notify(observe, x, fx);
  monitor.push(fx);
  detail::Best best(x, fx);
  StopReason why = StopReason::max_iterations;
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    x -= config.step * ev.gradient(x);
    fx = ev.value(x);
    trace.record(Phase::run, fx);
    detail::notify(observe, x, fx);
    best.offer(x, fx);
    ++trace.iterations;
    if (auto stop = monitor.push(fx)) {
      why = *stop;
      break;
    }
  }
  trace.evaluations = ev.counts();
  if (best.value < fx)
    detail::finish(trace, std::move(best.x), best.value, why);
  else
    detail::finish(trace, std::move(x), fx, why);
  return trace;
}

/// Cyclic block gradient steps, one objective record per sweep. Reports the
/// lowest iterate visited, as gradient_descent does.
inline RunTrace block_coordinate_descent(const Objective& objective, const BlockSpec& blocks, const Vector& x0,
                                         const RunnerConfig& config, const IterateObserver& observe = {}) {
  config.validate();
  if (blocks.dimension() != x0.size()) throw std::invalid_argument("block_coordinate_descent: blocks do not match point");
  Evaluator ev(objective);
  RunTrace trace;
  detail::Monitor monitor(config);
  Vector x = x0;
  double fx = ev.value(x);
  trace.record(Phase::run, fx);
  detail::notify(observe, x, fx);
  monitor.push(fx);
  detail::Best best(x, fx);
  StopReason why = StopReason::max_iterations;
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    for (const Block& b : blocks.blocks()) {
      const Vector g = ev.gradient(x);
      x.segment(b.offset, b.length) -= config.step * g.segment(b.offset, b.length);
    }
    fx = ev.value(x);
    trace.record(Phase::run, fx);
    detail::notify(observe, x, fx);
    best.offer(x, fx);
    ++trace.iterations;
    if (auto stop = monitor.push(fx)) {
      why = *stop;
      break;
    }
  }
  trace.evaluations = ev.counts();
  if (best.value < fx)
    detail::finish(trace, std::move(best.x), best.value, why);
  else
    detail::finish(trace, std::move(x), fx, why);
  return trace;
}

/// Lloyd iteration on (1/2n) sum min_j ||x_i - z_j||^2; stops when the labels
/// stop changing. An empty cluster is re-seeded at the point farthest from
/// its assigned center.
inline RunTrace em_kmeans(const Matrix& data, Index K, const Vector& z0, const RunnerConfig& config = {}) {
  const Index n = data.rows(), d = data.cols();
  if (K < 1 || n < K) throw std::invalid_argument("em_kmeans: require 1 <= K <= n");
  if (z0.size() != d * K) throw std::invalid_argument("em_kmeans: initial centers have wrong size");

  RunTrace trace;
  Vector z = z0;
  double fz = kmeans_loss(data, z);
  trace.record(Phase::run, fz);
  trace.evaluations.values = 1;
  std::vector<Index> labels = kmeans_labels(data, z);
  StopReason why = StopReason::max_iterations;

  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    Matrix sums = Matrix::Zero(d, K);
    std::vector<Index> counts(static_cast<std::size_t>(K), 0);
    for (Index i = 0; i < n; ++i) {
      const Index j = labels[static_cast<std::size_t>(i)];
      sums.col(j) += data.row(i).transpose();
      ++counts[static_cast<std::size_t>(j)];
    }
    for (Index j = 0; j < K; ++j)
      if (counts[static_cast<std::size_t>(j)] > 0)
        z.segment(j * d, d) = sums.col(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
    // Empty clusters are re-seeded against the updated means.
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (Index j = 0; j < K; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) continue;
      double worst = -1;
      Index arg = 0;
      for (Index i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        const double dist = squared_distance(data, i, z, labels[static_cast<std::size_t>(i)]);
        if (dist > worst) {
          worst = dist;
          arg = i;
        }
      }
      taken[static_cast<std::size_t>(arg)] = true;
      z.segment(j * d, d) = data.row(arg).transpose();
    }
    std::vector<Index> next = kmeans_labels(data, z);
    fz = kmeans_loss(data, z);
    ++trace.evaluations.values;
    trace.record(Phase::run, fz);
    ++trace.iterations;
    if (next == labels) {
      why = StopReason::stagnated;
      break;
    }
    labels = std::move(next);
  }
  detail::finish(trace, std::move(z), fz, why);
  return trace;
}

/// Iteratively reweighted least squares for Tukey's bisquare loss, with
/// weights (1 - (r/r0)^2)^2 inside the cutoff. A weighted system that is
/// empty or rank deficient ends the run as `degenerate`.
inline RunTrace irls_tukey(const Matrix& X, const Vector& y, const Vector& beta0, double r0,
                           const RunnerConfig& config = {}, const IterateObserver& observe = {}) {
  if (X.rows() != y.size() || X.cols() != beta0.size()) throw std::invalid_argument("irls_tukey: dimension mismatch");
  if (!(r0 > 0)) throw std::invalid_argument("irls_tukey: r0 must be positive");
  RunTrace trace;
  Vector beta = beta0;
  double loss = tukey_loss(X, y, beta, r0);
  trace.record(Phase::run, loss);
  detail::notify(observe, beta, loss);
  trace.evaluations.values = 1;
  StopReason why = StopReason::max_iterations;
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    const Vector r = y - X * beta;
    Vector sw(r.size());
    for (Index i = 0; i < r.size(); ++i) sw[i] = std::sqrt(tukey_weight(r[i], r0));
    if ((sw.array() > 0).count() < X.cols()) {
      why = StopReason::degenerate;
      break;
    }
    const Matrix WX = sw.asDiagonal() * X;
    Eigen::ColPivHouseholderQR<Matrix> qr(WX);
    if (qr.rank() < X.cols()) {
      why = StopReason::degenerate;
      break;
    }
    const Vector next = qr.solve(sw.cwiseProduct(y));
    const double change = (next - beta).norm();
    beta = next;
    loss = tukey_loss(X, y, beta, r0);
    ++trace.evaluations.values;
    trace.record(Phase::run, loss);
    detail::notify(observe, beta, loss);
    ++trace.iterations;
    if (change <= config.stagnation_tol) {
      why = StopReason::stagnated;
      break;
    }
  }
  detail::finish(trace, std::move(beta), loss, why);
  return trace;
}

// Half thresholding --------------------------------------------------------------

/// Jump point of the half-thresholding operator: (54^{1/3}/4)(2 lambda)^{2/3}.
inline double half_threshold_level(double lambda) { return std::cbrt(54.0) / 4 * std::pow(2 * lambda, 2.0 / 3.0); }

/// Global minimizer of 1/2 (x - z)^2 + lambda sqrt|x|.
inline double half_threshold_scalar(double z, double lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("half_threshold_scalar: lambda must be positive");
  const double a = std::abs(z);
  if (a <= half_threshold_level(lambda)) return 0;
  const double arg = std::clamp(lambda / 4 * std::pow(a / 3, -1.5), -1.0, 1.0);
  const double phi = std::acos(arg);
  return 2.0 / 3.0 * z * (1 + std::cos(2 * std::numbers::pi / 3 - 2.0 / 3.0 * phi));
}

/// 1/2 ||Ax - b||^2 + lambda sum sqrt|x_j|.
inline double half_objective(const Matrix& A, const Vector& b, double lambda, const Vector& x) {
  return 0.5 * (A * x - b).squaredNorm() + lambda * x.cwiseAbs().cwiseSqrt().sum();
}

using SweepObserver = std::function<void(const Vector& x, const Vector& residual)>;

/// Cyclic exact coordinate minimization of the l1/2-regularized least
/// squares. Each update is x_j <- H(x_j - mu A_j^T(Ax - b), lambda mu) with
/// mu = 1/||A_j||^2, keeping the residual Ax - b cached.
inline RunTrace cd_half_threshold(const Matrix& A, const Vector& b, double lambda, const Vector& x0,
                                  const RunnerConfig& config = {}, const SweepObserver& observer = {}) {
  if (A.rows() != b.size() || A.cols() != x0.size()) throw std::invalid_argument("cd_half_threshold: dimension mismatch");
  const Index n = A.cols();
  Vector col_sq(n);
  for (Index j = 0; j < n; ++j) {
    col_sq[j] = A.col(j).squaredNorm();
    if (!(col_sq[j] > 0)) throw std::invalid_argument("cd_half_threshold: zero column in A");
  }
  RunTrace trace;
  Vector x = x0;
  Vector r = A * x - b;
  auto objective = [&] { return 0.5 * r.squaredNorm() + lambda * x.cwiseAbs().cwiseSqrt().sum(); };
  double q = objective();
  trace.record(Phase::run, q);
  trace.evaluations.values = 1;
  StopReason why = StopReason::max_iterations;
  for (std::size_t sweep = 0; sweep < config.max_iterations; ++sweep) {
    double largest = 0;
    for (Index j = 0; j < n; ++j) {
      const double mu = 1 / col_sq[j];
      const double z = x[j] - mu * A.col(j).dot(r);
      const double next = half_threshold_scalar(z, lambda * mu);
      const double delta = next - x[j];
      if (delta != 0) {
        r += delta * A.col(j);
        x[j] = next;
        largest = std::max(largest, std::abs(delta));
      }
    }
    q = objective();
    ++trace.evaluations.values;
    trace.record(Phase::run, q);
    ++trace.iterations;
    if (observer) observer(x, r);
    if (largest <= config.stagnation_tol) {
      why = StopReason::stagnated;
      break;
    }
  }
  detail::finish(trace, std::move(x), q, why);
  return trace;
}

/// Full-vector iterative half thresholding with step 1/||A||_2^2.
inline RunTrace iterative_half_threshold(const Matrix& A, const Vector& b, double lambda, const Vector& x0,
                                         const RunnerConfig& config = {}) {
  if (A.rows() != b.size() || A.cols() != x0.size()) throw std::invalid_argument("iterative_half_threshold: dimension mismatch");
  const double spectral = Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
  const double mu = 1 / (spectral * spectral);
  RunTrace trace;
  Vector x = x0;
  double q = half_objective(A, b, lambda, x);
  trace.record(Phase::run, q);
  trace.evaluations.values = 1;
  StopReason why = StopReason::max_iterations;
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    const Vector z = x - mu * (A.transpose() * (A * x - b));
    double largest = 0;
    for (Index j = 0; j < x.size(); ++j) {
      const double next = half_threshold_scalar(z[j], lambda * mu);
      largest = std::max(largest, std::abs(next - x[j]));
      x[j] = next;
    }
    q = half_objective(A, b, lambda, x);
    ++trace.evaluations.values;
    trace.record(Phase::run, q);
    ++trace.iterations;
    if (largest <= config.stagnation_tol) {
      why = StopReason::stagnated;
      break;
    }
  }
  detail::finish(trace, std::move(x), q, why);
  return trace;
}

// MCP -----------------------------------------------------------------------------

/// lambda|x| - x^2/(2 gamma) for |x| <= gamma lambda, gamma lambda^2 / 2 beyond.
inline double mcp_penalty(double x, double lambda, double gamma) {
  if (!(gamma > 0) || !(lambda >= 0)) throw std::invalid_argument("mcp_penalty: require gamma > 0, lambda >= 0");
  const double a = std::abs(x);
  if (a <= gamma * lambda) return lambda * a - a * a / (2 * gamma);
  return 0.5 * gamma * lambda * lambda;
}

inline double mcp_penalty(const Vector& x, double lambda, double gamma) {
  double s = 0;
  for (Index i = 0; i < x.size(); ++i) s += mcp_penalty(x[i], lambda, gamma);
  return s;
}

inline double soft_threshold(double z, double lambda) {
  const double a = std::abs(z) - lambda;
  return a > 0 ? std::copysign(a, z) : 0.0;
}

/// argmin_x 1/2 (x - z)^2 + p_{lambda,gamma}(x).
///
/// For gamma > 1 this is the firm-threshold formula. For gamma <= 1 the
/// inner piece is concave and the minimizer is 0 or z, a hard threshold at
/// sqrt(gamma) lambda.
inline double mcp_prox(double z, double lambda, double gamma) {
  if (!(gamma > 0) || !(lambda >= 0)) throw std::invalid_argument("mcp_prox: require gamma > 0, lambda >= 0");
  if (gamma > 1) {
    if (std::abs(z) > gamma * lambda) return z;
    return gamma / (gamma - 1) * soft_threshold(z, lambda);
  }
  return std::abs(z) > std::sqrt(gamma) * lambda ? z : 0.0;
}

/// argmin_x 1/2 (x - z)^2 + c p_{lambda,gamma}(x), using
/// c p_{lambda,gamma} = p_{c lambda, gamma / c}.
inline double mcp_prox_scaled(double z, double c, double lambda, double gamma) {
  if (!(c > 0)) throw std::invalid_argument("mcp_prox_scaled: scale must be positive");
  return mcp_prox(z, c * lambda, gamma / c);
}

struct McpSettings {
  double weight = 1.2;  // multiplier on the penalty
  double lambda = 1;
  double gamma = 5;
};

/// l(theta) + weight * p_MCP(theta) for the logistic negative log-likelihood.
inline double mcp_logistic_objective(const Matrix& X, const Vector& y, const McpSettings& s, const Vector& theta) {
  return logistic_loss(X, y, theta) + s.weight * mcp_penalty(theta, s.lambda, s.gamma);
}

/// Prox-linear iteration theta <- prox_{step * weight * p}(theta - step grad l(theta)),
/// stopping once ||theta^{t+1} - theta^t|| <= tol. Not monotone when the step
/// exceeds 1/L, so like gradient_descent it stops as diverged after `patience`
/// consecutive increases and reports the lowest iterate visited.
inline RunTrace prox_linear_mcp(const Matrix& X, const Vector& y, const McpSettings& s, const Vector& theta0,
                                const RunnerConfig& config) {
  config.validate();
  if (!(s.gamma > 1)) throw std::invalid_argument("prox_linear_mcp: gamma must exceed 1");
  if (X.rows() != y.size() || X.cols() != theta0.size()) throw std::invalid_argument("prox_linear_mcp: dimension mismatch");
  RunTrace trace;
  Vector theta = theta0;
  double f = mcp_logistic_objective(X, y, s, theta);
  trace.record(Phase::run, f);
  trace.evaluations.values = 1;
  detail::Best best(theta, f);
  const double c = config.step * s.weight;
  StopReason why = StopReason::max_iterations;
  std::size_t increases = 0;
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    const Vector z = theta - config.step * logistic_gradient(X, y, theta);
    ++trace.evaluations.gradients;
    Vector next(z.size());
    for (Index j = 0; j < z.size(); ++j) next[j] = mcp_prox_scaled(z[j], c, s.lambda, s.gamma);
    const double change = (next - theta).norm();
    theta = std::move(next);
    const double prev = f;
    f = mcp_logistic_objective(X, y, s, theta);
    ++trace.evaluations.values;
    trace.record(Phase::run, f);
    best.offer(theta, f);
    ++trace.iterations;
    if (change <= config.stagnation_tol) {
      why = StopReason::stagnated;
      break;
    }
    increases = f > prev ? increases + 1 : 0;
    if (increases >= config.patience) {
      why = StopReason::diverged;
      break;
    }
  }
  if (best.value < f)
    detail::finish(trace, std::move(best.x), best.value, why);
  else
    detail::finish(trace, std::move(theta), f, why);
  return trace;
}

}  // namespace rim
