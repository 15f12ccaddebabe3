#pragma once

// Objective families, seeded instance generators and the Iris loader.

#include "rim/core.hpp"
#include "rim/losses.hpp"
#include "rim/rng.hpp"
#include "rim/runners.hpp"

#include <Eigen/Cholesky>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rim {

// Quad-sine --------------------------------------------------------------------

struct QuadSineParams {
  double a = 0.3;  // amplitude
  double b = 3;    // frequency
};

/// x^2/2 + a sin(b pi (x - 1/(2b))) + a. Global minimum 0 at x = 0.
inline Objective quad_sine(QuadSineParams p = {}) {
  if (!(p.a >= 0) || !(p.b > 0) || !std::isfinite(p.a) || !std::isfinite(p.b))
    throw std::invalid_argument("quad_sine: require finite a >= 0, b > 0");
  Objective o;
  o.dimension = 1;
  o.value = [p](const Vector& x) {
    const double t = x[0];
    return t * t / 2 + p.a * std::sin(p.b * std::numbers::pi * (t - 1 / (2 * p.b))) + p.a;
  };
  o.gradient = [p](const Vector& x) {
    const double t = x[0];
    Vector g(1);
    g[0] = t + p.a * p.b * std::numbers::pi * std::cos(p.b * std::numbers::pi * (t - 1 / (2 * p.b)));
    return g;
  };
  return o;
}

// Modified Ackley --------------------------------------------------------------

/// -20 exp(-0.04(x^2+y^2)) - exp(0.7(sin(xy) + sin y) + 0.2 sin(x^2)) + 20.
inline Objective modified_ackley() {
  Objective o;
  o.dimension = 2;
  o.value = [](const Vector& v) {
    const double x = v[0], y = v[1];
    return -20 * std::exp(-0.04 * (x * x + y * y)) - std::exp(0.7 * (std::sin(x * y) + std::sin(y)) + 0.2 * std::sin(x * x)) + 20;
  };
  o.gradient = [](const Vector& v) {
    const double x = v[0], y = v[1];
    const double bowl = std::exp(-0.04 * (x * x + y * y));
    const double wave = std::exp(0.7 * (std::sin(x * y) + std::sin(y)) + 0.2 * std::sin(x * x));
    Vector g(2);
    g[0] = 1.6 * x * bowl - wave * (0.7 * y * std::cos(x * y) + 0.4 * x * std::cos(x * x));
    g[1] = 1.6 * y * bowl - wave * (0.7 * x * std::cos(x * y) + 0.7 * std::cos(y));
    return g;
  };
  return o;
}

// Gaussian clusters ------------------------------------------------------------

struct ClusterData {
  Matrix points;                // n x d
  std::vector<int> component;   // generating component of each row
};

struct GaussianComponent {
  std::array<double, 2> mean;
  std::array<double, 4> covariance;  // row-major 2x2
};

inline const std::array<GaussianComponent, 4>& gaussian_cluster_components() {
  static const std::array<GaussianComponent, 4> c{{
      {{-5, -3}, {0.8, 0.1, 0.1, 0.8}},
      {{5, -3}, {1.2, 0.6, 0.6, 0.7}},
      {{0, 5}, {0.5, 0.05, 0.05, 1.6}},
      {{2.5, 4}, {1.5, 0.05, 0.05, 0.6}},
  }};
  return c;
}

/// 4000 planar points, 1000 from each of four Gaussians, component by
/// component; each point is mean + chol(Sigma) z with z two standard normals.
inline ClusterData gaussian_clusters(std::uint64_t seed, Index per_component = 1000) {
  Rng rng(seed);
  const auto& comps = gaussian_cluster_components();
  ClusterData out;
  out.points.resize(per_component * static_cast<Index>(comps.size()), 2);
  out.component.reserve(static_cast<std::size_t>(out.points.rows()));
  Index row = 0;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    Eigen::Matrix2d sigma;
    sigma << comps[c].covariance[0], comps[c].covariance[1], comps[c].covariance[2], comps[c].covariance[3];
    const Eigen::Matrix2d L = sigma.llt().matrixL();
    for (Index i = 0; i < per_component; ++i, ++row) {
      Eigen::Vector2d z;
      z[0] = rng.normal();
      z[1] = rng.normal();
      const Eigen::Vector2d p = Eigen::Vector2d(comps[c].mean[0], comps[c].mean[1]) + L * z;
      out.points.row(row) = p.transpose();
      out.component.push_back(static_cast<int>(c));
    }
  }
  return out;
}

// Iris -------------------------------------------------------------------------

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Comma-separated rows of 4 numeric features with an optional 5th label
/// column (ignored). A non-numeric first line is taken as a header.
inline Matrix parse_iris(std::istream& in) {
  std::vector<std::array<double, 4>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    const auto fields = detail::split(view, ',');
    std::array<double, 4> row{};
    bool numeric = fields.size() >= 4;
    for (std::size_t k = 0; numeric && k < 4; ++k) numeric = detail::parse_double(fields[k], row[k]);
    if (!numeric && rows.empty() && lineno == 1 && fields.size() >= 4 && fields.size() <= 5) continue;  // header
    if (fields.size() < 4 || fields.size() > 5)
      throw ParseError(lineno, "expected 4 numeric columns and an optional label, got " + std::to_string(fields.size()) +
                                   " columns");
    if (!numeric) throw ParseError(lineno, "non-numeric feature value");
    rows.push_back(row);
  }
  Matrix out(static_cast<Index>(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Index k = 0; k < 4; ++k) out(static_cast<Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
  return out;
}

inline Matrix load_iris(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_iris: cannot open " + path);
  return parse_iris(in);
}

// k-means objective ------------------------------------------------------------

/// (1/2n) sum_i min_j ||x_i - z_j||^2 over packed centers. Replacing exactly
/// one center uses per-point distances to the other centers, computed once
/// per bound base point.
inline Objective kmeans_objective(const Matrix& data, Index K) {
  if (K < 1) throw std::invalid_argument("kmeans_objective: K must be positive");
  auto pts = std::make_shared<const Matrix>(data);
  const Index d = data.cols();
  Objective o;
  o.dimension = d * K;
  o.value = [pts](const Vector& z) { return kmeans_loss(*pts, z); };
  o.partial = [pts, d, K](const Vector& base, std::span<const Index> coords) -> PartialEvaluator {
    const bool one_center = static_cast<Index>(coords.size()) == d && coords[0] % d == 0 &&
                            [&] {
                              for (std::size_t k = 1; k < coords.size(); ++k)
                                if (coords[k] != coords[0] + static_cast<Index>(k)) return false;
                              return true;
                            }();
    if (!one_center) {
      std::vector<Index> c(coords.begin(), coords.end());
      return [pts, base, c](std::span<const double> v) {
        return kmeans_loss(*pts, Evaluator::substitute(base, c, v));
      };
    }
    const Index moved = coords[0] / d;
    const Index n = pts->rows();
    auto others = std::make_shared<Vector>(Vector::Constant(n, std::numeric_limits<double>::infinity()));
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < K; ++j)
        if (j != moved) (*others)[i] = std::min((*others)[i], squared_distance(*pts, i, base, j));
    return [pts, others, d](std::span<const double> v) {
      const Index n = pts->rows();
      double s = 0;
      for (Index i = 0; i < n; ++i) {
        double dist = 0;
        for (Index c = 0; c < d; ++c) {
          const double t = (*pts)(i, c) - v[static_cast<std::size_t>(c)];
          dist += t * t;
        }
        s += std::min((*others)[i], dist);
      }
      return s / (2.0 * static_cast<double>(n));
    };
  };
  return o;
}

/// K distinct data rows as packed initial centers.
inline Vector random_data_centers(const Matrix& data, Index K, Rng& rng) {
  const auto idx = rng.sample_without_replacement(static_cast<std::size_t>(data.rows()), static_cast<std::size_t>(K));
  Vector z(data.cols() * K);
  for (Index j = 0; j < K; ++j) z.segment(j * data.cols(), data.cols()) = data.row(static_cast<Index>(idx[static_cast<std::size_t>(j)])).transpose();
  return z;
}

// Robust regression ------------------------------------------------------------

struct RobustRegInstance {
  Matrix X;  // n x 2, intercept column first
  Vector y;
  Vector beta_true;
  std::vector<std::size_t> outliers;
};

/// y = 5 + x + e with x ~ N(0,1), e ~ N(0, 0.5) (variance), and extra
/// N(0, 5) (variance) noise added to 4 of the 20 responses.
inline RobustRegInstance robust_reg_instance(std::uint64_t seed, std::size_t n = 20, std::size_t outliers = 4) {
  Rng rng(seed);
  RobustRegInstance inst;
  inst.X.resize(static_cast<Index>(n), 2);
  inst.y.resize(static_cast<Index>(n));
  inst.beta_true = Vector(2);
  inst.beta_true << 5, 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.normal();
    inst.X(static_cast<Index>(i), 0) = 1;
    inst.X(static_cast<Index>(i), 1) = x;
    inst.y[static_cast<Index>(i)] = 5 + x + rng.normal(0, std::sqrt(0.5));
  }
  inst.outliers = rng.sample_without_replacement(n, outliers);
  for (std::size_t i : inst.outliers) inst.y[static_cast<Index>(i)] += rng.normal(0, std::sqrt(5.0));
  return inst;
}

inline constexpr double kTukeyCutoff = 4.685;

/// (1/n) sum rho(y_i - <beta, x_i>); bounded by r0^2/6.
inline Objective tukey_objective(const Matrix& X, const Vector& y, double r0 = kTukeyCutoff) {
  auto xs = std::make_shared<const Matrix>(X);
  auto ys = std::make_shared<const Vector>(y);
  Objective o;
  o.dimension = X.cols();
  o.value = [xs, ys, r0](const Vector& beta) { return tukey_loss(*xs, *ys, beta, r0); };
  o.gradient = [xs, ys, r0](const Vector& beta) {
    const Vector r = *ys - *xs * beta;
    Vector psi(r.size());
    for (Index i = 0; i < r.size(); ++i) psi[i] = tukey_psi(r[i], r0);
    return Vector(-(xs->transpose() * psi) / static_cast<double>(r.size()));
  };
  return o;
}

// Compressed sensing -----------------------------------------------------------

struct CsInstance {
  Matrix A;  // m x n
  Vector b;
  Vector x_true;
  double lambda = 0.05;
};

/// A_ij ~ U(0, 1/sqrt(m)) drawn row by row, n = 2m, 10% of x nonzero with
/// values U(0.2, 0.8), b = A x.
inline CsInstance cs_instance(Index m, std::uint64_t seed, double lambda = 0.05) {
  if (m < 1) throw std::invalid_argument("cs_instance: m must be positive");
  Rng rng(seed);
  const Index n = 2 * m;
  CsInstance inst;
  inst.lambda = lambda;
  inst.A.resize(m, n);
  const double hi = 1 / std::sqrt(static_cast<double>(m));
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) inst.A(i, j) = rng.uniform(0, hi);
  const auto k = static_cast<std::size_t>(std::max<long>(1, std::lround(0.1 * static_cast<double>(n))));
  inst.x_true = Vector::Zero(n);
  for (std::size_t j : rng.sample_without_replacement(static_cast<std::size_t>(n), k))
    inst.x_true[static_cast<Index>(j)] = rng.uniform(0.2, 0.8);
  inst.b = inst.A * inst.x_true;
  return inst;
}

/// 1/2 ||Ax - b||^2 + lambda sum sqrt|x_j|, with a partial evaluator that
/// updates a residual cached at the base point in O(m) per moved coordinate.
inline Objective cs_objective(const CsInstance& inst) {
  auto A = std::make_shared<const Matrix>(inst.A);
  auto b = std::make_shared<const Vector>(inst.b);
  const double lambda = inst.lambda;
  Objective o;
  o.dimension = inst.A.cols();
  o.value = [A, b, lambda](const Vector& x) { return half_objective(*A, *b, lambda, x); };
  o.partial = [A, b, lambda](const Vector& base, std::span<const Index> coords) -> PartialEvaluator {
    auto residual = std::make_shared<const Vector>(*A * base - *b);
    double penalty = 0;
    for (Index j = 0; j < base.size(); ++j) penalty += std::sqrt(std::abs(base[j]));
    std::vector<Index> c(coords.begin(), coords.end());
    std::vector<double> old(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      old[k] = base[c[k]];
      penalty -= std::sqrt(std::abs(old[k]));
    }
    return [A, residual, c, old, penalty, lambda](std::span<const double> v) {
      Vector r = *residual;
      double p = penalty;
      for (std::size_t k = 0; k < c.size(); ++k) {
        const double delta = v[k] - old[k];
        if (delta != 0) r += delta * A->col(c[k]);
        p += std::sqrt(std::abs(v[k]));
      }
      return 0.5 * r.squaredNorm() + lambda * p;
    };
  };
  return o;
}

// Sparse logistic regression ---------------------------------------------------

struct LogRegInstance {
  Matrix X;  // N x d
  Vector y;  // labels in {0, 1}
  Vector theta_true;
  Matrix X_test;
  Vector y_test;
  double noise = 0.01;
  Index sparsity = 5;
  double weight = 1.2;  // 1.5 - 0.06 K
};

inline double logreg_penalty_weight(Index K) { return 1.5 - 0.06 * static_cast<double>(K); }

/// Standard Gaussian design (N x d, row by row), K-sparse Gaussian theta,
/// labels 1(x^T theta + w >= 0) with w ~ N(0, eps^2); then a test set drawn
/// the same way.
inline LogRegInstance logreg_instance(Index K, double eps, std::uint64_t seed, Index d = 50, Index N = 200,
                                      Index N_test = 1000) {
  if (K < 1 || K > d) throw std::invalid_argument("logreg_instance: require 1 <= K <= d");
  Rng rng(seed);
  LogRegInstance inst;
  inst.noise = eps;
  inst.sparsity = K;
  inst.weight = logreg_penalty_weight(K);
  inst.theta_true = Vector::Zero(d);
  for (std::size_t j : rng.sample_without_replacement(static_cast<std::size_t>(d), static_cast<std::size_t>(K)))
    inst.theta_true[static_cast<Index>(j)] = rng.normal();
  auto draw = [&](Index rows, Matrix& X, Vector& y) {
    X.resize(rows, d);
    y.resize(rows);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < d; ++j) X(i, j) = rng.normal();
    for (Index i = 0; i < rows; ++i) y[i] = (X.row(i).dot(inst.theta_true) + rng.normal(0, eps) >= 0) ? 1.0 : 0.0;
  };
  draw(N, inst.X, inst.y);
  draw(N_test, inst.X_test, inst.y_test);
  return inst;
}

/// Fraction of test points misclassified by the rule 1(x^T theta >= 0).
inline double logreg_test_error(const LogRegInstance& inst, const Vector& theta) {
  const Vector t = inst.X_test * theta;
  Index wrong = 0;
  for (Index i = 0; i < t.size(); ++i) wrong += ((t[i] >= 0 ? 1.0 : 0.0) != inst.y_test[i]);
  return static_cast<double>(wrong) / static_cast<double>(t.size());
}

/// l(theta) + weight p_MCP(theta), with a partial evaluator that updates the
/// cached margins X theta.
inline Objective logreg_objective(const LogRegInstance& inst, double lambda = 1, double gamma = 5) {
  auto X = std::make_shared<const Matrix>(inst.X);
  auto y = std::make_shared<const Vector>(inst.y);
  const McpSettings s{inst.weight, lambda, gamma};
  Objective o;
  o.dimension = inst.X.cols();
  o.value = [X, y, s](const Vector& theta) { return mcp_logistic_objective(*X, *y, s, theta); };
  o.partial = [X, y, s](const Vector& base, std::span<const Index> coords) -> PartialEvaluator {
    auto margins = std::make_shared<const Vector>(*X * base);
    double penalty = mcp_penalty(base, s.lambda, s.gamma);
    std::vector<Index> c(coords.begin(), coords.end());
    std::vector<double> old(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      old[k] = base[c[k]];
      penalty -= mcp_penalty(old[k], s.lambda, s.gamma);
    }
    return [X, y, s, margins, c, old, penalty](std::span<const double> v) {
      Vector t = *margins;
      double p = penalty;
      for (std::size_t k = 0; k < c.size(); ++k) {
        const double delta = v[k] - old[k];
        if (delta != 0) t += delta * X->col(c[k]);
        p += mcp_penalty(v[k], s.lambda, s.gamma);
      }
      return logistic_loss_from_margins(t, *y) + s.weight * p;
    };
  };
  return o;
}

}  // namespace rim
