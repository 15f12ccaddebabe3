#pragma once

// Optimality bounds for objectives with a known split F = f + r, where f is
// L-smooth and mu-PL and |r(x) - r(y)| <= alpha ||x - y|| + 2 beta.

#include "rim/core.hpp"
#include "rim/inspect.hpp"
#include "rim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rim {

namespace detail {
inline void require_nonneg(double v, const char* name, const char* fn) {
  if (!(v >= 0)) throw std::invalid_argument(std::string(fn) + ": " + name + " must be non-negative");
}
}  // namespace detail

/// Radius that lets a line inspection escape every non-global local
/// minimizer of the quad-sine function: min{2 sqrt(a), 2/b}.
inline double prop1_escape_radius(double a, double b) {
  detail::require_nonneg(a, "a", "prop1_escape_radius");
  if (!(b > 0)) throw std::invalid_argument("prop1_escape_radius: b must be positive");
  return std::min(2 * std::sqrt(a), 2 / b);
}

/// Gradient bound at an R-local minimizer: alpha + max{4 beta / R, 2 sqrt(beta L)}.
/// R may be +infinity.
inline double delta_R_local(double alpha, double beta, double L, double R) {
  detail::require_nonneg(alpha, "alpha", "delta_R_local");
  detail::require_nonneg(beta, "beta", "delta_R_local");
  detail::require_nonneg(L, "L", "delta_R_local");
  if (!(R > 0)) throw std::invalid_argument("delta_R_local: R must be positive");
  const double far = std::isinf(R) ? 0.0 : 4 * beta / R;
  return alpha + std::max(far, 2 * std::sqrt(beta * L));
}

struct BlockwiseDelta {
  double delta;       // ||v||, v_i = delta_R_local(alpha, beta, L, R_i)
  double simplified;  // sqrt(s) (alpha + max{4 beta / min R_i, 2 sqrt(beta L)})
};

inline BlockwiseDelta delta_blockwise(double alpha, double beta, double L, std::span<const double> radii) {
  if (radii.empty()) throw std::invalid_argument("delta_blockwise: need at least one block radius");
  double sq = 0;
  for (double R : radii) {
    const double v = delta_R_local(alpha, beta, L, R);
    sq += v * v;
  }
  const double rmin = *std::min_element(radii.begin(), radii.end());
  return {std::sqrt(sq), std::sqrt(static_cast<double>(radii.size())) * delta_R_local(alpha, beta, L, rmin)};
}

/// Gradient bound at a blockwise R-local minimizer up to eta:
/// ||v|| with v_i = alpha + max{(4 beta + 2 eta_i)/R_i, sqrt((4 beta + 2 eta_i) L)}.
inline double delta_approximate(double alpha, double beta, double L, std::span<const double> radii,
                                std::span<const double> eta) {
  if (radii.empty() || radii.size() != eta.size())
    throw std::invalid_argument("delta_approximate: need one eta per block radius");
  detail::require_nonneg(alpha, "alpha", "delta_approximate");
  detail::require_nonneg(beta, "beta", "delta_approximate");
  detail::require_nonneg(L, "L", "delta_approximate");
  double sq = 0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0)) throw std::invalid_argument("delta_approximate: radii must be positive");
    detail::require_nonneg(eta[i], "eta", "delta_approximate");
    const double c = 4 * beta + 2 * eta[i];
    const double far = std::isinf(radii[i]) ? 0.0 : c / radii[i];
    const double v = alpha + std::max(far, std::sqrt(c * L));
    sq += v * v;
  }
  return std::sqrt(sq);
}

struct OptimalityBounds {
  double gap;           // bound on F(x) - F*, tighter form when alpha = 0
  double distance;      // bound on d(x, chi*)
  double gap_general;   // (delta^2 + 2 alpha delta)/mu + alpha M + 2 beta
  std::optional<double> gap_alpha_zero;  // delta^2/(2 mu) + 2 beta, only when alpha = 0
};

/// Error bounds for any point with ||grad f|| <= delta.
inline OptimalityBounds theorem1_bounds(double delta, double mu, double alpha, double beta, double M) {
  if (!(mu > 0)) throw std::invalid_argument("theorem1_bounds: mu must be positive");
  detail::require_nonneg(delta, "delta", "theorem1_bounds");
  detail::require_nonneg(alpha, "alpha", "theorem1_bounds");
  detail::require_nonneg(beta, "beta", "theorem1_bounds");
  detail::require_nonneg(M, "M", "theorem1_bounds");
  OptimalityBounds b;
  b.gap_general = (delta * delta + 2 * alpha * delta) / mu + alpha * M + 2 * beta;
  b.distance = 2 * delta / mu + M;
  b.gap = b.gap_general;
  if (alpha == 0) {
    b.gap_alpha_zero = delta * delta / (2 * mu) + 2 * beta;
    b.gap = std::min(b.gap, *b.gap_alpha_zero);
  }
  return b;
}

/// Radius beyond which every R-local minimizer is global: 2(alpha + 2 sqrt(beta L))/mu + M.
inline double global_radius(double alpha, double beta, double L, double mu, double M) {
  if (!(mu > 0)) throw std::invalid_argument("global_radius: mu must be positive");
  return 2 * (alpha + 2 * std::sqrt(beta * L)) / mu + M;
}

/// Distance bound at a blockwise R-local minimizer with s blocks.
inline double blockwise_distance_bound(double alpha, double beta, double L, double mu, double M,
                                       std::span<const double> radii) {
  return 2 * delta_blockwise(alpha, beta, L, radii).simplified / mu + M;
}

/// Slack of an inspection certificate: nu + (Lbar + alpha) rbar + 2 beta.
inline double eta_certificate(double nu, double Lbar, double alpha, double beta, double rbar) {
  for (double v : {nu, Lbar, alpha, beta, rbar}) detail::require_nonneg(v, "argument", "eta_certificate");
  return nu + (Lbar + alpha) * rbar + 2 * beta;
}

/// Partial-gradient size that guarantees a sample with sufficient descent:
/// (9/2) L_i rbar + 3 alpha + (2 beta + nu)/rbar.
inline double prop2_escape_gradient(double Li, double alpha, double beta, double nu, double rbar) {
  if (!(rbar > 0)) throw std::invalid_argument("prop2_escape_gradient: density must be positive");
  for (double v : {Li, alpha, beta, nu}) detail::require_nonneg(v, "argument", "prop2_escape_gradient");
  return 4.5 * Li * rbar + 3 * alpha + (2 * beta + nu) / rbar;
}

// Brute-force R-local check -----------------------------------------------------

struct RLocalVerdict {
  bool certified = true;
  std::optional<Vector> counterexample;  // lowest probe below F(center) - tol
  double best_value = 0;                 // lowest probe value, center included
  std::size_t probes = 0;
};

/// Scans a grid net of B(center, R) with the given probe density. Reports the
/// lowest probe (ties to the lexicographically smallest point) if it lies
/// below F(center) - tol.
inline RLocalVerdict verify_R_local_bruteforce(const Objective& objective, const Vector& center, double R,
                                               double probe_density, double tol = 1e-12,
                                               std::size_t cap = GridNetSamples::kDefaultCap) {
  if (center.size() != objective.dimension) throw std::invalid_argument("verify_R_local_bruteforce: dimension mismatch");
  if (center.size() > 3) throw std::invalid_argument("verify_R_local_bruteforce: dimension must be at most 3");
  if (!(probe_density > 0)) throw std::invalid_argument("verify_R_local_bruteforce: probe density must be positive");
  const GridNetSamples grid(center.size(), R, std::min(probe_density, R), cap);
  Evaluator ev(objective);
  const double f0 = ev.value(center);
  RLocalVerdict out;
  out.best_value = f0;
  std::optional<Vector> best;
  double best_value = std::numeric_limits<double>::infinity();
  Vector y(center.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid.offset(k, std::span<double>(y.data(), static_cast<std::size_t>(y.size())));
    y += center;
    const double v = ev.value(y);
    const bool better = v < best_value ||
                        (v == best_value && best &&
                         std::lexicographical_compare(y.data(), y.data() + y.size(), best->data(), best->data() + best->size()));
    if (better) {
      best_value = v;
      best = y;
    }
  }
  out.probes = grid.size();
  out.best_value = std::min(f0, best_value);
  if (best && best_value < f0 - tol) {
    out.certified = false;
    out.counterexample = best;
  }
  return out;
}

// Decomposed objectives ----------------------------------------------------------

struct DecomposedObjective {
  Objective f;  // smooth part, gradient required
  Objective r;  // remainder
  double mu = 1;     // PL constant of f
  double L = 1;      // Lipschitz constant of grad f
  double alpha = 0;
  double beta = 0;
  double M = 0;      // diameter of argmin f
  double f_min = 0;  // min f
  std::vector<Vector> f_minimizers;     // representatives of argmin f
  double F_min = 0;                     // global minimum of F
  std::vector<Vector> global_minimizers;  // all global minimizers of F (finite set)

  Objective total() const {
    Objective o;
    o.dimension = f.dimension;
    o.value = [f = f.value, r = r.value](const Vector& x) { return f(x) + r(x); };
    return o;
  }

  double distance_to_minimizers(const Vector& x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& m : global_minimizers) d = std::min(d, (x - m).norm());
    return d;
  }
};

struct DecompositionCheck {
  bool sum_ok = true;     // F = f + r on probes
  bool pl_ok = true;      // 1/2 ||grad f||^2 >= mu (f - f*)
  bool growth_ok = true;  // |r(x) - r(y)| <= alpha ||x - y|| + 2 beta
  double worst_pl_slack = std::numeric_limits<double>::infinity();
  double worst_growth_slack = std::numeric_limits<double>::infinity();
  bool ok() const { return sum_ok && pl_ok && growth_ok; }
};

/// Probes the structural assumptions at `probes` uniform points of the box
/// [-box, box]^n (and the same number of point pairs for the growth bound).
inline DecompositionCheck check_decomposition(const DecomposedObjective& d, const Objective& F, Rng& rng,
                                              std::size_t probes = 1000, double box = 10) {
  if (!d.f.has_gradient()) throw std::invalid_argument("check_decomposition: f needs a gradient");
  DecompositionCheck out;
  const Index n = d.f.dimension;
  auto draw = [&] {
    Vector x(n);
    for (Index j = 0; j < n; ++j) x[j] = rng.uniform(-box, box);
    return x;
  };
  for (std::size_t k = 0; k < probes; ++k) {
    const Vector x = draw();
    const Vector y = draw();
    const double fx = d.f.value(x), rx = d.r.value(x), Fx = F.value(x);
    if (std::abs(Fx - (fx + rx)) > 1e-12 * (1 + std::abs(Fx))) out.sum_ok = false;
    const double pl = 0.5 * d.f.gradient(x).squaredNorm() - d.mu * (fx - d.f_min);
    out.worst_pl_slack = std::min(out.worst_pl_slack, pl);
    if (pl < -1e-9 * (1 + std::abs(fx))) out.pl_ok = false;
    const double growth = d.alpha * (x - y).norm() + 2 * d.beta - std::abs(rx - d.r.value(y));
    out.worst_growth_slack = std::min(out.worst_growth_slack, growth);
    if (growth < -1e-12 * (1 + std::abs(rx))) out.growth_ok = false;
  }
  return out;
}

struct CertificationReport {
  double grad_norm = 0;      // ||grad f(x)||
  double delta = 0;          // gradient bound
  double gap = 0;            // F(x) - F*
  double gap_bound = 0;
  double distance = 0;       // d(x, chi*)
  double distance_bound = 0;
  double slack = 0;          // 1e-8 plus the largest eta used
  bool grad_ok = false;
  bool gap_ok = false;
  bool distance_ok = false;
  bool passed() const { return grad_ok && gap_ok && distance_ok; }
};

inline constexpr double kBoundSlack = 1e-8;

/// Checks the gradient bound and the error bounds at `x`, taken to be a
/// (blockwise) R-local minimizer with per-block radii, exact when `eta` is
/// empty and up to eta_i otherwise. A point that is not such a minimizer may
/// fail; that is the negative control.
inline CertificationReport certify_decomposition(const DecomposedObjective& d, const Vector& x,
                                                 std::span<const double> radii, std::span<const double> eta = {}) {
  if (!d.f.has_gradient()) throw std::invalid_argument("certify_decomposition: f needs a gradient");
  if (radii.empty()) throw std::invalid_argument("certify_decomposition: need at least one radius");
  CertificationReport rep;
  rep.grad_norm = d.f.gradient(x).norm();
  if (eta.empty()) {
    rep.delta = radii.size() == 1 ? delta_R_local(d.alpha, d.beta, d.L, radii[0])
                                  : delta_blockwise(d.alpha, d.beta, d.L, radii).delta;
  } else {
    rep.delta = delta_approximate(d.alpha, d.beta, d.L, radii, eta);
  }
  const double max_eta = eta.empty() ? 0.0 : *std::max_element(eta.begin(), eta.end());
  rep.slack = kBoundSlack + max_eta;
  const auto bounds = theorem1_bounds(rep.delta, d.mu, d.alpha, d.beta, d.M);
  rep.gap = d.f.value(x) + d.r.value(x) - d.F_min;
  rep.gap_bound = bounds.gap;
  rep.distance = d.distance_to_minimizers(x);
  rep.distance_bound = bounds.distance;
  rep.grad_ok = rep.grad_norm <= rep.delta + kBoundSlack;
  rep.gap_ok = rep.gap <= rep.gap_bound + rep.slack;
  rep.distance_ok = rep.distance <= rep.distance_bound + rep.slack;
  return rep;
}

inline CertificationReport certify_decomposition(const DecomposedObjective& d, const Vector& x, double R,
                                                 std::optional<double> eta = std::nullopt) {
  const double radii[1] = {R};
  if (eta) {
    const double e[1] = {*eta};
    return certify_decomposition(d, x, radii, e);
  }
  return certify_decomposition(d, x, radii);
}

/// Certificate constants for inspecting a decomposed objective: Lbar on a
/// ball of radius R around x is bounded by ||grad f(x)|| + L R.
inline CertificateConstants certificate_constants(const DecomposedObjective& d) {
  CertificateConstants c;
  c.alpha = d.alpha;
  c.beta = d.beta;
  c.f_lipschitz = [grad = d.f.gradient, L = d.L](const Vector& center, std::span<const Index> coords, double R) {
    const Vector g = grad(center);
    double sq = 0;
    for (Index j : coords) sq += g[j] * g[j];
    return std::sqrt(sq) + L * R;
  };
  return c;
}

/// Per-block etas and radii from a certificate, in inspection order.
struct CertificateSlack {
  std::vector<double> radii;
  std::vector<double> eta;
};

inline CertificateSlack certificate_slack(const InspectionCertificate& cert) {
  CertificateSlack out;
  for (const auto& s : cert.subspaces) {
    if (!s.eta) throw std::invalid_argument("certificate_slack: certificate carries no eta");
    out.radii.push_back(s.radius);
    out.eta.push_back(*s.eta);
  }
  return out;
}

// Constructed instances ----------------------------------------------------------

enum class QuadSineSplit { bounded, lipschitz };

/// f = x^2/2, r = a (sin(b pi (x - 1/(2b))) + 1), with either (alpha, beta) = (0, a)
/// or (a b pi, 0).
inline DecomposedObjective quad_sine_decomposition(double a, double b, QuadSineSplit split) {
  DecomposedObjective d;
  d.f.dimension = 1;
  d.f.value = [](const Vector& x) { return 0.5 * x[0] * x[0]; };
  d.f.gradient = [](const Vector& x) { return Vector(x); };
  d.r.dimension = 1;
  d.r.value = [a, b](const Vector& x) {
    return a * std::sin(b * std::numbers::pi * (x[0] - 1 / (2 * b))) + a;
  };
  d.mu = d.L = 1;
  d.M = 0;
  if (split == QuadSineSplit::bounded) {
    d.alpha = 0;
    d.beta = a;
  } else {
    d.alpha = a * b * std::numbers::pi;
    d.beta = 0;
  }
  d.f_min = 0;
  d.f_minimizers = {Vector::Zero(1)};
  d.F_min = 0;
  d.global_minimizers = {Vector::Zero(1)};
  return d;
}

/// f = ||x - c||^2 / 2, r = 2 beta 1{sin(omega x_1) > 0}; alpha = 0.
/// Global minimizers are computed from the nearest points of the zero set of r.
inline DecomposedObjective square_wave_decomposition(const Vector& c, double beta, double omega) {
  if (!(beta > 0) || !(omega > 0)) throw std::invalid_argument("square_wave_decomposition: need beta, omega > 0");
  DecomposedObjective d;
  const Index n = c.size();
  d.f.dimension = n;
  d.f.value = [c](const Vector& x) { return 0.5 * (x - c).squaredNorm(); };
  d.f.gradient = [c](const Vector& x) { return Vector(x - c); };
  d.r.dimension = n;
  d.r.value = [beta, omega](const Vector& x) { return std::sin(omega * x[0]) > 0 ? 2 * beta : 0.0; };
  d.mu = d.L = 1;
  d.alpha = 0;
  d.beta = beta;
  d.M = 0;
  d.f_min = 0;
  d.f_minimizers = {c};
  if (!(std::sin(omega * c[0]) > 0)) {
    d.F_min = 0;
    d.global_minimizers = {c};
    return d;
  }
  // c_1 sits in an open interval (k, k + 1/2) * (2 pi / omega) where r = 2 beta;
  // the closest r = 0 points are its two endpoints.
  const double period = 2 * std::numbers::pi / omega;
  const double k = std::floor(c[0] / period);
  const double lo = k * period, hi = (k + 0.5) * period;
  const double dlo = c[0] - lo, dhi = hi - c[0];
  const double edge = 0.5 * std::min(dlo, dhi) * std::min(dlo, dhi);
  d.F_min = std::min(2 * beta, edge);
  auto at = [&](double x1) {
    Vector m = c;
    m[0] = x1;
    return m;
  };
  if (2 * beta <= edge) d.global_minimizers.push_back(c);
  if (edge <= 2 * beta) {
    if (dlo <= dhi) d.global_minimizers.push_back(at(lo));
    if (dhi <= dlo) d.global_minimizers.push_back(at(hi));
  }
  return d;
}

}  // namespace rim
