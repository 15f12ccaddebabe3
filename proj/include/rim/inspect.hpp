#pragma once

// Sample generators and the inspection engine.
//
// Every sampler is an indexed, lazily evaluated sequence: sample k is
// computed on demand, so a consumer that stops at the first improving sample
// never pays for the rest. Ring-type samplers visit radii outside-in
// (R, R - dR, ... > 0), then angles in ascending order. The center itself is
// never a sample.

#include "rim/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

namespace rim {

/// Raised when a grid net would exceed the sample cap.
class SampleCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<double> ring_radii(double radius, double step) {
  if (!(step > 0) || !(radius >= step))
    throw std::invalid_argument("ring radii: require 0 < radius step <= radius");
  const auto count = static_cast<std::size_t>(std::ceil(radius / step - 1e-9));
  std::vector<double> radii;
  radii.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    double r = radius - static_cast<double>(k) * step;
    if (r <= step * 1e-9) break;
    radii.push_back(r);
  }
  return radii;
}

/// Number of angular steps covering [0, 2pi); rounded up so the actual step
/// divides 2pi exactly.
inline std::size_t angle_count(double angle_step) {
  if (!(angle_step > 0)) throw std::invalid_argument("angle step must be positive");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2 * std::numbers::pi / angle_step - 1e-9)));
}

// Upper bound on the distance from any point of the disc to the nearest ring
// sample or the center. Angular grids are aligned across rings, so the worst
// angle is half a step from a sample on every ring at once; the remaining
// max over the radial coordinate is scanned, and the scan step is added
// because the inner minimum is 1-Lipschitz in the radial coordinate.
inline double ring_density(const std::vector<double>& radii, std::size_t angles) {
  const double half = std::numbers::pi / static_cast<double>(angles);
  const double c = 1 - std::cos(half);
  std::vector<double> levels(radii);
  levels.push_back(0.0);
  double worst = 0;
  for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
    const double hi = levels[k], lo = levels[k + 1];
    const int n = 2048;
    const double h = (hi - lo) / n;
    for (int t = 0; t <= n; ++t) {
      double rho = lo + h * t;
      auto dist = [&](double r) { return std::sqrt((rho - r) * (rho - r) + 2 * rho * r * c); };
      worst = std::max(worst, std::min(dist(hi), dist(lo)) + h / 2);
    }
  }
  return worst;
}

}  // namespace detail

/// Concentric rings in the plane.
class RingSamples {
 public:
  RingSamples(double radius, double radius_step, double angle_step)
      : radii_(detail::ring_radii(radius, radius_step)), angles_(detail::angle_count(angle_step)) {}

  Index dimension() const { return 2; }
  std::size_t size() const { return radii_.size() * angles_; }
  std::size_t rings() const { return radii_.size(); }
  std::size_t angles() const { return angles_; }
  double angle_step() const { return 2 * std::numbers::pi / static_cast<double>(angles_); }
  double radius(std::size_t k) const { return radii_[k / angles_]; }
  double angle(std::size_t k) const { return static_cast<double>(k % angles_) * angle_step(); }

  void offset(std::size_t k, std::span<double> out) const {
    const double r = radius(k), t = angle(k);
    out[0] = r * std::cos(t);
    out[1] = r * std::sin(t);
  }

  std::optional<double> density() const { return detail::ring_density(radii_, angles_); }

 private:
  std::vector<double> radii_;
  std::size_t angles_;
};

/// Two-angle embedding in R^4: offset r (cos t1, sin t1, cos t2, sin t2).
/// Offsets have Euclidean norm r*sqrt(2); r is the nominal radius. The
/// samples lie on a torus, so no covering density is claimed.
class Polar4dSamples {
 public:
  Polar4dSamples(double radius, double radius_step, double angle_step1, double angle_step2)
      : radii_(detail::ring_radii(radius, radius_step)),
        angles1_(detail::angle_count(angle_step1)),
        angles2_(detail::angle_count(angle_step2)) {}

  Index dimension() const { return 4; }
  std::size_t size() const { return radii_.size() * angles1_ * angles2_; }
  double radius(std::size_t k) const { return radii_[k / (angles1_ * angles2_)]; }

  std::pair<double, double> angles(std::size_t k) const {
    const std::size_t rem = k % (angles1_ * angles2_);
    return {static_cast<double>(rem / angles2_) * 2 * std::numbers::pi / static_cast<double>(angles1_),
            static_cast<double>(rem % angles2_) * 2 * std::numbers::pi / static_cast<double>(angles2_)};
  }

  void offset(std::size_t k, std::span<double> out) const {
    const double r = radius(k);
    const auto [t1, t2] = angles(k);
    out[0] = r * std::cos(t1);
    out[1] = r * std::sin(t1);
    out[2] = r * std::cos(t2);
    out[3] = r * std::sin(t2);
  }

  std::optional<double> density() const { return std::nullopt; }

 private:
  std::vector<double> radii_;
  std::size_t angles1_, angles2_;
};

/// Points center +- r along a line, radii outside-in, + before -.
class LineSamples {
 public:
  LineSamples(double radius, double radius_step) : radii_(detail::ring_radii(radius, radius_step)) {}

  Index dimension() const { return 1; }
  std::size_t size() const { return 2 * radii_.size(); }
  double radius(std::size_t k) const { return radii_[k / 2]; }
  void offset(std::size_t k, std::span<double> out) const { out[0] = (k % 2 == 0 ? 1.0 : -1.0) * radius(k); }

  std::optional<double> density() const {
    double gap = radii_.back();
    for (std::size_t k = 0; k + 1 < radii_.size(); ++k) gap = std::max(gap, radii_[k] - radii_[k + 1]);
    return gap / 2;
  }

 private:
  std::vector<double> radii_;
};

/// Uniform grid of width 2*density/sqrt(d) around the center, restricted to
/// the closed ball. Grid points just outside the ball whose cells still meet
/// it are projected onto the sphere, so every point of the ball lies within
/// `density` of a sample or the center. Ordered by descending distance from
/// the center, ties in lexicographic grid order.
///
/// The grid holds roughly (pi e / 2)^(d/2) (R/density)^d / sqrt(pi d)
/// points, so it is only practical for small d.
class GridNetSamples {
 public:
  static constexpr std::size_t kDefaultCap = 10'000'000;

  GridNetSamples(Index dimension, double radius, double density, std::size_t cap = kDefaultCap)
      : dimension_(dimension), density_(density) {
    if (dimension < 1) throw std::invalid_argument("grid net: dimension must be positive");
    if (!(density > 0) || !(density <= radius)) throw std::invalid_argument("grid net: require 0 < density <= radius");
    const double d = static_cast<double>(dimension);
    const double width = 2 * density / std::sqrt(d);
    const double reach = radius + density;
    // Volume of the reach ball over the cell volume bounds the enumeration.
    const double log_estimate = (d / 2) * std::log(std::numbers::pi) + d * std::log(reach / width) -
                                std::lgamma(d / 2 + 1);
    if (log_estimate > std::log(static_cast<double>(cap)))
      throw SampleCapExceeded("grid net: dimension too high for the sample cap (about " +
                              std::to_string(std::exp(std::min(log_estimate, 700.0))) + " points)");

    const long span = static_cast<long>(std::floor(reach / width));
    std::vector<long> m(static_cast<std::size_t>(dimension), -span);
    std::vector<double> buf(static_cast<std::size_t>(dimension));
    struct Entry {
      double norm;
      std::size_t order;
    };
    std::vector<Entry> entries;
    std::vector<double> flat;
    // Odometer over the bounding box, pruning nothing; the cap check above
    // keeps the box small enough.
    for (;;) {
      double sq = 0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        buf[i] = width * static_cast<double>(m[i]);
        sq += buf[i] * buf[i];
      }
      const double norm = std::sqrt(sq);
      if (norm > 0 && norm <= reach) {
        // A cell centered at a point farther than `radius` can still contain
        // ball points within `density`; keep it projected onto the sphere.
        const double scale = norm > radius ? radius / norm : 1.0;
        entries.push_back({std::min(norm, radius), entries.size()});
        for (double v : buf) flat.push_back(v * scale);
        if (entries.size() > cap) throw SampleCapExceeded("grid net: sample cap exceeded");
      }
      std::size_t i = 0;
      while (i < m.size() && m[i] == span) m[i++] = -span;
      if (i == m.size()) break;
      ++m[i];
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.norm > b.norm; });
    offsets_.reserve(flat.size());
    norms_.reserve(entries.size());
    for (const auto& e : entries) {
      norms_.push_back(e.norm);
      for (Index j = 0; j < dimension; ++j) offsets_.push_back(flat[e.order * static_cast<std::size_t>(dimension) + static_cast<std::size_t>(j)]);
    }
  }

  Index dimension() const { return dimension_; }
  std::size_t size() const { return norms_.size(); }
  double radius(std::size_t k) const { return norms_[k]; }
  void offset(std::size_t k, std::span<double> out) const {
    const auto d = static_cast<std::size_t>(dimension_);
    std::copy_n(offsets_.begin() + static_cast<std::ptrdiff_t>(k * d), d, out.begin());
  }
  std::optional<double> density() const { return density_; }

 private:
  Index dimension_;
  double density_;
  std::vector<double> offsets_;
  std::vector<double> norms_;
};

/// Points of a sampler translated to `center`, as a lazy range of Vectors.
template <class Samples>
auto sample_points(const Samples& samples, Vector center) {
  return std::views::iota(std::size_t{0}, samples.size()) |
         std::views::transform([&samples, center = std::move(center)](std::size_t k) {
           Vector p = Vector::Zero(center.size());
           samples.offset(k, std::span<double>(p.data(), static_cast<std::size_t>(p.size())));
           p += center;
           return p;
         });
}

inline auto ring_samples_2d(const Vector& center, const RingSamples& rings) { return sample_points(rings, center); }
inline auto polar4d_samples(const Vector& center, const Polar4dSamples& s) { return sample_points(s, center); }
inline auto grid_net_samples(const Vector& center, const GridNetSamples& s) { return sample_points(s, center); }

/// Pairs (i, j) with x_i nonzero and x_j zero: ordered by descending |x_i|
/// (ties by ascending i), then ascending j. Indices are 0-based.
inline std::vector<std::pair<Index, Index>> sparse_pair_blocks(const Vector& x, double tol = 1e-8) {
  if (!(tol >= 0)) throw std::invalid_argument("sparse_pair_blocks: tolerance must be non-negative");
  std::vector<Index> nonzero, zero;
  for (Index i = 0; i < x.size(); ++i) (std::abs(x[i]) > tol ? nonzero : zero).push_back(i);
  std::stable_sort(nonzero.begin(), nonzero.end(),
                   [&](Index a, Index b) { return std::abs(x[a]) > std::abs(x[b]); });
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(nonzero.size() * zero.size());
  for (Index i : nonzero)
    for (Index j : zero) pairs.emplace_back(i, j);
  return pairs;
}

// ---------------------------------------------------------------------------
// Policy

enum class SamplerKind { ring2d, polar4d, grid_net, line1d };
enum class BlockRule { cyclic, sparse_pairs };

inline const char* to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::ring2d: return "ring2d";
    case SamplerKind::polar4d: return "polar4d";
    case SamplerKind::grid_net: return "grid-net";
    case SamplerKind::line1d: return "line1d";
  }
  return "unknown";
}

inline SamplerKind parse_sampler(std::string_view s) {
  if (s == "ring2d") return SamplerKind::ring2d;
  if (s == "polar4d") return SamplerKind::polar4d;
  if (s == "grid-net" || s == "grid_net") return SamplerKind::grid_net;
  if (s == "line1d") return SamplerKind::line1d;
  throw std::invalid_argument("unknown sampler '" + std::string(s) + "'");
}

/// Constants used to turn a certificate into a slack eta = nu + (Lbar + alpha) rbar + 2 beta.
/// `f_lipschitz(center, coords, R)` bounds the Lipschitz constant of the smooth
/// part restricted to the inspected ball.
struct CertificateConstants {
  std::function<double(const Vector& center, std::span<const Index> coords, double radius)> f_lipschitz;
  double alpha = 0;
  double beta = 0;
};

struct InspectionPolicy {
  SamplerKind sampler = SamplerKind::ring2d;
  BlockRule rule = BlockRule::cyclic;
  std::vector<double> radius{1.0};  // one entry, or one per block
  double radius_step = 0.2;
  double angle_step = std::numbers::pi / 10;
  double angle_step2 = std::numbers::pi / 10;
  double density = 0;  // grid-net only
  double nu = 1e-4;
  double zero_tolerance = 1e-8;
  std::size_t sample_cap = GridNetSamples::kDefaultCap;
  std::optional<CertificateConstants> constants;
  unsigned threads = 1;
  std::size_t batch = 256;

  double radius_for(std::size_t block) const {
    if (radius.empty()) throw std::invalid_argument("InspectionPolicy: no radius");
    return radius.size() == 1 ? radius.front() : radius.at(block);
  }

  void validate() const {
    if (radius.empty()) throw std::invalid_argument("InspectionPolicy: no radius");
    if (!(nu > 0)) throw std::invalid_argument("InspectionPolicy: descent threshold must be positive");
    for (double r : radius) {
      if (!(r > 0)) throw std::invalid_argument("InspectionPolicy: radius must be positive");
      if (sampler == SamplerKind::grid_net) {
        if (!(density > 0) || density > r) throw std::invalid_argument("InspectionPolicy: require 0 < density <= R");
      } else if (!(radius_step > 0) || radius_step > r) {
        throw std::invalid_argument("InspectionPolicy: require 0 < dR <= R");
      }
    }
    if (!(angle_step > 0) || !(angle_step2 > 0)) throw std::invalid_argument("InspectionPolicy: angle steps must be positive");
    if (!(zero_tolerance >= 0)) throw std::invalid_argument("InspectionPolicy: zero tolerance must be non-negative");
    if (threads == 0 || batch == 0) throw std::invalid_argument("InspectionPolicy: threads and batch must be positive");
  }

  /// Dimension the sampler works in, or 0 for any.
  Index sampler_dimension() const {
    switch (sampler) {
      case SamplerKind::ring2d: return 2;
      case SamplerKind::polar4d: return 4;
      case SamplerKind::line1d: return 1;
      case SamplerKind::grid_net: return 0;
    }
    return 0;
  }
};

/// Type-erased sampler built from a policy.
class SampleSet {
 public:
  SampleSet(const InspectionPolicy& p, Index dimension, double radius) : impl_(make(p, dimension, radius)) {}

  std::size_t size() const {
    return std::visit([](const auto& s) { return s.size(); }, impl_);
  }
  Index dimension() const {
    return std::visit([](const auto& s) { return s.dimension(); }, impl_);
  }
  double radius(std::size_t k) const {
    return std::visit([k](const auto& s) { return s.radius(k); }, impl_);
  }
  void offset(std::size_t k, std::span<double> out) const {
    std::visit([&](const auto& s) { s.offset(k, out); }, impl_);
  }
  std::optional<double> density() const {
    return std::visit([](const auto& s) { return s.density(); }, impl_);
  }

 private:
  using Impl = std::variant<RingSamples, Polar4dSamples, LineSamples, GridNetSamples>;

  static Impl make(const InspectionPolicy& p, Index dimension, double radius) {
    const Index need = p.sampler_dimension();
    if (need != 0 && need != dimension)
      throw std::invalid_argument(std::string("sampler ") + to_string(p.sampler) + " needs " + std::to_string(need) +
                                  "-dimensional blocks, got " + std::to_string(dimension));
    switch (p.sampler) {
      case SamplerKind::ring2d: return RingSamples(radius, p.radius_step, p.angle_step);
      case SamplerKind::polar4d: return Polar4dSamples(radius, p.radius_step, p.angle_step, p.angle_step2);
      case SamplerKind::line1d: return LineSamples(radius, p.radius_step);
      case SamplerKind::grid_net: break;
    }
    return GridNetSamples(dimension, radius, p.density, p.sample_cap);
  }

  Impl impl_;
};

// ---------------------------------------------------------------------------
// Engine

struct Escape {
  Vector point;
  double value = 0;
  EscapeEvent event;
};

using InspectionResult = std::variant<Escape, InspectionCertificate>;

inline bool escaped(const InspectionResult& r) { return std::holds_alternative<Escape>(r); }

/// A coordinate subset inspected with the others fixed.
struct Subspace {
  std::optional<std::size_t> block;
  std::vector<Index> coordinates;
  double radius = 0;
};

namespace detail {

// First index in [begin, end) whose value is below `threshold`, scanning in
// order. With threads > 1 the range is evaluated in batches, each split over
// worker threads; the earliest hit in sample order is returned either way.
inline std::optional<std::pair<std::size_t, double>> first_hit(
    const std::function<double(std::size_t)>& eval, std::size_t count, double threshold, unsigned threads,
    std::size_t batch, std::size_t& evaluated) {
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) {
      const double v = eval(k);
      ++evaluated;
      if (v < threshold) return std::pair{k, v};
    }
    return std::nullopt;
  }
  std::vector<double> values;
  for (std::size_t start = 0; start < count; start += batch) {
    const std::size_t stop = std::min(count, start + batch);
    values.assign(stop - start, 0.0);
    const std::size_t chunk = (values.size() + threads - 1) / threads;
    std::vector<std::future<void>> jobs;
    for (std::size_t lo = 0; lo < values.size(); lo += chunk) {
      const std::size_t hi = std::min(values.size(), lo + chunk);
      jobs.push_back(std::async(std::launch::async, [&, lo, hi] {
        for (std::size_t i = lo; i < hi; ++i) values[i] = eval(start + i);
      }));
    }
    for (auto& j : jobs) j.get();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] < threshold) {
        evaluated += i + 1;
        return std::pair{start + i, values[i]};
      }
    }
    evaluated += values.size();
  }
  return std::nullopt;
}

}  // namespace detail

/// Inspect `subspaces` of the ball around `center` in order. Returns the
/// first sample y with F(y) < F(center) - nu, or a certificate that every
/// generated sample satisfied F(y) >= F(center) - nu.
inline InspectionResult inspect_subspaces(Evaluator& ev, const Vector& center, const InspectionPolicy& policy,
                                          const std::vector<Subspace>& subspaces) {
  policy.validate();
  const double center_value = ev.value(center);
  const double threshold = center_value - policy.nu;

  InspectionCertificate cert;
  cert.center = center;
  cert.center_value = center_value;
  cert.nu = policy.nu;
  cert.sampler = to_string(policy.sampler);
  cert.radius_step = policy.radius_step;
  cert.angle_step = policy.angle_step;

  std::size_t consumed = 0;
  for (const Subspace& sub : subspaces) {
    const auto dim = static_cast<Index>(sub.coordinates.size());
    SampleSet samples(policy, dim, sub.radius);
    auto eval = ev.bind(center, sub.coordinates);
    Vector base(dim);
    for (Index j = 0; j < dim; ++j) base[j] = center[sub.coordinates[static_cast<std::size_t>(j)]];

    auto at = [&](std::size_t k) {
      std::vector<double> y(static_cast<std::size_t>(dim));
      samples.offset(k, y);
      for (Index j = 0; j < dim; ++j) y[static_cast<std::size_t>(j)] += base[j];
      return y;
    };
    auto value_at = [&](std::size_t k) { return eval(at(k)); };

    const auto hit = detail::first_hit(value_at, samples.size(), threshold, policy.threads, policy.batch, consumed);
    if (hit) {
      Escape out;
      const auto y = at(hit->first);
      out.point = Evaluator::substitute(center, sub.coordinates, y);
      out.value = hit->second;
      out.event.block = sub.block;
      out.event.coordinates = sub.coordinates;
      out.event.radius = samples.radius(hit->first);
      out.event.samples = consumed;
      out.event.value_before = center_value;
      out.event.value_after = hit->second;
      return out;
    }

    SubspaceCertificate part;
    part.coordinates = sub.coordinates;
    part.radius = sub.radius;
    part.density = samples.density();
    if (policy.constants && part.density) {
      const auto& c = *policy.constants;
      const double lbar = c.f_lipschitz ? c.f_lipschitz(center, sub.coordinates, sub.radius)
                                        : std::numeric_limits<double>::infinity();
      part.eta = policy.nu + (lbar + c.alpha) * *part.density + 2 * c.beta;
    }
    cert.subspaces.push_back(std::move(part));
  }
  cert.samples = consumed;
  return cert;
}

/// Subspaces a policy inspects around `center`: the blocks in order, or the
/// sparse pairs of `center`. For a whole-space inspection the block marker is
/// left empty.
inline std::vector<Subspace> inspection_subspaces(const Vector& center, const InspectionPolicy& policy,
                                                  const BlockSpec& blocks, bool whole_space = false) {
  std::vector<Subspace> subs;
  if (policy.rule == BlockRule::sparse_pairs) {
    const auto pairs = sparse_pair_blocks(center, policy.zero_tolerance);
    subs.reserve(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p)
      subs.push_back({p, {pairs[p].first, pairs[p].second}, policy.radius_for(0)});
    return subs;
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Subspace s;
    if (!whole_space) s.block = i;
    s.coordinates = blocks.coordinates(i);
    s.radius = policy.radius_for(i);
    subs.push_back(std::move(s));
  }
  return subs;
}

/// Blockwise inspection: each block of `blocks` (or each sparse pair) is
/// sampled with the other coordinates fixed.
inline InspectionResult inspect_point(Evaluator& ev, const Vector& center, const InspectionPolicy& policy,
                                      const BlockSpec& blocks) {
  if (blocks.dimension() != center.size()) throw std::invalid_argument("inspect_point: block spec does not match point");
  return inspect_subspaces(ev, center, policy, inspection_subspaces(center, policy, blocks));
}

/// Whole-space inspection of B(center, R).
inline InspectionResult inspect_point(Evaluator& ev, const Vector& center, const InspectionPolicy& policy) {
  return inspect_subspaces(ev, center, policy,
                           inspection_subspaces(center, policy, BlockSpec::whole(center.size()), true));
}

}  // namespace rim
