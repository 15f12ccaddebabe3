#pragma once

// Objective abstraction, block structure, evaluation bookkeeping and
// finite-difference utilities shared by the rest of the library.

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rim {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when an objective returns a non-finite value. Carries the point.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, Vector point)
      : std::runtime_error(what), point_(std::move(point)) {}

  const Vector& point() const noexcept { return point_; }

 private:
  Vector point_;
};

/// Evaluates F with a subset of coordinates replaced; bound to a base point.
using PartialEvaluator = std::function<double(std::span<const double> values)>;

/// F : R^n -> R together with optional derivative and partial-update paths.
///
/// `partial(base, coords)` prepares an evaluator of F(base with coords
/// replaced). Implementations may precompute per-base caches (a residual,
/// per-point distances) inside the returned closure; the closure must be
/// callable concurrently.
struct Objective {
  Index dimension = 0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<PartialEvaluator(const Vector& base, std::span<const Index> coords)> partial;

  bool has_gradient() const { return static_cast<bool>(gradient); }
  bool has_partial() const { return static_cast<bool>(partial); }
};

struct Block {
  Index offset = 0;
  Index length = 0;

  friend bool operator==(const Block&, const Block&) = default;
};

/// Partition of [0, n) into contiguous, ordered, non-empty blocks.
class BlockSpec {
 public:
  BlockSpec() = default;

  explicit BlockSpec(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw std::invalid_argument("BlockSpec: at least one block required");
    Index next = 0;
    for (const auto& b : blocks_) {
      if (b.length <= 0) throw std::invalid_argument("BlockSpec: empty block");
      if (b.offset != next) throw std::invalid_argument("BlockSpec: blocks must be contiguous and ordered");
      next += b.length;
    }
    dimension_ = next;
  }

  static BlockSpec whole(Index n) { return BlockSpec({Block{0, n}}); }

  /// Equal-length blocks; `block_length` must divide n.
  static BlockSpec uniform(Index n, Index block_length) {
    if (block_length <= 0 || n % block_length != 0)
      throw std::invalid_argument("BlockSpec::uniform: block length must divide dimension");
    std::vector<Block> blocks;
    for (Index off = 0; off < n; off += block_length) blocks.push_back({off, block_length});
    return BlockSpec(std::move(blocks));
  }

  std::size_t size() const { return blocks_.size(); }
  Index dimension() const { return dimension_; }
  const Block& operator[](std::size_t i) const { return blocks_.at(i); }
  const std::vector<Block>& blocks() const { return blocks_; }

  std::vector<Index> coordinates(std::size_t i) const {
    const Block& b = blocks_.at(i);
    std::vector<Index> c(static_cast<std::size_t>(b.length));
    for (Index k = 0; k < b.length; ++k) c[static_cast<std::size_t>(k)] = b.offset + k;
    return c;
  }

 private:
  std::vector<Block> blocks_;
  Index dimension_ = 0;
};

namespace detail {

inline std::string describe(const Vector& x) {
  std::ostringstream os;
  os << "[";
  for (Index i = 0; i < x.size(); ++i) {
    if (i) os << ", ";
    if (i == 8 && x.size() > 9) {
      os << "... (" << x.size() << " entries)";
      break;
    }
    os << x[i];
  }
  os << "]";
  return os.str();
}

inline bool all_finite(const Vector& x) { return x.allFinite(); }

inline double checked(double v, const Vector& x) {
  if (!std::isfinite(v)) throw EvaluationError("non-finite objective value at " + describe(x), x);
  return v;
}

}  // namespace detail

/// Counts of objective invocations. `values` covers both full and partial
/// evaluations, `partials` the partial ones only.
struct EvalCounts {
  std::size_t values = 0;
  std::size_t partials = 0;
  std::size_t gradients = 0;

  EvalCounts& operator+=(const EvalCounts& o) {
    values += o.values;
    partials += o.partials;
    gradients += o.gradients;
    return *this;
  }
};

/// Wraps an Objective and counts every invocation. Counters are atomic so a
/// single evaluator can serve concurrent sample batches.
class Evaluator {
 public:
  explicit Evaluator(const Objective& objective) : objective_(&objective) {}
  Evaluator(const Evaluator&) = delete;
  Evaluator& operator=(const Evaluator&) = delete;

  const Objective& objective() const { return *objective_; }
  Index dimension() const { return objective_->dimension; }

  double value(const Vector& x) {
    if (x.size() != objective_->dimension)
      throw std::invalid_argument("evaluate: point has wrong dimension");
    if (!detail::all_finite(x)) throw EvaluationError("non-finite coordinates in " + detail::describe(x), x);
    values_.fetch_add(1, std::memory_order_relaxed);
    return detail::checked(objective_->value(x), x);
  }

  Vector gradient(const Vector& x) {
    if (!objective_->has_gradient()) throw std::logic_error("objective has no gradient");
    if (x.size() != objective_->dimension)
      throw std::invalid_argument("gradient: point has wrong dimension");
    gradients_.fetch_add(1, std::memory_order_relaxed);
    Vector g = objective_->gradient(x);
    if (!g.allFinite()) throw EvaluationError("non-finite gradient at " + detail::describe(x), x);
    return g;
  }

  /// Evaluator of F(base with `coords` replaced). Uses the objective's
  /// specialised path when it has one, otherwise substitutes into a copy.
  std::function<double(std::span<const double>)> bind(const Vector& base, std::vector<Index> coords) {
    if (base.size() != objective_->dimension)
      throw std::invalid_argument("evaluate_block: base point has wrong dimension");
    for (Index c : coords)
      if (c < 0 || c >= base.size()) throw std::out_of_range("evaluate_block: coordinate out of range");
    if (objective_->has_partial()) {
      PartialEvaluator inner = objective_->partial(base, std::span<const Index>(coords));
      return [this, inner = std::move(inner), base, coords](std::span<const double> v) {
        values_.fetch_add(1, std::memory_order_relaxed);
        partials_.fetch_add(1, std::memory_order_relaxed);
        double out = inner(v);
        if (!std::isfinite(out)) throw EvaluationError("non-finite objective value", substitute(base, coords, v));
        return out;
      };
    }
    return [this, base, coords](std::span<const double> v) {
      Vector y = substitute(base, coords, v);
      values_.fetch_add(1, std::memory_order_relaxed);
      return detail::checked(objective_->value(y), y);
    };
  }

  EvalCounts counts() const {
    return {values_.load(std::memory_order_relaxed), partials_.load(std::memory_order_relaxed),
            gradients_.load(std::memory_order_relaxed)};
  }

  static Vector substitute(const Vector& base, std::span<const Index> coords, std::span<const double> v) {
    if (v.size() != coords.size()) throw std::invalid_argument("substitute: size mismatch");
    Vector y = base;
    for (std::size_t k = 0; k < coords.size(); ++k) y[coords[k]] = v[k];
    return y;
  }

 private:
  const Objective* objective_;
  std::atomic<std::size_t> values_{0};
  std::atomic<std::size_t> partials_{0};
  std::atomic<std::size_t> gradients_{0};
};

inline double evaluate(Evaluator& ev, const Vector& x) { return ev.value(x); }

/// F(z_i, x_{-i}) for block i of `blocks`.
inline double evaluate_block(Evaluator& ev, const Vector& x, const BlockSpec& blocks, std::size_t i,
                             const Vector& z) {
  if (i >= blocks.size()) throw std::out_of_range("evaluate_block: block index out of range");
  if (z.size() != blocks[i].length) throw std::invalid_argument("evaluate_block: block value has wrong length");
  auto eval = ev.bind(x, blocks.coordinates(i));
  return eval(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

inline constexpr double kDefaultFiniteDifferenceStep = 1e-5;

/// Central differences, one coordinate at a time.
inline Vector finite_difference_gradient(const Objective& objective, const Vector& x,
                                         double h = kDefaultFiniteDifferenceStep) {
  if (!(h > 0)) throw std::invalid_argument("finite_difference_gradient: step must be positive");
  Vector g(x.size());
  Vector p = x;
  for (Index j = 0; j < x.size(); ++j) {
    p[j] = x[j] + h;
    double fp = detail::checked(objective.value(p), p);
    p[j] = x[j] - h;
    double fm = detail::checked(objective.value(p), p);
    p[j] = x[j];
    g[j] = (fp - fm) / (2 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Traces

enum class Phase { run, inspect };

enum class StopReason {
  stagnated,      // runner: stagnation criterion met
  max_iterations, // runner: iteration cap reached
  diverged,       // runner: objective increased for `patience` consecutive steps
  degenerate,     // runner: subproblem could not be solved (treated as stagnation)
  certified,      // meta: inspection produced a certificate
  outer_guard,    // meta: outer-iteration cap reached
};

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::stagnated: return "stagnated";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::diverged: return "diverged";
    case StopReason::degenerate: return "degenerate";
    case StopReason::certified: return "certified";
    case StopReason::outer_guard: return "outer_guard";
  }
  return "unknown";
}

struct TracePoint {
  Phase phase = Phase::run;
  std::size_t iteration = 0;
  double value = 0;
};

struct EscapeEvent {
  std::size_t outer_iteration = 0;
  std::optional<std::size_t> block;  // nullopt: whole-space inspection
  std::vector<Index> coordinates;    // coordinates moved by the escape
  double radius = 0;                 // nominal radius of the accepted sample
  std::size_t samples = 0;           // samples evaluated in this inspection, including the accepted one
  double value_before = 0;
  double value_after = 0;
};

/// Per-subspace part of an inspection certificate.
struct SubspaceCertificate {
  std::vector<Index> coordinates;
  double radius = 0;
  std::optional<double> density;  // r-bar, when the sampler covers the ball
  std::optional<double> eta;      // certified slack, when constants were supplied
};

struct InspectionCertificate {
  Vector center;
  double center_value = 0;
  double nu = 0;
  std::string sampler;
  double radius_step = 0;
  double angle_step = 0;
  std::vector<SubspaceCertificate> subspaces;
  std::size_t samples = 0;

  /// Largest per-subspace eta, if every subspace carries one.
  std::optional<double> max_eta() const {
    double m = 0;
    for (const auto& s : subspaces) {
      if (!s.eta) return std::nullopt;
      m = std::max(m, *s.eta);
    }
    return m;
  }
};

struct RunTrace {
  std::vector<TracePoint> iterates;
  std::vector<EscapeEvent> escapes;
  Vector final_point;
  double final_value = 0;
  std::optional<InspectionCertificate> certificate;
  EvalCounts evaluations;
  std::size_t iterations = 0;  // run-phase iterations, summed over segments
  std::size_t inspections = 0;
  std::size_t diverged_runs = 0;  // run segments stopped by the divergence guard
  StopReason stop = StopReason::stagnated;

  void record(Phase phase, double value) {
    iterates.push_back({phase, iterates.size(), value});
  }
};

}  // namespace rim
