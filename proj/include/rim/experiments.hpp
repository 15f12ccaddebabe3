#pragma once

// Drivers for the benchmark experiments, shared by the command-line tool and
// the acceptance suite.

#include "rim/core.hpp"
#include "rim/inspect.hpp"
#include "rim/meta.hpp"
#include "rim/problems.hpp"
#include "rim/rng.hpp"
#include "rim/runners.hpp"
#include "rim/theory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rim::experiments {

/// Runs body(0..n-1) on up to `threads` workers. Results must be written by
/// index so the outcome does not depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Seed for the data or start point of trial `trial` under `master`.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t trial) { return Rng::stream(master, trial).bits(); }

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Unbiased sample variance.
inline double variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double mean_escape_radius(const RunTrace& t) {
  if (t.escapes.empty()) return 0;
  double s = 0;
  for (const auto& e : t.escapes) s += e.radius;
  return s / static_cast<double>(t.escapes.size());
}

/// Recording hooks for a run-and-inspect call: `segment` fires before every
/// runner segment, `iterate` sees every runner iterate.
struct RunHooks {
  std::function<void()> segment;
  IterateObserver iterate;

  void begin() const {
    if (segment) segment();
  }
};

// Quad-sine ------------------------------------------------------------------

struct QuadSineConfig {
  QuadSineParams params;
  double R = 0.7;
  double dR = 0.01;
  double nu = 1e-4;
  double step = 1.0 / 40;
};

inline InspectionPolicy quad_sine_policy(const QuadSineConfig& c) {
  InspectionPolicy p;
  p.sampler = SamplerKind::line1d;
  p.radius = {c.R};
  p.radius_step = c.dR;
  p.nu = c.nu;
  return p;
}

inline RunTrace run_quad_sine(const QuadSineConfig& c, double x0, const MetaOptions& options = {},
                              const RunHooks& hooks = {}) {
  const Objective F = quad_sine(c.params);
  RunnerConfig rc;
  rc.step = c.step;
  Vector start(1);
  start[0] = x0;
  return run_and_inspect(
      [&](const Vector& x) {
        hooks.begin();
        return gradient_descent(F, x, rc, hooks.iterate);
      },
      F, start, quad_sine_policy(c), options);
}

// Modified Ackley ------------------------------------------------------------

enum class AckleyMode { gd2d, bcd1d };

inline AckleyMode parse_ackley_mode(const std::string& s) {
  if (s == "gd2d") return AckleyMode::gd2d;
  if (s == "bcd1d") return AckleyMode::bcd1d;
  throw std::invalid_argument("unknown ackley mode '" + s + "'");
}

struct AckleyConfig {
  AckleyMode mode = AckleyMode::gd2d;
  double R = 1;
  double dR = 0.2;
  double dtheta = std::numbers::pi / 10;
  double nu = 1e-4;
  double step = 1.0 / 40;
};

/// GD with whole-space ring inspection, or BCD over the two coordinates with
/// blockwise line inspection.
inline RunTrace run_ackley(const AckleyConfig& c, const Vector& x0, const MetaOptions& options = {},
                           const RunHooks& hooks = {}) {
  const Objective F = modified_ackley();
  RunnerConfig rc;
  rc.step = c.step;
  InspectionPolicy p;
  p.radius = {c.R};
  p.radius_step = c.dR;
  p.angle_step = c.dtheta;
  p.nu = c.nu;
  if (c.mode == AckleyMode::gd2d) {
    p.sampler = SamplerKind::ring2d;
    return run_and_inspect(
        [&](const Vector& x) {
          hooks.begin();
          return gradient_descent(F, x, rc, hooks.iterate);
        },
        F, x0, p, options);
  }
  p.sampler = SamplerKind::line1d;
  const BlockSpec blocks = BlockSpec::uniform(2, 1);
  return run_and_inspect_blockwise(
      [&](const Vector& x) {
        hooks.begin();
        return block_coordinate_descent(F, blocks, x, rc, hooks.iterate);
      },
      F, x0, p, blocks, options);
}

/// Seeded start point uniform in [-box, box]^2.
inline Vector ackley_start(std::uint64_t seed, std::size_t trial, double box = 8) {
  Rng rng = Rng::stream(seed, trial);
  Vector x(2);
  x[0] = rng.uniform(-box, box);
  x[1] = rng.uniform(-box, box);
  return x;
}

struct GridMinimum {
  Vector point;
  double value = std::numeric_limits<double>::infinity();
  double grid_value = std::numeric_limits<double>::infinity();
};

/// Minimum of a 2-D objective over a uniform grid of [-box, box]^2 followed
/// by gradient refinement from the best `candidates` grid cells.
inline GridMinimum grid_minimum_2d(const Objective& F, double box, double resolution, std::size_t candidates = 8,
                                   unsigned threads = 1) {
  if (F.dimension != 2) throw std::invalid_argument("grid_minimum_2d: objective must be 2-D");
  if (!(resolution > 0) || !(box > 0)) throw std::invalid_argument("grid_minimum_2d: need positive box and resolution");
  const auto steps = static_cast<std::size_t>(std::llround(2 * box / resolution));
  struct Cell {
    double value;
    std::size_t i, j;
  };
  // Best `candidates` cells per row, merged afterwards.
  std::vector<std::vector<Cell>> rows(steps + 1);
  parallel_for(steps + 1, threads, [&](std::size_t i) {
    Vector p(2);
    p[0] = -box + static_cast<double>(i) * resolution;
    std::vector<Cell> best;
    for (std::size_t j = 0; j <= steps; ++j) {
      p[1] = -box + static_cast<double>(j) * resolution;
      const double v = F.value(p);
      if (best.size() < candidates || v < best.back().value) {
        Cell c{v, i, j};
        best.insert(std::upper_bound(best.begin(), best.end(), c, [](const Cell& a, const Cell& b) { return a.value < b.value; }), c);
        if (best.size() > candidates) best.pop_back();
      }
    }
    rows[i] = std::move(best);
  });
  std::vector<Cell> all;
  for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
  std::stable_sort(all.begin(), all.end(), [](const Cell& a, const Cell& b) { return a.value < b.value; });
  all.resize(std::min(all.size(), candidates));

  GridMinimum out;
  out.grid_value = all.empty() ? out.grid_value : all.front().value;
  RunnerConfig rc;
  rc.step = 1e-3;
  rc.stagnation_tol = 1e-15;
  rc.max_iterations = 200'000;
  for (const Cell& c : all) {
    Vector p(2);
    p[0] = -box + static_cast<double>(c.i) * resolution;
    p[1] = -box + static_cast<double>(c.j) * resolution;
    const RunTrace t = gradient_descent(F, p, rc);
    const double v = std::min(t.final_value, c.value);
    if (v < out.value) {
      out.value = v;
      out.point = t.final_value <= c.value ? t.final_point : p;
    }
  }
  return out;
}

// k-means --------------------------------------------------------------------

struct KmeansConfig {
  Index K = 4;
  double R = 10;
  double dR = 2;
  double dtheta = std::numbers::pi / 10;
  double nu = 0.1;
};

struct KmeansTrial {
  double em_only = 0;
  double em_inspect = 0;
  std::size_t escapes = 0;
  std::size_t inspections = 0;
  double mean_escape_radius = 0;
  RunTrace em_trace;
  RunTrace inspect_trace;
};

/// 2-D data use ring samples per center, 4-D data the two-angle embedding.
inline InspectionPolicy kmeans_policy(const KmeansConfig& c, Index data_dimension) {
  InspectionPolicy p;
  if (data_dimension == 2)
    p.sampler = SamplerKind::ring2d;
  else if (data_dimension == 4)
    p.sampler = SamplerKind::polar4d;
  else
    throw std::invalid_argument("kmeans_policy: inspection needs 2-D or 4-D data");
  p.radius = {c.R};
  p.radius_step = c.dR;
  p.angle_step = c.dtheta;
  p.angle_step2 = c.dtheta;
  p.nu = c.nu;
  return p;
}

inline KmeansTrial run_kmeans_trial(const Matrix& data, const Vector& z0, const KmeansConfig& c) {
  KmeansTrial out;
  out.em_trace = em_kmeans(data, c.K, z0);
  out.em_only = out.em_trace.final_value;
  const Objective F = kmeans_objective(data, c.K);
  const BlockSpec blocks = BlockSpec::uniform(data.cols() * c.K, data.cols());
  out.inspect_trace = run_and_inspect_blockwise([&](const Vector& z) { return em_kmeans(data, c.K, z); }, F, z0,
                                                kmeans_policy(c, data.cols()), blocks);
  out.em_inspect = out.inspect_trace.final_value;
  out.escapes = out.inspect_trace.escapes.size();
  out.inspections = out.inspect_trace.inspections;
  out.mean_escape_radius = mean_escape_radius(out.inspect_trace);
  return out;
}

/// Starts with every center drawn from the points of one Gaussian component,
/// so the other true clusters start without a center.
inline Vector adversarial_cluster_init(const ClusterData& data, Index K, Rng& rng, int component = 0) {
  std::vector<Index> pool;
  for (Index i = 0; i < data.points.rows(); ++i)
    if (data.component[static_cast<std::size_t>(i)] == component) pool.push_back(i);
  if (pool.size() < static_cast<std::size_t>(K))
    throw std::invalid_argument("adversarial_cluster_init: component has fewer points than centers");
  const auto idx = rng.sample_without_replacement(pool.size(), static_cast<std::size_t>(K));
  const Index d = data.points.cols();
  Vector z(d * K);
  for (Index j = 0; j < K; ++j) z.segment(j * d, d) = data.points.row(pool[idx[static_cast<std::size_t>(j)]]).transpose();
  return z;
}

/// Lowest EM objective over `restarts` random-data-point initializations.
inline double kmeans_best_of_restarts(const Matrix& data, Index K, std::size_t restarts, std::uint64_t seed,
                                      unsigned threads = 1) {
  std::vector<double> best(restarts);
  parallel_for(restarts, threads, [&](std::size_t t) {
    Rng rng = Rng::stream(seed, t);
    best[t] = em_kmeans(data, K, random_data_centers(data, K, rng)).final_value;
  });
  return *std::min_element(best.begin(), best.end());
}

// Robust regression ------------------------------------------------------------

struct RobustRegConfig {
  double R = 5;
  double dR = 0.5;
  double dtheta = std::numbers::pi / 10;
  double nu = 1e-3;
  double r0 = kTukeyCutoff;
};

struct RobustRegResult {
  RunTrace irls;
  RunTrace inspected;
  double loss_irls = 0;
  double loss_inspected = 0;
};

/// IRLS alone and IRLS with inspection from the same start; `hooks` record
/// the inspected run.
inline RobustRegResult run_robust_reg(const RobustRegInstance& inst, const Vector& beta0, const RobustRegConfig& c,
                                      const RunHooks& hooks = {}) {
  RobustRegResult out;
  out.irls = irls_tukey(inst.X, inst.y, beta0, c.r0);
  out.loss_irls = out.irls.final_value;
  const Objective F = tukey_objective(inst.X, inst.y, c.r0);
  InspectionPolicy p;
  p.sampler = SamplerKind::ring2d;
  p.radius = {c.R};
  p.radius_step = c.dR;
  p.angle_step = c.dtheta;
  p.nu = c.nu;
  out.inspected = run_and_inspect(
      [&](const Vector& b) {
        hooks.begin();
        return irls_tukey(inst.X, inst.y, b, c.r0, {}, hooks.iterate);
      },
      F, beta0, p);
  out.loss_inspected = out.inspected.final_value;
  return out;
}

// Compressed sensing -----------------------------------------------------------

struct CsConfig {
  double R = 0.5;
  double dR = 0.05;
  double dtheta = std::numbers::pi / 10;
  double nu = 1e-5;
  double support_tol = 1e-3;  // magnitude above which an entry counts as nonzero
};

struct CsOutcome {
  Vector x;
  double objective = 0;
  double support_ratio = 0;  // identified true nonzeros / true nonzeros
  bool all_identified = false;
  bool below_true = false;   // objective below Q(x_true)
  std::size_t iterations = 0;
  std::size_t inspections = 0;
  std::size_t escapes = 0;
};

enum class CsAlgorithm { half, cd, cdi };

inline CsAlgorithm parse_cs_algorithm(const std::string& s) {
  if (s == "half") return CsAlgorithm::half;
  if (s == "cd") return CsAlgorithm::cd;
  if (s == "cdi") return CsAlgorithm::cdi;
  throw std::invalid_argument("unknown compressed-sensing algorithm '" + s + "'");
}

inline const char* to_string(CsAlgorithm a) {
  switch (a) {
    case CsAlgorithm::half: return "half";
    case CsAlgorithm::cd: return "cd";
    case CsAlgorithm::cdi: return "cdi";
  }
  return "?";
}

inline CsOutcome summarize_cs(const CsInstance& inst, const Vector& x, double support_tol) {
  CsOutcome o;
  o.x = x;
  o.objective = half_objective(inst.A, inst.b, inst.lambda, x);
  std::size_t truth = 0, hit = 0;
  for (Index j = 0; j < x.size(); ++j) {
    if (inst.x_true[j] != 0) {
      ++truth;
      if (std::abs(x[j]) > support_tol) ++hit;
    }
  }
  o.support_ratio = truth ? static_cast<double>(hit) / static_cast<double>(truth) : 1.0;
  o.all_identified = hit == truth;
  o.below_true = o.objective < half_objective(inst.A, inst.b, inst.lambda, inst.x_true);
  return o;
}

inline CsOutcome run_cs(const CsInstance& inst, CsAlgorithm algo, const CsConfig& c) {
  const Vector x0 = Vector::Zero(inst.A.cols());
  switch (algo) {
    case CsAlgorithm::half: {
      const RunTrace t = iterative_half_threshold(inst.A, inst.b, inst.lambda, x0);
      auto o = summarize_cs(inst, t.final_point, c.support_tol);
      o.iterations = t.iterations;
      return o;
    }
    case CsAlgorithm::cd: {
      const RunTrace t = cd_half_threshold(inst.A, inst.b, inst.lambda, x0);
      auto o = summarize_cs(inst, t.final_point, c.support_tol);
      o.iterations = t.iterations;
      return o;
    }
    case CsAlgorithm::cdi: break;
  }
  const Objective Q = cs_objective(inst);
  InspectionPolicy p;
  p.sampler = SamplerKind::ring2d;
  p.rule = BlockRule::sparse_pairs;
  p.radius = {c.R};
  p.radius_step = c.dR;
  p.angle_step = c.dtheta;
  p.nu = c.nu;
  const BlockSpec blocks = BlockSpec::whole(inst.A.cols());
  const RunTrace t = run_and_inspect_blockwise(
      [&](const Vector& x) { return cd_half_threshold(inst.A, inst.b, inst.lambda, x); }, Q, x0, p, blocks);
  auto o = summarize_cs(inst, t.final_point, c.support_tol);
  o.iterations = t.iterations;
  o.inspections = t.inspections;
  o.escapes = t.escapes.size();
  return o;
}

// Sparse logistic regression ---------------------------------------------------

struct LogRegConfig {
  double R = 5;
  double dR = 1;
  double dtheta = std::numbers::pi / 10;
  double nu = 1e-3;
  double step = 0.5;
  double lambda = 1;
  double gamma = 5;
  // On separable draws theta grows without bound and the theta-change rule
  // never fires, so each PL segment gets a fixed budget.
  std::size_t max_iterations = 2000;
};

struct LogRegOutcome {
  double objective = 0;
  double test_error = 0;
  std::size_t iterations = 0;
  std::size_t inspections = 0;
  std::size_t escapes = 0;
};

struct LogRegTrial {
  LogRegOutcome pl;
  LogRegOutcome pli;
};

inline LogRegTrial run_logreg_trial(const LogRegInstance& inst, const LogRegConfig& c) {
  const McpSettings s{inst.weight, c.lambda, c.gamma};
  RunnerConfig rc;
  rc.step = c.step;
  rc.max_iterations = c.max_iterations;
  const Vector theta0 = Vector::Zero(inst.X.cols());
  LogRegTrial out;
  const RunTrace pl = prox_linear_mcp(inst.X, inst.y, s, theta0, rc);
  out.pl.objective = pl.final_value;
  out.pl.test_error = logreg_test_error(inst, pl.final_point);
  out.pl.iterations = pl.iterations;

  const Objective F = logreg_objective(inst, c.lambda, c.gamma);
  InspectionPolicy p;
  p.sampler = SamplerKind::ring2d;
  p.rule = BlockRule::sparse_pairs;
  p.radius = {c.R};
  p.radius_step = c.dR;
  p.angle_step = c.dtheta;
  p.nu = c.nu;
  const BlockSpec blocks = BlockSpec::whole(inst.X.cols());
  const RunTrace pli = run_and_inspect_blockwise(
      [&](const Vector& th) { return prox_linear_mcp(inst.X, inst.y, s, th, rc); }, F, theta0, p, blocks);
  out.pli.objective = pli.final_value;
  out.pli.test_error = logreg_test_error(inst, pli.final_point);
  out.pli.iterations = pli.iterations;
  out.pli.inspections = pli.inspections;
  out.pli.escapes = pli.escapes.size();
  return out;
}

}  // namespace rim::experiments
