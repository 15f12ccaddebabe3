#include "rim/experiments.hpp"
#include "rim/meta.hpp"
#include "rim/problems.hpp"
#include "rim/runners.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rim;
using namespace rim::experiments;
using rim::testing::random_vector;

namespace {

Vector scalar(double v) {
  Vector x(1);
  x[0] = v;
  return x;
}

// Every iterate of a run-and-inspect call with its segment index.
struct Recorder {
  struct Row {
    std::size_t segment;
    Vector x;
    double value;
  };
  std::vector<Row> rows;
  std::size_t segment = 0;
  bool started = false;

  RunHooks hooks() {
    return {[this] {
              if (started) ++segment;
              started = true;
            },
            [this](const Vector& x, double v) { rows.push_back({segment, x, v}); }};
  }
};

// Accepted points: the last iterate before each escape, each escape point,
// and the final point. Values must not increase and escapes must drop by
// more than nu.
void expect_stitched(const RunTrace& t, double nu) {
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& e : t.escapes) {
    EXPECT_LE(e.value_before, prev);
    EXPECT_LT(e.value_after, e.value_before - nu);
    prev = e.value_after;
  }
  EXPECT_LE(t.final_value, prev);
}

}  // namespace

TEST(RunAndInspect, QuadSineFromFiveReachesTheGlobalMinimizer) {
  const RunTrace t = run_quad_sine({}, 5.0);
  EXPECT_EQ(t.stop, StopReason::certified);
  EXPECT_LE(std::abs(t.final_point[0]), 1e-3);
  EXPECT_LE(t.final_value, 1e-6);
  EXPECT_GE(t.escapes.size(), 1u);
  ASSERT_TRUE(t.certificate.has_value());
  EXPECT_EQ(t.certificate->center, t.final_point);
  EXPECT_EQ(t.inspections, t.escapes.size() + 1);
}

TEST(RunAndInspect, GlobalStartCertifiesWithoutEscapes) {
  const RunTrace t = run_quad_sine({}, 0.0);
  EXPECT_TRUE(t.escapes.empty());
  EXPECT_EQ(t.inspections, 1u);
  EXPECT_EQ(t.stop, StopReason::certified);
}

TEST(RunAndInspect, EscapeCountBoundedByDescent) {
  const QuadSineConfig c;
  const Objective F = quad_sine();
  Rng rng(10);
  for (int k = 0; k < 50; ++k) {
    const double x0 = rng.uniform(-10, 10);
    const RunTrace t = run_quad_sine(c, x0);
    const double drop = F.value(scalar(x0)) - t.final_value;
    EXPECT_LE(static_cast<double>(t.escapes.size()) * c.nu, drop + c.nu);
    expect_stitched(t, c.nu);
  }
}

TEST(RunAndInspect, RunnerResumesExactlyFromTheEscapePoint) {
  Recorder rec;
  AckleyConfig c;
  const RunTrace t = run_ackley(c, ackley_start(0, 3), {}, rec.hooks());
  ASSERT_FALSE(t.escapes.empty());
  std::size_t checked = 0;
  for (std::size_t i = 1; i < rec.rows.size(); ++i) {
    if (rec.rows[i].segment == rec.rows[i - 1].segment) continue;
    // First iterate of a new segment is the escape point itself.
    const auto& e = t.escapes[rec.rows[i].segment - 1];
    EXPECT_EQ(rec.rows[i].value, e.value_after);
    ASSERT_LT(i + 1, rec.rows.size());
    if (rec.rows[i + 1].segment == rec.rows[i].segment) {
      EXPECT_LE(rec.rows[i + 1].value, rec.rows[i].value + 1e-9);
    }
    ++checked;
  }
  EXPECT_EQ(checked, t.escapes.size());
}

TEST(RunAndInspect, AckleyTraceIsMonotoneAtAcceptedPoints) {
  for (auto mode : {AckleyMode::gd2d, AckleyMode::bcd1d}) {
    AckleyConfig c;
    c.mode = mode;
    for (std::size_t trial = 0; trial < 10; ++trial) {
      const RunTrace t = run_ackley(c, ackley_start(0, trial));
      expect_stitched(t, c.nu);
      for (const auto& e : t.escapes) {
        EXPECT_LE(e.radius, c.R + 1e-12);
        EXPECT_EQ(e.block.has_value(), mode == AckleyMode::bcd1d);
      }
    }
  }
}

TEST(RunAndInspect, BlockwiseWithOneBlockEqualsWholeSpace) {
  const Objective F = modified_ackley();
  InspectionPolicy p;
  RunnerConfig rc;
  auto runner = [&](const Vector& x) { return gradient_descent(F, x, rc); };
  for (std::size_t trial = 0; trial < 5; ++trial) {
    const Vector x0 = ackley_start(1, trial, 3);
    const RunTrace a = run_and_inspect(runner, F, x0, p);
    const RunTrace b = run_and_inspect_blockwise(runner, F, x0, p, BlockSpec::whole(2));
    EXPECT_EQ(a.final_point, b.final_point);
    EXPECT_EQ(a.final_value, b.final_value);
    ASSERT_EQ(a.escapes.size(), b.escapes.size());
    for (std::size_t i = 0; i < a.escapes.size(); ++i) {
      EXPECT_EQ(a.escapes[i].samples, b.escapes[i].samples);
      EXPECT_EQ(a.escapes[i].radius, b.escapes[i].radius);
    }
    EXPECT_EQ(a.evaluations.values, b.evaluations.values);
  }
}

TEST(RunAndInspect, BcdWithLineInspectionReachesTheGlobalBasin) {
  // Oracle: grid minimum of the Ackley variant (0.05 grid plus refinement).
  const GridMinimum g = grid_minimum_2d(modified_ackley(), 10, 0.05);
  AckleyConfig c;
  c.mode = AckleyMode::bcd1d;
  std::size_t reached = 0;
  for (std::size_t trial = 0; trial < 20; ++trial) {
    const RunTrace t = run_ackley(c, ackley_start(0, trial));
    reached += std::abs(t.final_value - g.value) <= 1e-3;
  }
  // Coordinate-wise lines miss many diagonal descents; some starts still
  // reach the global basin (5 of these 20).
  EXPECT_GE(reached, 1u);
}

TEST(RunAndInspect, KmeansEscapesAreBlockwiseAndWithinRadius) {
  const ClusterData data = gaussian_clusters(1);
  KmeansConfig c;
  Rng rng(0);
  const KmeansTrial t = run_kmeans_trial(data.points, adversarial_cluster_init(data, 4, rng), c);
  ASSERT_FALSE(t.inspect_trace.escapes.empty());
  for (const auto& e : t.inspect_trace.escapes) {
    ASSERT_TRUE(e.block.has_value());
    EXPECT_LT(*e.block, 4u);
    EXPECT_EQ(e.coordinates.size(), 2u);
    EXPECT_LE(e.radius, c.R);
  }
  EXPECT_LE(t.em_inspect, t.em_only + c.nu);
  expect_stitched(t.inspect_trace, c.nu);
}

TEST(RunAndInspect, OuterGuardStopsTheLoop) {
  const RunTrace t = run_quad_sine({}, 9.0, MetaOptions{1});
  EXPECT_EQ(t.stop, StopReason::outer_guard);
  EXPECT_EQ(t.escapes.size(), 1u);
  EXPECT_EQ(t.final_value, t.escapes.back().value_after);
}

TEST(RunAndInspect, DivergedSegmentsAreCountedAndInspected) {
  const Objective F = quad_sine();
  RunnerConfig rc;
  rc.step = 3;  // far too long: every segment trips the divergence guard
  InspectionPolicy p;
  p.sampler = SamplerKind::line1d;
  p.radius = {0.7};
  p.radius_step = 0.01;
  const RunTrace t = run_and_inspect([&](const Vector& x) { return gradient_descent(F, x, rc); }, F, scalar(4.0), p);
  EXPECT_GE(t.diverged_runs, 1u);
  EXPECT_EQ(t.stop, StopReason::certified);
  EXPECT_LE(t.final_value, F.value(scalar(4.0)));
}

TEST(RunAndInspect, RejectsMismatchedStartAndBlocks) {
  const Objective F = modified_ackley();
  InspectionPolicy p;
  auto runner = [&](const Vector& x) { return gradient_descent(F, x, {}); };
  EXPECT_THROW(run_and_inspect(runner, F, scalar(1), p), std::invalid_argument);
  EXPECT_THROW(run_and_inspect_blockwise(runner, F, Vector::Zero(2), p, BlockSpec::whole(3)), std::invalid_argument);
  p.nu = -1;
  EXPECT_THROW(run_and_inspect(runner, F, Vector::Zero(2), p), std::invalid_argument);
}

TEST(RunAndInspect, IrlsWithInspectionNeverEndsWorse) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const RobustRegInstance inst = robust_reg_instance(s);
    Rng rng(s);
    const Vector beta0 = inst.beta_true + random_vector(rng, 2, -10, 10);
    const RobustRegResult r = run_robust_reg(inst, beta0, {});
    EXPECT_LE(r.loss_inspected, r.loss_irls + 1e-12) << "seed " << s;
  }
}

TEST(RunAndInspect, CompressedSensingInspectionKeepsOrdering) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const CsInstance inst = cs_instance(25, trial_seed(42, s));
    const CsOutcome cd = run_cs(inst, CsAlgorithm::cd, {});
    const CsOutcome cdi = run_cs(inst, CsAlgorithm::cdi, {});
    EXPECT_LE(cdi.objective, cd.objective);
    EXPECT_GE(cdi.inspections, 1u);
  }
}
