#include "rim/experiments.hpp"
#include "rim/meta.hpp"
#include "rim/problems.hpp"
#include "rim/runners.hpp"
#include "rim/theory.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace rim;
using rim::testing::random_vector;

namespace {

Vector scalar(double v) {
  Vector x(1);
  x[0] = v;
  return x;
}

// F = f + r with the gradient of f standing in for the gradient of F; exact
// wherever r is locally constant or smooth enough to be folded into f.
Objective with_smooth_gradient(const DecomposedObjective& d, bool include_r_gradient, const Objective& full) {
  Objective o = d.total();
  if (include_r_gradient)
    o.gradient = full.gradient;
  else
    o.gradient = d.f.gradient;
  return o;
}

InspectionPolicy certified_policy(const DecomposedObjective& d, SamplerKind sampler, double R, double dR) {
  InspectionPolicy p;
  p.sampler = sampler;
  p.radius = {R};
  p.radius_step = dR;
  p.nu = 1e-4;
  p.constants = certificate_constants(d);
  return p;
}

}  // namespace

TEST(Formulas, EscapeRadiusForQuadSine) {
  EXPECT_NEAR(prop1_escape_radius(0.3, 3), 2.0 / 3, 1e-15);
  EXPECT_EQ(prop1_escape_radius(0, 3), 0);
  EXPECT_EQ(prop1_escape_radius(1, 1), 2);
  EXPECT_THROW(prop1_escape_radius(-1, 1), std::invalid_argument);
  EXPECT_THROW(prop1_escape_radius(1, 0), std::invalid_argument);
}

TEST(Formulas, DeltaRLocal) {
  EXPECT_EQ(delta_R_local(0.7, 0, 3, 1), 0.7);
  EXPECT_EQ(delta_R_local(0, 1, 4, 2), 4);
  // Past R = 2 sqrt(beta/L) the far term no longer matters.
  const double alpha = 0.5, beta = 0.3, L = 2;
  const double R0 = 2 * std::sqrt(beta / L);
  for (double R : {R0, 2 * R0, 10.0, std::numeric_limits<double>::infinity()})
    EXPECT_NEAR(delta_R_local(alpha, beta, L, R), alpha + 2 * std::sqrt(beta * L), 1e-14);
  EXPECT_GT(delta_R_local(alpha, beta, L, R0 / 2), alpha + 2 * std::sqrt(beta * L));
  EXPECT_THROW(delta_R_local(0, 0, 1, 0), std::invalid_argument);
  EXPECT_THROW(delta_R_local(-1, 0, 1, 1), std::invalid_argument);
}

TEST(Formulas, DeltaBlockwise) {
  const double one[1] = {0.8};
  EXPECT_EQ(delta_blockwise(0.1, 0.2, 3, one).delta, delta_R_local(0.1, 0.2, 3, 0.8));
  const double same[4] = {0.5, 0.5, 0.5, 0.5};
  EXPECT_NEAR(delta_blockwise(0.1, 0.2, 3, same).delta, 2 * delta_R_local(0.1, 0.2, 3, 0.5), 1e-14);
  EXPECT_EQ(delta_blockwise(0, 0, 3, same).delta, 0);
  const double mixed[3] = {0.1, 1, 5};
  const auto b = delta_blockwise(0.1, 0.2, 3, mixed);
  EXPECT_LE(b.delta, b.simplified + 1e-15);
  EXPECT_THROW(delta_blockwise(0, 0, 1, std::span<const double>{}), std::invalid_argument);
}

TEST(Formulas, DeltaApproximateReducesToExactAtZeroEta) {
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    const double alpha = rng.uniform(0, 2), beta = rng.uniform(0, 2), L = rng.uniform(0.1, 5);
    const double radii[2] = {rng.uniform(0.1, 5), rng.uniform(0.1, 5)};
    const double zero[2] = {0, 0};
    EXPECT_NEAR(delta_approximate(alpha, beta, L, radii, zero), delta_blockwise(alpha, beta, L, radii).delta, 1e-12);
    const double eta[2] = {rng.uniform(0, 1), rng.uniform(0, 1)};
    EXPECT_GE(delta_approximate(alpha, beta, L, radii, eta), delta_blockwise(alpha, beta, L, radii).delta);
  }
  const double r[1] = {1};
  const double e[2] = {0, 0};
  EXPECT_THROW(delta_approximate(0, 0, 1, r, e), std::invalid_argument);
}

TEST(Formulas, OptimalityBounds) {
  const auto z = theorem1_bounds(0, 1, 0, 0, 0);
  EXPECT_EQ(z.gap, 0);
  EXPECT_EQ(z.distance, 0);
  const auto b = theorem1_bounds(2, 1, 0, 0, 0);
  EXPECT_EQ(b.gap, 2);
  EXPECT_EQ(b.distance, 4);
  EXPECT_EQ(b.gap_general, 4);
  ASSERT_TRUE(b.gap_alpha_zero.has_value());
  EXPECT_EQ(*b.gap_alpha_zero, 2);
  const auto g = theorem1_bounds(1, 2, 0.5, 0.25, 3);
  EXPECT_FALSE(g.gap_alpha_zero.has_value());
  EXPECT_NEAR(g.gap, (1 + 1) / 2.0 + 1.5 + 0.5, 1e-15);
  EXPECT_NEAR(g.distance, 1 + 3, 1e-15);
  EXPECT_THROW(theorem1_bounds(1, 0, 0, 0, 0), std::invalid_argument);
}

TEST(Formulas, GlobalRadius) {
  EXPECT_NEAR(global_radius(0, 0.3, 1, 1, 0), 4 * std::sqrt(0.3), 1e-15);
  EXPECT_NEAR(global_radius(1, 0, 1, 2, 0.5), 1.5, 1e-15);
  const double radii[2] = {1, 2};
  EXPECT_NEAR(blockwise_distance_bound(0, 0, 1, 1, 0.25, radii), 0.25, 1e-15);
}

TEST(Formulas, EtaCertificate) {
  EXPECT_EQ(eta_certificate(0, 0, 0, 0, 0), 0);
  EXPECT_NEAR(eta_certificate(0.1, 1, 0, 0, 0.5), 0.6, 1e-15);
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    double a[5];
    for (double& v : a) v = rng.uniform(0, 2);
    const double base = eta_certificate(a[0], a[1], a[2], a[3], a[4]);
    for (int i = 0; i < 5; ++i) {
      double b[5];
      std::copy(a, a + 5, b);
      b[i] += 0.1;
      EXPECT_GE(eta_certificate(b[0], b[1], b[2], b[3], b[4]), base);
    }
  }
  EXPECT_THROW(eta_certificate(-1, 0, 0, 0, 0), std::invalid_argument);
}

TEST(Formulas, EscapeGradientThreshold) {
  EXPECT_EQ(prop2_escape_gradient(1, 0, 0, 0, 1), 4.5);
  EXPECT_EQ(prop2_escape_gradient(0, 0, 0, 1, 1), 1);
  EXPECT_NEAR(prop2_escape_gradient(1, 0.4, 0, 0, 1e-12), 1.2, 1e-10);
  EXPECT_THROW(prop2_escape_gradient(1, 0, 0, 0, 0), std::invalid_argument);
}

TEST(BruteForceRLocal, QuadSineGlobalMinimizerIsCertified) {
  const auto v = verify_R_local_bruteforce(quad_sine(), scalar(0), 5, 1e-3);
  EXPECT_TRUE(v.certified);
  EXPECT_FALSE(v.counterexample.has_value());
  EXPECT_EQ(v.probes, 5000u);  // spacing 2e-3 over [-5, 5]
}

TEST(BruteForceRLocal, LocalMinimizerHasACounterexampleAtPoint7) {
  const Objective F = quad_sine();
  const RunTrace t = gradient_descent(F, scalar(3), {});
  ASSERT_GT(t.final_value, 0.01);
  const auto v = verify_R_local_bruteforce(F, t.final_point, 0.7, 1e-3);
  EXPECT_FALSE(v.certified);
  ASSERT_TRUE(v.counterexample.has_value());
  EXPECT_LE(std::abs((*v.counterexample)[0] - t.final_point[0]), 0.7 + 1e-12);
  EXPECT_LT(F.value(*v.counterexample), t.final_value);
}

TEST(BruteForceRLocal, ConvexQuadraticAwayFromZero) {
  Objective F;
  F.dimension = 2;
  F.value = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  Rng rng(1);
  for (int k = 0; k < 20; ++k) {
    Vector x = random_vector(rng, 2, -3, 3);
    const double R = rng.uniform(0.2, 2);
    EXPECT_FALSE(verify_R_local_bruteforce(F, x, R, R / 10).certified);
  }
  EXPECT_THROW(verify_R_local_bruteforce(F, Vector::Zero(4), 1, 0.1), std::invalid_argument);
}

TEST(Decomposition, ConstructedInstancesSatisfyTheAssumptions) {
  Rng rng(7);
  for (auto split : {QuadSineSplit::bounded, QuadSineSplit::lipschitz}) {
    const auto d = quad_sine_decomposition(0.3, 3, split);
    const auto c = check_decomposition(d, quad_sine({0.3, 3}), rng);
    EXPECT_TRUE(c.ok());
  }
  Vector c(2);
  c << 0.3, -1;
  const auto sw = square_wave_decomposition(c, 0.2, 2);
  Objective F = sw.total();
  EXPECT_TRUE(check_decomposition(sw, F, rng).ok());
  // A split with beta understated must be caught.
  auto bad = quad_sine_decomposition(0.3, 3, QuadSineSplit::bounded);
  bad.beta = 0.1;
  EXPECT_FALSE(check_decomposition(bad, quad_sine({0.3, 3}), rng).growth_ok);
}

TEST(Decomposition, SquareWaveGlobalMinimizers) {
  Vector c(2);
  // sin(2 * 0.3) > 0: r = 2 beta at c; the nearest zero-set edge is x1 = 0.
  c << 0.3, -1;
  const auto sw = square_wave_decomposition(c, 0.2, 2);
  EXPECT_NEAR(sw.F_min, 0.045, 1e-15);
  ASSERT_EQ(sw.global_minimizers.size(), 1u);
  EXPECT_NEAR(sw.global_minimizers[0][0], 0, 1e-15);
  // Brute-force oracle over a fine grid.
  const Objective F = sw.total();
  double best = std::numeric_limits<double>::infinity();
  for (double x = -2; x <= 2; x += 1e-3)
    for (double y = -2; y <= 0; y += 0.05) {
      Vector p(2);
      p << x, y;
      best = std::min(best, F.value(p));
    }
  EXPECT_NEAR(best, sw.F_min, 1e-3);
  c << -0.3, 2;
  EXPECT_EQ(square_wave_decomposition(c, 0.2, 2).F_min, 0);
}

TEST(Certification, GlobalMinimizerPassesBothQuadSineSplits) {
  for (auto split : {QuadSineSplit::bounded, QuadSineSplit::lipschitz}) {
    const auto d = quad_sine_decomposition(0.3, 3, split);
    for (double R : {0.1, 0.7, 5.0}) EXPECT_TRUE(certify_decomposition(d, scalar(0), R).passed());
  }
}

TEST(Certification, FabricatedPointFails) {
  // x = 5 is nowhere near stationary: every bound must trip.
  const auto d = quad_sine_decomposition(0.3, 3, QuadSineSplit::bounded);
  const auto rep = certify_decomposition(d, scalar(5), 10.0);
  EXPECT_FALSE(rep.passed());
  EXPECT_FALSE(rep.grad_ok);
  EXPECT_FALSE(rep.distance_ok);
}

TEST(Certification, InspectionCertificatesSatisfyTheBounds) {
  const Objective Fq = quad_sine();
  Rng rng(11);
  for (auto split : {QuadSineSplit::bounded, QuadSineSplit::lipschitz}) {
    const auto d = quad_sine_decomposition(0.3, 3, split);
    const Objective F = with_smooth_gradient(d, true, Fq);
    for (double R : {0.2, 0.7}) {
      const InspectionPolicy p = certified_policy(d, SamplerKind::line1d, R, 0.01);
      for (int k = 0; k < 20; ++k) {
        const Vector x0 = scalar(rng.uniform(-10, 10));
        const RunTrace t = run_and_inspect([&](const Vector& x) { return gradient_descent(F, x, {}); }, F, x0, p);
        ASSERT_TRUE(t.certificate.has_value());
        const auto slack = certificate_slack(*t.certificate);
        const auto rep = certify_decomposition(d, t.final_point, slack.radii, slack.eta);
        EXPECT_TRUE(rep.grad_ok) << rep.grad_norm << " > " << rep.delta;
        EXPECT_TRUE(rep.gap_ok) << rep.gap << " > " << rep.gap_bound;
        EXPECT_TRUE(rep.distance_ok);
      }
    }
  }
}

TEST(Certification, SquareWaveInspectionCertificatesSatisfyTheBounds) {
  Rng rng(12);
  for (int k = 0; k < 10; ++k) {
    const Vector c = random_vector(rng, 2, -3, 3);
    const auto sw = square_wave_decomposition(c, 0.1, 3);
    const Objective F = with_smooth_gradient(sw, false, {});
    const InspectionPolicy p = certified_policy(sw, SamplerKind::ring2d, 1, 0.1);
    const Vector x0 = random_vector(rng, 2, -5, 5);
    const RunTrace t = run_and_inspect([&](const Vector& x) { return gradient_descent(F, x, {}); }, F, x0, p);
    ASSERT_TRUE(t.certificate.has_value());
    const auto slack = certificate_slack(*t.certificate);
    const auto rep = certify_decomposition(sw, t.final_point, slack.radii, slack.eta);
    EXPECT_TRUE(rep.passed()) << "grad " << rep.grad_norm << "/" << rep.delta << " gap " << rep.gap << "/"
                              << rep.gap_bound;
  }
}

TEST(Certification, GlobalRadiusFindsTheGlobalMinimizer) {
  const Objective F = quad_sine();
  for (auto split : {QuadSineSplit::bounded, QuadSineSplit::lipschitz}) {
    const auto d = quad_sine_decomposition(0.3, 3, split);
    const double R = global_radius(d.alpha, d.beta, d.L, d.mu, d.M);
    InspectionPolicy p;
    p.sampler = SamplerKind::line1d;
    p.radius = {R};
    p.radius_step = 0.01;
    Rng rng(13);
    for (int k = 0; k < 20; ++k) {
      const RunTrace t = run_and_inspect([&](const Vector& x) { return gradient_descent(F, x, {}); }, F,
                                         scalar(rng.uniform(-10, 10)), p);
      EXPECT_LE(std::abs(t.final_point[0]), 1e-3);
      EXPECT_LE(t.final_value, 1e-6);
      // And the brute-force check agrees that the result is R-local.
      EXPECT_TRUE(verify_R_local_bruteforce(F, t.final_point, R, 1e-3, 1e-9).certified);
    }
  }
}

TEST(Certification, GradientThresholdForcesAnEscape) {
  // Any point where |f'| exceeds the threshold must be escaped by a line
  // inspection with the matching density. Lipschitz split: f = x^2/2, L = 1.
  const auto d = quad_sine_decomposition(0.3, 3, QuadSineSplit::lipschitz);
  const Objective F = quad_sine();
  const double nu = 1e-4, dR = 0.02, rbar = dR / 2;
  InspectionPolicy p;
  p.sampler = SamplerKind::line1d;
  p.radius = {0.7};
  p.radius_step = dR;
  p.nu = nu;
  const double threshold = prop2_escape_gradient(d.L, d.alpha, d.beta, nu, rbar);
  EXPECT_NEAR(threshold, 4.5 * 0.01 + 3 * 0.9 * std::numbers::pi + 0.01, 1e-12);
  Evaluator ev(F);
  std::size_t tested = 0;
  for (double x = -10; x <= 10; x += 0.01) {
    if (std::abs(d.f.gradient(scalar(x))[0]) < threshold) continue;
    ++tested;
    EXPECT_TRUE(escaped(inspect_point(ev, scalar(x), p))) << x;
  }
  EXPECT_GT(tested, 200u);
}
