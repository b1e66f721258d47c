#include <gtest/gtest.h>

#include "lowrank/phase_retrieval.hpp"
#include "oracles.hpp"

using namespace lowrank;

namespace {

PhaseRetrievalInstance instance(Index n, Index m, std::uint64_t seed,
                                EnsembleKind kind = EnsembleKind::ComplexGaussian) {
  RngStream rng(seed);
  return gen_phase_retrieval(n, m, kind, rng);
}

}  // namespace

TEST(ProjectModulus, FixedPointAndZeroConvention) {
  RngStream rng(1);
  const CVector y = sample_gaussian(rng, 6, Field::Complex);
  const RVector b = y.cwiseAbs();
  EXPECT_LE((project_modulus(y, b) - y).norm(), 1e-15);
  CVector zero = CVector::Zero(1);
  RVector two = RVector::Constant(1, 2.0);
  EXPECT_EQ(project_modulus(zero, two)(0), Complex(2.0, 0.0));
}

TEST(ProjectModulus, NearestPointOfModulusSet) {
  RngStream rng(2);
  const CVector y = sample_gaussian(rng, 8, Field::Complex);
  RVector b(8);
  for (Index k = 0; k < 8; ++k) b(k) = 2.0 * rng.uniform();
  const CVector p = project_modulus(y, b);
  for (Index k = 0; k < 8; ++k) EXPECT_NEAR(std::abs(p(k)), b(k), 1e-14);
  for (int trial = 0; trial < 100; ++trial) {
    const CVector z = b.cast<Complex>().cwiseProduct(oracle::random_torus(8, rng));
    EXPECT_LE((p - y).norm(), (z - y).norm() + 1e-14);
  }
}

TEST(AlternatingProjections, TruthIsFixedPoint) {
  const auto inst = instance(10, 60, 3);
  const SolveReport r = alternating_projections_from(inst, inst.B() * *inst.x_true);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(*r.rel_error_mod_phase, 1e-12);
}

TEST(AlternatingProjections, ResidualNonIncreasing) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = instance(12, 48, 100 + seed);
    RngStream rng(seed);
    const SolveReport r = alternating_projections(inst, rng, {500, 1e-12});
    for (std::size_t t = 1; t < r.residual_trace.size(); ++t) {
      ASSERT_LE(r.residual_trace[t], r.residual_trace[t - 1] + 1e-12 * (1.0 + r.residual_trace[t - 1]));
    }
  }
}

TEST(AlternatingProjections, SucceedsWithManyMeasurements) {
  int ok = 0;
  for (std::uint64_t t = 0; t < 10; ++t) {
    const auto inst = instance(20, 200, 200 + t);
    RngStream rng(t);
    ok += success(alternating_projections(inst, rng)) ? 1 : 0;
  }
  EXPECT_GE(ok, 9);
}

TEST(AlternatingProjections, PhaseEquivariance) {
  const auto inst = instance(10, 60, 4);
  RngStream rng(5);
  const CVector y0 = sample_gaussian(rng, 60, Field::Complex);
  const Complex rot = std::polar(1.0, 2.1);
  const SolveReport a = alternating_projections_from(inst, y0, {200, 1e-12});
  const SolveReport b = alternating_projections_from(inst, rot * y0, {200, 1e-12});
  EXPECT_LT(dist_mod_phase(a.estimate, b.estimate), 1e-8);
}

TEST(AlternatingProjections, Errors) {
  const auto inst = instance(10, 8, 6);
  RngStream rng(1);
  EXPECT_THROW(alternating_projections(inst, rng), RankDeficient);
  const auto ok = instance(4, 16, 7);
  EXPECT_THROW(alternating_projections_from(ok, CVector::Zero(3)), InvalidDimension);
}

TEST(WfLoss, SpecialPoints) {
  const auto inst = instance(6, 30, 8);
  const CVector& x = *inst.x_true;
  EXPECT_NEAR(wf_loss(inst, x), 0.0, 1e-24 + 1e-14 * std::pow(x.squaredNorm(), 2));
  EXPECT_NEAR(wf_loss(inst, std::polar(1.0, 0.4) * x), 0.0, 1e-12);
  const double at_zero = inst.b.array().pow(4).sum() / (2.0 * inst.m());
  EXPECT_NEAR(wf_loss(inst, CVector::Zero(6)), at_zero, 1e-12 * at_zero);
}

TEST(WfGrad, ZeroAtCriticalPoints) {
  const auto inst = instance(6, 30, 9);
  EXPECT_LE(wf_grad(inst, *inst.x_true).norm(), 1e-12);
  EXPECT_EQ(wf_grad(inst, CVector::Zero(6)).norm(), 0.0);
}

TEST(WfGrad, CentralDifferenceContract) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = instance(8, 40, 300 + seed);
    RngStream rng(seed);
    const CVector x = sample_gaussian(rng, 8, Field::Complex);
    const CVector g = wf_grad(inst, x);
    for (int j = 0; j < 20; ++j) {
      const CVector h = sample_gaussian(rng, 8, Field::Complex);
      const double exact = 2.0 * g.dot(h).real();
      const double fd = oracle::central_difference([&](const CVector& z) { return wf_loss(inst, z); }, x, h, 1e-5);
      ASSERT_LT(std::abs(fd - exact), 1e-6 * std::abs(exact)) << "seed " << seed << " dir " << j;
    }
  }
}

TEST(SpectralInit, NormAndLargeSampleAccuracy) {
  // First-order perturbation of the top eigenvector of M: each of the n-1
  // orthogonal coordinates of (M - EM) x_s has variance E|a|^6 / m = 6 / m,
  // and the eigengap is ||x_s||^2, so dist / ||x_s|| ~ sqrt(6 (n - 1) / m).
  // At n=20 that is 0.17 for m=4000, which is above 1/8; the 1/8 radius
  // needs m of roughly 8000 or more.
  const auto inst = instance(20, 4000, 10);
  const CVector x0 = wf_spectral_init(inst);
  EXPECT_NEAR(x0.norm(), signal_scale(inst), 1e-12);
  const double predicted = std::sqrt(6.0 * 19.0 / 4000.0);
  EXPECT_NEAR(relative_error(x0, *inst.x_true, Field::Complex), predicted, 0.25 * predicted);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto big = instance(20, 16000, 100 + seed);
    EXPECT_LT(relative_error(wf_spectral_init(big), *big.x_true, Field::Complex), 1.0 / 8.0) << seed;
  }
}

TEST(SpectralInit, ExpectedMatrixIsIdentityPlusRankOne) {
  const Index n = 5;
  RngStream rng(11);
  CVector x = sample_gaussian(rng, n, Field::Complex);
  x /= x.norm();
  CMatrix mean = CMatrix::Zero(n, n);
  const int instances = 10000;
  for (int i = 0; i < instances; ++i) {
    PhaseRetrievalInstance inst;
    inst.ensemble.B = sample_gaussian_matrix(rng, 1, n, Field::Complex);
    inst.b = measure_moduli(inst.ensemble.B, x);
    mean += spectral_matrix(inst).dense();
  }
  mean /= static_cast<double>(instances);
  const CMatrix expect = CMatrix::Identity(n, n) + x * x.adjoint();
  EXPECT_LT((mean - expect).norm(), 0.05 * expect.norm());
}

TEST(SpectralInit, RealInstanceStaysReal) {
  const auto inst = instance(10, 80, 12, EnsembleKind::RealGaussian);
  EXPECT_EQ(wf_spectral_init(inst).imag().cwiseAbs().maxCoeff(), 0.0);
}

TEST(WirtingerFlow, StartAtTruthStays) {
  const auto inst = instance(10, 80, 13);
  const SolveReport r = wirtinger_flow(inst, {}, *inst.x_true);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(*r.rel_error_mod_phase, 1e-14);
}

TEST(WirtingerFlow, ConvergesGeometrically) {
  const auto inst = instance(40, 320, 14);
  const SolveReport r = wirtinger_flow(inst);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(*r.rel_error_mod_phase, 1e-6);
  // Gradient norms decay at a steady geometric rate after a burn-in.
  const auto& g = r.residual_trace;
  ASSERT_GT(g.size(), 40u);
  const std::size_t half = 10 + (g.size() - 10) / 2;
  const double rate1 = std::pow(g[half] / g[10], 1.0 / static_cast<double>(half - 10));
  const double rate2 = std::pow(g.back() / g[half], 1.0 / static_cast<double>(g.size() - 1 - half));
  EXPECT_LT(rate1, 1.0);
  EXPECT_LT(rate2, 1.0);
  EXPECT_NEAR(rate1, rate2, 0.05);
}

TEST(WirtingerFlow, BacktrackingKeepsObjectiveMonotone) {
  const auto inst = instance(10, 60, 15);
  WFConfig cfg;
  cfg.step_scale = 10.0;
  cfg.max_iter = 200;
  const SolveReport on = wirtinger_flow(inst, cfg);
  for (std::size_t t = 1; t < on.objective_trace.size(); ++t) {
    ASSERT_LE(on.objective_trace[t], on.objective_trace[t - 1]);
  }
  cfg.backtracking = false;
  cfg.max_iter = 5;
  const SolveReport off = wirtinger_flow(inst, cfg);
  EXPECT_GT(off.objective_trace.back(), off.objective_trace.front());
}

TEST(WirtingerFlow, PhaseEquivariance) {
  const auto inst = instance(10, 80, 16);
  RngStream rng(3);
  const CVector x0 = sample_gaussian(rng, 10, Field::Complex);
  WFConfig cfg;
  cfg.max_iter = 300;
  const SolveReport a = wirtinger_flow(inst, cfg, x0);
  const SolveReport b = wirtinger_flow(inst, cfg, CVector(std::polar(1.0, -0.9) * x0));
  EXPECT_LT(dist_mod_phase(a.estimate, b.estimate), 1e-8);
}

TEST(WirtingerFlow, RejectsBadConfig) {
  const auto inst = instance(4, 16, 17);
  WFConfig cfg;
  cfg.step_scale = 0.0;
  EXPECT_THROW(wirtinger_flow(inst, cfg), ConfigError);
}
