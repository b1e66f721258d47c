#include <gtest/gtest.h>

#include <numbers>

#include "lowrank/landscape.hpp"
#include "oracles.hpp"

using namespace lowrank;

namespace {

// Point of the ring {<x_s, x> = 0, ||x|| = ||x_s|| / sqrt 2}.
CVector ring_point(const CVector& xs, RngStream& rng) {
  CVector x = sample_gaussian(rng, xs.size(), Field::Complex);
  x -= (xs.dot(x) / xs.squaredNorm()) * xs;
  return x * (xs.norm() / std::numbers::sqrt2 / x.norm());
}

}  // namespace

TEST(ExpectedLoss, SpecialPoints) {
  RngStream rng(1);
  const CVector xs = sample_gaussian(rng, 6, Field::Complex);
  const double n4 = std::pow(xs.squaredNorm(), 2);
  EXPECT_NEAR(expected_loss(xs, xs), 0.0, 1e-12 * n4);
  EXPECT_DOUBLE_EQ(expected_loss(CVector::Zero(6), xs), n4);
}

TEST(ExpectedLoss, MonteCarloOracle) {
  RngStream rng(2);
  CVector xs = sample_gaussian(rng, 10, Field::Complex);
  xs /= xs.norm();
  const CVector x = sample_gaussian(rng, 10, Field::Complex) * 0.5;
  const double mc = oracle::monte_carlo_loss(x, xs, 100000, rng);
  EXPECT_NEAR(mc, expected_loss(x, xs), 0.02 * expected_loss(x, xs));
}

TEST(ExpectedGrad, ZeroOnCriticalSets) {
  RngStream rng(3);
  const CVector xs = sample_gaussian(rng, 8, Field::Complex);
  const double scale = std::pow(xs.norm(), 3);
  EXPECT_LE(expected_grad(xs, xs).norm(), 1e-13 * scale);
  EXPECT_LE(expected_grad(std::polar(1.0, 2.0) * xs, xs).norm(), 1e-13 * scale);
  EXPECT_EQ(expected_grad(CVector::Zero(8), xs).norm(), 0.0);
  EXPECT_LE(expected_grad(ring_point(xs, rng), xs).norm(), 1e-13 * scale);
}

TEST(ExpectedGrad, CentralDifferenceOfExpectedLoss) {
  // Real-gradient convention: directional derivative is Re<grad, h>.
  RngStream rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const CVector xs = sample_gaussian(rng, 6, Field::Complex);
    const CVector x = sample_gaussian(rng, 6, Field::Complex);
    const CVector h = sample_gaussian(rng, 6, Field::Complex);
    const double exact = expected_grad(x, xs).dot(h).real();
    const double fd =
        oracle::central_difference([&](const CVector& z) { return expected_loss(z, xs); }, x, h, 1e-5);
    ASSERT_LT(std::abs(fd - exact), 1e-6 * std::abs(exact)) << trial;
  }
}

TEST(ExpectedHessForm, RingAlongSignal) {
  RngStream rng(5);
  const CVector xs = sample_gaussian(rng, 8, Field::Complex);
  const double n4 = std::pow(xs.squaredNorm(), 2);
  EXPECT_NEAR(expected_hess_form(ring_point(xs, rng), xs, xs), -2.0 * n4, 1e-10 * n4);
}

TEST(ExpectedHessForm, NegativeDefiniteAtZero) {
  RngStream rng(6);
  const CVector xs = sample_gaussian(rng, 5, Field::Complex);
  for (int trial = 0; trial < 10; ++trial) {
    const CVector h = sample_gaussian(rng, 5, Field::Complex);
    const double expect = 2.0 * (-xs.squaredNorm() * h.squaredNorm() - std::norm(xs.dot(h)));
    EXPECT_NEAR(expected_hess_form(CVector::Zero(5), xs, h), expect, 1e-12 * std::abs(expect));
    EXPECT_LT(expect, 0.0);
  }
}

TEST(ExpectedHessForm, MatchesSecondDifferenceAndIsEven) {
  RngStream rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const CVector xs = sample_gaussian(rng, 6, Field::Complex);
    const CVector x = sample_gaussian(rng, 6, Field::Complex);
    const CVector h = sample_gaussian(rng, 6, Field::Complex);
    const double q = expected_hess_form(x, xs, h);
    // Along a line the loss is a quartic, so D(eps) = f2 + eps^2 f4 / 12
    // exactly and one Richardson step removes the bias.
    const auto loss = [&](const CVector& z) { return expected_loss(z, xs); };
    const double d1 = oracle::second_central_difference(loss, x, h, 2e-3);
    const double d2 = oracle::second_central_difference(loss, x, h, 1e-3);
    const double fd = (4.0 * d2 - d1) / 3.0;
    EXPECT_NEAR(fd, q, 1e-6 * std::max(1.0, std::abs(q))) << trial;
    EXPECT_DOUBLE_EQ(expected_hess_form(x, xs, -h), q);
  }
}

TEST(ClassifyCritical, Tags) {
  RngStream rng(8);
  const CVector xs = sample_gaussian(rng, 6, Field::Complex);
  EXPECT_EQ(classify_critical(xs, xs, 1e-8).tag, CriticalTag::Solution);
  EXPECT_EQ(classify_critical(CVector::Zero(6), xs, 1e-8).tag, CriticalTag::Zero);
  EXPECT_EQ(classify_critical(ring_point(xs, rng), xs, 1e-8).tag, CriticalTag::Ring);
  EXPECT_EQ(classify_critical(sample_gaussian(rng, 6, Field::Complex), xs, 1e-8).tag, CriticalTag::None);
  EXPECT_THROW(classify_critical(xs, xs, 0.0), ConfigError);
}

TEST(Z1HessProbe, RingConcentratesOnExpectedValue) {
  RngStream rng(9);
  const auto inst = gen_phase_retrieval(20, 5000, EnsembleKind::ComplexGaussian, rng);
  const CVector& xs = *inst.x_true;
  const double n4 = std::pow(xs.squaredNorm(), 2);
  const double value = z1_hess_probe(inst, ring_point(xs, rng), 1e-3);
  EXPECT_NEAR(value, -2.0 * n4, 0.1 * 2.0 * n4);
}

TEST(Z1HessProbe, SolutionAndOrigin) {
  RngStream rng(10);
  const auto inst = gen_phase_retrieval(20, 5000, EnsembleKind::ComplexGaussian, rng);
  const CVector& xs = *inst.x_true;
  EXPECT_GE(z1_hess_probe(inst, xs, 1e-3), 0.0);
  const double at_zero = z1_hess_probe(inst, CVector::Zero(20), 1e-3);
  const double expect = expected_hess_form(CVector::Zero(20), xs, xs);
  EXPECT_LT(at_zero, 0.0);
  EXPECT_NEAR(at_zero, expect, 0.1 * std::abs(expect));
  PhaseRetrievalInstance no_truth = inst;
  no_truth.x_true.reset();
  EXPECT_THROW(z1_hess_probe(no_truth, xs, 1e-3), MissingGroundTruth);
}

TEST(DisplacementProbe, SpherePairDistance) {
  RngStream rng(11);
  for (double d : {0.0025, 0.1, 1.5}) {
    const auto [z, zp] = sphere_pair(rng, 30, Field::Real, d);
    EXPECT_NEAR(z.norm(), 1.0, 1e-14);
    EXPECT_NEAR(zp.norm(), 1.0, 1e-14);
    EXPECT_NEAR((z - zp).norm(), d, 1e-12);
    EXPECT_EQ(zp.imag().cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(DisplacementProbe, WfStepIsNearlyLinearAndApIsNot) {
  RngStream rng(12);
  const auto inst = gen_phase_retrieval(40, 400, EnsembleKind::RealGaussian, rng, true);
  RngStream a(1), b(1), c(2), d(2);
  const double wf_small = displacement_probe(ProbeAlgorithm::WF, inst, 0.0025, 100, a) / 0.0025;
  const double wf_large = displacement_probe(ProbeAlgorithm::WF, inst, 0.1, 100, b) / 0.1;
  const double ap_small = displacement_probe(ProbeAlgorithm::AP, inst, 0.0025, 100, c) / 0.0025;
  const double ap_large = displacement_probe(ProbeAlgorithm::AP, inst, 0.1, 100, d) / 0.1;
  EXPECT_NEAR(wf_small / wf_large, 1.0, 0.2);
  EXPECT_GT(ap_small, 2.0 * ap_large);
}

TEST(DisplacementProbe, Errors) {
  RngStream rng(13);
  const auto complex_inst = gen_phase_retrieval(4, 16, EnsembleKind::ComplexGaussian, rng);
  EXPECT_THROW(displacement_probe(ProbeAlgorithm::AP, complex_inst, 0.1, 5, rng), ConfigError);
  const auto inst = gen_phase_retrieval(4, 16, EnsembleKind::RealGaussian, rng);
  EXPECT_THROW(displacement_probe(ProbeAlgorithm::AP, inst, 2.5, 5, rng), ConfigError);
  EXPECT_THROW(displacement_probe(ProbeAlgorithm::AP, inst, 0.1, 0, rng), ConfigError);
}

TEST(BasinMap, TruthIsLabelZero) {
  RngStream rng(14);
  const auto inst = gen_phase_retrieval(10, 100, EnsembleKind::RealGaussian, rng);
  const std::array<CVector, 2> dirs = basin_directions(*inst.x_true, inst.field, rng);
  // Odd grid: the center cell sits exactly on the plane's center.
  const BasinMap map = basin_map(inst, *inst.x_true, dirs, 0.1, 3);
  EXPECT_EQ(map.at(1, 1), 0);
}

TEST(BasinMap, SeveralBasinsWithSolutionMajority) {
  RngStream rng(15);
  const auto inst = gen_phase_retrieval(20, 400, EnsembleKind::RealGaussian, rng);
  RngStream plane_rng(16);
  const BasinPlane plane = default_basin_plane(*inst.x_true, inst.field, plane_rng);
  const int grid = 41;
  const BasinMap map = basin_map(inst, plane.center, plane.dirs, plane.half_width, grid);
  const auto zeros = std::count(map.labels.begin(), map.labels.end(), 0);
  EXPECT_GE(map.label_count, 2);
  EXPECT_GT(2 * zeros, grid * grid);
}

TEST(BasinMap, DirectionsAreOrthonormalAndOrthogonalToSignal) {
  RngStream rng(17);
  const CVector x = sample_gaussian(rng, 12, Field::Real);
  const auto dirs = basin_directions(x, Field::Real, rng);
  EXPECT_NEAR(dirs[0].norm(), 1.0, 1e-14);
  EXPECT_NEAR(dirs[1].norm(), 1.0, 1e-14);
  EXPECT_LT(std::abs(dirs[0].dot(dirs[1])), 1e-14);
  EXPECT_LT(std::abs(x.dot(dirs[0])), 1e-13 * x.norm());
  EXPECT_LT(std::abs(x.dot(dirs[1])), 1e-13 * x.norm());
}

TEST(BasinMap, Errors) {
  RngStream rng(18);
  const auto inst = gen_phase_retrieval(4, 32, EnsembleKind::RealGaussian, rng);
  std::array<CVector, 2> bad{CVector::Ones(4), CVector::Ones(4)};
  EXPECT_THROW(basin_map(inst, *inst.x_true, bad, 1.0, 3), ConfigError);
  const auto cinst = gen_phase_retrieval(4, 32, EnsembleKind::ComplexGaussian, rng);
  const auto dirs = basin_directions(*cinst.x_true, Field::Complex, rng);
  EXPECT_THROW(basin_map(cinst, *cinst.x_true, dirs, 1.0, 3), ConfigError);
}
