#include <gtest/gtest.h>

#include "r1fm/errors.hpp"
#include "r1fm/model.hpp"
#include "r1fm/oracles.hpp"

using namespace r1fm;

TEST(GroundTruth, RankOneFrobeniusEqualsSigma) {
  const std::vector<double> sv = {2.0};
  const GroundTruth gt = generate_ground_truth(3, 1, sv, 5);
  EXPECT_NEAR(gt.x.norm(), 2.0, 1e-13);
}

TEST(GroundTruth, KappaFromSpectrum) {
  const std::vector<double> sv = {2.0, 1.0};
  const GroundTruth gt = generate_ground_truth(4, 2, sv, 6);
  EXPECT_NEAR(gt.kappa, 4.0, 1e-12);
  EXPECT_DOUBLE_EQ(condition_number(gt), gt.kappa);
  const std::vector<double> flat = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(condition_number(generate_ground_truth(4, 2, flat, 6)), 1.0);
  const std::vector<double> three = {3.0, 1.0};
  EXPECT_NEAR(condition_number(generate_ground_truth(5, 2, three, 6)), 9.0, 1e-12);
}

TEST(GroundTruth, SingularValuesRecoveredFromGram) {
  const std::vector<double> sv = {3.0, 1.5, 0.5};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const GroundTruth gt = generate_ground_truth(9, 3, sv, seed);
    const SvdResult gram = svd_small(gt.x.transpose() * gt.x);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(std::sqrt(gram.sigma(j)), sv[j], 1e-9);
    EXPECT_NEAR(gt.kappa, std::pow(gram.sigma(0) / gram.sigma(2), 1.0), 1e-9);
  }
}

TEST(GroundTruth, UnsortedSingularValuesAreSorted) {
  const std::vector<double> sv = {1.0, 4.0};
  const GroundTruth gt = generate_ground_truth(5, 2, sv, 1);
  EXPECT_DOUBLE_EQ(gt.sigma(0), 4.0);
  EXPECT_DOUBLE_EQ(gt.sigma(1), 1.0);
  EXPECT_NEAR(gt.kappa, 16.0, 1e-12);
}

TEST(GroundTruth, InvalidArguments) {
  const std::vector<double> two = {1.0, 1.0};
  EXPECT_THROW(generate_ground_truth(1, 2, two, 1), InvalidInput);
  const std::vector<double> bad = {1.0, 0.0};
  EXPECT_THROW(generate_ground_truth(4, 2, bad, 1), InvalidInput);
  const std::vector<double> neg = {-1.0};
  EXPECT_THROW(generate_ground_truth(4, 1, neg, 1), InvalidInput);
  EXPECT_THROW(GroundTruth::from_factor(Matrix::Zero(3, 1)), InvalidInput);
}

TEST(SensingEnsemble, Deterministic) {
  const auto a = sample_sensing_ensemble(2, 3, 7);
  const auto b = sample_sensing_ensemble(2, 3, 7);
  EXPECT_EQ(a.vectors, b.vectors);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  const auto c = sample_sensing_ensemble(2, 3, 8);
  EXPECT_NE(a.vectors, c.vectors);
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  EXPECT_EQ(a.generator_id, kGeneratorId);
}

TEST(SensingEnsemble, ScalarMoments) {
  const auto ens = sample_sensing_ensemble(10000, 1, 21);
  const double mean = ens.vectors.mean();
  const double var = (ens.vectors.array() - mean).square().sum() / (10000 - 1);
  EXPECT_GE(mean, -0.05);
  EXPECT_LE(mean, 0.05);
  EXPECT_GE(var, 0.95);
  EXPECT_LE(var, 1.05);
}

TEST(SensingEnsemble, SampleCovarianceNearIdentity) {
  const auto ens = sample_sensing_ensemble(10000, 8, 22);
  const Matrix cov = ens.vectors.transpose() * ens.vectors / 10000.0;
  const auto eig = Eigen::SelfAdjointEigenSolver<Matrix>(cov - Matrix::Identity(8, 8));
  EXPECT_LE(eig.eigenvalues().cwiseAbs().maxCoeff(), 0.2);
}

TEST(SensingEnsemble, InvalidArguments) {
  EXPECT_THROW(sample_sensing_ensemble(0, 3, 1), InvalidInput);
  EXPECT_THROW(sample_sensing_ensemble(3, 0, 1), InvalidInput);
}

TEST(Measure, ZeroFactorGivesZero) {
  const auto ens = sample_sensing_ensemble(5, 3, 1);
  const auto y = measure(Matrix::Zero(3, 2), ens);
  EXPECT_EQ(y.y, Vector::Zero(5));
  EXPECT_EQ(y.ensemble_fingerprint, ens.fingerprint());
}

TEST(Measure, HandEvaluatedScalarCase) {
  Matrix a(1, 2);
  a << 1, 0;
  const auto ens = SensingEnsemble::from_rows(a);
  Matrix x(2, 1);
  x << 2, 0;
  EXPECT_DOUBLE_EQ(measure(x, ens).y(0), 4.0);
}

TEST(Measure, InvariantUnderRightRotation) {
  GaussianSource rng(3);
  const auto ens = sample_sensing_ensemble(40, 6, 4);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = rng.matrix(6, 3);
    const Matrix p = oracle::random_orthonormal(3, rng);
    const Vector y1 = measure(x, ens).y;
    const Vector y2 = measure(x * p, ens).y;
    EXPECT_LE((y1 - y2).cwiseAbs().maxCoeff(), 1e-12 * y1.cwiseAbs().maxCoeff());
    EXPECT_GE(y1.minCoeff(), 0.0);
  }
}

TEST(Measure, DimensionMismatch) {
  const auto ens = sample_sensing_ensemble(5, 3, 1);
  EXPECT_THROW(measure(Matrix::Ones(4, 1), ens), InvalidInput);
}

TEST(Measure, QuadraticExpectationMatchesNorm) {
  // E[(a^T x)^2] = ||x||^2 for a ~ N(0, I).
  GaussianSource rng(30);
  const Vector x = rng.matrix(5, 1);
  const auto ens = sample_sensing_ensemble(100000, 5, 31);
  const double mean = measure(Matrix(x), ens).y.mean();
  EXPECT_NEAR(mean / x.squaredNorm(), 1.0, 0.05);
}

TEST(CovarianceSketch, SingleSample) {
  const auto ens = sample_sensing_ensemble(6, 4, 9);
  GaussianSource rng(10);
  const Vector x = rng.matrix(4, 1);
  const std::vector<Vector> stream = {x};
  const auto y = covariance_sketch(stream, ens);
  for (int i = 0; i < 6; ++i) {
    const double p = ens.vectors.row(i).dot(x);
    EXPECT_NEAR(y.y(i), p * p, 1e-12 * std::max(1.0, p * p));
  }
}

TEST(CovarianceSketch, ZeroStreamAndEmptyStream) {
  const auto ens = sample_sensing_ensemble(6, 4, 9);
  const std::vector<Vector> zeros(5, Vector::Zero(4));
  EXPECT_EQ(covariance_sketch(zeros, ens).y, Vector::Zero(6));
  const std::vector<Vector> empty;
  EXPECT_THROW(covariance_sketch(empty, ens), EmptyInput);
  const std::vector<Vector> wrong = {Vector::Zero(3)};
  EXPECT_THROW(covariance_sketch(wrong, ens), InvalidInput);
}

namespace {

double sketch_error(const GroundTruth& gt, const SensingEnsemble& ens, long samples,
                    std::uint64_t seed) {
  CovarianceSketcher sketcher(ens);
  GaussianSource rng(seed);
  Vector g(gt.r);
  for (long t = 0; t < samples; ++t) {
    for (int k = 0; k < gt.r; ++k) g(k) = rng();
    sketcher.push(gt.x * g);
  }
  const Vector exact = measure(gt, ens).y;
  return (sketcher.finish().y - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff();
}

}  // namespace

TEST(CovarianceSketch, ConvergesToExactMeasurements) {
  const std::vector<double> sv = {1.0, 0.7};
  const GroundTruth gt = generate_ground_truth(8, 2, sv, 40);
  const auto ens = sample_sensing_ensemble(50, 8, 41);
  EXPECT_LE(sketch_error(gt, ens, 100000, 42), 0.1);

  int improved = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    if (sketch_error(gt, ens, 100000, 100 + seed) < sketch_error(gt, ens, 1000, 200 + seed)) {
      ++improved;
    }
  }
  EXPECT_GE(improved, 2);
}

TEST(Seeds, TrialDerivation) {
  EXPECT_EQ(derive_trial_seed(0xff, 0x0f), 0xf0u);
  EXPECT_EQ(derive_trial_seed(12345, 0), 12345u);
}
