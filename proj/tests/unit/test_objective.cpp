#include <gtest/gtest.h>

#include <cmath>

#include "r1fm/alignment.hpp"
#include "r1fm/errors.hpp"
#include "r1fm/objective.hpp"
#include "r1fm/oracles.hpp"

using namespace r1fm;

namespace {

struct Problem {
  SensingEnsemble ens;
  GroundTruth gt;
  MeasurementSet y;
};

Problem make_problem(int n, int r, int m, std::uint64_t seed) {
  std::vector<double> sv(r);
  for (int k = 0; k < r; ++k) sv[k] = 1.0 + 0.5 * (r - 1 - k);
  Problem p{sample_sensing_ensemble(m, n, seed), generate_ground_truth(n, r, sv, seed + 1), {}};
  p.y = measure(p.gt, p.ens);
  return p;
}

// Ensemble with a single sensing vector a = (1, 0) and y = 4.
struct ScalarCase {
  SensingEnsemble ens;
  MeasurementSet y;
  ScalarCase() {
    Matrix a(1, 2);
    a << 1, 0;
    ens = SensingEnsemble::from_rows(a);
    y = bind_measurements(Vector::Constant(1, 4.0), ens);
  }
};

double rel(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace

TEST(Loss, ZeroAtTruth) {
  const auto p = make_problem(6, 2, 30, 1);
  EXPECT_LE(loss(p.gt.x, p.ens, p.y), 1e-18);
}

TEST(Loss, ZeroFactor) {
  const auto p = make_problem(5, 1, 12, 2);
  const double expected = p.y.y.squaredNorm() / (4.0 * 12);
  EXPECT_NEAR(loss(Matrix::Zero(5, 1), p.ens, p.y), expected, 1e-14 * expected);
}

TEST(Loss, ScalarCase) {
  const ScalarCase s;
  Matrix x(2, 1);
  x << 1, 0;
  EXPECT_DOUBLE_EQ(loss(x, s.ens, s.y), 9.0 / 4.0);
}

TEST(Loss, RejectsMismatchedMeasurements) {
  const auto p = make_problem(5, 1, 12, 2);
  const auto other = sample_sensing_ensemble(12, 5, 99);
  EXPECT_THROW(loss(p.gt.x, other, p.y), InvalidInput);
  EXPECT_THROW(loss(Matrix::Zero(4, 1), p.ens, p.y), InvalidInput);
}

TEST(Gradient, ZeroAtTruth) {
  const auto p = make_problem(8, 2, 40, 3);
  EXPECT_LE(gradient(p.gt.x, p.ens, p.y).norm(), 1e-14 * p.gt.x.norm());
}

TEST(Gradient, ScalarCase) {
  const ScalarCase s;
  Matrix x(2, 1);
  x << 1, 0;
  const Matrix g = gradient(x, s.ens, s.y);
  EXPECT_DOUBLE_EQ(g(0, 0), -3.0);
  EXPECT_DOUBLE_EQ(g(1, 0), 0.0);
}

TEST(Gradient, MatchesFiniteDifferences) {
  GaussianSource rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = make_problem(6, 2, 20, 10 + trial);
    const Matrix x = rng.matrix(6, 2);
    const Matrix fd = oracle::finite_difference_gradient(
        [&](const Matrix& z) { return oracle::naive_loss(p.ens.vectors, p.y.y, 20, z); }, x,
        1e-5);
    EXPECT_LE(rel(gradient(x, p.ens, p.y), fd), 1e-6);
  }
}

TEST(Gradient, RotationEquivariance) {
  GaussianSource rng(5);
  const auto p = make_problem(7, 3, 50, 6);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x = rng.matrix(7, 3);
    const Matrix q = oracle::random_orthonormal(3, rng);
    EXPECT_LE(rel(gradient(x * q, p.ens, p.y), gradient(x, p.ens, p.y) * q), 1e-12);
    const double f = loss(x, p.ens, p.y);
    EXPECT_NEAR(loss(x * q, p.ens, p.y), f, 1e-12 * f);
    EXPECT_GE(f, 0.0);
  }
}

TEST(HessianForm, ZeroDirection) {
  const auto p = make_problem(4, 2, 10, 7);
  EXPECT_EQ(hessian_quadratic_form(p.gt.x, Matrix::Zero(4, 2), p.ens, p.y), 0.0);
}

TEST(HessianForm, MatchesKroneckerAssembly) {
  GaussianSource rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = make_problem(3, 2, 5, 20 + trial);
    const Matrix x = rng.matrix(3, 2);
    const Matrix v = rng.matrix(3, 2);
    const double q = hessian_quadratic_form(x, v, p.ens, p.y);
    const double dense =
        oracle::dense_quadratic_form(oracle::kronecker_hessian(p.ens.vectors, p.y.y, 5, x), v);
    EXPECT_NEAR(q, dense, 1e-10 * std::abs(dense));
  }
}

TEST(HessianForm, MatchesTraceExpansion) {
  GaussianSource rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = make_problem(4, 3, 9, 70 + trial);
    const Matrix x = rng.matrix(4, 3);
    const Matrix v = rng.matrix(4, 3);
    const double q = hessian_quadratic_form(x, v, p.ens, p.y);
    const double expanded = oracle::expanded_hessian_form(p.ens.vectors, p.y.y, 9, x, v);
    EXPECT_NEAR(q, expanded, 1e-12 * std::max(1.0, std::abs(expanded)));
  }
}

TEST(HessianForm, MatchesSecondDifference) {
  GaussianSource rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = make_problem(5, 2, 25, 30 + trial);
    const Matrix x = rng.matrix(5, 2);
    const Matrix v = rng.matrix(5, 2);
    const double q = hessian_quadratic_form(x, v, p.ens, p.y);
    const double fd = oracle::second_difference(
        [&](const Matrix& z) { return loss(z, p.ens, p.y); }, x, v, 1e-4);
    EXPECT_NEAR(q, fd, 1e-4 * std::abs(q));
  }
}

TEST(HessianForm, IsAQuadraticForm) {
  GaussianSource rng(10);
  const auto p = make_problem(6, 2, 30, 40);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = rng.matrix(6, 2);
    const Matrix u = rng.matrix(6, 2);
    const Matrix v = rng.matrix(6, 2);
    const double alpha = 0.3 + trial;
    auto q = [&](const Matrix& d) { return hessian_quadratic_form(x, d, p.ens, p.y); };
    EXPECT_NEAR(q(alpha * v), alpha * alpha * q(v), 1e-12 * std::abs(alpha * alpha * q(v)));
    const double lhs = q(u + v) + q(u - v);
    const double rhs = 2.0 * q(u) + 2.0 * q(v);
    EXPECT_NEAR(lhs, rhs, 1e-10 * (std::abs(q(u)) + std::abs(q(v)) + 1.0));
  }
}

TEST(HessianForm, RestrictedStrongConvexityInsideRic) {
  // Empirical counterpart of the curvature lower bound: for X inside the
  // region of incoherence and contraction, V = X Q - X* gets curvature at
  // least sigma_r^2 ||V||_F^2 on nearly all instances.
  const int n = 10, r = 2, m = 500;  // m >= 10 n r ln n
  int inside = 0, curved = 0;
  GaussianSource rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = make_problem(n, r, m, 100 + trial);
    const auto [frob_bound, incoh_bound] = ric_bounds(p.gt);
    Matrix h = rng.matrix(n, r);
    h *= 0.5 * frob_bound / h.norm();
    const Matrix x = p.gt.x + h;
    if (!ric_membership(x, p.gt, p.ens).inside()) continue;
    ++inside;
    const auto align = procrustes_align(x, p.gt.x);
    const Matrix v = x * align.q - p.gt.x;
    const double s = p.gt.sigma_min();
    if (hessian_quadratic_form(x, v, p.ens, p.y) >= s * s * v.squaredNorm()) ++curved;
  }
  ASSERT_GE(inside, 30);
  EXPECT_GE(curved, static_cast<int>(std::ceil(0.95 * inside)));
}

TEST(HessianNormEstimate, BoundedByDenseNorm) {
  const auto p = make_problem(3, 2, 12, 50);
  const Matrix dense = oracle::kronecker_hessian(p.ens.vectors, p.y.y, 12, p.gt.x);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(dense);
  const double exact = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double est = hessian_operator_norm_estimate(p.gt.x, p.ens, p.y, 200);
  EXPECT_LE(est, exact + 1e-8);
  EXPECT_GE(est, 0.9 * exact);
  double prev = 0.0;
  for (int iters : {1, 2, 5, 10, 50}) {
    const double e = hessian_operator_norm_estimate(p.gt.x, p.ens, p.y, iters);
    EXPECT_GE(e, prev);
    prev = e;
  }
  EXPECT_THROW(hessian_operator_norm_estimate(p.gt.x, p.ens, p.y, 0), InvalidInput);
}

TEST(HessianNormEstimate, ScalarCase) {
  const auto ens = SensingEnsemble::from_rows(Matrix::Ones(1, 1));
  const auto y = bind_measurements(Vector::Ones(1), ens);
  EXPECT_NEAR(hessian_operator_norm_estimate(Matrix::Ones(1, 1), ens, y, 5), 2.0, 1e-14);
}

TEST(HessianNormEstimate, QuarticScaling) {
  const auto p = make_problem(5, 2, 30, 51);
  const auto scaled = SensingEnsemble::from_rows(2.0 * p.ens.vectors, p.ens.seed);
  const auto y2 = measure(p.gt, scaled);
  GaussianSource rng(52);
  const Matrix x = p.gt.x + 0.1 * rng.matrix(5, 2);
  const double base = hessian_operator_norm_estimate(x, p.ens, p.y, 40);
  const double big = hessian_operator_norm_estimate(x, scaled, y2, 40);
  EXPECT_NEAR(big / base, 16.0, 16.0 * 1e-6);
}

TEST(LeaveOneOut, SingleMeasurement) {
  const auto p = make_problem(4, 2, 1, 60);
  GaussianSource rng(61);
  const Matrix x = rng.matrix(4, 2);
  EXPECT_EQ(loo_loss(x, p.ens, p.y, 0), 0.0);
  EXPECT_EQ(loo_gradient(x, p.ens, p.y, 0), Matrix::Zero(4, 2));
}

TEST(LeaveOneOut, DropsExactlyOneTerm) {
  const int m = 15;
  const auto p = make_problem(5, 2, m, 62);
  GaussianSource rng(63);
  const Matrix x = rng.matrix(5, 2);
  for (Eigen::Index l : {0, 7, 14}) {
    const Vector al = p.ens.vectors.row(l).transpose();
    const Matrix term =
        ((al.transpose() * x).squaredNorm() - p.y.y(l)) * al * (al.transpose() * x);
    const Matrix diff = m * gradient(x, p.ens, p.y) - m * loo_gradient(x, p.ens, p.y, l);
    EXPECT_LE((diff - term).norm(), 1e-12 * std::max(1.0, term.norm()));
    const double res = (al.transpose() * x).squaredNorm() - p.y.y(l);
    EXPECT_NEAR(loss(x, p.ens, p.y) - loo_loss(x, p.ens, p.y, l), res * res / (4.0 * m),
                1e-12 * std::max(1.0, loss(x, p.ens, p.y)));
  }
}

TEST(LeaveOneOut, GradientMatchesFiniteDifferences) {
  const auto p = make_problem(6, 2, 20, 64);
  GaussianSource rng(65);
  const Matrix x = rng.matrix(6, 2);
  const Matrix fd = oracle::finite_difference_gradient(
      [&](const Matrix& z) { return loo_loss(z, p.ens, p.y, 3); }, x, 1e-5);
  EXPECT_LE(rel(loo_gradient(x, p.ens, p.y, 3), fd), 1e-6);
}

TEST(LeaveOneOut, IndexOutOfRange) {
  const auto p = make_problem(4, 1, 5, 66);
  EXPECT_THROW(loo_loss(p.gt.x, p.ens, p.y, 5), InvalidInput);
  EXPECT_THROW(loo_gradient(p.gt.x, p.ens, p.y, -1), InvalidInput);
}
