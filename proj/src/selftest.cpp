#include <cmath>
#include <ostream>
#include <string>

#include "r1fm/alignment.hpp"
#include "r1fm/experiments.hpp"
#include "r1fm/objective.hpp"
#include "r1fm/oracles.hpp"
#include "r1fm/solver.hpp"

namespace r1fm {

namespace {

constexpr std::uint64_t kSelftestSeed = 20240601;

struct Check {
  std::ostream& os;
  bool all_ok = true;

  void report(const std::string& name, bool ok, double worst, double limit) {
    all_ok = all_ok && ok;
    os << (ok ? "PASS " : "FAIL ") << name << " worst=" << format_double(worst)
       << " limit=" << format_double(limit) << '\n';
  }
};

}  // namespace

bool run_selftest(std::ostream& os) {
  Check check{os};
  GaussianSource rng(kSelftestSeed);

  {
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      Matrix g = rng.matrix(8, 8);
      const Matrix s = 0.5 * (g + g.transpose());
      const EigenPairs eig = top_r_eigenpairs(SymmetricMatrix(s), 8);
      const auto ref = oracle::jacobi_eigen(s);
      worst = std::max(worst, (eig.values - ref.values).cwiseAbs().maxCoeff());
    }
    check.report("eigen_vs_jacobi", worst <= 1e-9, worst, 1e-9);
  }

  {
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const int n = 2 + k % 6, r = 1 + k % 3, m = 10 + k;
      const Matrix a = rng.matrix(m, n);
      const Vector y = (a * rng.matrix(n, r)).rowwise().squaredNorm();
      const Matrix x = rng.matrix(n, r);
      const SampleView view{a, y, static_cast<double>(m)};
      const Matrix g = objective::gradient(view, x);
      const Matrix fd = oracle::finite_difference_gradient(
          [&](const Matrix& z) { return oracle::naive_loss(a, y, m, z); }, x, 1e-5);
      worst = std::max(worst, (g - fd).norm() / std::max(g.norm(), 1e-12));
    }
    check.report("gradient_vs_finite_differences", worst <= 1e-6, worst, 1e-6);
  }

  {
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const int n = 2 + k % 3, r = 1 + k % 2, m = 6 + k;
      const Matrix a = rng.matrix(m, n);
      const Vector y = (a * rng.matrix(n, r)).rowwise().squaredNorm();
      const Matrix x = rng.matrix(n, r);
      const Matrix v = rng.matrix(n, r);
      const double q = objective::hessian_quadratic_form(SampleView{a, y, double(m)}, x, v);
      const double dense =
          oracle::dense_quadratic_form(oracle::kronecker_hessian(a, y, m, x), v);
      worst = std::max(worst, std::abs(q - dense) / std::max(std::abs(dense), 1e-12));
    }
    check.report("hessian_vs_kronecker", worst <= 1e-10, worst, 1e-10);
  }

  {
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const int n = 6 + k, r = 1 + k % 3;
      const Matrix x = rng.matrix(n, r);
      const InitResult init = spectral_init_from_moments(
          SymmetricMatrix(oracle::population_second_moment(x)), 0.5 * x.squaredNorm(), r);
      const double err = (init.x0 * init.x0.transpose() - x * x.transpose()).norm() /
                         x.squaredNorm();
      worst = std::max(worst, err);
    }
    check.report("population_initialization", worst <= 1e-9, worst, 1e-9);
  }

  {
    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
      const Matrix x = rng.matrix(5, 2);
      const Matrix t = rng.matrix(5, 2);
      const double grid = oracle::grid_procrustes_r2(x, t, 1e-3);
      worst = std::max(worst, std::abs(recovery_distance(x, t) - grid));
    }
    check.report("procrustes_vs_grid", worst <= 1e-4, worst, 1e-4);
  }

  {
    double worst = std::numeric_limits<double>::infinity();
    const double c = oracle::frobenius_lower_bound_constant();
    for (int k = 0; k < 200; ++k) {
      const int n = 3 + k % 6, r = 1 + k % 3;
      const Matrix x = rng.matrix(n, r);
      const Matrix u = rng.matrix(n, r);
      Eigen::JacobiSVD<Matrix> svd(x);
      const double lhs = (x * x.transpose() - u * u.transpose()).norm();
      const double rhs = c * svd.singularValues()(r - 1) * recovery_distance(x, u);
      worst = std::min(worst, lhs - rhs);
    }
    check.report("frobenius_lower_bound", worst >= -1e-12, worst, -1e-12);
  }

  return check.all_ok;
}

}  // namespace r1fm
