#include "r1fm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "r1fm/errors.hpp"

namespace r1fm {

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

SymmetricMatrix::SymmetricMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw InvalidInput("SymmetricMatrix: expected a nonempty square matrix");
  }
  if (!entries_.allFinite()) {
    throw InvalidInput("SymmetricMatrix: non-finite entry");
  }
  const double scale = std::max(1.0, max_abs(entries_));
  const double asym = max_abs(entries_ - entries_.transpose());
  if (asym > 1e-12 * scale) {
    throw InvalidInput("SymmetricMatrix: asymmetry " + std::to_string(asym) +
                       " exceeds tolerance");
  }
  entries_ = 0.5 * (entries_ + entries_.transpose());
}

EigenPairs top_r_eigenpairs(const SymmetricMatrix& s, int r, double tol) {
  const auto n = s.dim();
  if (r < 1 || r > n) {
    throw InvalidInput("top_r_eigenpairs: need 1 <= r <= n");
  }
  if (!(tol > 0.0)) {
    throw InvalidInput("top_r_eigenpairs: tol must be positive");
  }

  // Householder tridiagonalization followed by implicit symmetric QR.
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.entries(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("top_r_eigenpairs: QR iteration did not converge",
                             std::numeric_limits<double>::infinity());
  }

  // Eigen returns ascending order.
  EigenPairs out;
  out.values.resize(r);
  out.vectors.resize(n, r);
  for (int j = 0; j < r; ++j) {
    out.values(j) = solver.eigenvalues()(n - 1 - j);
    out.vectors.col(j) = solver.eigenvectors().col(n - 1 - j);
  }

  const double spectral = solver.eigenvalues().cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (int j = 0; j < r; ++j) {
    const double res =
        (s.entries() * out.vectors.col(j) - out.values(j) * out.vectors.col(j)).norm();
    worst = std::max(worst, res);
  }
  if (worst > tol * spectral) {
    throw ConvergenceFailure("top_r_eigenpairs: residual above tolerance", worst);
  }
  return out;
}

SvdResult svd_small(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw InvalidInput("svd_small: empty matrix");
  }
  if (!m.allFinite()) {
    throw InvalidInput("svd_small: non-finite input");
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return SvdResult{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

}  // namespace r1fm
