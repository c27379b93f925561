#pragma once

#include <Eigen/Dense>

namespace r1fm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Construction rejects inputs whose asymmetry
/// exceeds 1e-12 * max(1, max|S_ij|); the stored copy is exactly symmetrized.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(Matrix entries);

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }

 private:
  Matrix entries_;
};

/// Leading eigenpairs, values sorted descending, vectors as orthonormal columns.
struct EigenPairs {
  Vector values;
  Matrix vectors;
};

/// Thin SVD of a small square matrix: m = u * diag(sigma) * v^T.
struct SvdResult {
  Matrix u;
  Vector sigma;
  Matrix v;
};

inline constexpr double kDefaultEigenTolerance = 1e-10;

/// Returns the r largest eigenpairs of S. Every returned pair satisfies
/// ||S v - lambda v||_2 <= tol * ||S||_2, otherwise ConvergenceFailure is
/// thrown carrying the worst residual seen. Deterministic for fixed input.
EigenPairs top_r_eigenpairs(const SymmetricMatrix& s, int r,
                            double tol = kDefaultEigenTolerance);

SvdResult svd_small(const Matrix& m);

// Largest |entry|, 0 for an empty matrix.
double max_abs(const Matrix& m);

bool all_finite(const Matrix& m);

}  // namespace r1fm
