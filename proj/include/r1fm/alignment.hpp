#pragma once

#include "r1fm/model.hpp"

namespace r1fm {

/// Orthonormal Q minimizing ||X Q - target||_F, reflections included.
struct AlignmentResult {
  Matrix q;
  double residual = 0.0;
};

/// Membership in the region of incoherence and contraction. A margin is the
/// bound minus the observed value; `*_ok` is exactly `margin >= 0`.
struct RicStatus {
  bool frob_ok = false;
  double frob_margin = 0.0;
  bool incoh_ok = false;
  double incoh_margin = 0.0;

  bool inside() const { return frob_ok && incoh_ok; }
};

/// Q = U V^T from the SVD X^T T = U S V^T.
AlignmentResult procrustes_align(const Matrix& x, const Matrix& target);

double recovery_distance(const Matrix& x, const Matrix& target);

/// max_l ||a_l^T (X Q - target)||_2 with Q from procrustes_align.
double incoherence_measure(const Matrix& x, const Matrix& target, const SensingEnsemble& ens);

/// Same statistic for a precomputed aligned difference D = X Q - target.
double max_row_projection_norm(const Matrix& diff, const Matrix& sensing_rows);

/// Frobenius bound:  dist(X, X*) <= (1/24) sigma_r(X*)^2 / ||X*||_F
/// Incoherence bound: incoherence <= (1/24) sqrt(ln n) sigma_r(X*)^2 / ||X*||_F
RicStatus ric_membership(const Matrix& x, const GroundTruth& target, const SensingEnsemble& ens);

/// The two bounds above, in that order.
std::pair<double, double> ric_bounds(const GroundTruth& target);

}  // namespace r1fm
