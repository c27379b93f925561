#include "r1fm/alignment.hpp"

#include <cmath>

#include "r1fm/errors.hpp"

namespace r1fm {

namespace {

constexpr double kRicConstant = 1.0 / 24.0;

void check_shapes(const Matrix& x, const Matrix& target) {
  if (x.rows() != target.rows() || x.cols() != target.cols() || x.size() == 0) {
    throw InvalidInput("alignment: factor shapes differ");
  }
}

}  // namespace

AlignmentResult procrustes_align(const Matrix& x, const Matrix& target) {
  check_shapes(x, target);
  const SvdResult svd = svd_small(x.transpose() * target);
  AlignmentResult out;
  out.q = svd.u * svd.v.transpose();
  out.residual = (x * out.q - target).norm();
  return out;
}

double recovery_distance(const Matrix& x, const Matrix& target) {
  return procrustes_align(x, target).residual;
}

double max_row_projection_norm(const Matrix& diff, const Matrix& sensing_rows) {
  if (sensing_rows.cols() != diff.rows()) {
    throw InvalidInput("incoherence: sensing dimension mismatch");
  }
  const Eigen::Index m = sensing_rows.rows();
  const Eigen::Index n = diff.rows();
  const Eigen::Index r = diff.cols();
  // Plain loops, accumulated in index order.
  double best_sq = 0.0;
  for (Eigen::Index l = 0; l < m; ++l) {
    double sq = 0.0;
    for (Eigen::Index k = 0; k < r; ++k) {
      double proj = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) proj += sensing_rows(l, j) * diff(j, k);
      sq += proj * proj;
    }
    if (sq > best_sq) best_sq = sq;
  }
  return std::sqrt(best_sq);
}

double incoherence_measure(const Matrix& x, const Matrix& target, const SensingEnsemble& ens) {
  check_shapes(x, target);
  const AlignmentResult align = procrustes_align(x, target);
  return max_row_projection_norm(x * align.q - target, ens.vectors);
}

std::pair<double, double> ric_bounds(const GroundTruth& target) {
  if (target.n < 2) throw InvalidInput("ric_membership: need n >= 2");
  const double base = kRicConstant * target.sigma_min() * target.sigma_min() /
                      target.frobenius_norm();
  return {base, base * std::sqrt(std::log(static_cast<double>(target.n)))};
}

RicStatus ric_membership(const Matrix& x, const GroundTruth& target, const SensingEnsemble& ens) {
  const auto [frob_bound, incoh_bound] = ric_bounds(target);
  check_shapes(x, target.x);
  const AlignmentResult align = procrustes_align(x, target.x);
  const double incoh = max_row_projection_norm(x * align.q - target.x, ens.vectors);
  RicStatus status;
  status.frob_margin = frob_bound - align.residual;
  status.frob_ok = status.frob_margin >= 0.0;
  status.incoh_margin = incoh_bound - incoh;
  status.incoh_ok = status.incoh_margin >= 0.0;
  return status;
}

}  // namespace r1fm
