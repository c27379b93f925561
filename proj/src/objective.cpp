#include "r1fm/objective.hpp"

#include <algorithm>
#include <cmath>

#include "r1fm/errors.hpp"

namespace r1fm {

namespace {

// Fixed seed for the power-iteration start vector.
constexpr std::uint64_t kPowerIterationSeed = 0x5eed'0f'4e55'1a9ULL;

void check_factor(const SampleView& s, const Matrix& x, const char* what) {
  if (x.rows() != s.n() || x.cols() < 1) {
    throw InvalidInput(std::string(what) + ": factor has wrong shape");
  }
  if (s.y.size() != s.rows()) {
    throw InvalidInput(std::string(what) + ": measurement count mismatch");
  }
}

void check_bound(const SensingEnsemble& ens, const MeasurementSet& y) {
  if (y.size() != ens.m() || y.ensemble_fingerprint != ens.fingerprint()) {
    throw InvalidInput("measurements were not produced by this ensemble");
  }
}

void check_finite(const Matrix& x, const char* what) {
  if (!x.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

SampleView full_view(const SensingEnsemble& ens, const MeasurementSet& y) {
  return SampleView{ens.vectors, y.y, static_cast<double>(ens.m())};
}

}  // namespace

namespace objective {

double loss(const SampleView& s, const Factor& x) {
  check_factor(s, x, "loss");
  const Vector fit = (s.a * x).rowwise().squaredNorm();
  return (s.y - fit).squaredNorm() / (4.0 * s.normalizer);
}

LossAndGradient loss_and_gradient(const SampleView& s, const Factor& x) {
  check_factor(s, x, "gradient");
  const Matrix ax = s.a * x;
  const Vector residual = ax.rowwise().squaredNorm() - s.y;
  LossAndGradient out;
  out.loss = residual.squaredNorm() / (4.0 * s.normalizer);
  out.gradient = s.a.transpose() * (residual.asDiagonal() * ax);
  out.gradient /= s.normalizer;
  return out;
}

Matrix gradient(const SampleView& s, const Factor& x) {
  return loss_and_gradient(s, x).gradient;
}

double hessian_quadratic_form(const SampleView& s, const Factor& x, const Direction& v) {
  check_factor(s, x, "hessian_quadratic_form");
  if (v.rows() != x.rows() || v.cols() != x.cols()) {
    throw InvalidInput("hessian_quadratic_form: direction shape mismatch");
  }
  const Matrix ax = s.a * x;
  const Matrix av = s.a * v;
  const Vector residual = ax.rowwise().squaredNorm() - s.y;
  const Vector cross = (ax.cwiseProduct(av)).rowwise().sum();
  const double total = residual.dot(av.rowwise().squaredNorm()) + 2.0 * cross.squaredNorm();
  return total / s.normalizer;
}

Matrix hessian_vector_product(const SampleView& s, const Factor& x, const Direction& v) {
  check_factor(s, x, "hessian_vector_product");
  if (v.rows() != x.rows() || v.cols() != x.cols()) {
    throw InvalidInput("hessian_vector_product: direction shape mismatch");
  }
  const Matrix ax = s.a * x;
  const Matrix av = s.a * v;
  const Vector residual = ax.rowwise().squaredNorm() - s.y;
  const Vector cross = (ax.cwiseProduct(av)).rowwise().sum();
  const Matrix weighted = residual.asDiagonal() * av + 2.0 * (cross.asDiagonal() * ax);
  Matrix out = s.a.transpose() * weighted;
  out /= s.normalizer;
  return out;
}

double hessian_operator_norm_estimate(const SampleView& s, const Factor& x, int iters) {
  if (iters < 1) throw InvalidInput("hessian_operator_norm_estimate: iters must be >= 1");
  check_factor(s, x, "hessian_operator_norm_estimate");
  GaussianSource rng(kPowerIterationSeed);
  Matrix v = rng.matrix(x.rows(), x.cols());
  v /= v.norm();
  double best = 0.0;
  for (int k = 0; k < iters; ++k) {
    const Matrix hv = hessian_vector_product(s, x, v);
    best = std::max(best, std::abs((v.array() * hv.array()).sum()));
    const double len = hv.norm();
    if (!(len > 0.0) || !std::isfinite(len)) break;
    v = hv / len;
  }
  return best;
}

}  // namespace objective

MeasurementSet bind_measurements(Vector y, const SensingEnsemble& ens) {
  if (y.size() != ens.m()) throw InvalidInput("bind_measurements: count mismatch");
  return MeasurementSet{std::move(y), ens.fingerprint()};
}

double loss(const Factor& x, const SensingEnsemble& ens, const MeasurementSet& y) {
  check_bound(ens, y);
  check_finite(x, "loss");
  return objective::loss(full_view(ens, y), x);
}

Matrix gradient(const Factor& x, const SensingEnsemble& ens, const MeasurementSet& y) {
  check_bound(ens, y);
  check_finite(x, "gradient");
  return objective::gradient(full_view(ens, y), x);
}

double hessian_quadratic_form(const Factor& x, const Direction& v, const SensingEnsemble& ens,
                              const MeasurementSet& y) {
  check_bound(ens, y);
  check_finite(x, "hessian_quadratic_form");
  check_finite(v, "hessian_quadratic_form");
  return objective::hessian_quadratic_form(full_view(ens, y), x, v);
}

double hessian_operator_norm_estimate(const Factor& x, const SensingEnsemble& ens,
                                      const MeasurementSet& y, int iters) {
  check_bound(ens, y);
  check_finite(x, "hessian_operator_norm_estimate");
  return objective::hessian_operator_norm_estimate(full_view(ens, y), x, iters);
}

LeaveOneOutData leave_one_out_data(const SensingEnsemble& ens, const MeasurementSet& y,
                                   Eigen::Index left_out) {
  check_bound(ens, y);
  const auto m = ens.m();
  if (left_out < 0 || left_out >= m) {
    throw InvalidInput("leave-one-out index out of range");
  }
  LeaveOneOutData out;
  out.a.resize(m - 1, ens.n());
  out.y.resize(m - 1);
  out.a.topRows(left_out) = ens.vectors.topRows(left_out);
  out.a.bottomRows(m - 1 - left_out) = ens.vectors.bottomRows(m - 1 - left_out);
  out.y.head(left_out) = y.y.head(left_out);
  out.y.tail(m - 1 - left_out) = y.y.tail(m - 1 - left_out);
  out.normalizer = static_cast<double>(m);
  return out;
}

double loo_loss(const Factor& x, const SensingEnsemble& ens, const MeasurementSet& y,
                Eigen::Index left_out) {
  check_finite(x, "loo_loss");
  const auto data = leave_one_out_data(ens, y, left_out);
  if (x.rows() != ens.n()) throw InvalidInput("loo_loss: factor has wrong shape");
  if (data.a.rows() == 0) return 0.0;
  return objective::loss(data.view(), x);
}

Matrix loo_gradient(const Factor& x, const SensingEnsemble& ens, const MeasurementSet& y,
                    Eigen::Index left_out) {
  check_finite(x, "loo_gradient");
  const auto data = leave_one_out_data(ens, y, left_out);
  if (x.rows() != ens.n()) throw InvalidInput("loo_gradient: factor has wrong shape");
  if (data.a.rows() == 0) return Matrix::Zero(x.rows(), x.cols());
  return objective::gradient(data.view(), x);
}

}  // namespace r1fm
