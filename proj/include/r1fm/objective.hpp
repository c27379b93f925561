#pragma once

#include "r1fm/model.hpp"

namespace r1fm {

/// Candidate factor X (n x r) and Hessian direction V (n x r).
using Factor = Matrix;
using Direction = Matrix;

/// Non-owning view of the data entering f(X) = (1/4m) sum_i (y_i - ||a_i^T X||^2)^2.
/// `normalizer` is the m in 1/(4m); leave-one-out views keep the full m while
/// holding one row fewer.
struct SampleView {
  const Matrix& a;
  const Vector& y;
  double normalizer;

  Eigen::Index rows() const { return a.rows(); }
  Eigen::Index n() const { return a.cols(); }
};

struct LossAndGradient {
  double loss = 0.0;
  Matrix gradient;
};

namespace objective {

double loss(const SampleView& s, const Factor& x);

/// (1/m) sum_i (||a_i^T X||^2 - y_i) a_i a_i^T X as two GEMMs; a_i a_i^T is
/// never formed.
Matrix gradient(const SampleView& s, const Factor& x);

LossAndGradient loss_and_gradient(const SampleView& s, const Factor& x);

/// vec(V)^T H(X) vec(V) = (1/m) sum_i [(||a_i^T X||^2 - y_i) ||a_i^T V||^2
///                                     + 2 (a_i^T X V^T a_i)^2].
double hessian_quadratic_form(const SampleView& s, const Factor& x, const Direction& v);

/// H(X) vec(V), reshaped to n x r.
Matrix hessian_vector_product(const SampleView& s, const Factor& x, const Direction& v);

/// Running maximum of |V^T H V| over power-iteration iterates from a fixed
/// start. A lower bound on ||H(X)||_2, nondecreasing in `iters`.
double hessian_operator_norm_estimate(const SampleView& s, const Factor& x, int iters);

}  // namespace objective

// Ensemble/measurement entry points. These check that y was produced by
// `ens` (fingerprint match) and that shapes agree.

/// Wraps raw values as measurements of `ens`.
MeasurementSet bind_measurements(Vector y, const SensingEnsemble& ens);

double loss(const Factor& x, const SensingEnsemble& ens, const MeasurementSet& y);
Matrix gradient(const Factor& x, const SensingEnsemble& ens, const MeasurementSet& y);
double hessian_quadratic_form(const Factor& x, const Direction& v, const SensingEnsemble& ens,
                              const MeasurementSet& y);
double hessian_operator_norm_estimate(const Factor& x, const SensingEnsemble& ens,
                                      const MeasurementSet& y, int iters);

/// Rows of `ens` and entries of `y` with index `left_out` removed.
struct LeaveOneOutData {
  Matrix a;
  Vector y;
  double normalizer;

  SampleView view() const { return SampleView{a, y, normalizer}; }
};

/// `left_out` is 0-based. Normalization stays at the full m.
LeaveOneOutData leave_one_out_data(const SensingEnsemble& ens, const MeasurementSet& y,
                                   Eigen::Index left_out);

double loo_loss(const Factor& x, const SensingEnsemble& ens, const MeasurementSet& y,
                Eigen::Index left_out);
Matrix loo_gradient(const Factor& x, const SensingEnsemble& ens, const MeasurementSet& y,
                    Eigen::Index left_out);

}  // namespace r1fm
