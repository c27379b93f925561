#pragma once

// Brute-force reference routines. Each one takes a different computational
// route from the library function it is used to check.

#include <functional>
#include <iosfwd>

#include "r1fm/model.hpp"

namespace r1fm::oracle {

/// Cyclic Jacobi rotations until the off-diagonal mass is below 1e-14 of
/// the Frobenius norm. Values descending, vectors as columns.
struct JacobiResult {
  Vector values;
  Matrix vectors;
};
JacobiResult jacobi_eigen(const Matrix& s, int max_sweeps = 100);

/// f(X) accumulated with explicit loops.
double naive_loss(const Matrix& a, const Vector& y, double normalizer, const Matrix& x);

/// Central differences of `f` at X, one entry at a time.
Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f,
                                  const Matrix& x, double h);

/// (f(X + hV) - 2 f(X) + f(X - hV)) / h^2.
double second_difference(const std::function<double(const Matrix&)>& f, const Matrix& x,
                         const Matrix& v, double h);

/// Dense nr x nr Hessian (1/m) sum_i [(||a_i^T X||^2 - y_i) I_r + 2 X^T a_i a_i^T X]
/// kron (a_i a_i^T), acting on column-stacked vec(V).
Matrix kronecker_hessian(const Matrix& a, const Vector& y, double normalizer, const Matrix& x);

/// vec(V)^T H vec(V) from the trace expansion
///   (1/m) sum_i res_i <V, a_i a_i^T V> + <V, 2 a_i a_i^T V X^T a_i a_i^T X>
/// using explicit n x n outer products.
double expanded_hessian_form(const Matrix& a, const Vector& y, double normalizer,
                             const Matrix& x, const Matrix& v);

/// vec(V)^T H vec(V) for a dense H.
double dense_quadratic_form(const Matrix& h, const Matrix& v);

/// max_l ||a_l^T D||_2 by explicit loops.
double naive_incoherence(const Matrix& diff, const Matrix& a);

/// Smallest ||X P - T||_F over 2x2 rotations and reflections on a grid of
/// `step` radians.
double grid_procrustes_r2(const Matrix& x, const Matrix& t, double step);

/// (1/2) ||X||_F^2 I + X X^T.
Matrix population_second_moment(const Matrix& x);

/// Haar orthonormal r x r matrix (QR of a Gaussian, sign-fixed).
Matrix random_orthonormal(int r, GaussianSource& rng);

/// Lower-bound constant sqrt(2 (sqrt 2 - 1)).
double frobenius_lower_bound_constant();

}  // namespace r1fm::oracle

namespace r1fm {

/// Runs a reduced oracle suite, printing one PASS/FAIL line per check.
/// Output is deterministic. Returns true when every check passed.
bool run_selftest(std::ostream& os);

}  // namespace r1fm
