#include "r1fm/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace r1fm::oracle {

JacobiResult jacobi_eigen(const Matrix& s, int max_sweeps) {
  const Eigen::Index n = s.rows();
  Matrix a = s;
  Matrix v = Matrix::Identity(n, n);
  const double scale = std::max(a.norm(), 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (std::sqrt(off) <= 1e-14 * scale) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  JacobiResult out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

double naive_loss(const Matrix& a, const Vector& y, double normalizer, const Matrix& x) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double fit = 0.0;
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      double proj = 0.0;
      for (Eigen::Index j = 0; j < a.cols(); ++j) proj += a(i, j) * x(j, k);
      fit += proj * proj;
    }
    total += (y(i) - fit) * (y(i) - fit);
  }
  return total / (4.0 * normalizer);
}

Matrix finite_difference_gradient(const std::function<double(const Matrix&)>& f,
                                  const Matrix& x, double h) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double keep = probe(i, j);
      probe(i, j) = keep + h;
      const double up = f(probe);
      probe(i, j) = keep - h;
      const double down = f(probe);
      probe(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

double second_difference(const std::function<double(const Matrix&)>& f, const Matrix& x,
                         const Matrix& v, double h) {
  return (f(x + h * v) - 2.0 * f(x) + f(x - h * v)) / (h * h);
}

Matrix kronecker_hessian(const Matrix& a, const Vector& y, double normalizer, const Matrix& x) {
  const Eigen::Index n = a.cols();
  const Eigen::Index r = x.cols();
  Matrix h = Matrix::Zero(n * r, n * r);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Vector ai = a.row(i).transpose();
    const Matrix outer = ai * ai.transpose();
    const Vector xa = x.transpose() * ai;
    const Matrix left = (xa.squaredNorm() - y(i)) * Matrix::Identity(r, r) +
                        2.0 * xa * xa.transpose();
    // Kronecker product left (r x r) with outer (n x n).
    for (Eigen::Index p = 0; p < r; ++p) {
      for (Eigen::Index q = 0; q < r; ++q) {
        h.block(p * n, q * n, n, n) += left(p, q) * outer;
      }
    }
  }
  return h / normalizer;
}

double expanded_hessian_form(const Matrix& a, const Vector& y, double normalizer,
                             const Matrix& x, const Matrix& v) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const Vector ai = a.row(i).transpose();
    const Matrix outer = ai * ai.transpose();
    const double res = (ai.transpose() * x).squaredNorm() - y(i);
    const Matrix first = outer * v;
    const Matrix second = 2.0 * outer * v * x.transpose() * outer * x;
    total += res * (v.array() * first.array()).sum() + (v.array() * second.array()).sum();
  }
  return total / normalizer;
}

double dense_quadratic_form(const Matrix& h, const Matrix& v) {
  const Eigen::Map<const Vector> vec(v.data(), v.size());
  return vec.dot(h * vec);
}

double naive_incoherence(const Matrix& diff, const Matrix& a) {
  double best = 0.0;
  for (Eigen::Index l = 0; l < a.rows(); ++l) {
    double sq = 0.0;
    for (Eigen::Index k = 0; k < diff.cols(); ++k) {
      double proj = 0.0;
      for (Eigen::Index j = 0; j < a.cols(); ++j) proj += a(l, j) * diff(j, k);
      sq += proj * proj;
    }
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

double grid_procrustes_r2(const Matrix& x, const Matrix& t, double step) {
  double best = std::numeric_limits<double>::infinity();
  const double two_pi = 2.0 * std::acos(-1.0);
  for (double theta = 0.0; theta < two_pi; theta += step) {
    const double c = std::cos(theta), s = std::sin(theta);
    Matrix rot(2, 2), refl(2, 2);
    rot << c, -s, s, c;
    refl << c, s, s, -c;
    best = std::min(best, (x * rot - t).norm());
    best = std::min(best, (x * refl - t).norm());
  }
  return best;
}

Matrix population_second_moment(const Matrix& x) {
  const Eigen::Index n = x.rows();
  return 0.5 * x.squaredNorm() * Matrix::Identity(n, n) + x * x.transpose();
}

Matrix random_orthonormal(int r, GaussianSource& rng) {
  const Matrix g = rng.matrix(r, r);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  for (int j = 0; j < r; ++j) {
    if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

double frobenius_lower_bound_constant() { return std::sqrt(2.0 * (std::sqrt(2.0) - 1.0)); }

}  // namespace r1fm::oracle
