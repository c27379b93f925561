#include "r1fm/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "r1fm/errors.hpp"

namespace r1fm {

namespace {

// FNV-1a, 64 bit.
class Fnv1a {
 public:
  void add_bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void add_u64(std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    add_bytes(bytes, 8);
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

// Haar-distributed orthonormal columns: QR of a Gaussian matrix with the
// sign of each column fixed by diag(R).
Matrix haar_orthonormal(GaussianSource& rng, int rows, int cols) {
  const Matrix g = rng.matrix(rows, cols);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  const Matrix& packed = qr.matrixQR();
  for (int j = 0; j < cols; ++j) {
    if (packed(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace

Matrix GaussianSource::matrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  // Row-major fill order so that row i of an ensemble only depends on draws
  // i*cols .. (i+1)*cols-1.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = (*this)();
  }
  return out;
}

GroundTruth GroundTruth::from_factor(Matrix x) {
  if (x.rows() < 1 || x.cols() < 1 || x.cols() > x.rows()) {
    throw InvalidInput("GroundTruth: need n >= r >= 1");
  }
  if (!x.allFinite()) throw InvalidInput("GroundTruth: non-finite factor");
  Eigen::JacobiSVD<Matrix> svd(x);
  const Vector sigma = svd.singularValues();
  const auto r = x.cols();
  if (!(sigma(r - 1) > sigma(0) * 1e-13 * static_cast<double>(x.rows()))) {
    throw InvalidInput("GroundTruth: factor is not full column rank");
  }
  GroundTruth gt;
  gt.n = static_cast<int>(x.rows());
  gt.r = static_cast<int>(r);
  gt.x = std::move(x);
  gt.sigma = sigma;
  gt.kappa = (sigma(0) / sigma(r - 1)) * (sigma(0) / sigma(r - 1));
  return gt;
}

std::uint64_t SensingEnsemble::fingerprint() const {
  Fnv1a h;
  h.add_u64(seed);
  h.add_u64(static_cast<std::uint64_t>(m()));
  h.add_u64(static_cast<std::uint64_t>(n()));
  h.add_bytes(generator_id.data(), generator_id.size());
  return h.value();
}

SensingEnsemble SensingEnsemble::from_rows(Matrix rows, std::uint64_t seed) {
  if (rows.rows() < 1 || rows.cols() < 1) {
    throw InvalidInput("SensingEnsemble: need m >= 1 and n >= 1");
  }
  if (!rows.allFinite()) throw InvalidInput("SensingEnsemble: non-finite sensing vector");
  SensingEnsemble ens;
  ens.vectors = std::move(rows);
  ens.seed = seed;
  return ens;
}

GroundTruth generate_ground_truth(int n, int r, std::span<const double> singular_values,
                                  std::uint64_t seed) {
  if (r < 1 || n < r) throw InvalidInput("generate_ground_truth: need n >= r >= 1");
  if (singular_values.size() != static_cast<std::size_t>(r)) {
    throw InvalidInput("generate_ground_truth: expected r singular values");
  }
  std::vector<double> sv(singular_values.begin(), singular_values.end());
  for (double s : sv) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw InvalidInput("generate_ground_truth: singular values must be positive");
    }
  }
  std::sort(sv.begin(), sv.end(), std::greater<>());

  GaussianSource rng(seed);
  const Matrix u = haar_orthonormal(rng, n, r);
  const Matrix w = haar_orthonormal(rng, r, r);

  GroundTruth gt;
  gt.n = n;
  gt.r = r;
  gt.sigma = Eigen::Map<const Vector>(sv.data(), r);
  gt.x = u * gt.sigma.asDiagonal() * w.transpose();
  gt.kappa = (sv.front() / sv.back()) * (sv.front() / sv.back());
  return gt;
}

SensingEnsemble sample_sensing_ensemble(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw InvalidInput("sample_sensing_ensemble: need m >= 1 and n >= 1");
  GaussianSource rng(seed);
  SensingEnsemble ens;
  ens.vectors = rng.matrix(m, n);
  ens.seed = seed;
  return ens;
}

MeasurementSet measure(const Matrix& x, const SensingEnsemble& ens) {
  if (x.rows() != ens.n()) throw InvalidInput("measure: dimension mismatch");
  MeasurementSet out;
  out.y = (ens.vectors * x).rowwise().squaredNorm();
  out.ensemble_fingerprint = ens.fingerprint();
  return out;
}

MeasurementSet measure(const GroundTruth& gt, const SensingEnsemble& ens) {
  return measure(gt.x, ens);
}

double condition_number(const GroundTruth& gt) { return gt.kappa; }

CovarianceSketcher::CovarianceSketcher(const SensingEnsemble& ens)
    : ens_(&ens), sums_(Vector::Zero(ens.m())) {}

void CovarianceSketcher::push(const Vector& sample) {
  if (sample.size() != ens_->n()) {
    throw InvalidInput("covariance_sketch: sample dimension mismatch");
  }
  sums_ += (ens_->vectors * sample).cwiseAbs2();
  ++count_;
}

MeasurementSet CovarianceSketcher::finish() const {
  if (count_ == 0) throw EmptyInput("covariance_sketch: empty data stream");
  MeasurementSet out;
  out.y = sums_ / static_cast<double>(count_);
  out.ensemble_fingerprint = ens_->fingerprint();
  return out;
}

MeasurementSet covariance_sketch(std::span<const Vector> stream, const SensingEnsemble& ens) {
  CovarianceSketcher sketcher(ens);
  for (const auto& x : stream) sketcher.push(x);
  return sketcher.finish();
}

}  // namespace r1fm
