#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "r1fm/kernels.hpp"

namespace r1fm {

/// Name recorded with every ensemble: 64-bit Mersenne twister feeding
/// libstdc++'s normal_distribution. Replays are bit-exact within one build
/// of this library, not across standard-library implementations.
inline constexpr const char* kGeneratorId = "mt19937_64/std::normal_distribution";

/// Seeded standard-normal source.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double operator()() { return normal_(engine_); }
  Matrix matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Seed for trial `index` of a batch: base ^ index.
constexpr std::uint64_t derive_trial_seed(std::uint64_t base, std::uint64_t index) {
  return base ^ index;
}

/// Planted factor X with cached singular values and condition number
/// kappa = sigma_1^2 / sigma_r^2.
struct GroundTruth {
  int n = 0;
  int r = 0;
  Matrix x;
  Vector sigma;
  double kappa = 1.0;

  /// Wraps an explicit factor; throws InvalidInput if it is rank deficient.
  static GroundTruth from_factor(Matrix x);

  double frobenius_norm() const { return x.norm(); }
  double sigma_min() const { return sigma(r - 1); }
};

/// m Gaussian sensing vectors stored as the rows of an m x n matrix.
struct SensingEnsemble {
  Matrix vectors;
  std::uint64_t seed = 0;
  std::string generator_id = kGeneratorId;

  Eigen::Index m() const { return vectors.rows(); }
  Eigen::Index n() const { return vectors.cols(); }

  /// Hash of (seed, m, n, generator_id).
  std::uint64_t fingerprint() const;

  /// Ensemble with caller-supplied rows; seed is provenance only.
  static SensingEnsemble from_rows(Matrix rows, std::uint64_t seed = 0);
};

struct MeasurementSet {
  Vector y;
  std::uint64_t ensemble_fingerprint = 0;

  Eigen::Index size() const { return y.size(); }
};

/// X = U diag(sigma) W^T with U (n x r, orthonormal columns) and W (r x r
/// orthonormal) taken from QR factorizations of Gaussian matrices. sigma is
/// stored in descending order.
GroundTruth generate_ground_truth(int n, int r, std::span<const double> singular_values,
                                  std::uint64_t seed);

SensingEnsemble sample_sensing_ensemble(Eigen::Index m, Eigen::Index n, std::uint64_t seed);

/// y_i = ||a_i^T X||^2.
MeasurementSet measure(const GroundTruth& gt, const SensingEnsemble& ens);
MeasurementSet measure(const Matrix& x, const SensingEnsemble& ens);

double condition_number(const GroundTruth& gt);

/// Streaming covariance sketch: after pushing samples x_1..x_T,
/// y_i = (1/T) sum_t (a_i^T x_t)^2. State is one running sum per sensing
/// vector.
class CovarianceSketcher {
 public:
  explicit CovarianceSketcher(const SensingEnsemble& ens);

  void push(const Vector& sample);
  std::size_t count() const { return count_; }

  /// Throws EmptyInput if no sample has been pushed.
  MeasurementSet finish() const;

 private:
  const SensingEnsemble* ens_;
  Vector sums_;
  std::size_t count_ = 0;
};

MeasurementSet covariance_sketch(std::span<const Vector> stream, const SensingEnsemble& ens);

}  // namespace r1fm
