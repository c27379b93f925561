#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "r1fm/alignment.hpp"
#include "r1fm/objective.hpp"

namespace r1fm {

/// Constant step mu.
struct FixedStep {
  double mu = 0.0;
};

/// mu = c4 / ((r kappa + ln n)^2 sigma_r^2).
struct Theorem1Step {
  double c4 = 1.0;
};

/// The Theorem1Step rate for t < T_a, then the relaxed
/// mu = c7 / (r^2 kappa^2 sigma_r^2), where
/// T_a = ceil(c6 max(kappa^2 r^2 ln n, ln^3 n)).
struct CorollaryStep {
  double c4 = 1.0;
  double c6 = 1.0;
  double c7 = 1.0;
};

using StepRule = std::variant<FixedStep, Theorem1Step, CorollaryStep>;

std::string step_rule_name(const StepRule& rule);

/// Quantities the step rules need. Taken from the ground truth when known,
/// otherwise estimated from the spectral initialization.
struct SpectralScale {
  double sigma_r_sq = 0.0;
  double frob_sq = 0.0;
  double kappa = 1.0;
};

/// Step size for `rule`. For CorollaryStep this is the relaxed (post-T_a)
/// value; see StepSchedule for the full per-iteration sequence.
double step_size(const StepRule& rule, double sigma_r_sq, double frob_sq, int n, int r,
                 double kappa);

int relaxation_iteration(const CorollaryStep& rule, int n, int r, double kappa);

class StepSchedule {
 public:
  StepSchedule(const StepRule& rule, const SpectralScale& scale, int n, int r);

  double at(int t) const { return t < switch_at_ ? early_ : late_; }
  double initial() const { return early_; }

 private:
  double early_;
  double late_;
  int switch_at_;
};

struct RecoveryConfig {
  int rank = 1;
  int max_iters = 1000;
  StepRule step_rule = Theorem1Step{};
  /// Stop once ||grad f(X_t)||_F / ||X_t||_F falls below this.
  double stop_grad_tol = 1e-10;
  /// Stop once dist(X_t, X*) / ||X*||_F falls below this (ground truth only).
  std::optional<double> stop_dist_tol;
  int trace_every = 1;
  std::uint64_t seed = 0;
  /// Relative distance counted as success when the ground truth is known.
  double success_threshold = 1e-5;
  /// Largest n for which Y is formed densely.
  int dense_cap = 2048;
  /// Bypasses the spectral estimate as starting point. Step-size estimates
  /// still come from the spectral initialization.
  std::optional<Matrix> initial_factor;

  void validate() const;
};

struct InitResult {
  Matrix x0;
  Vector eigvals;  // lambda_i(Y), descending
  double lambda = 0.0;
  int clamped = 0;
  Vector shifted;  // max(lambda_i(Y) - lambda, 0)
};

struct TraceRecord {
  int t = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  std::optional<double> dist;
  std::optional<double> incoherence;
};

struct RecoveryReport {
  int iterations_run = 0;
  Matrix final_x;
  std::vector<TraceRecord> traces;
  bool success = false;
  std::string failure_reason;
  double wall_seconds = 0.0;
  InitResult init;
  SpectralScale scale;
  double initial_step = 0.0;
  /// 1 / (power-iteration estimate of ||Hessian(X_0)||).
  double stability_threshold = 0.0;
  std::optional<double> final_relative_dist;
};

struct LooReport {
  std::vector<Eigen::Index> indices;
  std::vector<int> t;
  /// max_l ||X_t Q_t - X_t^(l) R_t^(l)||_F over the selected l.
  std::vector<double> max_proximity;
  std::vector<double> dist;
  std::vector<double> incoherence;
  /// X_T^(l) per selected index, when retention was requested.
  std::vector<Matrix> final_factors;
};

/// Y = (1/2m) sum y_i a_i a_i^T, lambda = (1/2m) sum y_i, X0 = Z0 Lambda0^{1/2}.
InitResult spectral_init(const SensingEnsemble& ens, const MeasurementSet& y, int r,
                         int dense_cap = 2048);
InitResult spectral_init(const SampleView& samples, int r, int dense_cap = 2048);

/// Y = (1/2m) sum y_i a_i a_i^T, the matrix whose top eigenpairs seed the
/// descent. Its expectation is (1/2) ||X*||_F^2 I + X* X*^T.
SymmetricMatrix initialization_matrix(const SampleView& samples);

/// Initialization from a given second-moment matrix and shift.
InitResult spectral_init_from_moments(const SymmetricMatrix& y_matrix, double lambda, int r);

Matrix gd_step(const Factor& x, double mu, const SensingEnsemble& ens, const MeasurementSet& y);

RecoveryReport run_recovery(const RecoveryConfig& cfg, const SensingEnsemble& ens,
                            const MeasurementSet& y, const GroundTruth* gt = nullptr);

std::vector<Eigen::Index> all_indices(Eigen::Index m);

/// Leave-one-out trajectories for `which` (0-based). Every trajectory,
/// including the main one, runs exactly cfg.max_iters steps with the main
/// run's step sizes; proximity is recorded every cfg.trace_every steps.
LooReport run_leave_one_out(const RecoveryConfig& cfg, const SensingEnsemble& ens,
                            const MeasurementSet& y, const GroundTruth& gt,
                            std::span<const Eigen::Index> which, bool retain_factors = false,
                            unsigned workers = 1);

}  // namespace r1fm
