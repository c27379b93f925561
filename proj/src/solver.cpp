#include "r1fm/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "r1fm/errors.hpp"
#include "r1fm/parallel.hpp"

namespace r1fm {

namespace {

// Power iterations behind RecoveryReport::stability_threshold.
constexpr int kStabilityProbeIters = 30;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double theorem1_rate(double c4, double sigma_r_sq, int n, int r, double kappa) {
  const double d = r * kappa + std::log(static_cast<double>(n));
  return c4 / (d * d * sigma_r_sq);
}

double corollary_rate(double c7, double sigma_r_sq, int r, double kappa) {
  return c7 / (static_cast<double>(r) * r * kappa * kappa * sigma_r_sq);
}

SampleView full_view(const SensingEnsemble& ens, const MeasurementSet& y) {
  return SampleView{ens.vectors, y.y, static_cast<double>(ens.m())};
}

void check_inputs(const RecoveryConfig& cfg, const SensingEnsemble& ens, const MeasurementSet& y,
                  const GroundTruth* gt) {
  cfg.validate();
  if (y.size() != ens.m() || y.ensemble_fingerprint != ens.fingerprint()) {
    throw InvalidInput("measurements were not produced by this ensemble");
  }
  if (cfg.rank > ens.n()) throw InvalidInput("rank exceeds the ambient dimension");
  if (gt != nullptr && (gt->n != ens.n() || gt->r != cfg.rank)) {
    throw InvalidInput("ground truth shape does not match the ensemble and rank");
  }
  if (cfg.initial_factor &&
      (cfg.initial_factor->rows() != ens.n() || cfg.initial_factor->cols() != cfg.rank)) {
    throw InvalidInput("initial_factor has the wrong shape");
  }
}

SpectralScale truth_scale(const GroundTruth& gt) {
  return SpectralScale{gt.sigma_min() * gt.sigma_min(), gt.x.squaredNorm(), gt.kappa};
}

SpectralScale blind_scale(const InitResult& init) {
  SpectralScale s;
  const auto r = init.shifted.size();
  s.sigma_r_sq = init.shifted(r - 1);
  s.frob_sq = 2.0 * init.lambda;
  s.kappa = s.sigma_r_sq > 0.0 ? init.shifted(0) / s.sigma_r_sq : 1.0;
  return s;
}

bool needs_scale(const StepRule& rule) { return !std::holds_alternative<FixedStep>(rule); }

std::vector<int> recorded_iterations(int max_iters, int every) {
  std::vector<int> ts;
  for (int t = 0; t <= max_iters; t += every) ts.push_back(t);
  if (ts.back() != max_iters) ts.push_back(max_iters);
  return ts;
}

}  // namespace

std::string step_rule_name(const StepRule& rule) {
  return std::visit(Overloaded{[](const FixedStep&) { return std::string("fixed"); },
                               [](const Theorem1Step&) { return std::string("theorem1"); },
                               [](const CorollaryStep&) { return std::string("corollary"); }},
                    rule);
}

double step_size(const StepRule& rule, double sigma_r_sq, double frob_sq, int n, int r,
                 double kappa) {
  if (const auto* fixed = std::get_if<FixedStep>(&rule)) {
    if (!(fixed->mu > 0.0)) throw InvalidInput("step_size: fixed mu must be positive");
    return fixed->mu;
  }
  if (!(sigma_r_sq > 0.0) || !(frob_sq > 0.0) || !(kappa > 0.0) || n < 1 || r < 1) {
    throw InvalidInput("step_size: spectral estimates must be positive");
  }
  if (const auto* t1 = std::get_if<Theorem1Step>(&rule)) {
    return theorem1_rate(t1->c4, sigma_r_sq, n, r, kappa);
  }
  const auto& cor = std::get<CorollaryStep>(rule);
  return corollary_rate(cor.c7, sigma_r_sq, r, kappa);
}

int relaxation_iteration(const CorollaryStep& rule, int n, int r, double kappa) {
  const double ln = std::log(static_cast<double>(n));
  const double span = std::max(kappa * kappa * r * r * ln, ln * ln * ln);
  return static_cast<int>(std::ceil(rule.c6 * span));
}

StepSchedule::StepSchedule(const StepRule& rule, const SpectralScale& scale, int n, int r) {
  if (const auto* cor = std::get_if<CorollaryStep>(&rule)) {
    early_ = step_size(Theorem1Step{cor->c4}, scale.sigma_r_sq, scale.frob_sq, n, r, scale.kappa);
    late_ = step_size(rule, scale.sigma_r_sq, scale.frob_sq, n, r, scale.kappa);
    switch_at_ = relaxation_iteration(*cor, n, r, scale.kappa);
  } else {
    early_ = step_size(rule, scale.sigma_r_sq, scale.frob_sq, n, r, scale.kappa);
    late_ = early_;
    switch_at_ = std::numeric_limits<int>::max();
  }
}

void RecoveryConfig::validate() const {
  if (rank < 1) throw InvalidInput("rank must be >= 1");
  if (max_iters < 0) throw InvalidInput("max_iters must be >= 0");
  if (!(stop_grad_tol > 0.0)) throw InvalidInput("stop_grad_tol must be positive");
  if (stop_dist_tol && !(*stop_dist_tol > 0.0)) {
    throw InvalidInput("stop_dist_tol must be positive");
  }
  if (trace_every < 1) throw InvalidInput("trace_every must be >= 1");
  if (!(success_threshold > 0.0)) throw InvalidInput("success_threshold must be positive");
  if (const auto* fixed = std::get_if<FixedStep>(&step_rule); fixed && !(fixed->mu > 0.0)) {
    throw InvalidInput("fixed step size must be positive");
  }
  if (const auto* t1 = std::get_if<Theorem1Step>(&step_rule); t1 && !(t1->c4 > 0.0)) {
    throw InvalidInput("c4 must be positive");
  }
  if (const auto* cor = std::get_if<CorollaryStep>(&step_rule);
      cor && !(cor->c4 > 0.0 && cor->c6 > 0.0 && cor->c7 > 0.0)) {
    throw InvalidInput("corollary constants must be positive");
  }
}

InitResult spectral_init_from_moments(const SymmetricMatrix& y_matrix, double lambda, int r) {
  if (r < 1 || r > y_matrix.dim()) throw InvalidInput("spectral_init: need 1 <= r <= n");
  const EigenPairs eig = top_r_eigenpairs(y_matrix, r);
  InitResult out;
  out.eigvals = eig.values;
  out.lambda = lambda;
  out.shifted.resize(r);
  for (int i = 0; i < r; ++i) {
    const double s = eig.values(i) - lambda;
    if (s <= 0.0) ++out.clamped;
    out.shifted(i) = std::max(s, 0.0);
  }
  out.x0 = eig.vectors * out.shifted.cwiseSqrt().asDiagonal();
  return out;
}

SymmetricMatrix initialization_matrix(const SampleView& samples) {
  if (samples.y.size() != samples.rows()) throw InvalidInput("spectral_init: count mismatch");
  Matrix y_matrix = samples.a.transpose() * (samples.y.asDiagonal() * samples.a);
  y_matrix *= 1.0 / (2.0 * samples.normalizer);
  y_matrix = 0.5 * (y_matrix + y_matrix.transpose()).eval();
  return SymmetricMatrix(std::move(y_matrix));
}

InitResult spectral_init(const SampleView& samples, int r, int dense_cap) {
  const auto n = samples.n();
  if (r < 1 || r > n) throw InvalidInput("spectral_init: need 1 <= r <= n");
  if (n > dense_cap) {
    throw InvalidInput("spectral_init: n = " + std::to_string(n) + " exceeds the dense cap " +
                       std::to_string(dense_cap));
  }
  const double lambda = samples.y.sum() / (2.0 * samples.normalizer);
  return spectral_init_from_moments(initialization_matrix(samples), lambda, r);
}

InitResult spectral_init(const SensingEnsemble& ens, const MeasurementSet& y, int r,
                         int dense_cap) {
  if (y.size() != ens.m() || y.ensemble_fingerprint != ens.fingerprint()) {
    throw InvalidInput("measurements were not produced by this ensemble");
  }
  return spectral_init(full_view(ens, y), r, dense_cap);
}

Matrix gd_step(const Factor& x, double mu, const SensingEnsemble& ens, const MeasurementSet& y) {
  if (!(mu > 0.0)) throw InvalidInput("gd_step: step size must be positive");
  return x - mu * gradient(x, ens, y);
}

RecoveryReport run_recovery(const RecoveryConfig& cfg, const SensingEnsemble& ens,
                            const MeasurementSet& y, const GroundTruth* gt) {
  check_inputs(cfg, ens, y, gt);
  const auto started = std::chrono::steady_clock::now();
  const SampleView view = full_view(ens, y);
  const int n = static_cast<int>(ens.n());
  const int r = cfg.rank;

  RecoveryReport report;
  auto finish = [&](RecoveryReport& rep) {
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  report.init = spectral_init(view, r, cfg.dense_cap);
  report.scale = gt != nullptr ? truth_scale(*gt) : blind_scale(report.init);
  Matrix x = cfg.initial_factor ? *cfg.initial_factor : report.init.x0;
  const double truth_norm = gt != nullptr ? gt->frobenius_norm() : 0.0;

  auto aligned_stats = [&](const Matrix& cur, TraceRecord& rec) {
    const AlignmentResult align = procrustes_align(cur, gt->x);
    rec.dist = align.residual;
    rec.incoherence = max_row_projection_norm(cur * align.q - gt->x, ens.vectors);
  };

  const bool y_nonzero = y.y.size() > 0 && y.y.cwiseAbs().maxCoeff() > 0.0;
  const bool bad_scale = needs_scale(cfg.step_rule) && !(report.scale.sigma_r_sq > 0.0);
  if ((x.isZero(0.0) && y_nonzero) || bad_scale) {
    TraceRecord rec;
    const auto lg = objective::loss_and_gradient(view, x);
    rec.loss = lg.loss;
    rec.grad_norm = lg.gradient.norm();
    if (gt != nullptr) aligned_stats(x, rec);
    report.traces.push_back(rec);
    report.final_x = x;
    report.failure_reason = "degenerate spectral initialization";
    if (gt != nullptr) report.final_relative_dist = *rec.dist / truth_norm;
    finish(report);
    return report;
  }

  const StepSchedule schedule(cfg.step_rule, report.scale, n, r);
  report.initial_step = schedule.initial();
  const double probe = objective::hessian_operator_norm_estimate(view, x, kStabilityProbeIters);
  report.stability_threshold =
      probe > 0.0 ? 1.0 / probe : std::numeric_limits<double>::infinity();

  bool grad_converged = false;
  for (int t = 0;; ++t) {
    const auto lg = objective::loss_and_gradient(view, x);
    const double gnorm = lg.gradient.norm();
    if (!std::isfinite(lg.loss) || !std::isfinite(gnorm)) {
      report.failure_reason = "iterates diverged at t = " + std::to_string(t);
      report.iterations_run = t;
      break;
    }
    const double xnorm = x.norm();
    const double rel_grad = xnorm > 0.0 ? gnorm / xnorm
                                        : (gnorm == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());

    TraceRecord rec;
    rec.t = t;
    rec.loss = lg.loss;
    rec.grad_norm = gnorm;
    rec.step = schedule.at(t);
    const bool on_trace = t % cfg.trace_every == 0;
    if (gt != nullptr && (on_trace || cfg.stop_dist_tol)) aligned_stats(x, rec);

    grad_converged = rel_grad <= cfg.stop_grad_tol;
    const bool dist_converged =
        cfg.stop_dist_tol && rec.dist && *rec.dist / truth_norm <= *cfg.stop_dist_tol;
    const bool stop = grad_converged || dist_converged || t >= cfg.max_iters;
    if (on_trace || stop) {
      if (gt != nullptr && !rec.dist) aligned_stats(x, rec);
      report.traces.push_back(rec);
    }
    if (stop) {
      report.iterations_run = t;
      break;
    }
    x -= schedule.at(t) * lg.gradient;
  }

  report.final_x = x;
  if (gt != nullptr && x.allFinite()) {
    report.final_relative_dist = recovery_distance(x, gt->x) / truth_norm;
    report.success = *report.final_relative_dist <= cfg.success_threshold;
  } else if (gt == nullptr) {
    report.success = report.failure_reason.empty() && grad_converged;
  }
  finish(report);
  return report;
}

std::vector<Eigen::Index> all_indices(Eigen::Index m) {
  std::vector<Eigen::Index> out(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = i;
  return out;
}

LooReport run_leave_one_out(const RecoveryConfig& cfg, const SensingEnsemble& ens,
                            const MeasurementSet& y, const GroundTruth& gt,
                            std::span<const Eigen::Index> which, bool retain_factors,
                            unsigned workers) {
  check_inputs(cfg, ens, y, &gt);
  for (const auto l : which) {
    if (l < 0 || l >= ens.m()) throw InvalidInput("leave-one-out index out of range");
  }
  const int n = static_cast<int>(ens.n());
  const int r = cfg.rank;
  const SampleView view = full_view(ens, y);
  const StepSchedule schedule(cfg.step_rule, truth_scale(gt), n, r);
  const std::vector<int> ts = recorded_iterations(cfg.max_iters, cfg.trace_every);

  LooReport report;
  report.indices.assign(which.begin(), which.end());
  report.t = ts;

  // Main trajectory, aligned to the truth at every recorded iteration.
  std::vector<Matrix> aligned(ts.size());
  {
    Matrix x = cfg.initial_factor ? *cfg.initial_factor : spectral_init(view, r, cfg.dense_cap).x0;
    std::size_t k = 0;
    for (int t = 0; t <= cfg.max_iters; ++t) {
      if (!x.allFinite()) throw ConvergenceFailure("main trajectory diverged", t);
      if (k < ts.size() && ts[k] == t) {
        const AlignmentResult align = procrustes_align(x, gt.x);
        aligned[k] = x * align.q;
        report.dist.push_back(align.residual);
        report.incoherence.push_back(max_row_projection_norm(aligned[k] - gt.x, ens.vectors));
        ++k;
      }
      if (t < cfg.max_iters) x -= schedule.at(t) * objective::gradient(view, x);
    }
  }

  std::vector<std::vector<double>> proximity(which.size());
  std::vector<Matrix> finals(which.size());
  parallel_for(which.size(), workers, [&](std::size_t j) {
    const LeaveOneOutData data = leave_one_out_data(ens, y, which[j]);
    const SampleView loo = data.view();
    Matrix x = data.a.rows() > 0 ? spectral_init(loo, r, cfg.dense_cap).x0
                                 : Matrix::Zero(n, r);
    auto& prox = proximity[j];
    std::size_t k = 0;
    for (int t = 0; t <= cfg.max_iters; ++t) {
      if (!x.allFinite()) throw ConvergenceFailure("leave-one-out trajectory diverged", t);
      if (k < ts.size() && ts[k] == t) {
        prox.push_back(procrustes_align(x, aligned[k]).residual);
        ++k;
      }
      if (t < cfg.max_iters && data.a.rows() > 0) {
        x -= schedule.at(t) * objective::gradient(loo, x);
      }
    }
    if (retain_factors) finals[j] = std::move(x);
  });

  report.max_proximity.assign(ts.size(), 0.0);
  for (const auto& prox : proximity) {
    for (std::size_t k = 0; k < ts.size(); ++k) {
      report.max_proximity[k] = std::max(report.max_proximity[k], prox[k]);
    }
  }
  if (retain_factors) report.final_factors = std::move(finals);
  return report;
}

}  // namespace r1fm
