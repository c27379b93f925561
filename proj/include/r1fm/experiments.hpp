#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "r1fm/solver.hpp"

namespace r1fm {

inline constexpr const char* kLibraryVersion = R1FM_VERSION;

/// Independent 64-bit stream `stream` derived from `seed` (splitmix64).
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

/// A planted problem: ground truth, ensemble, exact measurements. The ground
/// truth uses split_seed(seed, 0) and the ensemble split_seed(seed, 1).
struct Instance {
  GroundTruth gt;
  SensingEnsemble ens;
  MeasurementSet y;
};

/// Empty `singular_values` means all ones.
Instance make_instance(int n, int r, int m, std::uint64_t seed,
                       const std::vector<double>& singular_values = {});

// ---------------------------------------------------------------- convergence

struct ConvergenceParams {
  int n = 32;
  int r = 1;
  int m = 256;
  StepRule step_rule = Theorem1Step{};
  int iters = 500;
  std::uint64_t seed = 1;
  std::vector<double> singular_values;
  int trace_every = 1;
  double stop_grad_tol = 1e-10;
};

struct ConvergenceResult {
  ConvergenceParams params;
  RecoveryReport report;
};

ConvergenceResult convergence_experiment(const ConvergenceParams& params);

/// Columns t,loss,dist,incoherence,step.
void write_trace_csv(std::ostream& os, const RecoveryReport& report);

// -------------------------------------------------------------- phase sweeps

struct PhaseGrid {
  std::vector<int> n;
  std::vector<int> r;
  /// Absolute measurement counts; used when nonempty.
  std::vector<int> m;
  /// Otherwise m = round(ratio * n) for each ratio.
  std::vector<double> m_ratios;
  int trials = 10;
  double success_threshold = 1e-5;
  std::uint64_t base_seed = 1;
  int max_iters = 1500;
  StepRule step_rule = Theorem1Step{};
  std::vector<double> singular_values;

  void validate() const;
};

struct PhaseCell {
  int n = 0;
  int r = 0;
  int m = 0;
};

std::vector<PhaseCell> expand_cells(const PhaseGrid& grid);

/// Seed for one trial: base ^ (cell_index * 10^6 + trial).
std::uint64_t phase_trial_seed(std::uint64_t base, std::size_t cell_index, int trial);

struct ExperimentRecord {
  PhaseCell cell;
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  double median_rel_dist = 0.0;
  double median_iterations = 0.0;
  double median_wall_seconds = 0.0;
  std::uint64_t base_seed = 0;
};

/// Trials run on `workers` threads; the table is identical for any worker count.
std::vector<ExperimentRecord> phase_transition_experiment(const PhaseGrid& grid,
                                                          unsigned workers = 1);

void write_phase_csv(std::ostream& os, const std::vector<ExperimentRecord>& table,
                     bool include_timing = false);

// ------------------------------------------------------------ leave-one-out

struct LooParams {
  int n = 32;
  int r = 1;
  int m = 512;
  int iters = 200;
  int subset_size = 20;
  std::uint64_t seed = 1;
  std::vector<double> singular_values;
  int trace_every = 1;
  StepRule step_rule = Theorem1Step{};
};

struct LooResult {
  LooParams params;
  LooReport report;
};

LooResult loo_diagnostic_experiment(const LooParams& params, unsigned workers = 1);

/// Columns t,max_proximity,dist,incoherence; max_proximity left blank when
/// no index was selected.
void write_loo_csv(std::ostream& os, const LooResult& result);

// --------------------------------------------------------- covariance sketch

struct SketchParams {
  int n = 16;
  int r = 1;
  int m = 160;
  long stream_length = 100000;
  std::uint64_t seed = 1;
  std::vector<double> singular_values;
  int iters = 2000;
  /// Measure y exactly instead of sketching it from samples.
  bool exact_measurements = false;
};

inline constexpr long kMinimumSketchStream = 100;

struct SketchReport {
  SketchParams params;
  MeasurementSet y;
  RecoveryReport recovery;
  /// ||X X^T - X* X*^T||_F / ||X* X*^T||_F.
  double relative_m_error = 0.0;
  std::vector<std::string> warnings;
};

SketchReport sketch_demo(const SketchParams& params);

// ------------------------------------------------------------------- output

/// %.17g with '.' decimal regardless of locale.
std::string format_double(double v);

}  // namespace r1fm
