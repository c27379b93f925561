#include "r1fm/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "r1fm/errors.hpp"
#include "r1fm/parallel.hpp"

namespace r1fm {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string optional_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Instance make_instance(int n, int r, int m, std::uint64_t seed,
                       const std::vector<double>& singular_values) {
  std::vector<double> sv = singular_values;
  if (sv.empty()) sv.assign(static_cast<std::size_t>(std::max(r, 0)), 1.0);
  Instance inst{generate_ground_truth(n, r, sv, split_seed(seed, 0)),
                sample_sensing_ensemble(m, n, split_seed(seed, 1)), {}};
  inst.y = measure(inst.gt, inst.ens);
  return inst;
}

ConvergenceResult convergence_experiment(const ConvergenceParams& params) {
  const Instance inst =
      make_instance(params.n, params.r, params.m, params.seed, params.singular_values);
  RecoveryConfig cfg;
  cfg.rank = params.r;
  cfg.max_iters = params.iters;
  cfg.step_rule = params.step_rule;
  cfg.trace_every = params.trace_every;
  cfg.stop_grad_tol = params.stop_grad_tol;
  cfg.seed = params.seed;
  return ConvergenceResult{params, run_recovery(cfg, inst.ens, inst.y, &inst.gt)};
}

void write_trace_csv(std::ostream& os, const RecoveryReport& report) {
  os << "t,loss,dist,incoherence,step\n";
  for (const auto& rec : report.traces) {
    os << rec.t << ',' << format_double(rec.loss) << ',' << optional_cell(rec.dist) << ','
       << optional_cell(rec.incoherence) << ',' << format_double(rec.step) << '\n';
  }
}

void PhaseGrid::validate() const {
  if (n.empty() || r.empty() || (m.empty() && m_ratios.empty())) {
    throw InvalidInput("phase grid: n, r and m lists must be nonempty");
  }
  if (trials < 1) throw InvalidInput("phase grid: trials must be >= 1");
  if (!(success_threshold > 0.0)) throw InvalidInput("phase grid: threshold must be positive");
  if (max_iters < 0) throw InvalidInput("phase grid: max_iters must be >= 0");
  for (int v : n) {
    if (v < 1) throw InvalidInput("phase grid: n must be >= 1");
  }
  for (int v : r) {
    if (v < 1) throw InvalidInput("phase grid: r must be >= 1");
  }
  for (int v : m) {
    if (v < 1) throw InvalidInput("phase grid: m must be >= 1");
  }
  for (double v : m_ratios) {
    if (!(v > 0.0)) throw InvalidInput("phase grid: m ratios must be positive");
  }
}

std::vector<PhaseCell> expand_cells(const PhaseGrid& grid) {
  grid.validate();
  std::vector<PhaseCell> cells;
  for (int n : grid.n) {
    for (int r : grid.r) {
      if (!grid.m.empty()) {
        for (int m : grid.m) cells.push_back({n, r, m});
      } else {
        for (double ratio : grid.m_ratios) {
          cells.push_back({n, r, std::max(1, static_cast<int>(std::lround(ratio * n)))});
        }
      }
    }
  }
  return cells;
}

std::uint64_t phase_trial_seed(std::uint64_t base, std::size_t cell_index, int trial) {
  return derive_trial_seed(base, static_cast<std::uint64_t>(cell_index) * 1000000ULL +
                                     static_cast<std::uint64_t>(trial));
}

std::vector<ExperimentRecord> phase_transition_experiment(const PhaseGrid& grid,
                                                          unsigned workers) {
  const std::vector<PhaseCell> cells = expand_cells(grid);
  const std::size_t per_cell = static_cast<std::size_t>(grid.trials);

  struct TrialOutcome {
    bool success = false;
    double rel_dist = std::numeric_limits<double>::infinity();
    double iterations = 0.0;
    double wall = 0.0;
  };
  std::vector<TrialOutcome> outcomes(cells.size() * per_cell);

  parallel_for(outcomes.size(), workers, [&](std::size_t job) {
    const std::size_t c = job / per_cell;
    const int trial = static_cast<int>(job % per_cell);
    const PhaseCell& cell = cells[c];
    TrialOutcome& out = outcomes[job];
    try {
      const Instance inst = make_instance(cell.n, cell.r, cell.m,
                                          phase_trial_seed(grid.base_seed, c, trial),
                                          grid.singular_values);
      RecoveryConfig cfg;
      cfg.rank = cell.r;
      cfg.max_iters = grid.max_iters;
      cfg.step_rule = grid.step_rule;
      cfg.stop_dist_tol = grid.success_threshold;
      cfg.success_threshold = grid.success_threshold;
      cfg.trace_every = std::max(1, grid.max_iters);
      const RecoveryReport rep = run_recovery(cfg, inst.ens, inst.y, &inst.gt);
      out.success = rep.success;
      if (rep.final_relative_dist) out.rel_dist = *rep.final_relative_dist;
      out.iterations = rep.iterations_run;
      out.wall = rep.wall_seconds;
    } catch (const std::exception&) {
      // Counted as a non-success.
    }
  });

  std::vector<ExperimentRecord> table;
  table.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    ExperimentRecord rec;
    rec.cell = cells[c];
    rec.trials = grid.trials;
    rec.base_seed = grid.base_seed;
    std::vector<double> dists, iters, walls;
    for (std::size_t t = 0; t < per_cell; ++t) {
      const auto& o = outcomes[c * per_cell + t];
      rec.successes += o.success ? 1 : 0;
      dists.push_back(o.rel_dist);
      iters.push_back(o.iterations);
      walls.push_back(o.wall);
    }
    rec.success_rate = static_cast<double>(rec.successes) / static_cast<double>(rec.trials);
    rec.median_rel_dist = median(dists);
    rec.median_iterations = median(iters);
    rec.median_wall_seconds = median(walls);
    table.push_back(rec);
  }
  return table;
}

void write_phase_csv(std::ostream& os, const std::vector<ExperimentRecord>& table,
                     bool include_timing) {
  os << "n,r,m,trials,successes,success_rate,median_rel_dist,median_iterations,base_seed";
  if (include_timing) os << ",median_wall_seconds";
  os << '\n';
  for (const auto& rec : table) {
    os << rec.cell.n << ',' << rec.cell.r << ',' << rec.cell.m << ',' << rec.trials << ','
       << rec.successes << ',' << format_double(rec.success_rate) << ','
       << format_double(rec.median_rel_dist) << ',' << format_double(rec.median_iterations)
       << ',' << rec.base_seed;
    if (include_timing) os << ',' << format_double(rec.median_wall_seconds);
    os << '\n';
  }
}

LooResult loo_diagnostic_experiment(const LooParams& params, unsigned workers) {
  if (params.subset_size < 0 || params.subset_size > params.m) {
    throw InvalidInput("loo: subset_size must lie in [0, m]");
  }
  const Instance inst =
      make_instance(params.n, params.r, params.m, params.seed, params.singular_values);
  std::vector<Eigen::Index> pool = all_indices(params.m);
  std::mt19937_64 pick(split_seed(params.seed, 2));
  std::shuffle(pool.begin(), pool.end(), pick);
  pool.resize(static_cast<std::size_t>(params.subset_size));
  std::sort(pool.begin(), pool.end());

  RecoveryConfig cfg;
  cfg.rank = params.r;
  cfg.max_iters = params.iters;
  cfg.trace_every = params.trace_every;
  cfg.step_rule = params.step_rule;
  cfg.seed = params.seed;
  return LooResult{params, run_leave_one_out(cfg, inst.ens, inst.y, inst.gt, pool, false,
                                             workers)};
}

void write_loo_csv(std::ostream& os, const LooResult& result) {
  const LooReport& rep = result.report;
  const bool has_proximity = !rep.indices.empty();
  os << "t,max_proximity,dist,incoherence\n";
  for (std::size_t k = 0; k < rep.t.size(); ++k) {
    os << rep.t[k] << ',' << (has_proximity ? format_double(rep.max_proximity[k]) : "") << ','
       << format_double(rep.dist[k]) << ',' << format_double(rep.incoherence[k]) << '\n';
  }
}

SketchReport sketch_demo(const SketchParams& params) {
  if (params.stream_length < 1) throw EmptyInput("sketch: stream_length must be >= 1");
  const Instance inst =
      make_instance(params.n, params.r, params.m, params.seed, params.singular_values);

  SketchReport report;
  report.params = params;
  if (params.exact_measurements) {
    report.y = inst.y;
  } else {
    CovarianceSketcher sketcher(inst.ens);
    GaussianSource rng(split_seed(params.seed, 3));
    Vector g(params.r);
    for (long t = 0; t < params.stream_length; ++t) {
      for (int k = 0; k < params.r; ++k) g(k) = rng();
      sketcher.push(inst.gt.x * g);
    }
    report.y = sketcher.finish();
  }
  if (!params.exact_measurements && params.stream_length < kMinimumSketchStream) {
    report.warnings.push_back("insufficient stream: " + std::to_string(params.stream_length) +
                              " samples < " + std::to_string(kMinimumSketchStream));
  }

  RecoveryConfig cfg;
  cfg.rank = params.r;
  cfg.max_iters = params.iters;
  cfg.trace_every = std::max(1, params.iters / 100);
  cfg.seed = params.seed;
  report.recovery = run_recovery(cfg, inst.ens, report.y, nullptr);

  const Matrix truth = inst.gt.x * inst.gt.x.transpose();
  const Matrix& x = report.recovery.final_x;
  report.relative_m_error = (x * x.transpose() - truth).norm() / truth.norm();
  return report;
}

}  // namespace r1fm
