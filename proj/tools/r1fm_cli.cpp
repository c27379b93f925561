// r1fm: command-line driver for recovery runs and experiment sweeps.
//
// Exit codes: 0 success, 2 invalid arguments or input files, 3 numerical
// failure (divergence, degenerate initialization, eigensolver failure).

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "r1fm/binary_io.hpp"
#include "r1fm/errors.hpp"
#include "r1fm/experiments.hpp"
#include "r1fm/oracles.hpp"
#include "r1fm/parallel.hpp"

using nlohmann::json;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

// Reads a JSON object as CLI11 config items. Keys are long option names of
// the invoked subcommand (underscores accepted for dashes); an object keyed
// by the subcommand name is read the same way, other sections are ignored.
// Values given on the command line take precedence.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::string section) : section_(std::move(section)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc;
    try {
      input >> doc;
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config", e.what());
    }
    if (!doc.is_object()) throw CLI::ConversionError("config", "expected a JSON object");
    std::vector<CLI::ConfigItem> items;
    read_object(doc, items);
    return items;
  }

 private:
  void read_object(const json& doc, std::vector<CLI::ConfigItem>& items) const {
    for (const auto& [key, value] : doc.items()) {
      if (value.is_object()) {
        if (key == section_) read_object(value, items);
        continue;
      }
      CLI::ConfigItem item;
      if (!section_.empty()) item.parents = {section_};
      item.name = key;
      for (auto& c : item.name) {
        if (c == '_') c = '-';
      }
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }

  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  std::string section_;
};

constexpr const char* kSubcommands[] = {"recover", "converge", "phase", "loo", "sketch",
                                        "selftest"};

std::string invoked_subcommand(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    for (const char* name : kSubcommands) {
      if (std::string_view(argv[i]) == name) return name;
    }
  }
  return {};
}

struct StepOptions {
  std::string rule = "theorem1";
  double mu = 0.0;
  double c4 = 1.0;
  double c6 = 1.0;
  double c7 = 1.0;

  void attach(CLI::App* app) {
    app->add_option("--step-rule", rule, "fixed | theorem1 | corollary")
        ->check(CLI::IsMember({"fixed", "theorem1", "corollary"}))
        ->capture_default_str();
    app->add_option("--mu", mu, "step size for --step-rule fixed");
    app->add_option("--c4", c4, "theorem1 constant")->capture_default_str();
    app->add_option("--c6", c6, "corollary switch-iteration constant")->capture_default_str();
    app->add_option("--c7", c7, "corollary relaxed-step constant")->capture_default_str();
  }

  r1fm::StepRule build() const {
    if (rule == "fixed") return r1fm::FixedStep{mu};
    if (rule == "corollary") return r1fm::CorollaryStep{c4, c6, c7};
    return r1fm::Theorem1Step{c4};
  }

  json to_json() const {
    return json{{"rule", rule}, {"mu", mu}, {"c4", c4}, {"c6", c6}, {"c7", c7}};
  }
};

struct OutputOptions {
  std::string out;
  std::string meta;
  bool timing = false;

  void attach(CLI::App* app) {
    app->add_option("--out", out, "output file (default: stdout)");
    app->add_option("--meta", meta, "metadata JSON file (default: <out>.json)");
    app->add_flag("--timing", timing, "include wall-clock columns (not reproducible)");
  }

  // Writes `body` to --out or stdout.
  void emit(const std::string& body) const {
    if (out.empty()) {
      std::cout << body;
      return;
    }
    std::ofstream os(out, std::ios::binary | std::ios::trunc);
    if (!os) throw r1fm::InvalidInput("cannot open output file " + out);
    os << body;
  }

  // Writes metadata next to the output, or to stderr when printing to stdout.
  void emit_meta(const json& meta_doc) const {
    const std::string text = meta_doc.dump(2) + "\n";
    std::string path = meta;
    if (path.empty() && !out.empty()) path = out + ".json";
    if (path.empty()) {
      std::cerr << text;
      return;
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw r1fm::InvalidInput("cannot open metadata file " + path);
    os << text;
  }
};

json provenance(const std::string& command, std::uint64_t seed) {
  return json{{"command", command},
              {"generator_id", r1fm::kGeneratorId},
              {"base_seed", seed},
              {"library_version", r1fm::kLibraryVersion}};
}

json report_summary(const r1fm::RecoveryReport& rep, bool timing) {
  json j{{"iterations_run", rep.iterations_run},
         {"success", rep.success},
         {"failure_reason", rep.failure_reason},
         {"initial_step", rep.initial_step},
         {"stability_threshold", rep.stability_threshold},
         {"init",
          {{"lambda", rep.init.lambda},
           {"eigvals", std::vector<double>(rep.init.eigvals.begin(), rep.init.eigvals.end())},
           {"clamped", rep.init.clamped}}}};
  if (rep.final_relative_dist) j["final_relative_dist"] = *rep.final_relative_dist;
  if (!rep.traces.empty()) {
    j["final_loss"] = rep.traces.back().loss;
    j["final_grad_norm"] = rep.traces.back().grad_norm;
  }
  if (timing) j["wall_seconds"] = rep.wall_seconds;
  return j;
}

std::string trace_csv(const r1fm::RecoveryReport& rep) {
  std::ostringstream os;
  r1fm::write_trace_csv(os, rep);
  return os.str();
}

int status_of(const r1fm::RecoveryReport& rep) {
  return rep.failure_reason.empty() ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank PSD recovery from rank-one measurements"};
  app.set_version_flag("--version", std::string(r1fm::kLibraryVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>(invoked_subcommand(argc, argv)));
  app.set_config("--config", "", "JSON file mirroring the command-line flags");

  // recover
  auto* recover = app.add_subcommand("recover", "single recovery run on a planted instance");
  int rec_n = 32, rec_r = 1, rec_m = 256, rec_iters = 1000, rec_trace_every = 1;
  int rec_rank = 0;
  std::uint64_t rec_seed = 1;
  double rec_grad_tol = 1e-10;
  std::vector<double> rec_sigma;
  std::string load_ens, load_meas, save_ens, save_meas;
  StepOptions rec_step;
  OutputOptions rec_out;
  recover->add_option("--n", rec_n, "ambient dimension")->check(CLI::PositiveNumber);
  recover->add_option("--r", rec_r, "rank of the planted factor")->check(CLI::PositiveNumber);
  recover->add_option("--m", rec_m, "number of measurements")->check(CLI::PositiveNumber);
  recover->add_option("--rank", rec_rank, "recovery rank (default: --r)");
  recover->add_option("--iters", rec_iters, "iteration budget")->check(CLI::NonNegativeNumber);
  recover->add_option("--seed", rec_seed, "base seed");
  recover->add_option("--sigma", rec_sigma, "singular values of the planted factor");
  recover->add_option("--trace-every", rec_trace_every,
      "record every k-th iteration")->check(CLI::PositiveNumber);
  recover->add_option("--grad-tol", rec_grad_tol, "relative gradient stopping tolerance");
  recover->add_option("--load-ensemble", load_ens, "R1FM ensemble file (blind mode)");
  recover->add_option("--load-measurements", load_meas, "R1FM measurement file (blind mode)");
  recover->add_option("--save-ensemble", save_ens, "write the sensing ensemble to this R1FM file");
  recover->add_option("--save-measurements", save_meas, "write the measurements to this R1FM file");
  rec_step.attach(recover);
  rec_out.attach(recover);

  // converge
  auto* converge = app.add_subcommand("converge", "per-iteration convergence trace");
  r1fm::ConvergenceParams conv;
  StepOptions conv_step;
  OutputOptions conv_out;
  converge->add_option("--n", conv.n)->check(CLI::PositiveNumber);
  converge->add_option("--r", conv.r)->check(CLI::PositiveNumber);
  converge->add_option("--m", conv.m)->check(CLI::PositiveNumber);
  converge->add_option("--iters", conv.iters)->check(CLI::NonNegativeNumber);
  converge->add_option("--seed", conv.seed);
  converge->add_option("--sigma", conv.singular_values);
  converge->add_option("--trace-every", conv.trace_every,
      "record every k-th iteration")->check(CLI::PositiveNumber);
  converge->add_option("--grad-tol", conv.stop_grad_tol);
  conv_step.attach(converge);
  conv_out.attach(converge);

  // phase
  auto* phase = app.add_subcommand("phase", "success-rate sweep over (n, r, m)");
  r1fm::PhaseGrid grid;
  grid.n = {64};
  grid.r = {1};
  StepOptions phase_step;
  OutputOptions phase_out;
  phase->add_option("--n", grid.n, "list of dimensions");
  phase->add_option("--r", grid.r, "list of ranks");
  phase->add_option("--m", grid.m, "list of measurement counts");
  phase->add_option("--m-ratio", grid.m_ratios, "list of m/n ratios (used when --m absent)");
  phase->add_option("--trials", grid.trials, "trials per cell")->check(CLI::PositiveNumber);
  phase->add_option("--threshold", grid.success_threshold, "relative-dist success threshold");
  phase->add_option("--iters", grid.max_iters)->check(CLI::NonNegativeNumber);
  phase->add_option("--seed", grid.base_seed, "base seed");
  phase->add_option("--sigma", grid.singular_values);
  phase_step.attach(phase);
  phase_out.attach(phase);

  // loo
  auto* loo = app.add_subcommand("loo", "leave-one-out proximity diagnostics");
  r1fm::LooParams loo_params;
  StepOptions loo_step;
  OutputOptions loo_out;
  loo->add_option("--n", loo_params.n)->check(CLI::PositiveNumber);
  loo->add_option("--r", loo_params.r)->check(CLI::PositiveNumber);
  loo->add_option("--m", loo_params.m)->check(CLI::PositiveNumber);
  loo->add_option("--iters", loo_params.iters)->check(CLI::NonNegativeNumber);
  loo->add_option("--subset", loo_params.subset_size, "number of left-out indices");
  loo->add_option("--seed", loo_params.seed);
  loo->add_option("--sigma", loo_params.singular_values);
  loo->add_option("--trace-every", loo_params.trace_every,
      "record every k-th iteration")->check(CLI::PositiveNumber);
  loo_step.attach(loo);
  loo_out.attach(loo);

  // sketch
  auto* sketch = app.add_subcommand("sketch", "covariance-sketching demo");
  r1fm::SketchParams sk;
  OutputOptions sketch_out;
  sketch->add_option("--n", sk.n)->check(CLI::PositiveNumber);
  sketch->add_option("--r", sk.r)->check(CLI::PositiveNumber);
  sketch->add_option("--m", sk.m)->check(CLI::PositiveNumber);
  sketch->add_option("--stream", sk.stream_length, "number of streamed samples")
      ->check(CLI::PositiveNumber);
  sketch->add_option("--iters", sk.iters)->check(CLI::NonNegativeNumber);
  sketch->add_option("--seed", sk.seed);
  sketch->add_option("--sigma", sk.singular_values);
  sketch->add_flag("--exact", sk.exact_measurements, "use exact measurements");
  sketch_out.attach(sketch);

  // selftest
  auto* selftest = app.add_subcommand("selftest", "run the built-in oracle checks");
  OutputOptions self_out;
  self_out.attach(selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  const unsigned workers = r1fm::worker_count();

  try {
    if (*recover) {
      const int rank = rec_rank > 0 ? rec_rank : rec_r;
      r1fm::RecoveryConfig cfg;
      cfg.rank = rank;
      cfg.max_iters = rec_iters;
      cfg.step_rule = rec_step.build();
      cfg.stop_grad_tol = rec_grad_tol;
      cfg.trace_every = rec_trace_every;
      cfg.seed = rec_seed;

      json meta = provenance("recover", rec_seed);
      meta["step_rule"] = rec_step.to_json();
      r1fm::RecoveryReport rep;
      if (!load_ens.empty() || !load_meas.empty()) {
        if (load_ens.empty() || load_meas.empty()) {
          throw r1fm::InvalidInput("--load-ensemble and --load-measurements go together");
        }
        const auto ens = r1fm::load_ensemble(load_ens);
        const auto y = r1fm::load_measurements(load_meas, ens);
        meta["params"] = {{"n", ens.n()}, {"m", ens.m()}, {"rank", rank}, {"iters", rec_iters}};
        rep = r1fm::run_recovery(cfg, ens, y, nullptr);
      } else {
        const auto inst = r1fm::make_instance(rec_n, rec_r, rec_m, rec_seed, rec_sigma);
        if (!save_ens.empty()) r1fm::save_ensemble(inst.ens, save_ens);
        if (!save_meas.empty()) r1fm::save_measurements(inst.y, inst.ens, save_meas);
        meta["params"] = {{"n", rec_n},   {"r", rec_r},         {"m", rec_m},
                          {"rank", rank}, {"iters", rec_iters}, {"kappa", inst.gt.kappa}};
        rep = r1fm::run_recovery(cfg, inst.ens, inst.y, rank == rec_r ? &inst.gt : nullptr);
      }
      meta["result"] = report_summary(rep, rec_out.timing);
      rec_out.emit(trace_csv(rep));
      rec_out.emit_meta(meta);
      return status_of(rep);
    }

    if (*converge) {
      conv.step_rule = conv_step.build();
      const auto res = r1fm::convergence_experiment(conv);
      json meta = provenance("converge", conv.seed);
      meta["params"] = {{"n", conv.n},          {"r", conv.r},
                        {"m", conv.m},          {"iters", conv.iters},
                        {"trace_every", conv.trace_every}};
      meta["step_rule"] = conv_step.to_json();
      meta["result"] = report_summary(res.report, conv_out.timing);
      conv_out.emit(trace_csv(res.report));
      conv_out.emit_meta(meta);
      return status_of(res.report);
    }

    if (*phase) {
      grid.step_rule = phase_step.build();
      if (!grid.m.empty()) grid.m_ratios.clear();
      const auto table = r1fm::phase_transition_experiment(grid, workers);
      std::ostringstream os;
      r1fm::write_phase_csv(os, table, phase_out.timing);
      json meta = provenance("phase", grid.base_seed);
      meta["params"] = {{"n", grid.n},
                        {"r", grid.r},
                        {"m", grid.m},
                        {"m_ratio", grid.m_ratios},
                        {"trials", grid.trials},
                        {"threshold", grid.success_threshold},
                        {"iters", grid.max_iters},
                        {"trial_seed_rule", "base_seed XOR (cell_index * 1000000 + trial)"}};
      meta["step_rule"] = phase_step.to_json();
      phase_out.emit(os.str());
      phase_out.emit_meta(meta);
      return 0;
    }

    if (*loo) {
      loo_params.step_rule = loo_step.build();
      const auto res = r1fm::loo_diagnostic_experiment(loo_params, workers);
      std::ostringstream os;
      r1fm::write_loo_csv(os, res);
      json meta = provenance("loo", loo_params.seed);
      meta["params"] = {{"n", loo_params.n},       {"r", loo_params.r},
                        {"m", loo_params.m},       {"iters", loo_params.iters},
                        {"subset", loo_params.subset_size},
                        {"trace_every", loo_params.trace_every}};
      meta["indices"] = res.report.indices;
      meta["step_rule"] = loo_step.to_json();
      loo_out.emit(os.str());
      loo_out.emit_meta(meta);
      return 0;
    }

    if (*sketch) {
      const auto rep = r1fm::sketch_demo(sk);
      json doc = provenance("sketch", sk.seed);
      doc["params"] = {{"n", sk.n},
                       {"r", sk.r},
                       {"m", sk.m},
                       {"stream_length", sk.stream_length},
                       {"iters", sk.iters},
                       {"exact", sk.exact_measurements}};
      doc["relative_m_error"] = rep.relative_m_error;
      doc["warnings"] = rep.warnings;
      doc["result"] = report_summary(rep.recovery, sketch_out.timing);
      for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
      sketch_out.emit(doc.dump(2) + "\n");
      return status_of(rep.recovery);
    }

    if (*selftest) {
      std::ostringstream os;
      const bool ok = r1fm::run_selftest(os);
      self_out.emit(os.str());
      return ok ? 0 : kExitNumerical;
    }
  } catch (const r1fm::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const r1fm::ConvergenceFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
