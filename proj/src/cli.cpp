#include "nlsparse/cli.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlsparse/harness.hpp"
#include "nlsparse/report_io.hpp"
#include "nlsparse/verify.hpp"

namespace nlsparse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kJacobianTolerance = 1e-4;
constexpr double kDirectionTolerance = 1e-6;
constexpr double kJacobianStep = 1e-5;

struct CommonOptions {
  std::string spec_path;
  std::string out_dir = ".";
  std::string format = "both";
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  int samples = 20;
};

bool wants_json(const CommonOptions& o) { return o.format != "csv"; }
bool wants_csv(const CommonOptions& o) { return o.format != "json"; }

/// Merged spec document with file, overrides and --seed applied, in that order.
json resolve_spec(const CommonOptions& o) {
  json doc = o.spec_path.empty() ? merge_spec_json(json::object())
                                 : load_spec_file(o.spec_path);
  apply_overrides(doc, o.overrides);
  if (o.seed) doc["seed"] = *o.seed;
  return doc;
}

void emit(const CommonOptions& o, const std::string& name, const std::string& contents) {
  fs::create_directories(o.out_dir);
  write_file_atomic(fs::path(o.out_dir) / name, contents);
}

std::string sample_text(const Signal& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s + "]";
}

int cmd_solve(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec = spec_from_json(resolve_spec(o));
  spec.trials = 1;
  TrialOutcome trial = run_trial(spec, 0);

  ExperimentReport report;
  report.spec = spec;
  report.trials.push_back(trial.record);
  report.aggregates = aggregate(report.trials);
  report.trace = trial.trace;

  if (wants_json(o)) emit(o, "report.json", report_to_json(report).dump(2) + "\n");
  emit(o, "trace.csv", trace_to_csv(trial.trace));

  const TrialRecord& r = trial.record;
  out << "status " << to_string(r.status) << ", iterations " << r.iterations << ", alpha "
      << format_double(r.alpha) << ", snr " << format_double(r.snr) << " dB\n";
  if (r.status == SolverStatus::diverged) {
    err << "solve diverged: " << trial.trace.message << "\n";
    return kExitFailed;
  }
  return kExitOk;
}

int cmd_experiment(const CommonOptions& o, std::ostream& out) {
  const json doc = resolve_spec(o);
  if (doc.contains("sweep")) {
    const SweepReport sweep = run_sweep(sweep_grid_from_json(doc), o.jobs);
    if (wants_json(o)) emit(o, "sweep.json", sweep_to_json(sweep).dump(2) + "\n");
    if (wants_csv(o)) {
      if (sweep.grid.row_labels.empty()) {
        emit(o, "sweep.csv", sweep_table_csv(sweep, SweepMetric::snr));
      } else {
        emit(o, "sweep_snr.csv", sweep_table_csv(sweep, SweepMetric::snr));
        emit(o, "sweep_iterations.csv", sweep_table_csv(sweep, SweepMetric::iterations));
      }
    }
    out << sweep_table_csv(sweep, SweepMetric::snr);
    return kExitOk;
  }

  const ExperimentReport report = run_experiment(spec_from_json(doc), o.jobs);
  if (wants_json(o)) emit(o, "report.json", report_to_json(report).dump(2) + "\n");
  if (wants_csv(o)) {
    emit(o, "trials.csv", trials_to_csv(report));
    if (report.trace) emit(o, "trace.csv", trace_to_csv(*report.trace));
  }
  const auto& a = report.aggregates;
  out << "median snr " << format_double(a.median_snr) << " dB over " << a.success_count
      << " trials, " << a.diverged_count << " diverged\n";
  return kExitOk;
}

int cmd_rate_study(const CommonOptions& o, std::ostream& out) {
  const json doc = resolve_spec(o);
  std::vector<double> levels = {50.0, 40.0, 30.0, 20.0};
  AlphaRule rule = AlphaRule::a_priori;
  double constant = 1.0;
  if (doc.contains("rate_study")) {
    const json& rs = doc.at("rate_study");
    try {
      if (rs.contains("noise_db")) levels = rs.at("noise_db").get<std::vector<double>>();
      if (rs.contains("alpha_rule")) rule = parse_alpha_rule(rs.at("alpha_rule").get<std::string>());
      if (rs.contains("apriori_constant")) constant = rs.at("apriori_constant").get<double>();
    } catch (const json::exception& e) {
      throw SpecError(std::string("malformed rate_study section: ") + e.what());
    } catch (const DomainError& e) {
      throw SpecError(e.what());
    }
  }
  const RateStudyReport report = rate_study(spec_from_json(doc), levels, rule, constant, o.jobs);
  if (wants_json(o)) emit(o, "rate_study.json", rate_study_to_json(report).dump(2) + "\n");
  if (wants_csv(o)) emit(o, "rate_study.csv", rate_study_to_csv(report));
  out << "slope " << format_double(report.fit.slope) << " (95% CI "
      << format_double(report.fit.ci_low) << ", " << format_double(report.fit.ci_high)
      << ") over " << report.fit.points << " noise levels\n";
  return kExitOk;
}

int cmd_check_jacobian(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const ExperimentSpec spec = spec_from_json(resolve_spec(o));
  const Instance inst = generate_instance(spec, 0);
  return run_jacobian_check(inst.model, spec.seed, o.samples, out, err);
}

int cmd_check_direction(const CommonOptions& o, std::ostream& out, std::ostream& err) {
  const ExperimentSpec spec = spec_from_json(resolve_spec(o));
  const Instance inst = generate_instance(spec, 0);
  CounterRng noise_rng(spec.seed, 0, StreamPurpose::noise);
  const NoisyData data = add_noise_db(inst.y_clean, spec.noise_db, noise_rng);
  const SolverConfig cfg = spec.solver_config(spec.alpha.value_or(spec.discrepancy.alpha0));

  CounterRng probe(spec.seed, 0, StreamPurpose::probe);
  DirectionCheck worst;
  for (int s = 0; s < o.samples; ++s) {
    Signal x(spec.n);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = 2.0 * probe.uniform() - 1.0;
    const DirectionCheck c = check_direction(inst.model, x, data.y_obs, cfg);
    if (c.max_abs_error >= worst.max_abs_error) worst = c;
  }
  out << "max abs error " << format_double(worst.max_abs_error) << " over "
      << o.samples * spec.n << " components\n";
  if (worst.max_abs_error <= kDirectionTolerance) return kExitOk;
  err << "direction check failed at component " << worst.worst_component << "\n";
  return kExitFailed;
}

}  // namespace

int run_jacobian_check(const ForwardModel& model, std::uint64_t seed, int samples,
                       std::ostream& out, std::ostream& err) {
  CounterRng rng(seed, 0, StreamPurpose::probe);
  const JacobianCheck c = check_jacobian(model, rng, samples, kJacobianStep, 1.0);
  out << "max relative error " << format_double(c.max_relative_error) << ", adjoint error "
      << format_double(c.max_adjoint_error) << " over " << c.samples << " samples\n";
  if (c.max_relative_error <= kJacobianTolerance) return kExitOk;
  err << "jacobian check failed: relative error " << format_double(c.max_relative_error)
      << "\nx = " << sample_text(c.worst_x) << "\nv = " << sample_text(c.worst_v) << "\n";
  return kExitFailed;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse recovery for nonlinear compressive sensing models"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--spec", opts.spec_path, "JSON spec file (defaults apply when omitted)");
    sub->add_option("--out", opts.out_dir, "Output directory");
    sub->add_option("--format", opts.format, "Report format")
        ->check(CLI::IsMember({"json", "csv", "both"}));
    sub->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", opts.seed, "Master seed, overrides the spec file");
    sub->add_option("--set", opts.overrides, "Override KEY=VALUE with a dotted key")
        ->allow_extra_args(false);
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "Solve one benchmark instance");
  CLI::App* exp_cmd = app.add_subcommand("experiment", "Run all trials, or the sweep in the spec file");
  CLI::App* rate_cmd = app.add_subcommand("rate-study", "Error against noise level with slope fit");
  CLI::App* jac_cmd = app.add_subcommand("check-jacobian", "Compare Jacobian with differences");
  CLI::App* dir_cmd = app.add_subcommand("check-direction", "Compare direction with grid search");
  for (CLI::App* sub : {solve_cmd, exp_cmd, rate_cmd, jac_cmd, dir_cmd}) add_common(sub);
  for (CLI::App* sub : {jac_cmd, dir_cmd}) {
    sub->add_option("--samples", opts.samples, "Random points to test")
        ->check(CLI::PositiveNumber);
  }

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(opts, out, err);
    if (exp_cmd->parsed()) return cmd_experiment(opts, out);
    if (rate_cmd->parsed()) return cmd_rate_study(opts, out);
    if (jac_cmd->parsed()) return cmd_check_jacobian(opts, out, err);
    return cmd_check_direction(opts, out, err);
  } catch (const SpecError& e) {
    err << e.what() << "\n";
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitUsage;
}

}  // namespace nlsparse
