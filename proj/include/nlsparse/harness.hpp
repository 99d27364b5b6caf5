#ifndef NLSPARSE_HARNESS_HPP_
#define NLSPARSE_HARNESS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlsparse/operators.hpp"
#include "nlsparse/rng.hpp"
#include "nlsparse/solver.hpp"
#include "nlsparse/tuning.hpp"

namespace nlsparse {

/// Reported in place of +infinity when the recovered signal is exact.
inline constexpr double kSnrCapDb = 310.0;

/// Parameters of one synthetic benchmark cell: instance generation, noise,
/// and the solver settings applied to every trial.
struct ExperimentSpec {
  int n = 200;
  double m_ratio = 0.4;
  double sparsity_ratio = 0.2;
  int c = 2;
  int d = 3;
  NonlinearForm form = NonlinearForm::additive;
  /// Gaussian entries of A are multiplied by this before use.
  double matrix_scale = 0.05;
  /// Nonzero entries of x_true are amplitude * N(0, 1).
  double amplitude = 0.5;
  /// Signal-to-noise ratio of the data in dB; nullopt means noise free.
  std::optional<double> noise_db = 30.0;

  double eta = 1.0;
  double lambda = 4.0;
  StepRule step = StepRule::fixed(1.0);
  /// Fixed alpha, or nullopt to pick alpha by the discrepancy principle.
  std::optional<double> alpha = 0.125;
  int max_iters = 500;
  std::optional<double> grad_tol;
  double divergence_guard = 1e12;
  /// Initial iterate x0 = x0_scale * ones(n).
  double x0_scale = 1e-6;

  /// alpha0, tau and max_halvings for the discrepancy search (delta is
  /// filled in per trial from the realized noise).
  DiscrepancyConfig discrepancy;

  std::uint64_t seed = 1;
  int trials = 10;

  int m() const;
  int sparsity() const;
  void validate() const;
  SolverConfig solver_config(double alpha_value) const;
  Signal initial_iterate() const;
};

struct Instance {
  NonlinearCsModel model;
  Signal x_true;
  Signal y_clean;
};

/// Deterministic in (spec.seed, trial_index): A has i.i.d. N(0,1) entries
/// scaled by matrix_scale, x_true has sparsity() nonzeros at uniformly random
/// positions, y_clean = F(x_true).
Instance generate_instance(const ExperimentSpec& spec, int trial_index);

struct NoisyData {
  Signal y_obs;
  double delta = 0.0;  ///< |y_obs - y_clean|_2
};

/// Adds white Gaussian noise scaled so that 10 log10(|y|^2 / |e|^2) equals
/// noise_db. nullopt returns the clean data with delta = 0.
NoisyData add_noise_db(const Signal& y_clean, std::optional<double> noise_db, CounterRng& rng);

/// -10 log10(|x* - x†|^2 / |x†|^2), capped at kSnrCapDb.
double snr_db(const Signal& x_star, const Signal& x_true);

/// |x* - x†|_2 / |x†|_2.
double relative_error(const Signal& x_star, const Signal& x_true);

/// Fraction of positive (negative) true spikes recovered with the right sign.
/// NaN when x_true has no spikes of that sign.
struct SignedRecall {
  double positive = 0.0;
  double negative = 0.0;
};

SignedRecall signed_recall(const Signal& x_star, const Signal& x_true);

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  std::optional<DiscrepancyOutcome> alpha_outcome;
  std::vector<AlphaTrial> alpha_trials;
  double snr = 0.0;
  double relative_error = 0.0;
  int iterations = 0;
  SolverStatus status = SolverStatus::max_iters;
  Eigen::Index support = 0;
  double residual = 0.0;
  double delta = 0.0;
  SignedRecall recall;
  Signal x_star;
  Signal x_true;
};

struct TrialOutcome {
  TrialRecord record;
  SolverTrace trace;
};

/// Generates instance and noise for one trial and solves it. Solver failures
/// land in the record's status; only invalid specs throw.
TrialOutcome run_trial(const ExperimentSpec& spec, int trial_index);

struct ExperimentAggregates {
  double median_snr = 0.0;  ///< over non-diverged trials; NaN if none
  double mean_snr = 0.0;
  double snr_q1 = 0.0;
  double snr_q3 = 0.0;
  double median_iterations = 0.0;
  int success_count = 0;  ///< trials that did not diverge
  int diverged_count = 0;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<TrialRecord> trials;
  ExperimentAggregates aggregates;
  /// Full iteration trace of trial 0.
  std::optional<SolverTrace> trace;
};

ExperimentAggregates aggregate(std::span<const TrialRecord> trials);

/// Runs spec.trials trials on up to `jobs` threads. The report does not
/// depend on `jobs`.
ExperimentReport run_experiment(const ExperimentSpec& spec, int jobs = 1);

/// A one- or two-dimensional grid of experiment cells, stored row-major.
/// A one-dimensional sweep has an empty row_key and a single row.
struct SweepGrid {
  std::string row_key;
  std::vector<std::string> row_labels;
  std::string col_key;
  std::vector<std::string> col_labels;
  std::vector<ExperimentSpec> cells;
};

struct SweepReport {
  SweepGrid grid;
  std::vector<ExperimentReport> cells;

  const ExperimentReport& at(std::size_t row, std::size_t col) const;
  /// A cell counts as divergent when more than half of its trials diverged.
  bool cell_diverged(std::size_t row, std::size_t col) const;
};

/// Runs every cell; a failing cell is recorded, never aborts the sweep.
SweepReport run_sweep(const SweepGrid& grid, int jobs = 1);

enum class AlphaRule { a_priori, discrepancy };

std::string to_string(AlphaRule rule);
AlphaRule parse_alpha_rule(const std::string& name);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;   ///< 95% Student-t interval
  double ci_high = 0.0;
  int points = 0;
};

/// Least-squares fit of log(error) = intercept + slope * log(delta).
SlopeFit fit_loglog_slope(std::span<const double> deltas, std::span<const double> errors);

struct RatePoint {
  double noise_db = 0.0;
  double median_delta = 0.0;
  double median_error = 0.0;
  int used = 0;
  int diverged = 0;
};

struct RateStudyReport {
  AlphaRule rule = AlphaRule::a_priori;
  double apriori_constant = 1.0;
  std::vector<RatePoint> points;
  SlopeFit fit;
  /// Noise levels left out of the fit because every trial diverged.
  std::vector<double> excluded_noise_db;
};

/// Solves base-spec trials at each noise level, alpha from the a-priori rule
/// alpha = constant * delta (q = 2) or the discrepancy search, and fits the
/// log-log slope of median |x* - x†|_2 against median delta. Needs at least
/// three finite noise levels.
RateStudyReport rate_study(const ExperimentSpec& base, std::span<const double> noise_db,
                           AlphaRule rule, double apriori_constant, int jobs = 1);

}  // namespace nlsparse

#endif  // NLSPARSE_HARNESS_HPP_
