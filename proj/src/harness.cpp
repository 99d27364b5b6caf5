#include "nlsparse/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

namespace nlsparse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(0..count-1) on up to `jobs` threads. Each index is handled exactly
// once; results must be written to per-index slots by fn.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Linear-interpolated quantile of sorted data (type 7).
double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return kNaN;
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

TrialOutcome run_trial_impl(const ExperimentSpec& spec, int trial_index,
                            std::optional<double> apriori_constant) {
  spec.validate();
  Instance inst = generate_instance(spec, trial_index);
  CounterRng noise_rng(spec.seed, static_cast<std::uint64_t>(trial_index), StreamPurpose::noise);
  const NoisyData data = add_noise_db(inst.y_clean, spec.noise_db, noise_rng);

  TrialOutcome out;
  TrialRecord& rec = out.record;
  rec.trial = trial_index;
  rec.seed = spec.seed;
  rec.delta = data.delta;
  rec.x_true = inst.x_true;

  const Signal x0 = spec.initial_iterate();
  Signal x_star;
  if (apriori_constant) {
    rec.alpha = a_priori_alpha(data.delta, 2.0, *apriori_constant);
  } else if (spec.alpha) {
    rec.alpha = *spec.alpha;
  }

  if (apriori_constant || spec.alpha) {
    SolveResult result = solve(inst.model, data.y_obs, x0, spec.solver_config(rec.alpha));
    x_star = std::move(result.x);
    out.trace = std::move(result.trace);
  } else {
    DiscrepancyConfig disc = spec.discrepancy;
    disc.delta = data.delta;
    try {
      AlphaSelection sel =
          select_alpha(inst.model, data.y_obs, x0, spec.solver_config(disc.alpha0), disc);
      rec.alpha = sel.alpha;
      rec.alpha_outcome = sel.outcome;
      rec.alpha_trials = sel.trials;
      x_star = std::move(sel.solution);
      out.trace = std::move(sel.trace);
    } catch (const DivergedError& e) {
      rec.alpha = kNaN;
      out.trace.status = SolverStatus::diverged;
      out.trace.message = e.what();
      out.trace.final_iterate = x0;
      x_star = x0;
    }
  }

  rec.status = out.trace.status;
  rec.iterations = out.trace.iterations();
  rec.x_star = x_star;
  rec.support = support_size(x_star);
  if (rec.status == SolverStatus::diverged) {
    rec.snr = kNaN;
    rec.relative_error = kNaN;
    rec.residual = kNaN;
    rec.recall = {kNaN, kNaN};
  } else {
    rec.snr = snr_db(x_star, inst.x_true);
    rec.relative_error = relative_error(x_star, inst.x_true);
    rec.residual = out.trace.records.back().residual;
    rec.recall = signed_recall(x_star, inst.x_true);
  }
  return out;
}

}  // namespace

int ExperimentSpec::m() const {
  return static_cast<int>(std::lround(m_ratio * n));
}

int ExperimentSpec::sparsity() const {
  return static_cast<int>(std::lround(sparsity_ratio * m()));
}

void ExperimentSpec::validate() const {
  if (n < 1) throw DomainError("n must be positive");
  if (!(m_ratio > 0.0 && m_ratio <= 1.0)) throw DomainError("m_ratio must lie in (0, 1]");
  if (!(sparsity_ratio > 0.0 && sparsity_ratio <= 1.0)) {
    throw DomainError("sparsity_ratio must lie in (0, 1]");
  }
  if (m() < 1) throw DomainError("m = round(m_ratio * n) must be >= 1");
  if (sparsity() < 1) throw DomainError("s = round(sparsity_ratio * m) must be >= 1");
  if (sparsity() > n) throw DomainError("sparsity exceeds n");
  if (c < 1 || d < 1) throw DomainError("c and d must be >= 1");
  if (!(matrix_scale > 0.0)) throw DomainError("matrix_scale must be positive");
  if (!(amplitude > 0.0)) throw DomainError("amplitude must be positive");
  if (noise_db && !std::isfinite(*noise_db)) throw DomainError("noise_db must be finite");
  if (alpha && !(*alpha > 0.0)) throw DomainError("alpha must be positive");
  if (trials < 1) throw DomainError("trials must be >= 1");
  if (!std::isfinite(x0_scale)) throw DomainError("x0_scale must be finite");
  discrepancy.validate();
  solver_config(alpha.value_or(discrepancy.alpha0)).validate();
}

SolverConfig ExperimentSpec::solver_config(double alpha_value) const {
  SolverConfig cfg;
  cfg.reg.alpha = alpha_value;
  cfg.reg.eta = eta;
  cfg.reg.q = 2.0;
  cfg.lambda = lambda;
  cfg.step = step;
  cfg.max_iters = max_iters;
  cfg.grad_tol = grad_tol;
  cfg.divergence_guard = divergence_guard;
  return cfg;
}

Signal ExperimentSpec::initial_iterate() const { return Signal::Constant(n, x0_scale); }

Instance generate_instance(const ExperimentSpec& spec, int trial_index) {
  spec.validate();
  const auto trial = static_cast<std::uint64_t>(trial_index);
  const int m = spec.m();
  const int n = spec.n;

  CounterRng matrix_rng(spec.seed, trial, StreamPurpose::matrix);
  Matrix a(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = matrix_rng.normal();
  }

  CounterRng signal_rng(spec.seed, trial, StreamPurpose::signal);
  Signal x_true = Signal::Zero(n);
  const auto positions = signal_rng.sample_without_replacement(
      static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(spec.sparsity()));
  for (const auto pos : positions) {
    x_true[static_cast<Eigen::Index>(pos)] = spec.amplitude * signal_rng.normal();
  }

  NonlinearCsModel model(rescale_matrix(a, spec.matrix_scale), spec.c, spec.d, spec.form);
  Signal y_clean = model.apply(x_true);
  return Instance{std::move(model), std::move(x_true), std::move(y_clean)};
}

NoisyData add_noise_db(const Signal& y_clean, std::optional<double> noise_db, CounterRng& rng) {
  require_finite(y_clean, "clean data");
  if (!noise_db) return {y_clean, 0.0};
  if (!std::isfinite(*noise_db)) throw DomainError("noise level must be finite");
  const double signal_norm = y_clean.norm();
  if (signal_norm == 0.0) throw DomainError("cannot set a noise level relative to zero data");

  Signal e(y_clean.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = rng.normal();
  const double target = signal_norm * std::pow(10.0, -*noise_db / 20.0);
  e *= target / e.norm();
  return {y_clean + e, e.norm()};
}

double snr_db(const Signal& x_star, const Signal& x_true) {
  if (x_star.size() != x_true.size()) throw DomainError("snr_db: length mismatch");
  const double reference = x_true.squaredNorm();
  if (reference == 0.0) throw DomainError("snr_db: reference signal is zero");
  const double ratio = (x_star - x_true).squaredNorm() / reference;
  if (ratio == 0.0) return kSnrCapDb;
  return std::min(-10.0 * std::log10(ratio), kSnrCapDb);
}

double relative_error(const Signal& x_star, const Signal& x_true) {
  if (x_star.size() != x_true.size()) throw DomainError("relative_error: length mismatch");
  const double reference = x_true.norm();
  if (reference == 0.0) throw DomainError("relative_error: reference signal is zero");
  return (x_star - x_true).norm() / reference;
}

SignedRecall signed_recall(const Signal& x_star, const Signal& x_true) {
  if (x_star.size() != x_true.size()) throw DomainError("signed_recall: length mismatch");
  int pos = 0, pos_hit = 0, neg = 0, neg_hit = 0;
  for (Eigen::Index i = 0; i < x_true.size(); ++i) {
    if (x_true[i] > 0.0) {
      ++pos;
      if (x_star[i] > 0.0) ++pos_hit;
    } else if (x_true[i] < 0.0) {
      ++neg;
      if (x_star[i] < 0.0) ++neg_hit;
    }
  }
  return {pos ? static_cast<double>(pos_hit) / pos : kNaN,
          neg ? static_cast<double>(neg_hit) / neg : kNaN};
}

TrialOutcome run_trial(const ExperimentSpec& spec, int trial_index) {
  return run_trial_impl(spec, trial_index, std::nullopt);
}

ExperimentAggregates aggregate(std::span<const TrialRecord> trials) {
  ExperimentAggregates agg;
  std::vector<double> snrs;
  std::vector<double> iterations;
  for (const auto& t : trials) {
    if (t.status == SolverStatus::diverged) {
      ++agg.diverged_count;
      continue;
    }
    ++agg.success_count;
    snrs.push_back(t.snr);
    iterations.push_back(static_cast<double>(t.iterations));
  }
  std::sort(snrs.begin(), snrs.end());
  agg.median_snr = quantile_sorted(snrs, 0.5);
  agg.snr_q1 = quantile_sorted(snrs, 0.25);
  agg.snr_q3 = quantile_sorted(snrs, 0.75);
  agg.mean_snr = snrs.empty() ? kNaN
                              : std::accumulate(snrs.begin(), snrs.end(), 0.0) /
                                    static_cast<double>(snrs.size());
  agg.median_iterations = iterations.empty() ? kNaN : median(iterations);
  return agg;
}

ExperimentReport run_experiment(const ExperimentSpec& spec, int jobs) {
  spec.validate();
  ExperimentReport report;
  report.spec = spec;
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(spec.trials));
  parallel_for(outcomes.size(), jobs, [&](std::size_t i) {
    outcomes[i] = run_trial(spec, static_cast<int>(i));
  });
  for (auto& o : outcomes) report.trials.push_back(std::move(o.record));
  report.trace = std::move(outcomes.front().trace);
  report.aggregates = aggregate(report.trials);
  return report;
}

const ExperimentReport& SweepReport::at(std::size_t row, std::size_t col) const {
  return cells.at(row * grid.col_labels.size() + col);
}

bool SweepReport::cell_diverged(std::size_t row, std::size_t col) const {
  const auto& agg = at(row, col).aggregates;
  return 2 * agg.diverged_count > agg.diverged_count + agg.success_count;
}

SweepReport run_sweep(const SweepGrid& grid, int jobs) {
  const std::size_t rows = std::max<std::size_t>(1, grid.row_labels.size());
  if (grid.cells.size() != rows * grid.col_labels.size()) {
    throw DomainError("sweep grid has " + std::to_string(grid.cells.size()) +
                      " cells for a " + std::to_string(rows) + "x" +
                      std::to_string(grid.col_labels.size()) + " layout");
  }
  for (const auto& spec : grid.cells) spec.validate();

  // Flatten (cell, trial) so all work shares one pool.
  std::vector<std::pair<std::size_t, int>> work;
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    for (int t = 0; t < grid.cells[c].trials; ++t) work.emplace_back(c, t);
  }
  std::vector<TrialOutcome> outcomes(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    outcomes[i] = run_trial(grid.cells[work[i].first], work[i].second);
  });

  SweepReport report;
  report.grid = grid;
  report.cells.resize(grid.cells.size());
  for (std::size_t c = 0; c < grid.cells.size(); ++c) report.cells[c].spec = grid.cells[c];
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto& cell = report.cells[work[i].first];
    if (work[i].second == 0) cell.trace = std::move(outcomes[i].trace);
    cell.trials.push_back(std::move(outcomes[i].record));
  }
  for (auto& cell : report.cells) cell.aggregates = aggregate(cell.trials);
  return report;
}

std::string to_string(AlphaRule rule) {
  return rule == AlphaRule::a_priori ? "a-priori" : "discrepancy";
}

AlphaRule parse_alpha_rule(const std::string& name) {
  if (name == "a-priori" || name == "a_priori") return AlphaRule::a_priori;
  if (name == "discrepancy") return AlphaRule::discrepancy;
  throw DomainError("unknown alpha rule '" + name + "'");
}

SlopeFit fit_loglog_slope(std::span<const double> deltas, std::span<const double> errors) {
  if (deltas.size() != errors.size()) throw DomainError("fit: length mismatch");
  if (deltas.size() < 3) throw DomainError("fit: need at least three points");
  const std::size_t n = deltas.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(deltas[i] > 0.0) || !(errors[i] > 0.0)) {
      throw DomainError("fit: deltas and errors must be positive");
    }
    lx[i] = std::log(deltas[i]);
    ly[i] = std::log(errors[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw DomainError("fit: all deltas are equal");

  SlopeFit fit;
  fit.points = static_cast<int>(n);
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    sse += r * r;
  }
  const double dof = static_cast<double>(n - 2);
  fit.std_error = std::sqrt(sse / dof / sxx);
  const boost::math::students_t dist(dof);
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  fit.ci_low = fit.slope - t * fit.std_error;
  fit.ci_high = fit.slope + t * fit.std_error;
  return fit;
}

RateStudyReport rate_study(const ExperimentSpec& base, std::span<const double> noise_db,
                           AlphaRule rule, double apriori_constant, int jobs) {
  base.validate();
  if (noise_db.size() < 3) throw DomainError("rate study needs at least three noise levels");
  for (double db : noise_db) {
    if (!std::isfinite(db)) throw DomainError("rate study noise levels must be finite");
  }

  RateStudyReport report;
  report.rule = rule;
  report.apriori_constant = apriori_constant;

  const std::size_t levels = noise_db.size();
  const auto trials = static_cast<std::size_t>(base.trials);
  std::vector<TrialOutcome> outcomes(levels * trials);
  parallel_for(outcomes.size(), jobs, [&](std::size_t i) {
    ExperimentSpec spec = base;
    spec.noise_db = noise_db[i / trials];
    std::optional<double> constant;
    if (rule == AlphaRule::a_priori) {
      constant = apriori_constant;
    } else {
      spec.alpha.reset();
    }
    outcomes[i] = run_trial_impl(spec, static_cast<int>(i % trials), constant);
  });

  std::vector<double> fit_deltas, fit_errors;
  for (std::size_t level = 0; level < levels; ++level) {
    RatePoint point;
    point.noise_db = noise_db[level];
    std::vector<double> deltas, errors;
    for (std::size_t t = 0; t < trials; ++t) {
      const TrialRecord& rec = outcomes[level * trials + t].record;
      if (rec.status == SolverStatus::diverged) {
        ++point.diverged;
        continue;
      }
      ++point.used;
      deltas.push_back(rec.delta);
      errors.push_back((rec.x_star - rec.x_true).norm());
    }
    point.median_delta = deltas.empty() ? kNaN : median(deltas);
    point.median_error = errors.empty() ? kNaN : median(errors);
    if (point.used == 0) {
      report.excluded_noise_db.push_back(point.noise_db);
    } else {
      fit_deltas.push_back(point.median_delta);
      fit_errors.push_back(point.median_error);
    }
    report.points.push_back(point);
  }
  report.fit = fit_loglog_slope(fit_deltas, fit_errors);
  return report;
}

}  // namespace nlsparse
