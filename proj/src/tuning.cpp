#include "nlsparse/tuning.hpp"

#include <cmath>
#include <limits>

namespace nlsparse {

void DiscrepancyConfig::validate() const {
  if (!(alpha0 > 0.0)) throw DomainError("alpha0 must be positive");
  if (!(tau >= 1.0)) throw DomainError("tau must be >= 1");
  if (!(delta >= 0.0)) throw DomainError("delta must be nonnegative");
  if (max_halvings < 0) throw DomainError("max_halvings must be nonnegative");
}

std::string to_string(DiscrepancyOutcome outcome) {
  switch (outcome) {
    case DiscrepancyOutcome::bracketed:
      return "bracketed";
    case DiscrepancyOutcome::band_entered_immediately:
      return "band_entered_immediately";
    case DiscrepancyOutcome::not_bracketed:
      return "not_bracketed";
  }
  return "unknown";
}

AlphaSelection select_alpha(const ForwardModel& model, const Signal& y_obs, const Signal& x0,
                            const SolverConfig& solver_cfg, const DiscrepancyConfig& disc) {
  disc.validate();
  const double bound = disc.tau * disc.delta;

  AlphaSelection best;
  bool have_usable = false;
  Signal start = x0;
  SolverConfig cfg = solver_cfg;

  for (int j = 0; j <= disc.max_halvings; ++j) {
    cfg.reg.alpha = disc.alpha0 / std::ldexp(1.0, j);
    SolveResult result = solve(model, y_obs, start, cfg);

    AlphaTrial trial;
    trial.alpha = cfg.reg.alpha;
    trial.status = result.trace.status;
    trial.iterations = result.trace.iterations();
    if (trial.status == SolverStatus::diverged) {
      trial.residual = std::numeric_limits<double>::quiet_NaN();
      best.trials.push_back(trial);
      continue;
    }
    trial.residual = result.trace.records.back().residual;
    best.trials.push_back(trial);

    const bool inside = trial.residual <= bound;
    const bool first_usable = !have_usable;
    have_usable = true;
    best.alpha = trial.alpha;
    best.solution = result.x;
    best.trace = std::move(result.trace);
    if (inside) {
      best.outcome = first_usable ? DiscrepancyOutcome::band_entered_immediately
                                  : DiscrepancyOutcome::bracketed;
      return best;
    }
    start = best.solution;
  }

  if (!have_usable) throw DivergedError("every discrepancy trial diverged");
  best.outcome = DiscrepancyOutcome::not_bracketed;
  return best;
}

double a_priori_alpha(double delta, double q, double constant) {
  if (!(delta >= 0.0)) throw DomainError("delta must be nonnegative");
  if (!(q >= 1.0)) throw DomainError("q must be >= 1");
  if (!(constant > 0.0)) throw DomainError("a-priori constant must be positive");
  return constant * std::pow(delta, q - 1.0);
}

}  // namespace nlsparse
