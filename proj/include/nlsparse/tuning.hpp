#ifndef NLSPARSE_TUNING_HPP_
#define NLSPARSE_TUNING_HPP_

#include <vector>

#include "nlsparse/solver.hpp"

namespace nlsparse {

/// Halving search for alpha under the discrepancy band |F(x) - y| <= tau*delta.
struct DiscrepancyConfig {
  double alpha0 = 1.0;
  double tau = 1.1;
  /// Noise norm |y_obs - y_exact|.
  double delta = 0.0;
  /// Trials run at alpha0 / 2^j for j = 0..max_halvings.
  int max_halvings = 12;

  void validate() const;
};

enum class DiscrepancyOutcome {
  bracketed,                ///< residual crossed below tau*delta between two trials
  band_entered_immediately, ///< the first usable trial was already inside the band
  not_bracketed,            ///< halvings exhausted without entering the band
};

std::string to_string(DiscrepancyOutcome outcome);

struct AlphaTrial {
  double alpha = 0.0;
  double residual = 0.0;  ///< NaN when the solve diverged
  SolverStatus status = SolverStatus::max_iters;
  int iterations = 0;
};

struct AlphaSelection {
  double alpha = 0.0;
  Signal solution;
  SolverTrace trace;  ///< trace of the returned trial
  DiscrepancyOutcome outcome = DiscrepancyOutcome::not_bracketed;
  std::vector<AlphaTrial> trials;
};

/// Solves at alpha_j = alpha0 / 2^j, warm-starting each trial from the
/// previous usable solution, and stops at the first j whose residual is
/// <= tau*delta. Diverged trials are logged and skipped; throws
/// DivergedError when every trial diverges. solver_cfg.reg.alpha is ignored.
AlphaSelection select_alpha(const ForwardModel& model, const Signal& y_obs, const Signal& x0,
                            const SolverConfig& solver_cfg, const DiscrepancyConfig& disc);

/// A-priori choice alpha = constant * delta^(q-1).
double a_priori_alpha(double delta, double q, double constant);

}  // namespace nlsparse

#endif  // NLSPARSE_TUNING_HPP_
