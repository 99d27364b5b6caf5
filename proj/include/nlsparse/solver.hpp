#ifndef NLSPARSE_SOLVER_HPP_
#define NLSPARSE_SOLVER_HPP_

#include <optional>
#include <string>
#include <vector>

#include "nlsparse/core.hpp"
#include "nlsparse/operators.hpp"

namespace nlsparse {

/// How the step s in x + s (z - x) is chosen.
struct StepRule {
  enum class Kind { fixed, exact_line_search };

  Kind kind = Kind::fixed;
  double step = 1.0;    ///< used by Kind::fixed
  int grid_points = 64; ///< used by Kind::exact_line_search

  static StepRule fixed(double s) { return {Kind::fixed, s, 0}; }
  static StepRule line_search(int grid_points) {
    return {Kind::exact_line_search, 0.0, grid_points};
  }
};

/// Knobs of the soft-thresholding iteration for
///   min_x 1/2 |F(x) - y|^2 + alpha |x|_1 - beta |x|_2.
///
/// The objective is split as G + Phi with
///   G(x)   = 1/2 |F(x) - y|^2 - lambda/2 |x|^2 - beta |x|_2   (smooth away from 0)
///   Phi(x) = lambda/2 |x|^2 + alpha |x|_1                      (convex)
/// and lambda doubles as the inverse step of the thresholded update.
struct SolverConfig {
  RegularizationParams reg;
  double lambda = 4.0;
  StepRule step = StepRule::fixed(1.0);
  int max_iters = 500;
  /// Stop once the stationarity gap drops to this value. When unset the
  /// tolerance is 1e-8 * (1 + |J(x0)|).
  std::optional<double> grad_tol;
  /// Declare divergence when |x|_2 or J exceeds this.
  double divergence_guard = 1e12;

  /// Throws DomainError on lambda <= 0, a nonpositive fixed step, a
  /// nonpositive grid, max_iters < 1, or q != 2.
  void validate() const;
};

enum class SolverStatus { converged, max_iters, diverged };

std::string to_string(SolverStatus status);

struct IterationRecord {
  int k = 0;
  double objective = 0.0;
  double residual = 0.0;
  /// Stationarity gap at x^k. At a zero iterate this is the gap of the plain
  /// l1 linearization (beta term dropped), which vanishes iff the zero step
  /// returns 0.
  double gap = 0.0;
  Eigen::Index support = 0;
  /// Step taken from x^k to x^{k+1}; 0 on the final record.
  double step = 0.0;
};

struct SolverTrace {
  std::vector<IterationRecord> records;
  SolverStatus status = SolverStatus::max_iters;
  Signal final_iterate;
  std::string message;

  /// Number of updates performed (records minus the final state).
  int iterations() const { return records.empty() ? 0 : static_cast<int>(records.size()) - 1; }
};

struct SolveResult {
  Signal x;
  SolverTrace trace;
};

/// G(x) as defined on SolverConfig.
double smooth_part(const ForwardModel& model, const Signal& x, const Signal& y_obs,
                   const SolverConfig& cfg);

/// Phi(x) as defined on SolverConfig.
double convex_part(const Signal& x, const SolverConfig& cfg);

/// J(x) = 1/2 |F(x) - y|^2 + alpha |x|_1 - beta |x|_2.
double full_objective(const ForwardModel& model, const Signal& x, const Signal& y_obs,
                      const SolverConfig& cfg);

/// G'(x) = F'(x)^T (F(x) - y) - lambda x - beta x / |x|_2. Requires x != 0.
Signal g_gradient(const ForwardModel& model, const Signal& x, const Signal& y_obs,
                  const SolverConfig& cfg);

/// Minimizer of <G'(x), z> + Phi(z), in closed form:
///   z = S_{alpha/lambda}((beta / (lambda |x|_2) + 1) x - F'(x)^T (F(x) - y) / lambda).
/// Requires x != 0.
Signal descent_direction(const ForwardModel& model, const Signal& x, const Signal& y_obs,
                         const SolverConfig& cfg);

/// Step in [0, 1]. A fixed rule returns its constant; the grid rule evaluates
/// J at grid_points + 1 equispaced values and returns the minimizer, breaking
/// ties toward the larger step. Throws DivergedError if J is non-finite at
/// every grid point.
double line_search(const ForwardModel& model, const Signal& x, const Signal& z,
                   const Signal& y_obs, const SolverConfig& cfg);

/// One plain soft-thresholding step from the zero iterate:
///   S_{alpha/lambda}(-F'(0)^T (F(0) - y) / lambda).
Signal zero_iterate_step(const ForwardModel& model, const Signal& y_obs, const SolverConfig& cfg);

/// Psi(x) = <G'(x), x - z> + Phi(x) - Phi(z) with z = descent_direction(x).
/// Zero exactly at first-order stationary points. Requires x != 0.
double stationarity_gap(const ForwardModel& model, const Signal& x, const Signal& y_obs,
                        const SolverConfig& cfg);

/// Runs the two-branch iteration from x0: a plain soft-thresholding step while
/// the iterate is exactly zero, otherwise the thresholded direction followed by
/// the configured step rule. Stops on gap <= tolerance, max_iters, or
/// divergence; never throws for a diverging run, which is reported through the
/// trace status instead.
SolveResult solve(const ForwardModel& model, const Signal& y_obs, const Signal& x0,
                  const SolverConfig& cfg);

}  // namespace nlsparse

#endif  // NLSPARSE_SOLVER_HPP_
