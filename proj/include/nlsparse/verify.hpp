#ifndef NLSPARSE_VERIFY_HPP_
#define NLSPARSE_VERIFY_HPP_

#include "nlsparse/operators.hpp"
#include "nlsparse/rng.hpp"
#include "nlsparse/solver.hpp"

namespace nlsparse {

// Brute-force cross-checks used by the command line tool. They share no code
// with the closed-form paths they check.

struct JacobianCheck {
  double max_relative_error = 0.0;  ///< |J_fd v - J v| / max(|J v|, 1e-300)
  double max_adjoint_error = 0.0;   ///< |<Jv, w> - <v, J^T w>| / (|Jv||w| + |v||J^T w|)
  int samples = 0;
  Signal worst_x;
  Signal worst_v;
};

/// Draws `samples` points x, v, w with entries uniform in [-box, box] and
/// compares analytic Jacobian products against central differences with step h.
JacobianCheck check_jacobian(const ForwardModel& model, CounterRng& rng, int samples, double h,
                             double box);

/// argmin_t g t + lambda/2 t^2 + alpha |t| by a dense grid over the interval
/// that must contain the minimizer, followed by golden-section refinement.
double brute_force_scalar_subproblem(double g, double lambda, double alpha);

struct DirectionCheck {
  double max_abs_error = 0.0;
  Eigen::Index worst_component = -1;
  Eigen::Index components = 0;
};

/// Compares descent_direction(x) with the per-component brute-force minimizer
/// of <G'(x), z> + Phi(z).
DirectionCheck check_direction(const ForwardModel& model, const Signal& x, const Signal& y_obs,
                               const SolverConfig& cfg);

}  // namespace nlsparse

#endif  // NLSPARSE_VERIFY_HPP_
