#include "nlsparse/solver.hpp"

#include <cmath>
#include <limits>

namespace nlsparse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Quantities at x that every step needs: the residual and the misfit
// gradient F'(x)^T (F(x) - y).
struct Linearization {
  Signal residual;
  double residual_norm = 0.0;
  Signal misfit_gradient;
};

void check_dims(const ForwardModel& model, const Signal& x, const Signal& y_obs) {
  if (x.size() != model.input_dim()) {
    throw DomainError("iterate has length " + std::to_string(x.size()) + ", model expects " +
                      std::to_string(model.input_dim()));
  }
  if (y_obs.size() != model.output_dim()) {
    throw DomainError("data has length " + std::to_string(y_obs.size()) + ", model expects " +
                      std::to_string(model.output_dim()));
  }
}

Linearization linearize(const ForwardModel& model, const Signal& x, const Signal& y_obs) {
  Linearization lin;
  lin.residual = model.apply(x) - y_obs;
  lin.residual_norm = lin.residual.norm();
  lin.misfit_gradient = model.jacobian_adjoint_apply(x, lin.residual);
  return lin;
}

double penalty(const Signal& x, const SolverConfig& cfg) {
  return cfg.reg.alpha * x.lpNorm<1>() - cfg.reg.beta() * x.norm();
}

// Closed-form minimizer of <g, z> + lambda/2 |z|^2 + alpha |z|_1 for a
// thresholding argument u = -g / lambda.
Signal threshold_direction(const Signal& x, const Linearization& lin, const SolverConfig& cfg) {
  const double scale = cfg.reg.beta() / (cfg.lambda * x.norm()) + 1.0;
  const Signal argument = scale * x - lin.misfit_gradient / cfg.lambda;
  return soft_threshold(argument, cfg.reg.alpha / cfg.lambda);
}

// Sum over components of h_i(x_i) - h_i(z_i) with
// h_i(t) = g_i t + lambda/2 t^2 + alpha |t|. The subproblem separates, so each
// term is nonnegative when z_i is the componentwise minimizer.
double separable_gap(const Signal& gradient, const Signal& x, const Signal& z,
                     const SolverConfig& cfg) {
  const double alpha = cfg.reg.alpha;
  const double lambda = cfg.lambda;
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double g = gradient[i];
    const double hx = g * x[i] + 0.5 * lambda * x[i] * x[i] + alpha * std::abs(x[i]);
    const double hz = g * z[i] + 0.5 * lambda * z[i] * z[i] + alpha * std::abs(z[i]);
    const double term = hx - hz;
    if (term < 0.0) {
      const double scale = std::abs(g * x[i]) + std::abs(g * z[i]) + lambda * x[i] * x[i] +
                           lambda * z[i] * z[i] + alpha * (std::abs(x[i]) + std::abs(z[i]));
      if (-term > 1e-10 * (1.0 + scale)) {
        throw std::logic_error("stationarity gap component is negative beyond round-off");
      }
      continue;
    }
    total += term;
  }
  return total;
}

Signal smooth_gradient(const Signal& x, const Linearization& lin, const SolverConfig& cfg) {
  return lin.misfit_gradient - cfg.lambda * x - (cfg.reg.beta() / x.norm()) * x;
}

void require_nonzero(const Signal& x, const char* what) {
  if (is_zero(x)) {
    throw PreconditionError(std::string(what) +
                            " is undefined at x = 0; use zero_iterate_step instead");
  }
}

}  // namespace

void SolverConfig::validate() const {
  reg.validate();
  if (reg.q != 2.0) throw DomainError("the solver supports q = 2 only");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be positive");
  if (step.kind == StepRule::Kind::fixed) {
    if (!(step.step > 0.0) || !std::isfinite(step.step)) {
      throw DomainError("fixed step must be positive");
    }
  } else if (step.grid_points < 1) {
    throw DomainError("line search needs at least one grid interval");
  }
  if (max_iters < 1) throw DomainError("max_iters must be >= 1");
  if (grad_tol && !(*grad_tol >= 0.0)) throw DomainError("grad_tol must be nonnegative");
  if (!(divergence_guard > 0.0)) throw DomainError("divergence_guard must be positive");
}

std::string to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::converged:
      return "converged";
    case SolverStatus::max_iters:
      return "max_iters";
    case SolverStatus::diverged:
      return "diverged";
  }
  return "unknown";
}

double smooth_part(const ForwardModel& model, const Signal& x, const Signal& y_obs,
                   const SolverConfig& cfg) {
  check_dims(model, x, y_obs);
  const double misfit = 0.5 * (model.apply(x) - y_obs).squaredNorm();
  return misfit - 0.5 * cfg.lambda * x.squaredNorm() - cfg.reg.beta() * x.norm();
}

double convex_part(const Signal& x, const SolverConfig& cfg) {
  return 0.5 * cfg.lambda * x.squaredNorm() + cfg.reg.alpha * x.lpNorm<1>();
}

double full_objective(const ForwardModel& model, const Signal& x, const Signal& y_obs,
                      const SolverConfig& cfg) {
  check_dims(model, x, y_obs);
  return 0.5 * (model.apply(x) - y_obs).squaredNorm() + penalty(x, cfg);
}

Signal g_gradient(const ForwardModel& model, const Signal& x, const Signal& y_obs,
                  const SolverConfig& cfg) {
  check_dims(model, x, y_obs);
  require_nonzero(x, "G'(x)");
  return smooth_gradient(x, linearize(model, x, y_obs), cfg);
}

Signal descent_direction(const ForwardModel& model, const Signal& x, const Signal& y_obs,
                         const SolverConfig& cfg) {
  check_dims(model, x, y_obs);
  require_nonzero(x, "descent direction");
  return threshold_direction(x, linearize(model, x, y_obs), cfg);
}

double line_search(const ForwardModel& model, const Signal& x, const Signal& z,
                   const Signal& y_obs, const SolverConfig& cfg) {
  if (x.size() != z.size()) throw DomainError("line search endpoints differ in length");
  if (cfg.step.kind == StepRule::Kind::fixed) return cfg.step.step;

  const int n = cfg.step.grid_points;
  const Signal direction = z - x;
  double best_step = kNaN;
  double best_value = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= n; ++j) {
    const double s = static_cast<double>(j) / n;
    double value;
    try {
      value = full_objective(model, x + s * direction, y_obs, cfg);
    } catch (const DivergedError&) {
      continue;
    }
    if (!std::isfinite(value)) continue;
    // <= moves ties toward the larger step.
    if (value <= best_value) {
      best_value = value;
      best_step = s;
    }
  }
  if (std::isnan(best_step)) throw DivergedError("objective is non-finite along the segment");
  return best_step;
}

Signal zero_iterate_step(const ForwardModel& model, const Signal& y_obs, const SolverConfig& cfg) {
  const Signal zero = Signal::Zero(model.input_dim());
  check_dims(model, zero, y_obs);
  const Linearization lin = linearize(model, zero, y_obs);
  return soft_threshold(Signal(-lin.misfit_gradient / cfg.lambda), cfg.reg.alpha / cfg.lambda);
}

double stationarity_gap(const ForwardModel& model, const Signal& x, const Signal& y_obs,
                        const SolverConfig& cfg) {
  check_dims(model, x, y_obs);
  require_nonzero(x, "stationarity gap");
  const Linearization lin = linearize(model, x, y_obs);
  const Signal z = threshold_direction(x, lin, cfg);
  return separable_gap(smooth_gradient(x, lin, cfg), x, z, cfg);
}

SolveResult solve(const ForwardModel& model, const Signal& y_obs, const Signal& x0,
                  const SolverConfig& cfg) {
  cfg.validate();
  check_dims(model, x0, y_obs);
  require_finite(x0, "initial iterate");
  require_finite(y_obs, "observed data");

  SolveResult out;
  SolverTrace& trace = out.trace;
  Signal x = x0;

  auto finish = [&](SolverStatus status, std::string message) {
    trace.status = status;
    trace.message = std::move(message);
    trace.final_iterate = x;
    out.x = x;
    return out;
  };
  auto push_diverged = [&](int k) {
    IterationRecord rec;
    rec.k = k;
    rec.objective = kNaN;
    rec.residual = kNaN;
    rec.gap = kNaN;
    rec.support = support_size(x);
    trace.records.push_back(rec);
  };

  double tol = 0.0;
  for (int k = 0;; ++k) {
    if (!x.allFinite() || x.norm() > cfg.divergence_guard) {
      push_diverged(k);
      return finish(SolverStatus::diverged, "iterate left the finite range");
    }

    Linearization lin;
    try {
      lin = linearize(model, x, y_obs);
    } catch (const DivergedError& e) {
      push_diverged(k);
      return finish(SolverStatus::diverged, e.what());
    }

    IterationRecord rec;
    rec.k = k;
    rec.residual = lin.residual_norm;
    rec.objective = 0.5 * lin.residual_norm * lin.residual_norm + penalty(x, cfg);
    rec.support = support_size(x);
    if (!std::isfinite(rec.objective) || rec.objective > cfg.divergence_guard) {
      rec.gap = kNaN;
      trace.records.push_back(rec);
      return finish(SolverStatus::diverged, "objective exceeded the divergence guard");
    }
    if (k == 0) tol = cfg.grad_tol.value_or(1e-8 * (1.0 + std::abs(rec.objective)));

    const bool at_zero = is_zero(x);
    Signal z;
    if (at_zero) {
      z = soft_threshold(Signal(-lin.misfit_gradient / cfg.lambda), cfg.reg.alpha / cfg.lambda);
      rec.gap = separable_gap(lin.misfit_gradient, x, z, cfg);
    } else {
      z = threshold_direction(x, lin, cfg);
      rec.gap = separable_gap(smooth_gradient(x, lin, cfg), x, z, cfg);
    }

    if (rec.gap <= tol) {
      trace.records.push_back(rec);
      return finish(SolverStatus::converged, at_zero ? "zero iterate is stationary" : "");
    }
    if (k == cfg.max_iters) {
      trace.records.push_back(rec);
      return finish(SolverStatus::max_iters, "");
    }

    double s = 1.0;
    if (!at_zero) {
      try {
        s = line_search(model, x, z, y_obs, cfg);
      } catch (const DivergedError& e) {
        trace.records.push_back(rec);
        return finish(SolverStatus::diverged, e.what());
      }
    }
    rec.step = s;
    trace.records.push_back(rec);
    x = at_zero ? z : Signal(x + s * (z - x));
  }
}

}  // namespace nlsparse
