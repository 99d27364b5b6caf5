#include "nlsparse/verify.hpp"

#include <algorithm>
#include <cmath>

namespace nlsparse {

namespace {

Signal uniform_box(CounterRng& rng, Eigen::Index dim, double box) {
  Signal v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = box * (2.0 * rng.uniform() - 1.0);
  return v;
}

}  // namespace

JacobianCheck check_jacobian(const ForwardModel& model, CounterRng& rng, int samples, double h,
                             double box) {
  JacobianCheck out;
  out.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const Signal x = uniform_box(rng, model.input_dim(), box);
    const Signal v = uniform_box(rng, model.input_dim(), 1.0);
    const Signal w = uniform_box(rng, model.output_dim(), 1.0);

    const Signal jv = model.jacobian_apply(x, v);
    const Signal fd = finite_difference_jacobian_apply(model, x, v, h);
    const double rel = (fd - jv).norm() / std::max(jv.norm(), 1e-300);
    if (rel > out.max_relative_error || out.worst_x.size() == 0) {
      out.max_relative_error = std::max(rel, out.max_relative_error);
      out.worst_x = x;
      out.worst_v = v;
    }

    const Signal jtw = model.jacobian_adjoint_apply(x, w);
    const double lhs = jv.dot(w);
    const double rhs = v.dot(jtw);
    const double scale = jv.norm() * w.norm() + v.norm() * jtw.norm();
    out.max_adjoint_error = std::max(out.max_adjoint_error, std::abs(lhs - rhs) / scale);
  }
  return out;
}

double brute_force_scalar_subproblem(double g, double lambda, double alpha) {
  auto h = [&](double t) { return g * t + 0.5 * lambda * t * t + alpha * std::abs(t); };
  // h(t) >= h(0) whenever |t| > 2|g|/lambda, so the minimizer lies inside.
  const double radius = 2.0 * std::abs(g) / lambda + 1e-12;
  constexpr int kGrid = 4000;
  double best_t = 0.0;
  double best_h = h(0.0);
  for (int i = 0; i <= kGrid; ++i) {
    const double t = -radius + 2.0 * radius * i / kGrid;
    if (h(t) < best_h) {
      best_h = h(t);
      best_t = t;
    }
  }
  // Golden-section search on the bracketing cell; h is convex so the bracket
  // around the best grid point contains the minimizer.
  const double cell = 2.0 * radius / kGrid;
  double lo = best_t - cell;
  double hi = best_t + cell;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - ratio * (hi - lo);
  double b = lo + ratio * (hi - lo);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(best_t)); ++it) {
    if (h(a) < h(b)) {
      hi = b;
    } else {
      lo = a;
    }
    a = hi - ratio * (hi - lo);
    b = lo + ratio * (hi - lo);
  }
  const double refined = 0.5 * (lo + hi);
  // The kink at zero is a common minimizer; keep whichever value is lower.
  return h(0.0) <= h(refined) ? 0.0 : refined;
}

DirectionCheck check_direction(const ForwardModel& model, const Signal& x, const Signal& y_obs,
                               const SolverConfig& cfg) {
  const Signal grad = g_gradient(model, x, y_obs, cfg);
  const Signal z = descent_direction(model, x, y_obs, cfg);
  DirectionCheck out;
  out.components = x.size();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double oracle = brute_force_scalar_subproblem(grad[i], cfg.lambda, cfg.reg.alpha);
    const double err = std::abs(oracle - z[i]);
    if (err > out.max_abs_error || out.worst_component < 0) {
      out.max_abs_error = std::max(err, out.max_abs_error);
      out.worst_component = i;
    }
  }
  return out;
}

}  // namespace nlsparse
