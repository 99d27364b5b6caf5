#include "nlsparse/core.hpp"

#include <cmath>

namespace nlsparse {

void RegularizationParams::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw DomainError("alpha must be a finite nonnegative number");
  }
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw DomainError("eta must lie in [0, 1]");
  }
  if (!(q >= 1.0) || !std::isfinite(q)) {
    throw DomainError("q must be a finite number >= 1");
  }
}

bool all_finite(const Signal& x) { return x.allFinite(); }

void require_finite(const Signal& x, const char* what) {
  if (!x.allFinite()) {
    throw DomainError(std::string(what) + " has non-finite entries");
  }
}

bool is_zero(const Signal& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) return false;
  }
  return true;
}

Eigen::Index support_size(const Signal& x) {
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) ++count;
  }
  return count;
}

double regularizer(const Signal& x, const RegularizationParams& p) {
  p.validate();
  require_finite(x, "regularizer argument");
  const double l1 = x.lpNorm<1>();
  const double l2 = std::sqrt(x.squaredNorm());
  const double value = p.alpha * l1 - p.beta() * l2;
  // |x|_2 <= |x|_1 and beta <= alpha, so anything below zero is round-off.
  if (value < 0.0 && -value <= 1e-12 * p.alpha * l1) return 0.0;
  return value;
}

double objective(const Signal& x, double residual_norm, const RegularizationParams& p) {
  if (!(residual_norm >= 0.0)) {
    throw DomainError("residual norm must be nonnegative");
  }
  p.validate();
  return std::pow(residual_norm, p.q) / p.q + regularizer(x, p);
}

double soft_threshold(double t, double tau) {
  if (!(tau >= 0.0)) throw DomainError("threshold must be nonnegative");
  if (!std::isfinite(t) || !std::isfinite(tau)) {
    throw DomainError("soft threshold of a non-finite value");
  }
  if (t >= tau) return t - tau;
  if (t <= -tau) return t + tau;
  return 0.0;
}

Signal soft_threshold(const Signal& x, double tau) {
  Signal out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = soft_threshold(x[i], tau);
  return out;
}

Signal basis_vector(Eigen::Index dim, Eigen::Index i) {
  if (i < 0 || i >= dim) throw DomainError("basis index out of range");
  Signal e = Signal::Zero(dim);
  e[i] = 1.0;
  return e;
}

}  // namespace nlsparse
