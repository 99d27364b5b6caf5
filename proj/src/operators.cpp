#include "nlsparse/operators.hpp"

#include <cmath>

namespace nlsparse {

namespace {

// Integer power by repeated squaring; negative bases with even exponents stay
// real.
double ipow(double base, int exponent) {
  double result = 1.0;
  while (exponent > 0) {
    if (exponent & 1) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

Signal checked(Signal s, const char* what) {
  if (!s.allFinite()) throw DivergedError(std::string(what) + " produced non-finite values");
  return s;
}

}  // namespace

std::string to_string(NonlinearForm form) {
  return form == NonlinearForm::additive ? "additive" : "pure_power";
}

NonlinearForm parse_nonlinear_form(const std::string& name) {
  if (name == "additive") return NonlinearForm::additive;
  if (name == "pure_power") return NonlinearForm::pure_power;
  throw DomainError("unknown operator form '" + name + "'");
}

NonlinearCsModel::NonlinearCsModel(Matrix matrix, int c, int d, NonlinearForm form)
    : matrix_(std::move(matrix)), c_(c), d_(d), form_(form) {
  if (c_ < 1 || d_ < 1) throw DomainError("exponents c and d must be >= 1");
  if (matrix_.rows() < 1 || matrix_.cols() < 1) throw DomainError("empty measurement matrix");
  if (!matrix_.allFinite()) throw DomainError("measurement matrix has non-finite entries");
}

void NonlinearCsModel::check_input(const Signal& x, const char* what) const {
  if (x.size() != matrix_.cols()) {
    throw DomainError(std::string(what) + ": expected length " + std::to_string(matrix_.cols()) +
                      ", got " + std::to_string(x.size()));
  }
  require_finite(x, what);
}

Signal NonlinearCsModel::inner(const Signal& x) const {
  const bool add = form_ == NonlinearForm::additive;
  return x.unaryExpr([&](double t) { return (add ? t : 0.0) + ipow(t, d_); });
}

Signal NonlinearCsModel::inner_derivative(const Signal& x) const {
  const bool add = form_ == NonlinearForm::additive;
  return x.unaryExpr([&](double t) { return (add ? 1.0 : 0.0) + d_ * ipow(t, d_ - 1); });
}

Signal NonlinearCsModel::outer(const Signal& u) const {
  const bool add = form_ == NonlinearForm::additive;
  return u.unaryExpr([&](double t) { return (add ? t : 0.0) + ipow(t, c_); });
}

Signal NonlinearCsModel::outer_derivative(const Signal& u) const {
  const bool add = form_ == NonlinearForm::additive;
  return u.unaryExpr([&](double t) { return (add ? 1.0 : 0.0) + c_ * ipow(t, c_ - 1); });
}

Signal NonlinearCsModel::apply(const Signal& x) const {
  check_input(x, "apply");
  const Signal u = checked(matrix_ * inner(x), "apply");
  return checked(outer(u), "apply");
}

Signal NonlinearCsModel::jacobian_apply(const Signal& x, const Signal& v) const {
  check_input(x, "jacobian_apply (x)");
  check_input(v, "jacobian_apply (v)");
  const Signal u = checked(matrix_ * inner(x), "jacobian_apply");
  const Signal inner_v = inner_derivative(x).cwiseProduct(v);
  return checked(outer_derivative(u).cwiseProduct(matrix_ * inner_v), "jacobian_apply");
}

Signal NonlinearCsModel::jacobian_adjoint_apply(const Signal& x, const Signal& w) const {
  check_input(x, "jacobian_adjoint_apply (x)");
  if (w.size() != matrix_.rows()) {
    throw DomainError("jacobian_adjoint_apply: expected length " +
                      std::to_string(matrix_.rows()) + ", got " + std::to_string(w.size()));
  }
  require_finite(w, "jacobian_adjoint_apply (w)");
  const Signal u = checked(matrix_ * inner(x), "jacobian_adjoint_apply");
  const Signal scaled = outer_derivative(u).cwiseProduct(w);
  return checked(inner_derivative(x).cwiseProduct(matrix_.transpose() * scaled),
                 "jacobian_adjoint_apply");
}

Signal finite_difference_jacobian_apply(const ForwardModel& model, const Signal& x,
                                        const Signal& v, double h) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  const Signal forward = model.apply(x + h * v);
  const Signal backward = model.apply(x - h * v);
  return checked((forward - backward) / (2.0 * h), "finite difference");
}

Matrix rescale_matrix(const Matrix& a, double factor) {
  if (!(factor > 0.0)) throw DomainError("rescale factor must be positive");
  return factor * a;
}

}  // namespace nlsparse
