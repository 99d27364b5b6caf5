#ifndef NLSPARSE_OPERATORS_HPP_
#define NLSPARSE_OPERATORS_HPP_

#include <string>

#include "nlsparse/core.hpp"

namespace nlsparse {

/// A differentiable map F : R^n -> R^m with matrix-free Jacobian products.
///
/// Implementations must be deterministic and must keep jacobian_apply and
/// jacobian_adjoint_apply mutually adjoint: <F'(x)v, w> == <v, F'(x)^T w>.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual Eigen::Index input_dim() const = 0;
  virtual Eigen::Index output_dim() const = 0;

  virtual Signal apply(const Signal& x) const = 0;
  /// F'(x) v, length output_dim().
  virtual Signal jacobian_apply(const Signal& x, const Signal& v) const = 0;
  /// F'(x)^T w, length input_dim().
  virtual Signal jacobian_adjoint_apply(const Signal& x, const Signal& w) const = 0;
};

enum class NonlinearForm {
  additive,    ///< a(u) = u + u^c, b(x) = x + x^d
  pure_power,  ///< a(u) = u^c,     b(x) = x^d
};

std::string to_string(NonlinearForm form);
NonlinearForm parse_nonlinear_form(const std::string& name);

/// Nonlinear compressive-sensing operator F(x) = a(A b(x)) with componentwise
/// power nonlinearities before and after the linear mixing A.
///
/// The Jacobian is D_a(u) A D_b(x) with u = A b(x); it is never formed
/// explicitly.
class NonlinearCsModel final : public ForwardModel {
 public:
  NonlinearCsModel(Matrix matrix, int c, int d, NonlinearForm form);

  Eigen::Index input_dim() const override { return matrix_.cols(); }
  Eigen::Index output_dim() const override { return matrix_.rows(); }

  Signal apply(const Signal& x) const override;
  Signal jacobian_apply(const Signal& x, const Signal& v) const override;
  Signal jacobian_adjoint_apply(const Signal& x, const Signal& w) const override;

  const Matrix& matrix() const { return matrix_; }
  int c() const { return c_; }
  int d() const { return d_; }
  NonlinearForm form() const { return form_; }

 private:
  // Inner map b and its derivative, componentwise.
  Signal inner(const Signal& x) const;
  Signal inner_derivative(const Signal& x) const;
  Signal outer(const Signal& u) const;
  Signal outer_derivative(const Signal& u) const;
  void check_input(const Signal& x, const char* what) const;

  Matrix matrix_;
  int c_;
  int d_;
  NonlinearForm form_;
};

/// Central difference (F(x + h v) - F(x - h v)) / (2h).
Signal finite_difference_jacobian_apply(const ForwardModel& model, const Signal& x,
                                        const Signal& v, double h);

/// Returns factor * A.
Matrix rescale_matrix(const Matrix& a, double factor);

}  // namespace nlsparse

#endif  // NLSPARSE_OPERATORS_HPP_
