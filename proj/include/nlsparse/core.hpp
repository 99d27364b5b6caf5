#ifndef NLSPARSE_CORE_HPP_
#define NLSPARSE_CORE_HPP_

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nlsparse {

/// Dense real vector: iterates, solutions, measurements.
using Signal = Eigen::VectorXd;

/// Row-major dense matrix used for measurement operators.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised when an argument violates a documented domain (negative norm,
/// non-finite entries, dimension mismatch).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Raised when an evaluation overflows or produces NaN/Inf.
class DivergedError : public std::runtime_error {
 public:
  explicit DivergedError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an operation is called outside its documented precondition,
/// e.g. asking for the gradient of the smooth part at x = 0.
class PreconditionError : public std::logic_error {
 public:
  explicit PreconditionError(const std::string& what) : std::logic_error(what) {}
};

/// Parameters of the penalty alpha*|x|_1 - beta*|x|_2 with beta = eta*alpha,
/// plus the exponent q of the data-misfit term (1/q)|F(x)-y|^q.
struct RegularizationParams {
  double alpha = 0.0;
  double eta = 0.0;
  double q = 2.0;

  double beta() const { return eta * alpha; }

  /// Throws DomainError unless alpha >= 0, 0 <= eta <= 1 and q >= 1.
  void validate() const;
};

bool all_finite(const Signal& x);

/// Throws DomainError naming `what` when x has a NaN or Inf entry.
void require_finite(const Signal& x, const char* what);

/// True iff every component is exactly zero.
bool is_zero(const Signal& x);

/// Number of exactly nonzero components.
Eigen::Index support_size(const Signal& x);

/// alpha*|x|_1 - beta*|x|_2. Never negative; round-off below
/// 1e-12*alpha*|x|_1 is clamped to zero.
double regularizer(const Signal& x, const RegularizationParams& p);

/// (1/q)*residual_norm^q + regularizer(x, p).
double objective(const Signal& x, double residual_norm, const RegularizationParams& p);

/// Scalar soft threshold: sign(t)*max(|t|-tau, 0).
double soft_threshold(double t, double tau);

/// Componentwise soft threshold.
Signal soft_threshold(const Signal& x, double tau);

/// Unit vector e_i of length dim.
Signal basis_vector(Eigen::Index dim, Eigen::Index i);

}  // namespace nlsparse

#endif  // NLSPARSE_CORE_HPP_
