#pragma once

#include "maxzero/numerics.hpp"

#include <cstddef>
#include <memory>

namespace maxzero {

/// Response vector with a nuisance block and a test block of covariates.
///
/// Rows are observations. Immutable once constructed; construction rejects
/// mismatched row counts, non-finite values, and an empty test block.
class Dataset {
 public:
  Dataset(Vector y, Matrix x_delta, Matrix x_theta);

  [[nodiscard]] std::size_t n() const noexcept { return static_cast<std::size_t>(y_.size()); }
  [[nodiscard]] std::size_t k_delta() const noexcept {
    return static_cast<std::size_t>(x_delta_.cols());
  }
  [[nodiscard]] std::size_t k_theta() const noexcept {
    return static_cast<std::size_t>(x_theta_.cols());
  }

  [[nodiscard]] const Vector& y() const noexcept { return y_; }
  [[nodiscard]] const Matrix& x_delta() const noexcept { return x_delta_; }
  [[nodiscard]] const Matrix& x_theta() const noexcept { return x_theta_; }

  /// Same covariates, different response (bootstrap samples, perturbations).
  [[nodiscard]] Dataset with_response(Vector y) const;

  /// [X_delta, X_theta(:, index)] for 1-based `index`.
  [[nodiscard]] Matrix parsimonious_design(std::size_t index) const;

 private:
  Vector y_;
  Matrix x_delta_;
  Matrix x_theta_;
};

/// beta_(i) = [delta', theta_i]' for test covariate `index` (1-based).
struct ParsimoniousParam {
  Vector delta;
  double theta = 0.0;
  std::size_t index = 1;

  /// Packed as [delta..., theta].
  [[nodiscard]] Vector packed() const;
};

/// Full parameter [delta, 0, ..., theta_i, ..., 0] of length k_delta + k_theta.
/// Throws IndexOutOfRange unless 1 <= p.index <= k_theta.
[[nodiscard]] Vector embed_full(const ParsimoniousParam& p, std::size_t k_theta);

/// Regression function f_(i)(x, beta_(i)) of the parsimonious model for test
/// covariate i: the full response f(x, delta, theta) with every test parameter
/// other than theta_i pinned at zero.
///
/// `beta` is packed as [delta..., theta_i]; `x_theta` is the whole test-block
/// row and `index` is 1-based. Implementations must be stateless: the
/// estimators call them concurrently from several threads.
class ResponseModel {
 public:
  virtual ~ResponseModel() = default;

  [[nodiscard]] virtual std::size_t k_delta() const noexcept = 0;

  /// True when f is linear in beta with gradient [x_delta, x_theta_i]; the
  /// estimators then use closed-form least squares.
  [[nodiscard]] virtual bool is_linear() const noexcept { return false; }

  [[nodiscard]] virtual double eval(const Vector& x_delta, const Vector& x_theta,
                                    const Vector& beta, std::size_t index) const = 0;
  /// d f_(i) / d beta_(i), length k_delta + 1.
  [[nodiscard]] virtual Vector grad(const Vector& x_delta, const Vector& x_theta,
                                    const Vector& beta, std::size_t index) const = 0;
  /// d^2 f_(i) / d beta_(i)^2, (k_delta + 1) square.
  [[nodiscard]] virtual Matrix hess(const Vector& x_delta, const Vector& x_theta,
                                    const Vector& beta, std::size_t index) const = 0;
};

/// f_(i)(x, beta_(i)) = delta' x_delta + theta_i x_theta_i.
class LinearResponse final : public ResponseModel {
 public:
  explicit LinearResponse(std::size_t k_delta) noexcept : k_delta_(k_delta) {}

  [[nodiscard]] std::size_t k_delta() const noexcept override { return k_delta_; }
  [[nodiscard]] bool is_linear() const noexcept override { return true; }

  [[nodiscard]] double eval(const Vector& x_delta, const Vector& x_theta, const Vector& beta,
                            std::size_t index) const override;
  [[nodiscard]] Vector grad(const Vector& x_delta, const Vector& x_theta, const Vector& beta,
                            std::size_t index) const override;
  [[nodiscard]] Matrix hess(const Vector& x_delta, const Vector& x_theta, const Vector& beta,
                            std::size_t index) const override;

 private:
  std::size_t k_delta_;
};

[[nodiscard]] LinearResponse linear_response(std::size_t k_delta) noexcept;

/// Number of parsimonious models at sample size n: round(5 n^(1/2 - 1e-10)).
[[nodiscard]] std::size_t rate_rule_k(std::size_t n);

/// Caps a requested k_theta,n at the number of test columns. k may exceed
/// n - k_delta since each parsimonious fit has only k_delta + 1 parameters.
/// Throws InsufficientSample when n < k_delta + 2, where a single
/// parsimonious fit has no residual degrees of freedom left.
[[nodiscard]] std::size_t cap_k(std::size_t requested, const Dataset& data);

}  // namespace maxzero
