#pragma once

#include "maxzero/model.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace maxzero {

enum class SeFlavor {
  robust,         ///< H^-1 (sum e_t^2 g_t g_t') H^-1
  homoskedastic,  ///< sigma^2 H^-1, sigma^2 = SSE / (n - dim)
};

[[nodiscard]] std::string_view to_string(SeFlavor f) noexcept;
[[nodiscard]] SeFlavor se_flavor_from_string(std::string_view s);

/// Least-squares fit of the parsimonious model for one test covariate.
struct ParsimoniousFit {
  std::size_t index = 1;
  ParsimoniousParam beta;
  Vector residuals;
  double se_theta = 0.0;
  SeFlavor flavor = SeFlavor::robust;
  /// Hessian of the average loss, H_(i)/n.
  SpdMatrix hessian;
  /// ||(1/n) sum_t e_t g_t||_inf at the fit; zero up to rounding.
  double gradient_at_fit_norm = 0.0;
  int iterations = 0;
};

/// Least squares with every test parameter pinned at zero.
struct RestrictedFit {
  Vector delta0_hat;
  Vector fitted;
  Vector residuals;
};

/// Unrestricted least squares on [X_delta, X_theta(:, 1..k_used)].
struct FullFit {
  Vector beta;
  Vector residuals;
  /// Covariance of sqrt(n) (beta_hat - beta).
  SpdMatrix covariance;
  std::size_t k_delta = 0;
  std::size_t k_used = 0;
  SeFlavor flavor = SeFlavor::homoskedastic;

  [[nodiscard]] Vector theta() const {
    return beta.tail(static_cast<Eigen::Index>(k_used));
  }
};

struct GaussNewtonOptions {
  int max_iterations = 200;
  int max_halvings = 30;
  double step_tolerance = 1e-10;
  double divergence_bound = 1e8;
};

/// Parsimonious fit for 1-based `index`. Linear models use the normal
/// equations; other models use damped Gauss-Newton started from the restricted
/// fit with theta_i = 0.
/// Throws NonPositiveDefinite (collinear design), NoConvergence, IndexOutOfRange.
[[nodiscard]] ParsimoniousFit fit_parsimonious(const Dataset& data, const ResponseModel& model,
                                               std::size_t index,
                                               SeFlavor flavor = SeFlavor::robust,
                                               const GaussNewtonOptions& gn = {});

/// Fits i = 1..k_used.
[[nodiscard]] std::vector<ParsimoniousFit> fit_all_parsimonious(
    const Dataset& data, const ResponseModel& model, std::size_t k_used,
    SeFlavor flavor = SeFlavor::robust);

/// With k_delta = 0 the estimate is empty and the residuals are y.
[[nodiscard]] RestrictedFit fit_restricted(const Dataset& data, const ResponseModel& model,
                                           const GaussNewtonOptions& gn = {});

/// Linear models only. Throws InsufficientSample unless n > k_delta + k_used.
[[nodiscard]] FullFit fit_full(const Dataset& data, const ResponseModel& model,
                               std::size_t k_used, SeFlavor flavor = SeFlavor::homoskedastic);

/// Standard error of theta_hat_i for an existing fit under either flavor.
[[nodiscard]] double sandwich_se(const Dataset& data, const ResponseModel& model,
                                 const ParsimoniousFit& fit, SeFlavor flavor);

/// Covariance of sqrt(n) (beta_hat - beta) for a full fit under either flavor.
[[nodiscard]] SpdMatrix sandwich_covariance(const Dataset& data, const FullFit& fit,
                                            SeFlavor flavor);

struct ExpansionDiagnostic {
  /// |sqrt(n) theta_hat_i - [0', 1] Z_(i)| per index.
  Vector per_index;
  double max = 0.0;
};

/// First-order expansion check for linear models.
///
/// Z_(i) = -H_(i)^-1 G_(i) / sqrt(n) with G_(i) = -sum_t e0_t x_(i),t at the
/// restricted fit. H_(i) is taken from `population_moment` (E[x x'] over
/// [x_delta, x_theta]) when given. Otherwise the sample second moment is used,
/// in which case least-squares algebra makes every term zero up to rounding.
[[nodiscard]] ExpansionDiagnostic expansion_diagnostic(
    const Dataset& data, const std::vector<ParsimoniousFit>& fits,
    const std::optional<Matrix>& population_moment = std::nullopt);

/// Pseudo-true parsimonious parameters of a linear model with population
/// second moment `sigma_x` over [x_delta, x_theta], true (delta0, theta0) and
/// exogenous errors. Returns one entry per test covariate.
[[nodiscard]] std::vector<ParsimoniousParam> pseudo_true_parameters(const Matrix& sigma_x,
                                                                    const Vector& delta0,
                                                                    const Vector& theta0);

/// Parsimonious least squares for many responses on one fixed linear design.
///
/// Frisch-Waugh-Lovell: with M the annihilator of X_delta and r_i = M x_i,
/// theta_hat_i = r_i'y / r_i'r_i. Precomputing r_i turns each refit of all k
/// models into a few matrix-vector products, which is what makes the bootstrap
/// affordable. Results agree with fit_parsimonious to rounding.
class ParsimoniousBank {
 public:
  ParsimoniousBank(const Dataset& data, std::size_t k_used);

  struct Estimates {
    Vector theta;
    Vector se;
  };

  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] std::size_t k() const noexcept { return static_cast<std::size_t>(d_.size()); }

  /// theta_hat and se for response y; `se` is left empty when `with_se` is false.
  void fit(const Vector& y, SeFlavor flavor, bool with_se, Estimates& out) const;
  [[nodiscard]] Estimates fit(const Vector& y, SeFlavor flavor) const;

 private:
  [[nodiscard]] Vector annihilate(const Vector& v) const;

  std::size_t n_ = 0;
  std::size_t k_delta_ = 0;
  Matrix x_delta_;
  std::optional<Cholesky> delta_chol_;
  Matrix resid_;  // M x_i, n x k
  Vector d_;      // r_i'r_i
};

/// Unrestricted least squares for many responses on one fixed linear design,
/// returning the Wald statistic n theta' V_thetatheta^-1 theta directly.
class WaldBank {
 public:
  WaldBank(const Dataset& data, std::size_t k_used);

  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] std::size_t k() const noexcept { return k_; }

  struct Estimates {
    Vector beta;
    Vector residuals;
    double wald = 0.0;
  };

  void fit(const Vector& y, SeFlavor flavor, Estimates& out) const;
  [[nodiscard]] Estimates fit(const Vector& y, SeFlavor flavor) const;

 private:
  std::size_t n_ = 0;
  std::size_t k_delta_ = 0;
  std::size_t k_ = 0;
  Matrix x_;
  std::optional<Cholesky> chol_;
  Matrix b_theta_;  // theta rows of (X'X)^-1 X', k x n
  Matrix q_;        // [(X'X)^-1]_thetatheta^-1
};

}  // namespace maxzero
