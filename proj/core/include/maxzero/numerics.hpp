#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace maxzero {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric matrix that is expected to be positive definite.
///
/// Construction checks symmetry (entrywise, relative to the largest absolute
/// entry, at 1e-12) and stores the lower triangle mirrored into the upper one,
/// so downstream code can rely on exact symmetry. Positive definiteness is
/// established lazily by `Cholesky`, which raises `NonPositiveDefinite` when a
/// pivot falls below `dim * 1e-14 * max diagonal`.
class SpdMatrix {
 public:
  SpdMatrix() = default;
  explicit SpdMatrix(Matrix entries);

  [[nodiscard]] std::size_t dim() const noexcept {
    return static_cast<std::size_t>(entries_.rows());
  }
  [[nodiscard]] const Matrix& matrix() const noexcept { return entries_; }
  [[nodiscard]] double operator()(std::size_t r, std::size_t c) const {
    return entries_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }

 private:
  Matrix entries_;
};

/// X'X built from the lower triangle only, so the result is exactly symmetric.
[[nodiscard]] SpdMatrix gram(const Matrix& x);

/// Cholesky factorization with the pivot guard used for every least-squares
/// solve in the library. Near-singular systems are rejected, never regularized.
class Cholesky {
 public:
  explicit Cholesky(const SpdMatrix& a);

  [[nodiscard]] std::size_t dim() const noexcept {
    return static_cast<std::size_t>(llt_.matrixLLT().rows());
  }
  [[nodiscard]] Vector solve(const Vector& b) const;
  [[nodiscard]] Matrix solve(const Matrix& b) const;
  [[nodiscard]] Matrix inverse() const;
  /// Smallest pivot divided by the largest diagonal entry of the input.
  [[nodiscard]] double relative_min_pivot() const noexcept { return relative_min_pivot_; }

 private:
  Eigen::LLT<Matrix> llt_;
  double relative_min_pivot_ = 0.0;
};

/// Solves A x = b for SPD A. Throws NonPositiveDefinite.
[[nodiscard]] Vector solve_spd(const SpdMatrix& a, const Vector& b);

/// P(chi-square with `df` degrees of freedom > x).
[[nodiscard]] double chisq_sf(double x, std::size_t df);

/// P(N(0,1) > z).
[[nodiscard]] double normal_sf(double z) noexcept;

/// Inverse of the standard normal CDF for p in (0, 1) (Wichura, AS 241).
[[nodiscard]] double normal_quantile(double p);

}  // namespace maxzero
