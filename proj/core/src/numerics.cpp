#include "maxzero/numerics.hpp"

#include "maxzero/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace maxzero {

SpdMatrix::SpdMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw std::invalid_argument("SpdMatrix: matrix is not square");
  }
  if (entries_.size() == 0) return;
  if (!entries_.allFinite()) {
    throw NonPositiveDefinite("SpdMatrix: non-finite entries");
  }
  const double scale = entries_.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * (scale > 0.0 ? scale : 1.0);
  for (Eigen::Index c = 0; c < entries_.cols(); ++c) {
    for (Eigen::Index r = c + 1; r < entries_.rows(); ++r) {
      if (std::abs(entries_(r, c) - entries_(c, r)) > tol) {
        throw std::invalid_argument("SpdMatrix: matrix is not symmetric");
      }
      entries_(c, r) = entries_(r, c);
    }
  }
}

SpdMatrix gram(const Matrix& x) {
  const Eigen::Index p = x.cols();
  Matrix g = Matrix::Zero(p, p);
  g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return SpdMatrix(std::move(g));
}

Cholesky::Cholesky(const SpdMatrix& a) {
  const std::size_t dim = a.dim();
  if (dim == 0) return;
  const Matrix& m = a.matrix();
  const double max_diag = m.diagonal().maxCoeff();
  if (!(max_diag > 0.0)) {
    throw NonPositiveDefinite("Cholesky: non-positive diagonal");
  }
  llt_.compute(m);
  if (llt_.info() != Eigen::Success) {
    throw NonPositiveDefinite("Cholesky: matrix is not positive definite");
  }
  const double min_pivot = llt_.matrixLLT().diagonal().array().square().minCoeff();
  relative_min_pivot_ = min_pivot / max_diag;
  const double threshold = static_cast<double>(dim) * 1e-14 * max_diag;
  if (!(min_pivot > threshold)) {
    throw NonPositiveDefinite("Cholesky: pivot " + std::to_string(min_pivot) +
                              " below threshold " + std::to_string(threshold) +
                              " (singular or collinear design)");
  }
}

Vector Cholesky::solve(const Vector& b) const {
  if (static_cast<std::size_t>(b.size()) != dim()) {
    throw std::invalid_argument("Cholesky::solve: dimension mismatch");
  }
  if (dim() == 0) return Vector(0);
  return llt_.solve(b);
}

Matrix Cholesky::solve(const Matrix& b) const {
  if (static_cast<std::size_t>(b.rows()) != dim()) {
    throw std::invalid_argument("Cholesky::solve: dimension mismatch");
  }
  if (dim() == 0) return Matrix(0, b.cols());
  return llt_.solve(b);
}

Matrix Cholesky::inverse() const {
  const auto d = static_cast<Eigen::Index>(dim());
  Matrix inv = solve(Matrix(Matrix::Identity(d, d)));
  // Symmetrize away rounding asymmetry of the two triangular solves.
  return 0.5 * (inv + inv.transpose());
}

Vector solve_spd(const SpdMatrix& a, const Vector& b) {
  if (a.dim() != static_cast<std::size_t>(b.size())) {
    throw std::invalid_argument("solve_spd: dimension mismatch");
  }
  return Cholesky(a).solve(b);
}

double chisq_sf(double x, std::size_t df) {
  if (df == 0) throw std::invalid_argument("chisq_sf: df must be >= 1");
  if (std::isnan(x) || x < 0.0) throw std::invalid_argument("chisq_sf: x must be >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * static_cast<double>(df), 0.5 * x);
}

double normal_sf(double z) noexcept {
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        ((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
             6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
           1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
         1.3314166789178437745e+2) * r + 3.3871328727963666080e+0;
    const double den =
        ((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
             3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
           5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
         4.2313330701600911252e+1) * r + 1.0;
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        ((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
             2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
           3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
         4.63033784615654529590e+0) * r + 1.42343711074968357734e+0;
    const double den =
        ((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
             1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
           6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
         2.05319162663775882187e+0) * r + 1.0;
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
             1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
           2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
         5.46378491116411436990e+0) * r + 6.65790464350110377720e+0;
    const double den =
        ((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
             1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
           1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
         5.99832206555887937690e-1) * r + 1.0;
    value = num / den;
  }
  return q < 0.0 ? -value : value;
}

}  // namespace maxzero
