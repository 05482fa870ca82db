#include "maxzero/estimation.hpp"

#include "maxzero/errors.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace maxzero {

std::string_view to_string(SeFlavor f) noexcept {
  return f == SeFlavor::robust ? "robust" : "homoskedastic";
}

SeFlavor se_flavor_from_string(std::string_view s) {
  if (s == "robust") return SeFlavor::robust;
  if (s == "homoskedastic") return SeFlavor::homoskedastic;
  throw ConfigInvalid("unknown se flavor '" + std::string(s) + "' (robust|homoskedastic)");
}

namespace {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Vector row_vector(const Matrix& m, Eigen::Index r) { return m.row(r).transpose(); }

// Design gradients g_t (rows), residuals and the average-loss Hessian at beta.
struct LocalModel {
  Matrix jac;
  Vector residuals;
  Matrix hessian;  // (1/n) sum (g g' - e h)
};

LocalModel local_model(const Dataset& data, const ResponseModel& model, const Vector& beta,
                       std::size_t index, bool with_hessian) {
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto p = beta.size();
  LocalModel lm;
  lm.jac.resize(n, p);
  lm.residuals.resize(n);
  lm.hessian = Matrix::Zero(p, p);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Vector xd = row_vector(data.x_delta(), t);
    const Vector xt = row_vector(data.x_theta(), t);
    lm.residuals[t] = data.y()[t] - model.eval(xd, xt, beta, index);
    lm.jac.row(t) = model.grad(xd, xt, beta, index).transpose();
    if (with_hessian && !model.is_linear()) {
      lm.hessian -= lm.residuals[t] * model.hess(xd, xt, beta, index);
    }
  }
  lm.hessian += gram(lm.jac).matrix();
  lm.hessian /= static_cast<double>(n);
  return lm;
}

double sse(const Dataset& data, const ResponseModel& model, const Vector& beta,
           std::size_t index) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(data.n()); ++t) {
    const double e = data.y()[t] - model.eval(row_vector(data.x_delta(), t),
                                              row_vector(data.x_theta(), t), beta, index);
    total += e * e;
  }
  return total;
}

// Variance of coordinate `coord` of the estimator from gradients, residuals and
// the average-loss Hessian.
double coordinate_variance(const Matrix& jac, const Vector& e, const Matrix& hessian,
                           Eigen::Index coord, SeFlavor flavor) {
  const double n = static_cast<double>(jac.rows());
  const Cholesky chol{SpdMatrix(symmetrized(hessian))};
  Vector unit = Vector::Zero(hessian.rows());
  unit[coord] = 1.0;
  const Vector c = chol.solve(unit);  // H^-1 e_coord
  if (flavor == SeFlavor::homoskedastic) {
    const double dof = n - static_cast<double>(hessian.rows());
    if (dof <= 0) throw InsufficientSample("no residual degrees of freedom");
    return e.squaredNorm() / dof * c[coord] / n;
  }
  const Vector a = jac * c;
  return (a.array().square() * e.array().square()).sum() / (n * n);
}

// Damped Gauss-Newton on sum of squared residuals. `residual_jac` fills the
// residual vector and Jacobian of the fitted values at a parameter.
template <class ResidualJac, class Objective>
Vector gauss_newton(Vector beta, const GaussNewtonOptions& opt, ResidualJac&& residual_jac,
                    Objective&& objective, int& iterations) {
  Vector e;
  Matrix jac;
  for (iterations = 0; iterations < opt.max_iterations; ++iterations) {
    residual_jac(beta, e, jac);
    const double current = e.squaredNorm();
    const Vector step = Cholesky(gram(jac)).solve(Vector(jac.transpose() * e));
    const double step_norm = step.cwiseAbs().maxCoeff();
    double t = 1.0;
    Vector trial = beta + step;
    double value = objective(trial);
    int halvings = 0;
    while (!(value <= current) && halvings < opt.max_halvings) {
      t *= 0.5;
      trial = beta + t * step;
      value = objective(trial);
      ++halvings;
    }
    if (!(value <= current)) {
      // No descent along the Gauss-Newton direction: we are at the rounding
      // floor of the objective if the step itself is negligible.
      if (step_norm <= 1e-6 * (1.0 + beta.cwiseAbs().maxCoeff())) return beta;
      throw NoConvergence("Gauss-Newton line search failed to reduce the loss");
    }
    beta = trial;
    if (!beta.allFinite() || beta.cwiseAbs().maxCoeff() > opt.divergence_bound) {
      throw NoConvergence("Gauss-Newton iterates diverged");
    }
    if (t * step_norm < opt.step_tolerance) return beta;
  }
  throw NoConvergence("Gauss-Newton did not converge in " + std::to_string(opt.max_iterations) +
                      " iterations");
}

}  // namespace

ParsimoniousFit fit_parsimonious(const Dataset& data, const ResponseModel& model,
                                 std::size_t index, SeFlavor flavor,
                                 const GaussNewtonOptions& gn) {
  if (index < 1 || index > data.k_theta()) {
    throw IndexOutOfRange("parsimonious index " + std::to_string(index) + " outside 1.." +
                          std::to_string(data.k_theta()));
  }
  if (model.k_delta() != data.k_delta()) {
    throw std::invalid_argument("fit_parsimonious: model k_delta does not match the data");
  }
  const auto kd = static_cast<Eigen::Index>(data.k_delta());
  const double n = static_cast<double>(data.n());
  ParsimoniousFit fit;
  fit.index = index;
  fit.flavor = flavor;

  Vector beta;
  if (model.is_linear()) {
    const Matrix x = data.parsimonious_design(index);
    const SpdMatrix xtx = gram(x);
    beta = Cholesky(xtx).solve(Vector(x.transpose() * data.y()));
  } else {
    const RestrictedFit restricted = fit_restricted(data, model, gn);
    Vector start = Vector::Zero(kd + 1);
    start.head(kd) = restricted.delta0_hat;
    auto residual_jac = [&](const Vector& b, Vector& e, Matrix& jac) {
      const LocalModel lm = local_model(data, model, b, index, false);
      e = lm.residuals;
      jac = lm.jac;
    };
    auto objective = [&](const Vector& b) { return sse(data, model, b, index); };
    beta = gauss_newton(std::move(start), gn, residual_jac, objective, fit.iterations);
  }

  const LocalModel lm = local_model(data, model, beta, index, true);
  fit.beta.delta = beta.head(kd);
  fit.beta.theta = beta[kd];
  fit.beta.index = index;
  fit.residuals = lm.residuals;
  fit.hessian = SpdMatrix(symmetrized(lm.hessian));
  fit.gradient_at_fit_norm = (lm.jac.transpose() * lm.residuals).cwiseAbs().maxCoeff() / n;
  const double var = coordinate_variance(lm.jac, lm.residuals, lm.hessian, kd, flavor);
  fit.se_theta = var > 0.0 ? std::sqrt(var) : 0.0;
  return fit;
}

std::vector<ParsimoniousFit> fit_all_parsimonious(const Dataset& data,
                                                  const ResponseModel& model,
                                                  std::size_t k_used, SeFlavor flavor) {
  if (k_used > data.k_theta()) {
    throw IndexOutOfRange("k_used=" + std::to_string(k_used) + " exceeds k_theta=" +
                          std::to_string(data.k_theta()));
  }
  std::vector<ParsimoniousFit> fits;
  fits.reserve(k_used);
  for (std::size_t i = 1; i <= k_used; ++i) fits.push_back(fit_parsimonious(data, model, i, flavor));
  return fits;
}

RestrictedFit fit_restricted(const Dataset& data, const ResponseModel& model,
                             const GaussNewtonOptions& gn) {
  if (model.k_delta() != data.k_delta()) {
    throw std::invalid_argument("fit_restricted: model k_delta does not match the data");
  }
  const auto kd = static_cast<Eigen::Index>(data.k_delta());
  RestrictedFit fit;
  if (model.is_linear()) {
    if (kd == 0) {
      fit.delta0_hat = Vector(0);
      fit.fitted = Vector::Zero(data.y().size());
    } else {
      fit.delta0_hat =
          Cholesky(gram(data.x_delta())).solve(Vector(data.x_delta().transpose() * data.y()));
      fit.fitted = data.x_delta() * fit.delta0_hat;
    }
    fit.residuals = data.y() - fit.fitted;
    return fit;
  }

  // theta = 0 makes every parsimonious model the restricted one; index 1 is as
  // good as any.
  auto packed = [kd](const Vector& delta) {
    Vector b = Vector::Zero(kd + 1);
    b.head(kd) = delta;
    return b;
  };
  Vector delta = Vector::Zero(kd);
  if (kd > 0) {
    auto residual_jac = [&](const Vector& d, Vector& e, Matrix& jac) {
      const LocalModel lm = local_model(data, model, packed(d), 1, false);
      e = lm.residuals;
      jac = lm.jac.leftCols(kd);
    };
    auto objective = [&](const Vector& d) { return sse(data, model, packed(d), 1); };
    int iterations = 0;
    delta = gauss_newton(std::move(delta), gn, residual_jac, objective, iterations);
  }
  fit.delta0_hat = delta;
  fit.fitted.resize(data.y().size());
  const Vector b = packed(delta);
  for (Eigen::Index t = 0; t < fit.fitted.size(); ++t) {
    fit.fitted[t] = model.eval(row_vector(data.x_delta(), t), row_vector(data.x_theta(), t), b, 1);
  }
  fit.residuals = data.y() - fit.fitted;
  return fit;
}

namespace {

Matrix full_design(const Dataset& data, std::size_t k_used) {
  const auto kd = data.x_delta().cols();
  const auto k = static_cast<Eigen::Index>(k_used);
  Matrix x(data.x_delta().rows(), kd + k);
  x.leftCols(kd) = data.x_delta();
  x.rightCols(k) = data.x_theta().leftCols(k);
  return x;
}

void check_full_dims(const Dataset& data, std::size_t k_used) {
  if (k_used < 1 || k_used > data.k_theta()) {
    throw IndexOutOfRange("k_used=" + std::to_string(k_used) + " outside 1.." +
                          std::to_string(data.k_theta()));
  }
  if (data.n() <= data.k_delta() + k_used) {
    throw InsufficientSample("full model needs n > k_delta + k: n=" + std::to_string(data.n()) +
                             ", k_delta=" + std::to_string(data.k_delta()) +
                             ", k=" + std::to_string(k_used));
  }
}

}  // namespace

FullFit fit_full(const Dataset& data, const ResponseModel& model, std::size_t k_used,
                 SeFlavor flavor) {
  if (!model.is_linear()) {
    throw std::invalid_argument("fit_full: only linear response models are supported");
  }
  check_full_dims(data, k_used);
  const Matrix x = full_design(data, k_used);
  FullFit fit;
  fit.k_delta = data.k_delta();
  fit.k_used = k_used;
  fit.flavor = flavor;
  fit.beta = Cholesky(gram(x)).solve(Vector(x.transpose() * data.y()));
  fit.residuals = data.y() - x * fit.beta;
  fit.covariance = sandwich_covariance(data, fit, flavor);
  return fit;
}

double sandwich_se(const Dataset& data, const ResponseModel& model, const ParsimoniousFit& fit,
                   SeFlavor flavor) {
  const LocalModel lm = local_model(data, model, fit.beta.packed(), fit.index, true);
  const double var =
      coordinate_variance(lm.jac, lm.residuals, lm.hessian, fit.beta.delta.size(), flavor);
  return var > 0.0 ? std::sqrt(var) : 0.0;
}

SpdMatrix sandwich_covariance(const Dataset& data, const FullFit& fit, SeFlavor flavor) {
  const Matrix x = full_design(data, fit.k_used);
  const double n = static_cast<double>(data.n());
  const Cholesky chol(gram(x));
  const Matrix inv = chol.inverse();
  const Vector& e = fit.residuals;
  if (flavor == SeFlavor::homoskedastic) {
    const double dof = n - static_cast<double>(x.cols());
    if (dof <= 0) throw InsufficientSample("no residual degrees of freedom");
    const double sigma2 = e.squaredNorm() / dof;
    return SpdMatrix(symmetrized(n * sigma2 * inv));
  }
  const Matrix b = inv * x.transpose();  // (X'X)^-1 X'
  const Matrix be = b * e.asDiagonal();
  return SpdMatrix(symmetrized(n * (be * be.transpose())));
}

ExpansionDiagnostic expansion_diagnostic(const Dataset& data,
                                         const std::vector<ParsimoniousFit>& fits,
                                         const std::optional<Matrix>& population_moment) {
  const auto kd = static_cast<Eigen::Index>(data.k_delta());
  const std::size_t k_all = data.k_delta() + data.k_theta();
  if (population_moment && (static_cast<std::size_t>(population_moment->rows()) != k_all ||
                            static_cast<std::size_t>(population_moment->cols()) != k_all)) {
    throw std::invalid_argument("expansion_diagnostic: population moment must be " +
                                std::to_string(k_all) + " square");
  }
  const double n = static_cast<double>(data.n());
  const double root_n = std::sqrt(n);
  const RestrictedFit restricted = fit_restricted(data, LinearResponse(data.k_delta()));

  ExpansionDiagnostic out;
  out.per_index.resize(static_cast<Eigen::Index>(fits.size()));
  for (std::size_t f = 0; f < fits.size(); ++f) {
    const ParsimoniousFit& fit = fits[f];
    const Matrix x = data.parsimonious_design(fit.index);
    const Vector score = x.transpose() * restricted.residuals;  // -G_(i)
    Matrix h;
    if (population_moment) {
      const Eigen::Index col = kd + static_cast<Eigen::Index>(fit.index) - 1;
      h.resize(kd + 1, kd + 1);
      for (Eigen::Index r = 0; r <= kd; ++r) {
        const Eigen::Index rr = r < kd ? r : col;
        for (Eigen::Index c = 0; c <= kd; ++c) {
          h(r, c) = (*population_moment)(rr, c < kd ? c : col);
        }
      }
    } else {
      h = gram(x).matrix() / n;
    }
    const Vector z = Cholesky(SpdMatrix(symmetrized(h))).solve(score) / root_n;
    out.per_index[static_cast<Eigen::Index>(f)] = std::abs(root_n * fit.beta.theta - z[kd]);
  }
  out.max = out.per_index.size() > 0 ? out.per_index.maxCoeff() : 0.0;
  return out;
}

std::vector<ParsimoniousParam> pseudo_true_parameters(const Matrix& sigma_x, const Vector& delta0,
                                                      const Vector& theta0) {
  const Eigen::Index kd = delta0.size();
  const Eigen::Index kt = theta0.size();
  if (sigma_x.rows() != kd + kt || sigma_x.cols() != kd + kt) {
    throw std::invalid_argument("pseudo_true_parameters: dimension mismatch");
  }
  const Matrix s_dd = sigma_x.topLeftCorner(kd, kd);
  const Matrix s_dt = sigma_x.topRightCorner(kd, kt);
  const Matrix s_tt = sigma_x.bottomRightCorner(kt, kt);

  // Partial covariance of x_theta given x_delta, and Sigma_dd^-1 Sigma_dt.
  Matrix partial = s_tt;
  Matrix proj = Matrix::Zero(kd, kt);
  if (kd > 0) {
    const Cholesky chol{SpdMatrix(symmetrized(s_dd))};
    proj = chol.solve(s_dt);
    partial -= s_dt.transpose() * proj;
  }
  const Vector cross = partial * theta0;
  const Vector delta_shift = proj * theta0;

  std::vector<ParsimoniousParam> out;
  out.reserve(static_cast<std::size_t>(kt));
  for (Eigen::Index i = 0; i < kt; ++i) {
    if (!(partial(i, i) > 0.0)) {
      throw NonPositiveDefinite("pseudo_true_parameters: degenerate test covariate " +
                                std::to_string(i + 1));
    }
    ParsimoniousParam p;
    p.index = static_cast<std::size_t>(i + 1);
    p.theta = cross[i] / partial(i, i);
    p.delta = delta0 + delta_shift - proj.col(i) * p.theta;
    out.push_back(std::move(p));
  }
  return out;
}

ParsimoniousBank::ParsimoniousBank(const Dataset& data, std::size_t k_used)
    : n_(data.n()), k_delta_(data.k_delta()), x_delta_(data.x_delta()) {
  if (k_used < 1 || k_used > data.k_theta()) {
    throw IndexOutOfRange("k_used=" + std::to_string(k_used) + " outside 1.." +
                          std::to_string(data.k_theta()));
  }
  if (n_ <= k_delta_ + 1) {
    throw InsufficientSample("parsimonious fits need n > k_delta + 1");
  }
  const auto k = static_cast<Eigen::Index>(k_used);
  const Matrix xt = data.x_theta().leftCols(k);
  if (k_delta_ > 0) {
    delta_chol_.emplace(gram(x_delta_));
    resid_ = xt - x_delta_ * delta_chol_->solve(Matrix(x_delta_.transpose() * xt));
  } else {
    resid_ = xt;
  }
  d_ = resid_.colwise().squaredNorm().transpose();
  const Vector raw = xt.colwise().squaredNorm().transpose();
  const double guard = static_cast<double>(k_delta_ + 1) * 1e-14;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(d_[i] > guard * raw[i])) {
      throw NonPositiveDefinite("test covariate " + std::to_string(i + 1) +
                                " is collinear with the nuisance block");
    }
  }
}

Vector ParsimoniousBank::annihilate(const Vector& v) const {
  if (!delta_chol_) return v;
  return v - x_delta_ * delta_chol_->solve(Vector(x_delta_.transpose() * v));
}

void ParsimoniousBank::fit(const Vector& y, SeFlavor flavor, bool with_se, Estimates& out) const {
  const Vector u = annihilate(y);
  out.theta = (resid_.transpose() * u).cwiseQuotient(d_);
  if (!with_se) {
    out.se.resize(0);
    return;
  }
  const auto k = d_.size();
  out.se.resize(k);
  const double dof = static_cast<double>(n_ - k_delta_ - 1);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto r = resid_.col(i).array();
    const auto e = u.array() - out.theta[i] * r;
    double var = 0.0;
    if (flavor == SeFlavor::homoskedastic) {
      var = e.square().sum() / dof / d_[i];
    } else {
      var = (r * e).square().sum() / (d_[i] * d_[i]);
    }
    out.se[i] = var > 0.0 ? std::sqrt(var) : 0.0;
  }
}

ParsimoniousBank::Estimates ParsimoniousBank::fit(const Vector& y, SeFlavor flavor) const {
  Estimates out;
  fit(y, flavor, true, out);
  return out;
}

WaldBank::WaldBank(const Dataset& data, std::size_t k_used)
    : n_(data.n()), k_delta_(data.k_delta()), k_(k_used) {
  check_full_dims(data, k_used);
  x_ = full_design(data, k_used);
  chol_.emplace(gram(x_));
  const Matrix inv = chol_->inverse();
  const auto k = static_cast<Eigen::Index>(k_);
  b_theta_ = inv.bottomRows(k) * x_.transpose();
  const SpdMatrix inv_tt(symmetrized(inv.bottomRightCorner(k, k)));
  q_ = Cholesky(inv_tt).inverse();
}

void WaldBank::fit(const Vector& y, SeFlavor flavor, Estimates& out) const {
  out.beta = chol_->solve(Vector(x_.transpose() * y));
  out.residuals = y - x_ * out.beta;
  const auto k = static_cast<Eigen::Index>(k_);
  const Vector theta = out.beta.tail(k);
  if (flavor == SeFlavor::homoskedastic) {
    const double sigma2 =
        out.residuals.squaredNorm() / static_cast<double>(n_ - k_delta_ - k_);
    if (!(sigma2 > 0.0)) throw NonPositiveDefinite("Wald: zero residual variance");
    out.wald = theta.dot(q_ * theta) / sigma2;
    return;
  }
  const Matrix be = b_theta_ * out.residuals.asDiagonal();
  const SpdMatrix v(symmetrized(be * be.transpose()));
  out.wald = theta.dot(Cholesky(v).solve(theta));
}

WaldBank::Estimates WaldBank::fit(const Vector& y, SeFlavor flavor) const {
  Estimates out;
  fit(y, flavor, out);
  return out;
}

}  // namespace maxzero
