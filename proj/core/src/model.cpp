#include "maxzero/model.hpp"

#include "maxzero/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace maxzero {

Dataset::Dataset(Vector y, Matrix x_delta, Matrix x_theta)
    : y_(std::move(y)), x_delta_(std::move(x_delta)), x_theta_(std::move(x_theta)) {
  if (x_theta_.cols() < 1) {
    throw InputError("dataset needs at least one test covariate");
  }
  if (x_delta_.rows() != y_.size() || x_theta_.rows() != y_.size()) {
    throw InputError("dataset blocks have mismatched row counts");
  }
  if (!y_.allFinite() || !x_delta_.allFinite() || !x_theta_.allFinite()) {
    throw InputError("dataset contains NaN or Inf");
  }
}

Dataset Dataset::with_response(Vector y) const {
  return Dataset(std::move(y), x_delta_, x_theta_);
}

Matrix Dataset::parsimonious_design(std::size_t index) const {
  if (index < 1 || index > k_theta()) {
    throw IndexOutOfRange("test covariate index " + std::to_string(index) + " outside 1.." +
                          std::to_string(k_theta()));
  }
  Matrix design(x_delta_.rows(), x_delta_.cols() + 1);
  design.leftCols(x_delta_.cols()) = x_delta_;
  design.col(x_delta_.cols()) = x_theta_.col(static_cast<Eigen::Index>(index - 1));
  return design;
}

Vector ParsimoniousParam::packed() const {
  Vector out(delta.size() + 1);
  out.head(delta.size()) = delta;
  out[delta.size()] = theta;
  return out;
}

Vector embed_full(const ParsimoniousParam& p, std::size_t k_theta) {
  if (p.index < 1 || p.index > k_theta) {
    throw IndexOutOfRange("embed_full: index " + std::to_string(p.index) + " outside 1.." +
                          std::to_string(k_theta));
  }
  Vector full = Vector::Zero(p.delta.size() + static_cast<Eigen::Index>(k_theta));
  full.head(p.delta.size()) = p.delta;
  full[p.delta.size() + static_cast<Eigen::Index>(p.index - 1)] = p.theta;
  return full;
}

double LinearResponse::eval(const Vector& x_delta, const Vector& x_theta, const Vector& beta,
                            std::size_t index) const {
  const auto kd = static_cast<Eigen::Index>(k_delta_);
  return x_delta.dot(beta.head(kd)) + beta[kd] * x_theta[static_cast<Eigen::Index>(index - 1)];
}

Vector LinearResponse::grad(const Vector& x_delta, const Vector& x_theta, const Vector&,
                            std::size_t index) const {
  const auto kd = static_cast<Eigen::Index>(k_delta_);
  Vector g(kd + 1);
  g.head(kd) = x_delta;
  g[kd] = x_theta[static_cast<Eigen::Index>(index - 1)];
  return g;
}

Matrix LinearResponse::hess(const Vector&, const Vector&, const Vector&, std::size_t) const {
  const auto dim = static_cast<Eigen::Index>(k_delta_ + 1);
  return Matrix::Zero(dim, dim);
}

LinearResponse linear_response(std::size_t k_delta) noexcept { return LinearResponse(k_delta); }

std::size_t rate_rule_k(std::size_t n) {
  if (n < 2) throw std::invalid_argument("rate_rule_k: n must be >= 2");
  constexpr double iota = 1e-10;
  return static_cast<std::size_t>(std::llround(5.0 * std::pow(static_cast<double>(n), 0.5 - iota)));
}

std::size_t cap_k(std::size_t requested, const Dataset& data) {
  const std::size_t n = data.n();
  const std::size_t kd = data.k_delta();
  if (n < kd + 2) {
    throw InsufficientSample("parsimonious fits need n >= k_delta + 2: n=" +
                             std::to_string(n) + ", k_delta=" + std::to_string(kd));
  }
  if (requested == 0) throw InsufficientSample("requested k is zero");
  return std::min(requested, data.k_theta());
}

}  // namespace maxzero
