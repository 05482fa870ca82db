#include "maxzero/inference.hpp"

#include "maxzero/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <string>

namespace maxzero {

std::string_view to_string(WeightScheme w) noexcept {
  return w == WeightScheme::flat ? "flat" : "inv_se";
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::max: return "max";
    case Method::max_t: return "max_t";
    case Method::wald_asymptotic: return "wald_asymptotic";
    case Method::wald_normalized: return "wald_normalized";
    case Method::wald_bootstrap: return "wald_bootstrap";
    case Method::wald_normalized_bootstrap: return "wald_normalized_bootstrap";
  }
  return "unknown";
}

WeightScheme weight_scheme_from_string(std::string_view s) {
  if (s == "flat") return WeightScheme::flat;
  if (s == "inv_se" || s == "tstat") return WeightScheme::inv_se;
  throw ConfigInvalid("unknown weight scheme '" + std::string(s) + "' (flat|tstat)");
}

Method method_from_string(std::string_view s) {
  for (Method m : {Method::max, Method::max_t, Method::wald_asymptotic, Method::wald_normalized,
                   Method::wald_bootstrap, Method::wald_normalized_bootstrap}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigInvalid("unknown method '" + std::string(s) + "'");
}

bool is_max_family(Method m) noexcept { return m == Method::max || m == Method::max_t; }

bool is_bootstrap(Method m) noexcept {
  return is_max_family(m) || m == Method::wald_bootstrap ||
         m == Method::wald_normalized_bootstrap;
}

std::string to_json(const TestResult& r) {
  nlohmann::ordered_json j;
  j["method"] = to_string(r.method);
  j["statistic"] = r.statistic;
  j["p_value"] = nullptr;
  if (r.p_value) j["p_value"] = *r.p_value;
  j["argmax_index"] = nullptr;
  if (r.argmax_index) j["argmax_index"] = *r.argmax_index;
  j["k_used"] = r.k_used;
  j["n"] = r.n;
  return j.dump();
}

namespace {

void check_inputs(const Vector& theta, const Vector& se, WeightScheme scheme) {
  if (theta.size() == 0) throw EmptyFits("max statistic needs at least one fit");
  if (scheme != WeightScheme::inv_se) return;
  if (se.size() != theta.size()) {
    throw std::invalid_argument("max statistic: se and theta lengths differ");
  }
  for (Eigen::Index i = 0; i < se.size(); ++i) {
    if (!(se[i] > 0.0)) {
      throw NonpositiveSe("standard error of test covariate " + std::to_string(i + 1) +
                          " is not positive");
    }
  }
}

}  // namespace

double max_value(const Vector& theta, const Vector& se, WeightScheme scheme, std::size_t n) {
  check_inputs(theta, se, scheme);
  if (scheme == WeightScheme::inv_se) return theta.cwiseQuotient(se).cwiseAbs().maxCoeff();
  return std::sqrt(static_cast<double>(n)) * theta.cwiseAbs().maxCoeff();
}

TestResult max_statistic(const Vector& theta, const Vector& se, WeightScheme scheme,
                         std::size_t n) {
  check_inputs(theta, se, scheme);
  const double root_n = std::sqrt(static_cast<double>(n));
  TestResult r;
  r.method = scheme == WeightScheme::flat ? Method::max : Method::max_t;
  r.k_used = static_cast<std::size_t>(theta.size());
  r.n = n;
  r.per_index.reserve(r.k_used);
  std::size_t best = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    IndexContribution c;
    c.index = static_cast<std::size_t>(i + 1);
    c.theta = theta[i];
    c.weight = scheme == WeightScheme::flat ? 1.0 : 1.0 / (root_n * se[i]);
    // inv_se contributions are computed as |theta/se| directly so they match
    // max_value bit for bit.
    c.contribution = scheme == WeightScheme::flat ? root_n * std::abs(theta[i])
                                                  : std::abs(theta[i] / se[i]);
    if (!r.per_index.empty() && c.contribution > r.per_index[best].contribution) {
      best = r.per_index.size();
    }
    r.per_index.push_back(c);
  }
  r.statistic = r.per_index[best].contribution;
  r.argmax_index = r.per_index[best].index;
  return r;
}

TestResult max_statistic(const std::vector<ParsimoniousFit>& fits, WeightScheme scheme,
                         std::size_t n) {
  if (fits.empty()) throw EmptyFits("max statistic needs at least one fit");
  Vector theta(static_cast<Eigen::Index>(fits.size()));
  Vector se(theta.size());
  for (std::size_t i = 0; i < fits.size(); ++i) {
    theta[static_cast<Eigen::Index>(i)] = fits[i].beta.theta;
    se[static_cast<Eigen::Index>(i)] = fits[i].se_theta;
  }
  TestResult r = max_statistic(theta, se, scheme, n);
  for (std::size_t i = 0; i < fits.size(); ++i) r.per_index[i].index = fits[i].index;
  r.argmax_index = r.per_index[*r.argmax_index - 1].index;
  return r;
}

TestResult wald_statistic(const FullFit& fit, std::size_t n) {
  const auto k = static_cast<Eigen::Index>(fit.k_used);
  const auto kd = static_cast<Eigen::Index>(fit.k_delta);
  const Matrix v_tt = fit.covariance.matrix().block(kd, kd, k, k);
  const Vector theta = fit.theta();
  TestResult r;
  r.method = Method::wald_asymptotic;
  r.k_used = fit.k_used;
  r.n = n;
  if (theta.isZero(0.0)) {
    r.statistic = 0.0;
  } else {
    const Cholesky chol{SpdMatrix(v_tt)};
    r.statistic = static_cast<double>(n) * theta.dot(chol.solve(theta));
  }
  r.p_value = chisq_sf(r.statistic, fit.k_used);
  return r;
}

double normalize_wald(double w, std::size_t k) noexcept {
  const double kk = static_cast<double>(k);
  return (w - kk) / std::sqrt(2.0 * kk);
}

TestResult normalized_wald(const TestResult& wald, std::size_t k) {
  if (wald.method != Method::wald_asymptotic && wald.method != Method::wald_bootstrap) {
    throw std::invalid_argument("normalized_wald: input is not a Wald result");
  }
  if (k == 0) throw std::invalid_argument("normalized_wald: k must be positive");
  TestResult r = wald;
  r.method = wald.method == Method::wald_bootstrap ? Method::wald_normalized_bootstrap
                                                    : Method::wald_normalized;
  r.statistic = normalize_wald(wald.statistic, k);
  r.p_value = normal_sf(r.statistic);
  return r;
}

}  // namespace maxzero
