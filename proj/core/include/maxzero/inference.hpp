#pragma once

#include "maxzero/estimation.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace maxzero {

enum class WeightScheme {
  flat,    ///< W_i = 1
  inv_se,  ///< W_i = 1 / (sqrt(n) se_i), so contributions are |t_i|
};

enum class Method {
  max,                        ///< flat-weight max-test, bootstrapped
  max_t,                      ///< inverse-se max-test, bootstrapped
  wald_asymptotic,            ///< chi-square(k) tail
  wald_normalized,            ///< (W - k) / sqrt(2k) against N(0,1)
  wald_bootstrap,             ///< fixed-design parametric wild bootstrap
  wald_normalized_bootstrap,  ///< same draws, normalized statistic
};

[[nodiscard]] std::string_view to_string(WeightScheme w) noexcept;
[[nodiscard]] std::string_view to_string(Method m) noexcept;
/// Accepts "flat"/"inv_se", plus the CLI spelling "tstat" for inv_se.
[[nodiscard]] WeightScheme weight_scheme_from_string(std::string_view s);
[[nodiscard]] Method method_from_string(std::string_view s);
[[nodiscard]] bool is_max_family(Method m) noexcept;
[[nodiscard]] bool is_bootstrap(Method m) noexcept;

struct IndexContribution {
  std::size_t index = 0;
  double theta = 0.0;
  double weight = 0.0;
  double contribution = 0.0;
};

struct TestResult {
  Method method = Method::max;
  double statistic = 0.0;
  std::optional<double> p_value;
  std::optional<std::size_t> argmax_index;
  std::size_t k_used = 0;
  std::size_t n = 0;
  std::vector<IndexContribution> per_index;
};

/// JSON object with exactly: method, statistic, p_value, argmax_index, k_used, n.
/// Absent optionals are written as null.
[[nodiscard]] std::string to_json(const TestResult& r);

/// T = max_i |sqrt(n) W_i theta_i| with the smallest index winning ties.
/// Throws EmptyFits, and NonpositiveSe for inv_se with some se_i <= 0.
[[nodiscard]] TestResult max_statistic(const std::vector<ParsimoniousFit>& fits,
                                       WeightScheme scheme, std::size_t n);

/// Same from plain vectors; index i of `theta` is test covariate i + 1.
/// `se` may be empty for the flat scheme.
[[nodiscard]] TestResult max_statistic(const Vector& theta, const Vector& se, WeightScheme scheme,
                                       std::size_t n);

/// Statistic value only; no allocation. Used inside bootstrap loops.
[[nodiscard]] double max_value(const Vector& theta, const Vector& se, WeightScheme scheme,
                               std::size_t n);

/// W = n theta' [V_thetatheta]^-1 theta with p = P(chi2_k > W).
[[nodiscard]] TestResult wald_statistic(const FullFit& fit, std::size_t n);

/// W^s = (W - k) / sqrt(2k), p = P(N(0,1) > W^s).
[[nodiscard]] double normalize_wald(double w, std::size_t k) noexcept;
[[nodiscard]] TestResult normalized_wald(const TestResult& wald, std::size_t k);

}  // namespace maxzero
