#pragma once

#include "maxzero/estimation.hpp"
#include "maxzero/inference.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace maxzero {

/// Whether max-t draws reuse the standard errors of the observed sample or
/// re-estimate them from each bootstrap sample.
enum class WeightReuse { reuse_sample_weights, recompute_per_draw };

[[nodiscard]] std::string_view to_string(WeightReuse w) noexcept;
[[nodiscard]] WeightReuse weight_reuse_from_string(std::string_view s);

struct BootstrapConfig {
  std::size_t M = 1000;
  std::uint64_t seed = 0;
  /// Draw j reads stream (seed, stream_id(replication, j)), j = 1..M.
  std::uint64_t replication = 0;
  WeightReuse weight_reuse = WeightReuse::reuse_sample_weights;
  bool record_draws = false;
  SeFlavor se = SeFlavor::robust;
  std::size_t workers = 1;
  /// More failed draws than this share of M raises BootstrapDegenerate.
  double max_failure_rate = 0.01;

  void validate() const;
};

struct BootstrapOutcome {
  double p_value = 1.0;
  double observed = 0.0;
  /// Per-draw statistics when recorded; failed draws hold NaN.
  std::optional<Vector> draws;
  std::size_t exceedances = 0;
  std::size_t valid = 0;
  std::size_t failed = 0;
  /// Every valid draw tied with the observed statistic (zero residuals, say).
  /// The p-value is then 0 by the strict inequality and means nothing.
  bool degenerate = false;
  std::optional<std::size_t> argmax_index;
};

/// Supplies the multiplier vector of draw j (1-based). Defaults to N(0,1)
/// draws from the configured stream; tests inject fixed vectors.
using MultiplierSource = std::function<Vector(std::size_t j, std::size_t n)>;

/// Restricted-residual fixed-design wild bootstrap of the max statistic.
///
/// y*_t = f(x_t, beta0_hat) + e0_t eta_t with beta0_hat the restricted fit; every
/// parsimonious model is refit on the original design and
/// p = (1/M) #{T*_j > T} with a strict inequality.
[[nodiscard]] BootstrapOutcome max_bootstrap(const Dataset& data, const ResponseModel& model,
                                             std::size_t k_used, WeightScheme scheme,
                                             const BootstrapConfig& cfg,
                                             const MultiplierSource& multipliers = {});

/// As max_bootstrap for several weight schemes sharing the same draws.
[[nodiscard]] std::vector<BootstrapOutcome> max_bootstrap_multi(
    const Dataset& data, const ResponseModel& model, std::size_t k_used,
    const std::vector<WeightScheme>& schemes, const BootstrapConfig& cfg,
    const MultiplierSource& multipliers = {});

struct WaldBootstrapOutcome {
  BootstrapOutcome wald;
  BootstrapOutcome normalized;
  /// 1{W*_j > W} and 1{W^s*_j > W^s} per draw (0 for failed draws).
  std::vector<std::uint8_t> wald_indicators;
  std::vector<std::uint8_t> normalized_indicators;
};

/// Fixed-design parametric wild bootstrap of the Wald statistic.
///
/// Residuals come from the unrestricted fit and the null is imposed through
/// the mean: y*_t = delta_hat' x_delta,t + e_t eta_t, delta_hat the nuisance
/// block of the unrestricted fit. p = (1/M) #{W*_j > W}. Linear models only.
[[nodiscard]] WaldBootstrapOutcome wald_bootstrap(const Dataset& data, const ResponseModel& model,
                                                  std::size_t k_used, const BootstrapConfig& cfg,
                                                  const MultiplierSource& multipliers = {});

/// Audit dump: header "j,statistic", one row per draw. Requires recorded draws.
void write_draws_csv(const BootstrapOutcome& outcome, std::ostream& out);

}  // namespace maxzero
