#include "maxzero/bootstrap.hpp"

#include "maxzero/dataset_io.hpp"
#include "maxzero/errors.hpp"
#include "maxzero/parallel.hpp"
#include "maxzero/rng.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace maxzero {

std::string_view to_string(WeightReuse w) noexcept {
  return w == WeightReuse::reuse_sample_weights ? "reuse_sample_weights" : "recompute_per_draw";
}

WeightReuse weight_reuse_from_string(std::string_view s) {
  if (s == "reuse_sample_weights") return WeightReuse::reuse_sample_weights;
  if (s == "recompute_per_draw") return WeightReuse::recompute_per_draw;
  throw ConfigInvalid("unknown weight_reuse '" + std::string(s) + "'");
}

void BootstrapConfig::validate() const {
  if (M < 1) throw ConfigInvalid("bootstrap: M must be >= 1");
  if (!(max_failure_rate >= 0.0 && max_failure_rate < 1.0)) {
    throw ConfigInvalid("bootstrap: max_failure_rate must lie in [0, 1)");
  }
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vector multipliers_for(const BootstrapConfig& cfg, const MultiplierSource& source, std::size_t j,
                       std::size_t n) {
  if (source) {
    Vector eta = source(j, n);
    if (static_cast<std::size_t>(eta.size()) != n) {
      throw std::invalid_argument("multiplier source returned the wrong length");
    }
    return eta;
  }
  RngStream stream(cfg.seed, stream_id(cfg.replication, j));
  return draw_std_normals(stream, n);
}

// Tallies draws against the observed value. `stats` holds one value per draw,
// NaN for failures.
BootstrapOutcome tally(double observed, const Vector& stats, const BootstrapConfig& cfg) {
  BootstrapOutcome out;
  out.observed = observed;
  std::size_t ties = 0;
  for (Eigen::Index j = 0; j < stats.size(); ++j) {
    const double s = stats[j];
    if (std::isnan(s)) {
      ++out.failed;
      continue;
    }
    ++out.valid;
    if (s > observed) ++out.exceedances;
    if (s == observed) ++ties;
  }
  if (static_cast<double>(out.failed) > cfg.max_failure_rate * static_cast<double>(cfg.M)) {
    throw BootstrapDegenerate(std::to_string(out.failed) + " of " + std::to_string(cfg.M) +
                              " bootstrap draws failed");
  }
  out.p_value = static_cast<double>(out.exceedances) / static_cast<double>(out.valid);
  out.degenerate = ties == out.valid;
  if (cfg.record_draws) out.draws = stats;
  return out;
}

}  // namespace

std::vector<BootstrapOutcome> max_bootstrap_multi(const Dataset& data, const ResponseModel& model,
                                                  std::size_t k_used,
                                                  const std::vector<WeightScheme>& schemes,
                                                  const BootstrapConfig& cfg,
                                                  const MultiplierSource& multipliers) {
  cfg.validate();
  if (k_used < 1) throw EmptyFits("max bootstrap needs k_used >= 1");
  if (schemes.empty()) return {};
  const std::size_t n = data.n();
  const std::size_t S = schemes.size();
  bool any_inv_se = false;
  for (WeightScheme s : schemes) any_inv_se = any_inv_se || s == WeightScheme::inv_se;
  const bool redo_se = any_inv_se && cfg.weight_reuse == WeightReuse::recompute_per_draw;

  const RestrictedFit restricted = fit_restricted(data, model);

  // Observed statistics and sample standard errors.
  std::optional<ParsimoniousBank> bank;
  Vector theta_obs;
  Vector se_obs;
  if (model.is_linear()) {
    bank.emplace(data, k_used);
    const auto est = bank->fit(data.y(), cfg.se);
    theta_obs = est.theta;
    se_obs = est.se;
  } else {
    const auto fits = fit_all_parsimonious(data, model, k_used, cfg.se);
    theta_obs.resize(static_cast<Eigen::Index>(k_used));
    se_obs.resize(theta_obs.size());
    for (std::size_t i = 0; i < k_used; ++i) {
      theta_obs[static_cast<Eigen::Index>(i)] = fits[i].beta.theta;
      se_obs[static_cast<Eigen::Index>(i)] = fits[i].se_theta;
    }
  }
  std::vector<TestResult> observed;
  observed.reserve(S);
  for (WeightScheme s : schemes) observed.push_back(max_statistic(theta_obs, se_obs, s, n));

  Matrix stats(static_cast<Eigen::Index>(cfg.M), static_cast<Eigen::Index>(S));
  parallel_for(cfg.M, cfg.workers, [&](std::size_t jj) {
    const std::size_t j = jj + 1;
    const auto row = static_cast<Eigen::Index>(jj);
    try {
      const Vector eta = multipliers_for(cfg, multipliers, j, n);
      const Vector y_star = restricted.fitted + restricted.residuals.cwiseProduct(eta);
      Vector theta;
      Vector se;
      if (bank) {
        ParsimoniousBank::Estimates est;
        bank->fit(y_star, cfg.se, redo_se, est);
        theta = std::move(est.theta);
        se = std::move(est.se);
      } else {
        const Dataset star = data.with_response(y_star);
        theta.resize(static_cast<Eigen::Index>(k_used));
        se.resize(theta.size());
        for (std::size_t i = 1; i <= k_used; ++i) {
          const ParsimoniousFit fit = fit_parsimonious(star, model, i, cfg.se);
          theta[static_cast<Eigen::Index>(i - 1)] = fit.beta.theta;
          se[static_cast<Eigen::Index>(i - 1)] = fit.se_theta;
        }
      }
      for (std::size_t s = 0; s < S; ++s) {
        const bool own_se = redo_se && schemes[s] == WeightScheme::inv_se;
        stats(row, static_cast<Eigen::Index>(s)) =
            max_value(theta, own_se ? se : se_obs, schemes[s], n);
      }
    } catch (const Error&) {
      stats.row(row).setConstant(kNaN);
    }
  });

  std::vector<BootstrapOutcome> out;
  out.reserve(S);
  for (std::size_t s = 0; s < S; ++s) {
    BootstrapOutcome o = tally(observed[s].statistic, stats.col(static_cast<Eigen::Index>(s)), cfg);
    o.argmax_index = observed[s].argmax_index;
    out.push_back(std::move(o));
  }
  return out;
}

BootstrapOutcome max_bootstrap(const Dataset& data, const ResponseModel& model,
                               std::size_t k_used, WeightScheme scheme,
                               const BootstrapConfig& cfg, const MultiplierSource& multipliers) {
  return max_bootstrap_multi(data, model, k_used, {scheme}, cfg, multipliers).front();
}

WaldBootstrapOutcome wald_bootstrap(const Dataset& data, const ResponseModel& model,
                                    std::size_t k_used, const BootstrapConfig& cfg,
                                    const MultiplierSource& multipliers) {
  cfg.validate();
  if (!model.is_linear()) {
    throw std::invalid_argument("wald_bootstrap: only linear response models are supported");
  }
  const std::size_t n = data.n();
  const WaldBank bank(data, k_used);
  const auto observed = bank.fit(data.y(), cfg.se);
  const auto kd = static_cast<Eigen::Index>(data.k_delta());
  // Null-imposed mean: nuisance block of the unrestricted fit only.
  const Vector mean = data.x_delta() * observed.beta.head(kd);
  const Vector& resid = observed.residuals;

  Vector draws(static_cast<Eigen::Index>(cfg.M));
  parallel_for(cfg.M, cfg.workers, [&](std::size_t jj) {
    try {
      const Vector eta = multipliers_for(cfg, multipliers, jj + 1, n);
      WaldBank::Estimates est;
      bank.fit(mean + resid.cwiseProduct(eta), cfg.se, est);
      draws[static_cast<Eigen::Index>(jj)] = est.wald;
    } catch (const Error&) {
      draws[static_cast<Eigen::Index>(jj)] = kNaN;
    }
  });

  WaldBootstrapOutcome out;
  out.wald = tally(observed.wald, draws, cfg);
  const double observed_s = normalize_wald(observed.wald, k_used);
  Vector normalized = draws;
  for (Eigen::Index j = 0; j < normalized.size(); ++j) {
    if (!std::isnan(normalized[j])) normalized[j] = normalize_wald(normalized[j], k_used);
  }
  out.normalized = tally(observed_s, normalized, cfg);
  out.wald_indicators.resize(cfg.M);
  out.normalized_indicators.resize(cfg.M);
  for (std::size_t j = 0; j < cfg.M; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    out.wald_indicators[j] = draws[jj] > observed.wald ? 1 : 0;
    out.normalized_indicators[j] = normalized[jj] > observed_s ? 1 : 0;
  }
  return out;
}

void write_draws_csv(const BootstrapOutcome& outcome, std::ostream& out) {
  if (!outcome.draws) throw std::invalid_argument("write_draws_csv: draws were not recorded");
  out << "j,statistic\n";
  const Vector& d = *outcome.draws;
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    out << (j + 1) << ',' << (std::isnan(d[j]) ? std::string("nan") : format_double(d[j]))
        << '\n';
  }
  if (!out) throw IoError("failed writing bootstrap draws");
}

}  // namespace maxzero
