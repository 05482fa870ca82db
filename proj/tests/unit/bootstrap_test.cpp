#include "maxzero/bootstrap.hpp"
#include "maxzero/errors.hpp"
#include "maxzero/rng.hpp"

#include "models.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

namespace mz = maxzero;

namespace {

mz::Dataset random_dataset(oracle::Draws& rng, Eigen::Index n, Eigen::Index kd, Eigen::Index kt,
                           double signal) {
  mz::Matrix xd = rng.normal_matrix(n, kd);
  if (kd > 0) xd.col(0).setOnes();
  const mz::Matrix xt = rng.normal_matrix(n, kt);
  mz::Vector y = rng.normal_vector(n) + signal * xt.col(0);
  if (kd > 0) y += xd * mz::Vector::Ones(kd);
  return {y, xd, xt};
}

mz::MultiplierSource constant_multipliers(double value) {
  return [value](std::size_t, std::size_t n) {
    return mz::Vector::Constant(static_cast<Eigen::Index>(n), value);
  };
}

}  // namespace

TEST(MaxBootstrap, TwoDrawsByHand) {
  mz::Matrix xt(6, 2);
  xt << 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1;
  mz::Vector y(6);
  y << 1, 2, -1, 0, 1, 1;
  const mz::Dataset d(y, mz::Matrix(6, 0), xt);
  // No nuisance block: y* = y * eta.
  //   observed: theta = (1/3, 1), T_flat = sqrt(6)
  //             robust se = (sqrt(24)/9, sqrt(2)/3), T_t = 3/sqrt(2)
  //   eta_1 = 2:             theta* = (2/3, 2)    -> both statistics double: exceed
  //   eta_2 = (1,-1,1,1,1,1): theta* = (1/3, -1/3) -> T_flat = sqrt(6)/3,
  //                                                   T_t = max(3/sqrt(24), 1/sqrt(2)): below
  const mz::MultiplierSource eta = [](std::size_t j, std::size_t n) {
    mz::Vector e = mz::Vector::Ones(static_cast<Eigen::Index>(n));
    if (j == 1) e *= 2.0;
    if (j == 2) e[1] = -1.0;
    return e;
  };
  mz::BootstrapConfig cfg;
  cfg.M = 2;
  cfg.record_draws = true;
  const auto out = mz::max_bootstrap_multi(d, mz::LinearResponse(0), 2,
                                           {mz::WeightScheme::flat, mz::WeightScheme::inv_se},
                                           cfg, eta);
  const double r6 = std::sqrt(6.0);
  EXPECT_NEAR(out[0].observed, r6, 1e-14);
  EXPECT_NEAR((*out[0].draws)[0], 2.0 * r6, 1e-14);
  EXPECT_NEAR((*out[0].draws)[1], r6 / 3.0, 1e-14);
  EXPECT_EQ(out[0].p_value, 0.5);
  EXPECT_NEAR(out[1].observed, 3.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR((*out[1].draws)[0], 6.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR((*out[1].draws)[1], 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_EQ(out[1].p_value, 0.5);
  EXPECT_EQ(*out[1].argmax_index, 2u);
}

TEST(MaxBootstrap, ZeroResidualsAreFlaggedDegenerate) {
  oracle::Draws rng(41);
  const mz::Dataset d(mz::Vector::Zero(20), mz::Matrix(20, 0), rng.normal_matrix(20, 3));
  mz::BootstrapConfig cfg;
  cfg.M = 50;
  const auto out = mz::max_bootstrap(d, mz::LinearResponse(0), 3, mz::WeightScheme::flat, cfg);
  EXPECT_EQ(out.observed, 0.0);
  EXPECT_EQ(out.p_value, 0.0);
  EXPECT_TRUE(out.degenerate);
}

TEST(MaxBootstrap, PValueCountsStrictExceedances) {
  oracle::Draws rng(42);
  const mz::Dataset d = random_dataset(rng, 60, 2, 8, 0.1);
  mz::BootstrapConfig cfg;
  cfg.M = 300;
  cfg.seed = 5;
  cfg.record_draws = true;
  for (auto scheme : {mz::WeightScheme::flat, mz::WeightScheme::inv_se}) {
    const auto out = mz::max_bootstrap(d, mz::LinearResponse(2), 8, scheme, cfg);
    const auto& draws = *out.draws;
    const auto above = (draws.array() > out.observed).count();
    EXPECT_EQ(out.p_value, static_cast<double>(above) / 300.0);
    EXPECT_EQ(out.valid, 300u);
    EXPECT_FALSE(out.degenerate);
  }
}

TEST(MaxBootstrap, MeanComesFromRestrictedFit) {
  oracle::Draws rng(43);
  const mz::Dataset d = random_dataset(rng, 80, 2, 5, 3.0);
  mz::BootstrapConfig cfg;
  cfg.M = 3;
  cfg.record_draws = true;
  // eta = 0 leaves only the restricted mean, which carries no theta signal.
  const auto out = mz::max_bootstrap(d, mz::LinearResponse(2), 5, mz::WeightScheme::flat, cfg,
                                     constant_multipliers(0.0));
  EXPECT_GT(out.observed, 10.0);
  EXPECT_LT(out.draws->cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MaxBootstrap, RestrictedFitIgnoresTestBlock) {
  oracle::Draws rng(44);
  const mz::Dataset d = random_dataset(rng, 40, 3, 4, 1.0);
  const mz::Dataset garbage(d.y(), d.x_delta(), rng.normal_matrix(40, 4) * 1e6);
  const auto a = mz::fit_restricted(d, mz::LinearResponse(3));
  const auto b = mz::fit_restricted(garbage, mz::LinearResponse(3));
  EXPECT_EQ(a.fitted, b.fitted);
  EXPECT_EQ(a.residuals, b.residuals);
}

TEST(MaxBootstrap, WorkerCountDoesNotMatter) {
  oracle::Draws rng(45);
  const mz::Dataset d = random_dataset(rng, 70, 1, 6, 0.0);
  mz::BootstrapConfig cfg;
  cfg.M = 257;
  cfg.seed = 99;
  cfg.replication = 12;
  cfg.record_draws = true;
  cfg.workers = 1;
  const auto one = mz::max_bootstrap(d, mz::LinearResponse(1), 6, mz::WeightScheme::inv_se, cfg);
  cfg.workers = 5;
  const auto many = mz::max_bootstrap(d, mz::LinearResponse(1), 6, mz::WeightScheme::inv_se, cfg);
  EXPECT_EQ(*one.draws, *many.draws);
  EXPECT_EQ(one.p_value, many.p_value);
}

TEST(MaxBootstrap, DrawsReadTheirOwnStreams) {
  oracle::Draws rng(46);
  const mz::Dataset d = random_dataset(rng, 30, 0, 3, 0.0);
  mz::BootstrapConfig cfg;
  cfg.M = 4;
  cfg.seed = 8;
  cfg.replication = 3;
  cfg.record_draws = true;
  const auto lib = mz::max_bootstrap(d, mz::LinearResponse(0), 3, mz::WeightScheme::flat, cfg);
  const mz::MultiplierSource explicit_streams = [](std::size_t j, std::size_t n) {
    mz::RngStream s(8, mz::stream_id(3, j));
    return mz::draw_std_normals(s, n);
  };
  const auto mine = mz::max_bootstrap(d, mz::LinearResponse(0), 3, mz::WeightScheme::flat, cfg,
                                      explicit_streams);
  EXPECT_EQ(*lib.draws, *mine.draws);
}

TEST(MaxBootstrap, RecomputedWeightsDiffer) {
  oracle::Draws rng(47);
  const mz::Dataset d = random_dataset(rng, 50, 1, 5, 0.0);
  mz::BootstrapConfig cfg;
  cfg.M = 100;
  cfg.record_draws = true;
  const auto reuse = mz::max_bootstrap(d, mz::LinearResponse(1), 5, mz::WeightScheme::inv_se, cfg);
  cfg.weight_reuse = mz::WeightReuse::recompute_per_draw;
  const auto redo = mz::max_bootstrap(d, mz::LinearResponse(1), 5, mz::WeightScheme::inv_se, cfg);
  EXPECT_EQ(reuse.observed, redo.observed);
  EXPECT_NE(*reuse.draws, *redo.draws);
}

TEST(MaxBootstrap, NonlinearModelPath) {
  oracle::Draws rng(48);
  mz::Matrix xd = mz::Matrix::Ones(40, 1);
  const mz::Matrix xt = rng.normal_matrix(40, 3) * 0.5;
  const mz::Dataset d(mz::Vector::Ones(40) + 0.3 * rng.normal_vector(40), xd, xt);
  mz::BootstrapConfig cfg;
  cfg.M = 40;
  const testing_models::ExpResponse model(1);
  const auto a = mz::max_bootstrap(d, model, 3, mz::WeightScheme::inv_se, cfg);
  cfg.workers = 3;
  const auto b = mz::max_bootstrap(d, model, 3, mz::WeightScheme::inv_se, cfg);
  EXPECT_GE(a.p_value, 0.0);
  EXPECT_LE(a.p_value, 1.0);
  EXPECT_EQ(a.p_value, b.p_value);
  EXPECT_EQ(a.valid, 40u);
}

TEST(BootstrapConfig, Validation) {
  mz::BootstrapConfig cfg;
  cfg.M = 0;
  EXPECT_THROW(cfg.validate(), mz::ConfigInvalid);
  EXPECT_THROW(mz::weight_reuse_from_string("sometimes"), mz::ConfigInvalid);
}

TEST(WaldBootstrap, MeanExcludesTheTestBlock) {
  oracle::Draws rng(49);
  const mz::Dataset d = random_dataset(rng, 60, 2, 4, 2.0);
  mz::BootstrapConfig cfg;
  cfg.M = 2;
  cfg.record_draws = true;
  cfg.se = mz::SeFlavor::homoskedastic;
  // eta = 1 rebuilds y minus the fitted test-block part, so theta* vanishes.
  const auto out = mz::wald_bootstrap(d, mz::LinearResponse(2), 4, cfg, constant_multipliers(1.0));
  EXPECT_GT(out.wald.observed, 50.0);
  EXPECT_LT(out.wald.draws->cwiseAbs().maxCoeff(), 1e-20 * out.wald.observed + 1e-18);
}

TEST(WaldBootstrap, NormalizedIndicatorsMatch) {
  oracle::Draws rng(50);
  for (int rep = 0; rep < 20; ++rep) {
    const mz::Dataset d = random_dataset(rng, 60, 1, 10, rep % 2 == 0 ? 0.0 : 0.4);
    mz::BootstrapConfig cfg;
    cfg.M = 200;
    cfg.seed = static_cast<std::uint64_t>(rep);
    const auto out = mz::wald_bootstrap(d, mz::LinearResponse(1), 10, cfg);
    EXPECT_EQ(out.wald_indicators, out.normalized_indicators);
    EXPECT_EQ(out.wald.p_value, out.normalized.p_value);
    const auto hits = std::count(out.wald_indicators.begin(), out.wald_indicators.end(), 1);
    EXPECT_EQ(out.wald.p_value, static_cast<double>(hits) / 200.0);
  }
}

TEST(WaldBootstrap, FailedDrawsAreBudgeted) {
  oracle::Draws rng(51);
  const mz::Dataset d = random_dataset(rng, 40, 1, 3, 0.0);
  mz::BootstrapConfig cfg;
  cfg.M = 200;
  cfg.se = mz::SeFlavor::homoskedastic;
  cfg.record_draws = true;
  // A NaN multiplier poisons the refit, which is how a draw fails.
  auto poison_first = [](std::size_t failing) -> mz::MultiplierSource {
    return [failing](std::size_t j, std::size_t n) {
      if (j <= failing) {
        return mz::Vector::Constant(static_cast<Eigen::Index>(n),
                                    std::numeric_limits<double>::quiet_NaN())
            .eval();
      }
      mz::RngStream s(1, j);
      return mz::draw_std_normals(s, n);
    };
  };
  const auto ok = mz::wald_bootstrap(d, mz::LinearResponse(1), 3, cfg, poison_first(2));
  EXPECT_EQ(ok.wald.failed, 2u);
  EXPECT_EQ(ok.wald.valid, 198u);
  EXPECT_TRUE(std::isnan((*ok.wald.draws)[0]));
  EXPECT_EQ(ok.wald.p_value, static_cast<double>(ok.wald.exceedances) / 198.0);
  EXPECT_THROW((void)mz::wald_bootstrap(d, mz::LinearResponse(1), 3, cfg, poison_first(3)),
               mz::BootstrapDegenerate);
}

TEST(WaldBootstrap, SingleRestrictionAgreesWithMaxT) {
  oracle::Draws rng(52);
  int agree = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const mz::Dataset d = random_dataset(rng, 80, 2, 1, 0.05 * (rep % 7));
    mz::BootstrapConfig cfg;
    cfg.M = 499;
    cfg.seed = static_cast<std::uint64_t>(rep) + 100;
    cfg.se = mz::SeFlavor::homoskedastic;
    const auto w = mz::wald_bootstrap(d, mz::LinearResponse(2), 1, cfg);
    const auto m = mz::max_bootstrap(d, mz::LinearResponse(2), 1, mz::WeightScheme::inv_se, cfg);
    agree += (w.wald.p_value < 0.05) == (m.p_value < 0.05) ? 1 : 0;
  }
  EXPECT_GE(agree, 45);
}

TEST(WriteDrawsCsv, OneRowPerDraw) {
  mz::BootstrapOutcome o;
  o.draws = (mz::Vector(3) << 1.5, std::numeric_limits<double>::quiet_NaN(), 0.25).finished();
  std::ostringstream out;
  mz::write_draws_csv(o, out);
  EXPECT_EQ(out.str(), "j,statistic\n1,1.5\n2,nan\n3,0.25\n");
  o.draws.reset();
  EXPECT_THROW(mz::write_draws_csv(o, out), std::invalid_argument);
}
