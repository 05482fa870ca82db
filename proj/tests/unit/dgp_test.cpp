#include "maxzero/dgp.hpp"
#include "maxzero/errors.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace mz = maxzero;

namespace {

mz::Matrix sample_cov(const mz::Matrix& x) {
  const mz::Matrix c = x.rowwise() - x.colwise().mean();
  return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

}  // namespace

TEST(Covariates, ZeroLoadingGivesIidColumns) {
  mz::CovariateDesign design;
  design.covariate_case = mz::CovariateCase::cross_block_dependent;
  design.k_delta = 1;
  design.k_theta = 4;
  design.loading = mz::Matrix::Zero(5, 5);
  design.scale = mz::Vector::Ones(5);
  mz::RngStream s(1, 0);
  const std::size_t n = 4000;
  const mz::Matrix x = mz::sample_covariates(design, n, s);
  const mz::Matrix c = sample_cov(x);
  const double bound = 3.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      EXPECT_NEAR(c(i, j) / std::sqrt(c(i, i) * c(j, j)), 0.0, bound);
    }
  }
}

TEST(Covariates, CrossBlockCovarianceIsLoadingProductPlusIdentity) {
  mz::DgpSpec spec;
  spec.n = 100000;
  spec.k_delta = 1;
  spec.k_theta = 3;
  spec.covariate_case = mz::CovariateCase::cross_block_dependent;
  mz::RngStream s(77, 0);
  const mz::CovariateDesign design = mz::draw_design(spec, s);
  const mz::Matrix x = mz::sample_covariates(design, spec.n, s);
  const mz::Matrix want =
      design.loading * design.loading.transpose() + mz::Matrix::Identity(4, 4);
  EXPECT_LT((design.population_covariance() - want).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((sample_cov(x) - want).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Covariates, BlockCaseKeepsBlocksIndependent) {
  mz::DgpSpec spec;
  spec.k_delta = 2;
  spec.k_theta = 3;
  spec.covariate_case = mz::CovariateCase::block_dependent;
  mz::RngStream s(5, 0);
  const mz::CovariateDesign design = mz::draw_design(spec, s);
  const mz::Matrix cov = design.population_covariance();
  EXPECT_TRUE(cov.topRightCorner(2, 3).isZero(0.0));
  EXPECT_FALSE(cov.bottomRightCorner(3, 3).isDiagonal(1e-12));
}

TEST(Covariates, GradedDispersionProfile) {
  mz::DgpSpec spec;
  spec.k_delta = 1;
  spec.k_theta = 10;
  spec.covariate_case = mz::CovariateCase::dispersion;
  spec.dispersion = mz::DispersionProfile::graded;
  mz::RngStream s(5, 0);
  const mz::Matrix cov = mz::draw_design(spec, s).population_covariance();
  EXPECT_DOUBLE_EQ(cov(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(cov(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(cov(10, 10), 101.0 - 100.0 / 10.0);
  EXPECT_DOUBLE_EQ(cov(5, 5), 1.0 + 100.0 * 4.0 / 10.0);
}

TEST(Covariates, SpikeProfiles) {
  mz::DgpSpec spec;
  spec.k_theta = 4;
  spec.covariate_case = mz::CovariateCase::dispersion;
  mz::RngStream s(5, 0);
  spec.dispersion = mz::DispersionProfile::spike10;
  EXPECT_DOUBLE_EQ(mz::draw_design(spec, s).population_covariance()(0, 0), 10.0);
  spec.dispersion = mz::DispersionProfile::spike100;
  const mz::Matrix cov = mz::draw_design(spec, s).population_covariance();
  EXPECT_DOUBLE_EQ(cov(0, 0), 100.0);
  EXPECT_DOUBLE_EQ(cov(3, 3), 1.0);
}

TEST(RepairLoading, ZeroMatrixBecomesFullRank) {
  mz::Matrix a = mz::Matrix::Zero(6, 6);
  mz::RngStream s(3, 0);
  EXPECT_GE(mz::repair_loading(a, s), 1);
  Eigen::JacobiSVD<mz::Matrix> svd(a);
  EXPECT_GT(svd.singularValues().minCoeff(), 1e-10 * svd.singularValues().maxCoeff());
}

TEST(Theta0, Alternatives) {
  mz::DgpSpec spec;
  spec.n = 100;
  spec.k_theta = 10;
  EXPECT_TRUE(mz::theta0(spec).isZero(0.0));

  spec.alternative.kind = mz::AlternativeKind::alt_i;
  mz::Vector want = mz::Vector::Zero(10);
  want[0] = 0.001;
  EXPECT_EQ(mz::theta0(spec), want);

  spec.alternative.kind = mz::AlternativeKind::alt_ii;
  EXPECT_TRUE(mz::theta0(spec).isApprox(mz::Vector::LinSpaced(10, 0.1, 1.0), 1e-15));

  spec.alternative.kind = mz::AlternativeKind::alt_iii;
  EXPECT_EQ(mz::theta0(spec), mz::Vector::Constant(10, 0.001));

  spec.alternative.kind = mz::AlternativeKind::local;
  spec.alternative.values = mz::Vector::Unit(1, 0);
  EXPECT_DOUBLE_EQ(mz::theta0(spec)[0], 0.1);
  EXPECT_EQ(mz::theta0(spec).tail(9), mz::Vector::Zero(9));

  spec.k_theta = 12;
  spec.alternative.kind = mz::AlternativeKind::custom;
  spec.alternative.values = mz::Vector::LinSpaced(10, 0.5, 5.0);
  const mz::Vector halves = mz::theta0(spec);
  EXPECT_EQ(halves.head(10), spec.alternative.values);
  EXPECT_EQ(halves.tail(2), mz::Vector::Zero(2));
}

TEST(DgpSpec, ValidationCatchesBadDimensions) {
  mz::DgpSpec spec;
  spec.n = 5;
  spec.k_delta = 4;
  EXPECT_THROW(spec.validate(), mz::ConfigInvalid);
  spec = {};
  spec.k_theta = 0;
  EXPECT_THROW(spec.validate(), mz::ConfigInvalid);
  spec = {};
  spec.k_delta = 2;
  spec.delta0 = mz::Vector::Ones(3);
  EXPECT_THROW(spec.validate(), mz::ConfigInvalid);
  spec = {};
  spec.alternative.kind = mz::AlternativeKind::custom;
  EXPECT_THROW(spec.validate(), mz::ConfigInvalid);
}

TEST(GenDataset, NullResponseIsNoise) {
  mz::DgpSpec spec;
  spec.n = 2000;
  spec.k_delta = 0;
  mz::RngStream s(8, 0);
  const mz::Dataset d = mz::gen_dataset(spec, s);
  EXPECT_NEAR(d.y().mean(), 0.0, 3.0 / std::sqrt(2000.0));
}

TEST(GenDataset, SameStreamSameData) {
  mz::DgpSpec spec;
  spec.n = 60;
  spec.k_delta = 2;
  spec.k_theta = 7;
  spec.alternative.kind = mz::AlternativeKind::alt_ii;
  mz::RngStream a(99, mz::stream_id(4, 0));
  mz::RngStream b(99, mz::stream_id(4, 0));
  const mz::Dataset da = mz::gen_dataset(spec, a);
  const mz::Dataset db = mz::gen_dataset(spec, b);
  EXPECT_EQ(da.y(), db.y());
  EXPECT_EQ(da.x_delta(), db.x_delta());
  EXPECT_EQ(da.x_theta(), db.x_theta());
}

TEST(GenDataset, TrueDesignRegressionRecoversParameters) {
  mz::DgpSpec spec;
  spec.n = 200;
  spec.k_delta = 2;
  spec.k_theta = 4;
  spec.alternative.kind = mz::AlternativeKind::alt_ii;
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    mz::RngStream s(seed, 0);
    const mz::GeneratedData g = mz::gen_draw(spec, s);
    mz::Matrix x(spec.n, 6);
    x << g.data.x_delta(), g.data.x_theta();
    const mz::Matrix xtx_inv = (x.transpose() * x).inverse();
    const mz::Vector b = xtx_inv * x.transpose() * g.data.y();
    const mz::Vector e = g.data.y() - x * b;
    const double s2 = e.squaredNorm() / static_cast<double>(spec.n - 6);
    mz::Vector truth(6);
    truth << spec.resolved_delta0(), g.theta0;
    bool ok = true;
    for (Eigen::Index c = 0; c < 6; ++c) {
      ok = ok && std::abs(b[c] - truth[c]) <= 4.0 * std::sqrt(s2 * xtx_inv(c, c));
    }
    inside += ok ? 1 : 0;
  }
  EXPECT_GE(inside, 95);
}

TEST(DgpSpec, JsonRoundTrip) {
  mz::DgpSpec spec;
  spec.n = 321;
  spec.k_delta = 2;
  spec.k_theta = 6;
  spec.covariate_case = mz::CovariateCase::dispersion;
  spec.dispersion = mz::DispersionProfile::spike100;
  spec.delta0 = mz::Vector::LinSpaced(2, -1.0, 0.25);
  spec.alternative.kind = mz::AlternativeKind::custom;
  spec.alternative.values = mz::Vector::LinSpaced(3, 0.1, 0.3);
  spec.seed = 17;
  const mz::DgpSpec back = mz::dgp_spec_from_json(mz::dgp_spec_to_json(spec));
  EXPECT_EQ(back.n, spec.n);
  EXPECT_EQ(back.k_delta, spec.k_delta);
  EXPECT_EQ(back.k_theta, spec.k_theta);
  EXPECT_EQ(back.covariate_case, spec.covariate_case);
  EXPECT_EQ(back.dispersion, spec.dispersion);
  EXPECT_EQ(back.delta0, spec.delta0);
  EXPECT_EQ(back.alternative.kind, spec.alternative.kind);
  EXPECT_EQ(back.alternative.values, spec.alternative.values);
  EXPECT_EQ(back.seed, spec.seed);
}

TEST(DgpNames, ShortAliases) {
  EXPECT_EQ(mz::alternative_from_string("ii"), mz::AlternativeKind::alt_ii);
  EXPECT_EQ(mz::dispersion_from_string("b"), mz::DispersionProfile::spike10);
  EXPECT_THROW((void)mz::covariate_case_from_string("four"), mz::ConfigInvalid);
}
