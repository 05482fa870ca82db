#include "maxzero/errors.hpp"
#include "maxzero/numerics.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace mz = maxzero;

TEST(SolveSpd, IdentityReturnsRhs) {
  const mz::SpdMatrix a(Eigen::Matrix3d::Identity());
  const Eigen::Vector3d b(1, 2, 3);
  EXPECT_EQ(mz::solve_spd(a, b), Eigen::VectorXd(b));
}

TEST(SolveSpd, TwoByTwoMatchesCramer) {
  Eigen::Matrix2d m;
  m << 4, 2, 2, 3;
  const auto x = mz::solve_spd(mz::SpdMatrix(m), Eigen::Vector2d(2, 1));
  const auto want = oracle::cramer2(4, 2, 2, 3, 2, 1);
  EXPECT_NEAR(x[0], want[0], 1e-15);
  EXPECT_NEAR(x[1], want[1], 1e-15);
  EXPECT_NEAR(x[0], 0.5, 1e-15);
  EXPECT_NEAR(x[1], 0.0, 1e-15);
}

TEST(SolveSpd, RankOneIsRejected) {
  Eigen::Matrix2d m;
  m << 1, 1, 1, 1;
  EXPECT_THROW((void)mz::solve_spd(mz::SpdMatrix(m), Eigen::Vector2d(1, 1)),
               mz::NonPositiveDefinite);
}

TEST(SolveSpd, AsymmetricInputIsRejected) {
  Eigen::Matrix2d m;
  m << 2, 1, 0, 2;
  EXPECT_THROW(mz::SpdMatrix{m}, std::invalid_argument);
}

TEST(SolveSpd, ResidualBoundOnRandomSystems) {
  oracle::Draws rng(11);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto dim = static_cast<Eigen::Index>(rng.integer(1, 50));
    const Eigen::MatrixXd m = rng.normal_matrix(dim, dim);
    const Eigen::MatrixXd a = m.transpose() * m + Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::VectorXd b = rng.normal_vector(dim);
    const mz::SpdMatrix spd(a);
    const Eigen::VectorXd x = mz::solve_spd(spd, b);
    const Eigen::VectorXd r = spd.matrix() * x - b;
    const double norm_a = spd.matrix().cwiseAbs().rowwise().sum().maxCoeff();
    const double bound =
        1e-10 * (norm_a * x.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff());
    ASSERT_LE(r.cwiseAbs().maxCoeff(), bound) << "dim " << dim << " rep " << rep;
  }
}

TEST(Gram, IsExactlySymmetric) {
  oracle::Draws rng(3);
  const Eigen::MatrixXd x = rng.normal_matrix(40, 7);
  const mz::SpdMatrix g = mz::gram(x);
  EXPECT_TRUE(g.matrix() == g.matrix().transpose());
  EXPECT_LT((g.matrix() - x.transpose() * x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ChisqSf, ZeroHasFullMass) { EXPECT_EQ(mz::chisq_sf(0.0, 5), 1.0); }

TEST(ChisqSf, FivePercentPointOneDf) {
  EXPECT_NEAR(oracle::chisq_sf(3.8414588, 1), 0.05, 1e-6);
  EXPECT_NEAR(mz::chisq_sf(3.8414588, 1), 0.05, 1e-6);
}

TEST(ChisqSf, InfinityHasNoMass) {
  EXPECT_EQ(mz::chisq_sf(std::numeric_limits<double>::infinity(), 4), 0.0);
}

TEST(ChisqSf, TwoDfClosedForm) {
  for (double x = 0.0; x <= 50.0; x += 0.125) {
    ASSERT_NEAR(mz::chisq_sf(x, 2), std::exp(-x / 2.0), 1e-12) << x;
  }
}

TEST(ChisqSf, MatchesIndependentIncompleteGamma) {
  for (int df : {1, 2, 3, 5, 10, 35, 79, 158}) {
    for (double x : {0.01, 0.5, 1.0, 3.0, 7.5, 20.0, 60.0, 150.0, 300.0}) {
      ASSERT_NEAR(mz::chisq_sf(x, static_cast<std::size_t>(df)), oracle::chisq_sf(x, df), 1e-10)
          << "df " << df << " x " << x;
    }
  }
}

TEST(NormalSf, Symmetry) {
  EXPECT_EQ(mz::normal_sf(0.0), 0.5);
  for (double z : {0.1, 0.7, 1.3, 2.9, 5.0}) {
    EXPECT_NEAR(mz::normal_sf(z) + mz::normal_sf(-z), 1.0, 1e-15);
  }
}

TEST(NormalSf, MatchesErfcSeries) {
  EXPECT_NEAR(oracle::normal_sf(1.6448536), 0.05, 1e-6);
  EXPECT_NEAR(mz::normal_sf(1.6448536), 0.05, 1e-6);
  for (double z = -4.0; z <= 4.0; z += 0.05) {
    ASSERT_NEAR(mz::normal_sf(z), oracle::normal_sf(z), 1e-12) << z;
  }
}

TEST(NormalQuantile, InvertsSurvival) {
  for (double p : {1e-10, 1e-4, 0.01, 0.05, 0.3, 0.5, 0.77, 0.99, 1 - 1e-9}) {
    EXPECT_NEAR(mz::normal_sf(-mz::normal_quantile(p)), p, 1e-12 + 1e-9 * p) << p;
  }
}
