#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace lqgame;
using lqtest::random_mat;
using lqtest::random_stable;

TEST(MakeMat, RowMajorOrder) {
  const Mat m = make_mat(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m(0, 2), 3.0);
  EXPECT_EQ(m(1, 0), 4.0);
}

TEST(MakeMat, RejectsCountMismatchAndNonFinite) {
  EXPECT_THROW(make_mat(2, 2, {1, 2, 3}), DimensionError);
  EXPECT_THROW(make_mat(1, 2, {1, std::nan("")}), ContractError);
}

TEST(SymMat, RepairsSmallDefectRejectsLarge) {
  Mat m = make_mat(2, 2, {2, 1, 1 + 1e-14, 3});
  SymMat s(m);
  EXPECT_EQ(s(0, 1), s(1, 0));
  m(1, 0) = 1.1;
  EXPECT_THROW(SymMat{m}, ContractError);
  EXPECT_THROW(SymMat{Mat(2, 3)}, DimensionError);
}

TEST(SpectralRadius, Examples) {
  EXPECT_NEAR(spectral_radius(Mat::Identity(3, 3)), 1.0, 1e-14);
  EXPECT_NEAR(spectral_radius(make_mat(2, 2, {0.5, 0, 0, -0.8})), 0.8, 1e-14);
  EXPECT_NEAR(spectral_radius(make_mat(2, 2, {0, 1, -0.25, 0})), 0.5, 1e-12);
  EXPECT_THROW(spectral_radius(Mat(2, 3)), DimensionError);
}

TEST(SpectralRadius, HomogeneousInScale) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const Mat m = random_mat(rng, 4, 4);
    const double c = -2.5 + 0.3 * k;
    EXPECT_NEAR(spectral_radius(c * m), std::abs(c) * spectral_radius(m),
                1e-10 * (1 + spectral_radius(m)));
  }
}

TEST(MinEigenvalueSym, Examples) {
  EXPECT_NEAR(min_eigenvalue_sym(SymMat::identity(3)), 1.0, 1e-14);
  EXPECT_NEAR(min_eigenvalue_sym(SymMat(make_mat(2, 2, {2, 0, 0, -3}))), -3.0, 1e-14);
  EXPECT_THROW(min_eigenvalue_sym(make_mat(2, 2, {1, 2, 0, 1})), ContractError);
}

TEST(Svd, Examples) {
  const Svd s = svd(make_mat(2, 2, {3, 0, 0, 1}));
  EXPECT_NEAR(s.sigma(0), 3.0, 1e-14);
  EXPECT_NEAR(s.sigma(1), 1.0, 1e-14);
  const Svd z = svd(Mat::Zero(2, 3));
  EXPECT_EQ(z.sigma.maxCoeff(), 0.0);
}

TEST(Svd, ReconstructsRandomMatrices) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const Mat m = random_mat(rng, 2, 3);
    const Svd s = svd(m);
    EXPECT_LE((m - s.U * s.sigma.asDiagonal() * s.V.transpose()).norm(), 1e-10 * (1 + m.norm()));
    EXPECT_LE((s.U.transpose() * s.U - Mat::Identity(2, 2)).norm(), 1e-10);
    EXPECT_LE((s.V.transpose() * s.V - Mat::Identity(2, 2)).norm(), 1e-10);
    EXPECT_GE(s.sigma(1), 0.0);
    EXPECT_GE(s.sigma(0), s.sigma(1));
  }
}

TEST(Dlyap, ZeroClosedLoopReturnsWeight) {
  const SymMat q(make_mat(3, 3, {2, 1, 0, 1, 2, 0, 0, 0, 1}));
  EXPECT_LE((solve_dlyap_transpose(Mat::Zero(3, 3), q).mat() - q.mat()).norm(), 1e-15);
  const SymMat s0(0.03 * Mat::Identity(3, 3));
  EXPECT_LE((solve_dlyap(Mat::Zero(3, 3), s0).mat() - s0.mat()).norm(), 1e-15);
}

TEST(Dlyap, ScalarExamples) {
  EXPECT_NEAR(solve_dlyap_transpose(lqtest::scalar(0.5), SymMat(lqtest::scalar(1.0)))(0, 0),
              4.0 / 3.0, 1e-14);
  EXPECT_NEAR(solve_dlyap(lqtest::scalar(0.5), SymMat(lqtest::scalar(0.03)))(0, 0), 0.04, 1e-15);
}

TEST(Dlyap, MatchesTruncatedSeries) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    // rho <= 0.85 keeps 0.85^200 far below the tolerance.
    const Mat a = random_stable(rng, 3, 0.3 + 0.01 * k);
    const SymMat w = SymMat::identity(3);
    const Mat series = lqtest::truncated_series_t(a, w, 200);
    EXPECT_LE((solve_dlyap_transpose(a, w).mat() - series).norm(), 1e-9);
    const Mat dual = lqtest::truncated_series_t(a.transpose(), w, 200);
    EXPECT_LE((solve_dlyap(a, w).mat() - dual).norm(), 1e-9);
  }
}

TEST(Dlyap, ResidualAndPsd) {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 50; ++k) {
    const Mat a = random_stable(rng, 4, 0.99);
    const Mat g = random_mat(rng, 4, 4);
    const SymMat w = SymMat::symmetrized(g * g.transpose());
    const SymMat x = solve_dlyap_transpose(a, w);
    EXPECT_LE((x.mat() - a.transpose() * x.mat() * a - w.mat()).norm(),
              1e-10 * (1 + x.mat().norm()));
    EXPECT_GE(min_eigenvalue_sym(x), -1e-10 * x.mat().norm());
  }
}

TEST(Dlyap, LargeDimensionUsesIterativePath) {
  std::mt19937_64 rng(2);
  const Mat a = random_stable(rng, 35, 0.9);
  const SymMat w = SymMat::identity(35);
  const SymMat x = solve_dlyap_transpose(a, w);
  EXPECT_LE((x.mat() - a.transpose() * x.mat() * a - w.mat()).norm(),
            1e-10 * (1 + x.mat().norm()));
}

TEST(Dlyap, UnstableThrowsWithRho) {
  try {
    solve_dlyap_transpose(lqtest::scalar(1.2), SymMat(lqtest::scalar(1.0)));
    FAIL();
  } catch (const InstabilityError& e) {
    EXPECT_NEAR(e.rho(), 1.2, 1e-12);
  }
}

TEST(SqrtHelpers, InverseSquareRootRoundTrip) {
  const SymMat m(make_mat(2, 2, {4, 1, 1, 3}));
  const Mat r = sqrt_psd(m);
  EXPECT_LE((r * r - m.mat()).norm(), 1e-12);
  const Mat ir = inv_sqrt_pd(m);
  EXPECT_LE((ir * m.mat() * ir - Mat::Identity(2, 2)).norm(), 1e-12);
  EXPECT_THROW(inv_sqrt_pd(SymMat(make_mat(2, 2, {1, 0, 0, -1}))), DefinitenessError);
}
