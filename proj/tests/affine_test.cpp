#include "adalam/affine.hpp"

#include <Eigen/QR>
#include <gtest/gtest.h>

#include <random>

namespace adalam {
namespace {

using V2 = Eigen::Vector2d;

// Pseudo-inverse route: stack sources as rows of U (n x 2), targets as rows of
// V, then A^T = pinv(U) V.
Eigen::Matrix2d pinv_fit(const std::vector<CenteredPair<double>>& pairs) {
  Eigen::MatrixXd u(pairs.size(), 2), v(pairs.size(), 2);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    u.row(static_cast<Eigen::Index>(k)) = pairs[k].u.transpose();
    v.row(static_cast<Eigen::Index>(k)) = pairs[k].v.transpose();
  }
  return (u.completeOrthogonalDecomposition().pseudoInverse() * v).transpose();
}

Eigen::Matrix2d random_invertible(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::Matrix2d a;
  do {
    a << u(gen), u(gen), u(gen), u(gen);
  } while (std::abs(a.determinant()) < 0.1);
  return a;
}

TEST(FitAffineMinimal, DiagonalScaling) {
  const auto a = fit_affine_minimal<double>(V2(1, 0), V2(2, 0), V2(0, 1), V2(0, 3));
  ASSERT_TRUE(a);
  EXPECT_TRUE(a->linear.isApprox((Eigen::Matrix2d() << 2, 0, 0, 3).finished()));
}

TEST(FitAffineMinimal, Rotation) {
  const auto a = fit_affine_minimal<double>(V2(1, 0), V2(0, 1), V2(0, 1), V2(-1, 0));
  ASSERT_TRUE(a);
  EXPECT_DOUBLE_EQ(a->a11(), 0.0);
  EXPECT_DOUBLE_EQ(a->a12(), -1.0);
  EXPECT_DOUBLE_EQ(a->a21(), 1.0);
  EXPECT_DOUBLE_EQ(a->a22(), 0.0);
}

TEST(FitAffineMinimal, DegenerateSamples) {
  EXPECT_FALSE(fit_affine_minimal<double>(V2(1, 1), V2(1, 0), V2(2, 2), V2(0, 1)));
  EXPECT_FALSE(fit_affine_minimal<double>(V2(0, 0), V2(0, 0), V2(0, 0), V2(1, 1)));
  EXPECT_FALSE(fit_affine_minimal<double>(V2(0, 0), V2(0, 0), V2(3, 1), V2(1, 1)));
  // Nearly collinear relative to the point scale.
  EXPECT_FALSE(fit_affine_minimal<double>(V2(1e3, 0), V2(1, 0), V2(1e3, 1e-7), V2(0, 1)));
  EXPECT_TRUE(fit_affine_minimal<double>(V2(1e-3, 0), V2(1, 0), V2(0, 1e-3), V2(0, 1)));
}

TEST(FitAffineMinimal, RoundTrip) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> p(-50.0, 50.0);
  for (int t = 0; t < 2000; ++t) {
    const Eigen::Matrix2d a = random_invertible(gen);
    V2 u1(p(gen), p(gen)), u2(p(gen), p(gen));
    if (std::abs(u1.x() * u2.y() - u2.x() * u1.y()) < 1.0) continue;
    const auto fit = fit_affine_minimal<double>(u1, a * u1, u2, a * u2);
    ASSERT_TRUE(fit);
    ASSERT_LT((fit->linear - a).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(FitAffineMinimal, SinglePrecisionInstantiation) {
  using V2f = Eigen::Vector2f;
  const auto a = fit_affine_minimal<float>(V2f(1, 0), V2f(2, 0), V2f(0, 1), V2f(0, 3));
  ASSERT_TRUE(a);
  EXPECT_FLOAT_EQ(a->a22(), 3.0f);
}

TEST(FitAffineLsq, ExactDataAndTwoPointCase) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> p(-30.0, 30.0);
  const Eigen::Matrix2d a = random_invertible(gen);
  std::vector<CenteredPair<double>> pairs;
  for (int k = 0; k < 50; ++k) {
    const V2 u(p(gen), p(gen));
    pairs.push_back({u, a * u});
  }
  const auto fit = fit_affine_lsq<double>(pairs);
  ASSERT_TRUE(fit);
  EXPECT_LT((fit->linear - a).cwiseAbs().maxCoeff(), 1e-9);

  const std::vector<CenteredPair<double>> two{pairs[0], pairs[1]};
  const auto lsq = fit_affine_lsq<double>(two);
  const auto minimal = fit_affine_minimal(two[0], two[1]);
  ASSERT_TRUE(lsq && minimal);
  EXPECT_LT((lsq->linear - minimal->linear).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FitAffineLsq, NoisyDataMatchesPseudoInverse) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> p(-40.0, 40.0);
  std::normal_distribution<double> noise(0.0, 0.5);
  for (int t = 0; t < 50; ++t) {
    const Eigen::Matrix2d a = random_invertible(gen);
    std::vector<CenteredPair<double>> pairs;
    for (int k = 0; k < 100; ++k) {
      const V2 u(p(gen), p(gen));
      pairs.push_back({u, a * u + V2(noise(gen), noise(gen))});
    }
    const auto fit = fit_affine_lsq<double>(pairs);
    ASSERT_TRUE(fit);
    EXPECT_LT((fit->linear - pinv_fit(pairs)).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(FitAffineLsq, RankDeficientScatter) {
  std::vector<CenteredPair<double>> line;
  for (int k = 1; k <= 5; ++k) line.push_back({V2(k, 2 * k), V2(k, 0)});
  EXPECT_FALSE(fit_affine_lsq<double>(line));
  EXPECT_FALSE(fit_affine_lsq<double>(std::vector<CenteredPair<double>>{{V2(1, 0), V2(1, 0)}}));
}

TEST(FitAffineLsq, SubsetOverload) {
  const std::vector<V2> src{V2(1, 0), V2(0, 1), V2(5, 5), V2(1, 1)};
  const std::vector<V2> dst{V2(2, 0), V2(0, 2), V2(-9, 4), V2(2, 2)};
  const std::vector<std::size_t> subset{0, 1, 3};
  const auto fit = fit_affine_lsq<double>(std::span<const V2>(src), std::span<const V2>(dst), subset);
  ASSERT_TRUE(fit);
  EXPECT_TRUE(fit->linear.isApprox(2.0 * Eigen::Matrix2d::Identity()));
}

TEST(Residual, HandArithmetic) {
  EXPECT_EQ(residual(AffineModel(), V2(1, 2), V2(1, 2)), 0.0);
  EXPECT_EQ(residual(AffineModel(2, 0, 0, 2), V2(1, 0), V2(1, 0)), 1.0);
}

}  // namespace
}  // namespace adalam
