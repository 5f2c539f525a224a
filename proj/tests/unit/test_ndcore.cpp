#include <gtest/gtest.h>

#include <cmath>

#include "gcvae/ndcore.hpp"

using gcvae::Mat;
using gcvae::Rng;
using gcvae::Vec;

TEST(Matvec, IdentityLeavesVectorUnchanged) {
  EXPECT_EQ(gcvae::matvec(Mat::identity(3), Vec{1, 2, 3}), (Vec{1, 2, 3}));
}

TEST(Matvec, ZeroMatrixAnnihilates) {
  EXPECT_EQ(gcvae::matvec(Mat(2, 2), Vec{5, 7}), (Vec{0, 0}));
}

TEST(Matvec, HandExpansion) {
  const Mat m(2, 2, {1, 2, 3, 4});
  EXPECT_EQ(gcvae::matvec(m, Vec{1, 1}), (Vec{3, 7}));
  EXPECT_EQ(gcvae::matvec_transposed(m, Vec{1, 1}), (Vec{4, 6}));
}

TEST(Matvec, DimensionMismatchThrows) {
  EXPECT_THROW(gcvae::matvec(Mat(2, 3), Vec{1, 2}), std::invalid_argument);
  EXPECT_THROW(Mat(2, 2, Vec{1, 2, 3}), std::invalid_argument);
}

TEST(Matvec, DistributesOverAddition) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + rng.below(6), c = 1 + rng.below(6);
    Mat m(r, c);
    for (auto& x : m.flat()) x = rng.normal();
    const Vec a = gcvae::sample_std_normal(rng, c), b = gcvae::sample_std_normal(rng, c);
    const Vec lhs = gcvae::matvec(m, gcvae::add(a, b));
    const Vec rhs = gcvae::add(gcvae::matvec(m, a), gcvae::matvec(m, b));
    for (std::size_t i = 0; i < r; ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-12);
  }
}

TEST(Rng, NormalMoments) {
  Rng rng(2024);
  const Vec v = gcvae::sample_std_normal(rng, 1000000);
  double m = 0, s = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double x : v) s += (x - m) * (x - m);
  s /= static_cast<double>(v.size());
  EXPECT_NEAR(m, 0.0, 0.01);
  EXPECT_NEAR(s, 1.0, 0.01);
}

TEST(Rng, UniformRangeAndMean) {
  Rng rng(3);
  const Vec v = gcvae::sample_uniform(rng, 1000000);
  double m = 0;
  for (double x : v) {
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
    m += x;
  }
  EXPECT_NEAR(m / static_cast<double>(v.size()), 0.5, 0.01);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(99), b(99), c(100);
  EXPECT_EQ(gcvae::sample_std_normal(a, 1000), gcvae::sample_std_normal(b, 1000));
  EXPECT_EQ(gcvae::sample_uniform(a, 1000), gcvae::sample_uniform(b, 1000));
  EXPECT_NE(gcvae::sample_uniform(a, 10), gcvae::sample_uniform(c, 10));
}

// The engine is the standard 64-bit Mersenne Twister: its 10000th output
// from the default seed is fixed by the C++ standard.
TEST(Rng, EngineMatchesStandardReference) {
  Rng rng(5489);
  for (int i = 0; i < 9999; ++i) rng.next_u64();
  EXPECT_EQ(rng.next_u64(), 9981545732273789042ULL);
}

// Frozen draws guarding the hand-written transforms against drift.
TEST(Rng, GoldenStream) {
  Rng rng(1);
  EXPECT_EQ(rng.next_u64(), 2469588189546311528ULL);
  EXPECT_EQ(rng.uniform(), 0.13640703636619722);
  EXPECT_EQ(rng.normal(), -0.039399956754155314);
  EXPECT_EQ(rng.normal(), -0.38683176162103955);
  EXPECT_EQ(rng.below(1000), 384u);
}

TEST(Rng, BelowIsInRangeAndRoughlyUniform) {
  Rng rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, SplitGivesDistinctReproducibleSeeds) {
  Rng a(8), b(8);
  const auto s1 = a.split(), s2 = a.split();
  EXPECT_NE(s1, s2);
  EXPECT_EQ(s1, b.split());
}

TEST(Finite, DetectsNonFinite) {
  EXPECT_TRUE(gcvae::all_finite(Vec{1, 2}));
  EXPECT_FALSE(gcvae::all_finite(Vec{1, NAN}));
  EXPECT_FALSE(gcvae::all_finite(Vec{INFINITY}));
}
