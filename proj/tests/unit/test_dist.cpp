#include <gtest/gtest.h>

#include <cmath>

#include "gcvae/dist.hpp"
#include "gcvae/evalkit.hpp"

using namespace gcvae;

// Reference values below were computed with 30-digit arithmetic (mpmath).
TEST(NormalCdf, ReferenceValues) {
  EXPECT_DOUBLE_EQ(std_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(std_normal_cdf(1.96), 0.975002104851779563787, 1e-15);
  EXPECT_NEAR(std_normal_cdf(3.0), 0.998650101968369905473, 1e-15);
  EXPECT_NEAR(std_normal_cdf(-7.0) / 1.27981254388583500438e-12, 1.0, 1e-12);
}

TEST(NormalCdf, Reflection) {
  for (double x = -5; x <= 5; x += 0.37) EXPECT_NEAR(std_normal_cdf(-x), 1.0 - std_normal_cdf(x), 1e-15);
}

TEST(NormalCdf, MonotoneOnDenseGrid) {
  double prev = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    const double v = std_normal_cdf(-8.0 + 16.0 * i / 100000.0);
    ASSERT_GE(v, prev);
    prev = v;
  }
}

TEST(NormalQuantile, ReferenceValues) {
  EXPECT_DOUBLE_EQ(std_normal_quantile(0.5), 0.0);
  EXPECT_NEAR(std_normal_quantile(0.975), 1.95996398454005423552, 1e-12);
  EXPECT_NEAR(std_normal_quantile(1e-10), -6.36134090240405620470, 1e-9);
}

TEST(NormalQuantile, RoundTrip) {
  for (double x = -6.0; x <= 6.0; x += 0.001) ASSERT_NEAR(std_normal_quantile(std_normal_cdf(x)), x, 1e-6) << x;
  for (double u = 1e-6; u < 1.0; u += 0.000731) ASSERT_NEAR(std_normal_cdf(std_normal_quantile(u)), u, 1e-9) << u;
}

TEST(NormalQuantile, OutsideOpenIntervalThrows) {
  EXPECT_THROW(std_normal_quantile(0.0), std::domain_error);
  EXPECT_THROW(std_normal_quantile(1.0), std::domain_error);
  EXPECT_THROW(std_normal_quantile(-0.1), std::domain_error);
  EXPECT_THROW(std_normal_quantile(NAN), std::domain_error);
}

TEST(NormalQuantile, ClampKeepsScoresFinite) {
  EXPECT_TRUE(std::isfinite(std_normal_quantile(clamp_probability(0.0))));
  EXPECT_TRUE(std::isfinite(std_normal_quantile(clamp_probability(1.0))));
}

TEST(Categorical, ValidationAndFromLogits) {
  EXPECT_NO_THROW((Categorical{{0.3, 0.7}}.validate()));
  EXPECT_THROW((Categorical{{0.3, 0.6}}.validate()), std::invalid_argument);
  EXPECT_THROW((Categorical{{-0.1, 1.1}}.validate()), std::invalid_argument);
  const auto c = Categorical::from_logits(Vec{0.0, std::log(3.0)});
  EXPECT_NEAR(c.prob(1), 0.25, 1e-15);
  EXPECT_NEAR(c.prob(2), 0.75, 1e-15);
  const auto big = Categorical::from_logits(Vec{1000.0, 0.0});
  EXPECT_TRUE(std::isfinite(big.prob(2)));
}

TEST(ContinuousExtension, CdfFormula) {
  const Categorical c{{0.3, 0.7}};
  EXPECT_NEAR(ce_cdf(c, 1.5), 0.65, 1e-15);
  EXPECT_EQ(ce_cdf(c, 0.0), 0.0);
  EXPECT_EQ(ce_cdf(c, 2.0), 1.0);
  EXPECT_THROW(ce_cdf(c, -0.01), std::domain_error);
  EXPECT_THROW(ce_cdf(c, 2.01), std::domain_error);
}

TEST(ContinuousExtension, PdfFormulaAndNormalisation) {
  const Categorical c{{0.3, 0.7}};
  EXPECT_EQ(ce_pdf(c, 0.4), 0.3);
  EXPECT_EQ(ce_pdf(c, 1.9), 0.7);
  EXPECT_THROW(ce_pdf(c, 2.0), std::domain_error);
  const int n = 200000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += ce_pdf(c, 2.0 * (i + 0.5) / n) * 2.0 / n;
  EXPECT_NEAR(s, 1.0, 1e-6);
}

TEST(ContinuousExtension, CdfDerivativeIsPdfAwayFromKnots) {
  const Categorical c{{0.2, 0.5, 0.3}};
  for (double xi = 0.05; xi < 3.0; xi += 0.1) {
    if (std::abs(xi - std::round(xi)) < 1e-3) continue;
    const double h = 1e-6;
    EXPECT_NEAR((ce_cdf(c, xi + h) - ce_cdf(c, xi - h)) / (2 * h), ce_pdf(c, xi), 1e-6);
  }
}

TEST(ContinuousExtension, CdfIsContinuousAndNonDecreasing) {
  const Categorical c{{0.1, 0.6, 0.3}};
  double prev = 0.0;
  for (double xi = 0.0; xi <= 3.0; xi += 1e-3) {
    const double v = ce_cdf(c, std::min(xi, 3.0));
    ASSERT_GE(v, prev - 1e-15);
    ASSERT_LT(v - prev, 1e-3);
    prev = v;
  }
}

TEST(Jitter, Arithmetic) {
  const Categorical c{{0.3, 0.7}};
  const auto j = jitter_with(c, 1, 0.25);
  EXPECT_EQ(j.value, 0.75);
  EXPECT_EQ(j.category, 1);
  EXPECT_THROW(jitter_with(c, 0, 0.1), std::invalid_argument);
  EXPECT_THROW(jitter_with(c, 3, 0.1), std::invalid_argument);
  Rng rng(1);
  EXPECT_THROW(jitter(c, 3, rng), std::invalid_argument);
}

TEST(Jitter, CdfBracketsCategory) {
  const Categorical c{{0.2, 0.5, 0.3}};
  Rng rng(4);
  for (int k = 1; k <= 3; ++k) {
    for (int i = 0; i < 1000; ++i) {
      const auto j = jitter(c, k, rng);
      const double f = ce_cdf(c, j.value);
      ASSERT_GT(f, c.cdf_at(k - 1));
      ASSERT_LE(f, c.cdf_at(k) + 1e-15);
    }
  }
}

TEST(Jitter, CdfOfJitteredValueIsUniformOnBracket) {
  const Categorical c{{0.2, 0.5, 0.3}};
  Rng rng(9);
  Vec u;
  const double lo = c.cdf_at(1), hi = c.cdf_at(2);
  for (int i = 0; i < 20000; ++i) u.push_back((ce_cdf(c, jitter(c, 2, rng).value) - lo) / (hi - lo));
  // 1% critical value of the one-sample KS statistic is about 1.63/sqrt(n).
  EXPECT_LT(ks_statistic_uniform(u), 1.63 / std::sqrt(20000.0));
}
