#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gcvae/gcvae.hpp"

using namespace gcvae;

namespace {

std::vector<Vec> cloud(Rng& rng, std::size_t n, std::size_t d, double s = 1.0) {
  std::vector<Vec> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vec v = sample_std_normal(rng, d);
    for (auto& x : v) x *= s;
    out.push_back(v);
  }
  return out;
}

// Direct product-kernel sum without log-space tricks.
double naive_mixed(const std::vector<MixedDatum>& samples, const std::vector<MixedDatum>& test, double sigma, double h,
                   const std::vector<int>& cards) {
  double total = 0.0;
  for (const auto& t : test) {
    double p = 0.0;
    for (const auto& s : samples) {
      double k = 1.0;
      for (std::size_t i = 0; i < t.cont.size(); ++i) {
        const double d = t.cont[i] - s.cont[i];
        k *= std::exp(-d * d / (2 * sigma * sigma)) / std::sqrt(2 * std::numbers::pi * sigma * sigma);
      }
      for (std::size_t i = 0; i < t.cat.size(); ++i) k *= t.cat[i] == s.cat[i] ? 1 - h : h / (cards[i] - 1);
      p += k;
    }
    total += std::log(p / static_cast<double>(samples.size()));
  }
  return total / static_cast<double>(test.size());
}

std::vector<MixedDatum> mixed_points(Rng& rng, std::size_t n, std::size_t dc, const std::vector<int>& cards) {
  std::vector<MixedDatum> out;
  for (std::size_t i = 0; i < n; ++i) {
    MixedDatum x{sample_std_normal(rng, dc), {}};
    for (int J : cards) x.cat.push_back(1 + static_cast<int>(rng.below(static_cast<std::size_t>(J))));
    out.push_back(x);
  }
  return out;
}

}  // namespace

TEST(Parzen, SingleKernelPeak) {
  for (std::size_t D : {1u, 2u, 5u})
    for (double s : {0.1, 1.0, 3.0}) {
      const Vec p(D, 0.7);
      const double want = -0.5 * static_cast<double>(D) * std::log(2 * std::numbers::pi * s * s);
      EXPECT_NEAR(parzen_loglik({{p}, s}, std::vector<Vec>{p}), want, 1e-12);
    }
}

TEST(Parzen, MatchesNaiveSummation) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 1 + rng.below(3);
    const auto s = cloud(rng, 2 + rng.below(8), d), q = cloud(rng, 1 + rng.below(5), d);
    const double sigma = std::exp(rng.normal());
    EXPECT_NEAR(parzen_loglik({s, sigma}, q),
                naive_mixed(as_continuous_rows(s), as_continuous_rows(q), sigma, 0.0, {}), 1e-12);
  }
}

TEST(Parzen, MonotoneBeyondDataDiameter) {
  Rng rng(2);
  const auto s = cloud(rng, 20, 2, 0.5), q = cloud(rng, 10, 2, 0.5);
  double prev = INFINITY;
  for (double sigma = 10.0; sigma < 1e4; sigma *= 2) {
    const double v = parzen_loglik({s, sigma}, q);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Parzen, NoOverflowAtTinyBandwidthInHighDimension) {
  Rng rng(3);
  const auto s = cloud(rng, 5, 784), q = cloud(rng, 3, 784);
  const double v = parzen_loglik({s, 0.001}, q);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_LT(v, -1e5);
  // Test point equal to a sample: the peak term dominates and stays finite.
  EXPECT_TRUE(std::isfinite(parzen_loglik({s, 0.001}, std::vector<Vec>{s[0]})));
}

TEST(Parzen, Errors) {
  EXPECT_THROW(parzen_loglik({{Vec{0.0}}, 1.0}, std::vector<Vec>{}), std::invalid_argument);
  EXPECT_THROW(parzen_loglik({{}, 1.0}, std::vector<Vec>{Vec{0.0}}), std::invalid_argument);
  EXPECT_THROW(parzen_loglik({{Vec{0.0}}, 0.0}, std::vector<Vec>{Vec{0.0}}), std::invalid_argument);
  EXPECT_THROW(parzen_loglik({{Vec{0.0}}, 1.0}, std::vector<Vec>{Vec{0.0, 1.0}}), SchemaError);
}

TEST(LogSumExp, StableAndExact) {
  EXPECT_NEAR(log_sum_exp(Vec{0.0, 0.0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(log_sum_exp(Vec{1000.0, 1000.0}), 1000.0 + std::log(2.0), 1e-12);
  EXPECT_NEAR(log_sum_exp(Vec{-1000.0, -1001.0}), -1000.0 + std::log1p(std::exp(-1.0)), 1e-12);
  EXPECT_EQ(log_sum_exp(Vec{-INFINITY, -INFINITY}), -INFINITY);
}

TEST(MixedKernel, ReducesToParzenWithoutCategories) {
  Rng rng(4);
  const auto s = cloud(rng, 15, 3), q = cloud(rng, 6, 3);
  EXPECT_EQ(mixed_loglik({as_continuous_rows(s), 0.7, 0.1, {}}, as_continuous_rows(q)), parzen_loglik({s, 0.7}, q));
}

TEST(MixedKernel, PureCategoricalSingleMatch) {
  const MixedDatum x{{}, {1, 2, 3}};
  const std::vector<int> cards{3, 4, 5};
  for (double h : {0.05, 0.2, 0.6})
    EXPECT_NEAR(mixed_loglik({{x}, 1.0, h, cards}, std::vector<MixedDatum>{x}), 3 * std::log(1 - h), 1e-14);
  // One mismatch in the second column.
  const MixedDatum y{{}, {1, 1, 3}};
  EXPECT_NEAR(mixed_loglik({{x}, 1.0, 0.3, cards}, std::vector<MixedDatum>{y}),
              2 * std::log(0.7) + std::log(0.3 / 3), 1e-14);
}

TEST(MixedKernel, CategoricalKernelIsAPmf) {
  // Summing the estimator over all category values of one column yields the
  // estimator with that column marginalised.
  const std::vector<int> cards{4};
  const std::vector<MixedDatum> s{{{}, {1}}, {{}, {3}}, {{}, {3}}};
  for (double h : {0.1, 0.5, 0.7}) {
    double total = 0.0;
    for (int j = 1; j <= 4; ++j) total += std::exp(mixed_loglik({s, 1.0, h, cards}, std::vector<MixedDatum>{{{}, {j}}}));
    EXPECT_NEAR(total, 1.0, 1e-14);
  }
}

TEST(MixedKernel, MatchesNaiveSummation) {
  Rng rng(5);
  const std::vector<int> cards{2, 3, 5};
  for (int t = 0; t < 20; ++t) {
    const auto s = mixed_points(rng, 2 + rng.below(10), 2, cards), q = mixed_points(rng, 1 + rng.below(5), 2, cards);
    const double sigma = std::exp(rng.normal()), h = 0.05 + 0.4 * rng.uniform();
    EXPECT_NEAR(mixed_loglik({s, sigma, h, cards}, q), naive_mixed(s, q, sigma, h, cards), 1e-12);
  }
}

TEST(MixedKernel, InvalidBandwidthAndSchemaMismatch) {
  const std::vector<MixedDatum> s{{{0.0}, {1}}};
  EXPECT_THROW(mixed_loglik({s, 1.0, 0.5, {2}}, s), SchemaError);  // (E-1)/E = 0.5
  EXPECT_THROW(mixed_loglik({s, 1.0, 0.0, {2}}, s), SchemaError);
  EXPECT_THROW(mixed_loglik({s, 1.0, 0.1, {2}}, std::vector<MixedDatum>{{{0.0}, {}}}), SchemaError);
  EXPECT_TRUE(valid_categorical_bandwidth(0.6, std::vector<int>{3}));
  EXPECT_FALSE(valid_categorical_bandwidth(0.8, std::vector<int>{3, 5}));
}

TEST(SelectBandwidth, DefaultGridsAreDecadesAndFixedH) {
  EXPECT_EQ(BandwidthGrid{}.sigmas, (Vec{1000, 100, 10, 1, 0.1, 0.01, 0.001}));
  EXPECT_EQ(BandwidthGrid{}.hs, (Vec{0.8, 0.6, 0.4, 0.3, 0.2, 0.1, 0.05}));
}

TEST(SelectBandwidth, SinglePointGridReturnsIt) {
  Rng rng(6);
  const auto sp = cloud(rng, 10, 2), vp = cloud(rng, 5, 2);
  const auto c = select_bandwidth(as_continuous_rows(sp), as_continuous_rows(vp), {}, {{0.3}, {0.2}});
  EXPECT_EQ(c.sigma, 0.3);
  EXPECT_EQ(c.h, 0.0);
  EXPECT_EQ(c.score, parzen_loglik({sp, 0.3}, vp));
}

TEST(SelectBandwidth, RecoversGeneratingScale) {
  // Validation data drawn from the kernel density itself: x = s_n + σ* ε.
  for (double target : {0.1, 1.0}) {
    Rng rng(7);
    const auto s = cloud(rng, 400, 2, 3.0);
    std::vector<Vec> val;
    for (int i = 0; i < 2000; ++i) {
      Vec x = s[rng.below(s.size())];
      for (auto& c : x) c += target * rng.normal();
      val.push_back(x);
    }
    const auto c = select_bandwidth(as_continuous_rows(s), as_continuous_rows(val), {});
    EXPECT_EQ(c.sigma, target);
  }
}

TEST(SelectBandwidth, TiesPreferSmallerSigmaAndInvalidHIsFiltered) {
  // Pure categorical data: σ does not matter, so all σ tie and the smallest wins.
  const std::vector<MixedDatum> s{{{}, {1}}, {{}, {2}}}, v{{{}, {1}}};
  const auto c = select_bandwidth(s, v, {2});
  EXPECT_EQ(c.sigma, 0.001);
  EXPECT_LT(c.h, 0.5);
  // log((1-h)/2 + h/2) = log(1/2) for every h, up to rounding.
  EXPECT_NEAR(c.score, std::log(0.5), 1e-15);
  EXPECT_THROW(select_bandwidth(s, v, {2}, {{1.0}, {0.8, 0.6}}), std::invalid_argument);
  EXPECT_THROW(select_bandwidth(s, v, {2}, {{}, {0.1}}), std::invalid_argument);
}

TEST(Ks, KnownValues) {
  EXPECT_DOUBLE_EQ(ks_statistic_uniform(Vec{0.5}), 0.5);
  EXPECT_DOUBLE_EQ(ks_statistic_uniform(Vec{0.25, 0.75}), 0.25);
  EXPECT_DOUBLE_EQ(ks_statistic_uniform(Vec{0.0, 0.0}), 1.0);
  EXPECT_THROW(ks_statistic_uniform(Vec{}), std::invalid_argument);
  // Evenly spaced midpoints have the minimal distance 1/(2n).
  Vec v;
  for (int i = 0; i < 100; ++i) v.push_back((i + 0.5) / 100);
  EXPECT_NEAR(ks_statistic_uniform(v), 0.005, 1e-15);
}
