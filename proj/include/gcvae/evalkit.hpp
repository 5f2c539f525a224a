#pragma once

// Sample-based likelihood scoring: Gaussian Parzen windows for continuous
// data and the product of Gaussian and Aitchison-Aitken kernels for mixed
// data, with grid bandwidth selection on a validation set.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dist.hpp"
#include "errors.hpp"
#include "mixed.hpp"
#include "ndcore.hpp"

namespace gcvae {

struct ParzenModel {
  std::vector<Vec> samples;
  double sigma = 1.0;
};

struct MixedKernelModel {
  std::vector<MixedDatum> samples;
  double sigma = 1.0;
  double h = 0.1;
  std::vector<int> cards;  // E per categorical column
};

/// Default bandwidth grids for validation-based selection.
inline const Vec kDefaultSigmaGrid{1000, 100, 10, 1, 0.1, 0.01, 0.001};
inline const Vec kDefaultHGrid{0.8, 0.6, 0.4, 0.3, 0.2, 0.1, 0.05};

/// True when h keeps every categorical kernel a proper PMF with the match
/// weight dominating: 0 < h < (E-1)/E for all columns.
inline bool valid_categorical_bandwidth(double h, std::span<const int> cards) {
  if (!(h > 0.0)) return false;
  for (int E : cards)
    if (!(h < static_cast<double>(E - 1) / static_cast<double>(E))) return false;
  return true;
}

inline double log_sum_exp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

/// Pairwise statistics between a fixed sample set and a fixed test set, so
/// many (σ, h) settings can be scored without recomputing distances.
class KernelScorer {
 public:
  KernelScorer(std::span<const MixedDatum> samples, std::span<const MixedDatum> test, std::vector<int> cards)
      : cards_(std::move(cards)), n_samples_(samples.size()), n_test_(test.size()) {
    if (samples.empty()) throw std::invalid_argument("kernel estimator needs at least one sample");
    if (test.empty()) throw std::invalid_argument("kernel estimator needs a non-empty test set");
    if (cards_.size() > 64) throw std::invalid_argument("kernel estimator supports at most 64 categorical columns");
    d_c_ = samples.front().cont.size();
    for (const auto* set : {&samples, &test})
      for (const auto& x : *set)
        if (x.cont.size() != d_c_ || x.cat.size() != cards_.size())
          throw SchemaError("kernel estimator: test data do not match the sample schema");
    sq_.resize(n_test_ * n_samples_);
    if (!cards_.empty()) mism_.resize(n_test_ * n_samples_);
    for (std::size_t t = 0; t < n_test_; ++t) {
      const auto& xt = test[t];
      for (std::size_t n = 0; n < n_samples_; ++n) {
        const auto& xs = samples[n];
        double d2 = 0.0;
        for (std::size_t i = 0; i < d_c_; ++i) {
          const double d = xt.cont[i] - xs.cont[i];
          d2 += d * d;
        }
        sq_[t * n_samples_ + n] = d2;
        if (!cards_.empty()) {
          std::uint64_t bits = 0;
          for (std::size_t i = 0; i < cards_.size(); ++i)
            if (xt.cat[i] != xs.cat[i]) bits |= std::uint64_t{1} << i;
          mism_[t * n_samples_ + n] = bits;
        }
      }
    }
  }

  std::size_t n_cont() const noexcept { return d_c_; }
  const std::vector<int>& cards() const noexcept { return cards_; }

  /// Per-test-point log densities.
  Vec log_densities(double sigma, double h) const {
    if (!(sigma > 0.0)) throw std::invalid_argument("kernel bandwidth sigma must be positive");
    if (!cards_.empty() && !valid_categorical_bandwidth(h, cards_))
      throw SchemaError("categorical bandwidth h=" + std::to_string(h) + " is not below (E-1)/E for every column");
    const double log_norm = -0.5 * static_cast<double>(d_c_) * std::log(2.0 * std::numbers::pi * sigma * sigma) -
                            std::log(static_cast<double>(n_samples_));
    const double inv2s2 = 0.5 / (sigma * sigma);
    Vec match_log, miss_log;
    double all_match = 0.0;
    for (int E : cards_) {
      match_log.push_back(std::log1p(-h));
      miss_log.push_back(std::log(h / static_cast<double>(E - 1)));
      all_match += match_log.back();
    }
    Vec out(n_test_);
    Vec terms(n_samples_);
    for (std::size_t t = 0; t < n_test_; ++t) {
      for (std::size_t n = 0; n < n_samples_; ++n) {
        double v = -sq_[t * n_samples_ + n] * inv2s2;
        if (!cards_.empty()) {
          double c = all_match;
          for (std::uint64_t bits = mism_[t * n_samples_ + n]; bits; bits &= bits - 1) {
            const int i = std::countr_zero(bits);
            c += miss_log[static_cast<std::size_t>(i)] - match_log[static_cast<std::size_t>(i)];
          }
          v += c;
        }
        terms[n] = v;
      }
      out[t] = log_sum_exp(terms) + log_norm;
    }
    return out;
  }

  double mean_log_density(double sigma, double h) const {
    const Vec v = log_densities(sigma, h);
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }

 private:
  std::vector<int> cards_;
  std::size_t n_samples_;
  std::size_t n_test_;
  std::size_t d_c_ = 0;
  Vec sq_;
  std::vector<std::uint64_t> mism_;
};

namespace detail {
inline std::vector<MixedDatum> as_mixed(std::span<const Vec> v) {
  std::vector<MixedDatum> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back({x, {}});
  return out;
}
}  // namespace detail

/// Mean over test points of log[(1/N) Σ_n N(x | x⁽ⁿ⁾, σ²I)].
inline double parzen_loglik(const ParzenModel& model, std::span<const Vec> test) {
  if (test.empty()) throw std::invalid_argument("parzen_loglik: empty test set");
  const auto s = detail::as_mixed(model.samples);
  const auto t = detail::as_mixed(test);
  return KernelScorer(s, t, {}).mean_log_density(model.sigma, 0.0);
}

/// Mean log density of the mixed product-kernel estimator.
inline double mixed_loglik(const MixedKernelModel& model, std::span<const MixedDatum> test) {
  if (test.empty()) throw std::invalid_argument("mixed_loglik: empty test set");
  for (const auto& x : test)
    if (x.cat.size() != model.cards.size()) throw SchemaError("mixed_loglik: categorical width mismatch");
  return KernelScorer(model.samples, test, model.cards).mean_log_density(model.sigma, model.h);
}

struct BandwidthGrid {
  Vec sigmas = kDefaultSigmaGrid;
  Vec hs = kDefaultHGrid;
};

struct BandwidthChoice {
  double sigma = 0.0;
  double h = 0.0;  // 0 when there are no categorical columns
  double score = -std::numeric_limits<double>::infinity();
};

/// Exhaustive grid search maximising the validation log-likelihood. Values
/// of h that are invalid for the column cardinalities are skipped. Ties are
/// resolved towards the smaller σ, then the smaller h.
inline BandwidthChoice select_bandwidth(std::span<const MixedDatum> samples, std::span<const MixedDatum> validation,
                                        const std::vector<int>& cards, const BandwidthGrid& grid = {}) {
  if (grid.sigmas.empty()) throw std::invalid_argument("select_bandwidth: empty sigma grid");
  const KernelScorer scorer(samples, validation, cards);
  Vec hs{0.0};
  if (!cards.empty()) {
    hs.clear();
    for (double h : grid.hs)
      if (valid_categorical_bandwidth(h, cards)) hs.push_back(h);
    if (hs.empty()) throw std::invalid_argument("select_bandwidth: no valid h in the grid for these cardinalities");
  }
  BandwidthChoice best;
  bool first = true;
  for (double s : grid.sigmas) {
    for (double h : hs) {
      const double v = scorer.mean_log_density(s, h);
      const bool better = first || v > best.score ||
                          (v == best.score && (s < best.sigma || (s == best.sigma && h < best.h)));
      if (better) best = {s, h, v};
      first = false;
    }
  }
  return best;
}

/// Kolmogorov-Smirnov distance between the empirical law of `values` and U[0,1].
inline double ks_statistic_uniform(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("ks_statistic_uniform: no values");
  Vec v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = std::clamp(v[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace gcvae
