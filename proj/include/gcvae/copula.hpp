#pragma once

// Gaussian copula with rank-one-plus-isotropic covariance Σ = ωI + aaᵀ:
// density, sampling and Kendall's tau diagnostics.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "dist.hpp"
#include "models.hpp"
#include "ndcore.hpp"

namespace gcvae {

struct RankOneCovariance {
  Vec a;
  double omega = 1.0;

  RankOneCovariance() = default;
  RankOneCovariance(Vec a_, double omega_) : a(std::move(a_)), omega(omega_) {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw std::invalid_argument("RankOneCovariance: omega must be > 0");
  }

  std::size_t dim() const noexcept { return a.size(); }
  double sigma2(std::size_t d) const { return omega + a[d] * a[d]; }
  double sigma(std::size_t d) const { return std::sqrt(sigma2(d)); }
  double correlation(std::size_t i, std::size_t j) const {
    return i == j ? 1.0 : a[i] * a[j] / (sigma(i) * sigma(j));
  }

  Mat dense() const {
    Mat s(dim(), dim());
    for (std::size_t i = 0; i < dim(); ++i)
      for (std::size_t j = 0; j < dim(); ++j) s(i, j) = a[i] * a[j] + (i == j ? omega : 0.0);
    return s;
  }
};

struct CopulaSample {
  Vec q;  // normal-score space, q ~ N(0, Σ)
  Vec u;  // unit cube, u_d = Φ(q_d / σ_d)
};

/// log c_Σ(u) = Σ log σ_d − ½ log|Σ| + ½ qᵀ(diag(σ²)⁻¹ − Σ⁻¹)q with q_d = σ_d Φ⁻¹(u_d).
inline double copula_log_density(std::span<const double> u, const RankOneCovariance& cov) {
  if (u.size() != cov.dim()) throw std::invalid_argument("copula_density: dimension mismatch");
  Vec q(u.size());
  for (std::size_t d = 0; d < u.size(); ++d) {
    if (!(u[d] > 0.0 && u[d] < 1.0)) throw std::domain_error("copula_density: u must lie strictly inside (0,1)^D");
    q[d] = cov.sigma(d) * std_normal_quantile(u[d]);
  }
  // Same closed form as the GCVAE copula term, with q̃ = q and Ψ = Σ.
  return gcvae_copula_term(std::log(cov.omega), cov.a, q);
}

inline double copula_density(std::span<const double> u, const RankOneCovariance& cov) {
  return std::exp(copula_log_density(u, cov));
}

/// q = a·s + √ω·ε with s ~ N(0,1), ε ~ N(0, I); O(D) per draw.
inline std::vector<CopulaSample> sample_copula(const RankOneCovariance& cov, std::size_t n, Rng& rng) {
  std::vector<CopulaSample> out;
  out.reserve(n);
  const double sw = std::sqrt(cov.omega);
  const std::size_t D = cov.dim();
  for (std::size_t i = 0; i < n; ++i) {
    CopulaSample s{Vec(D), Vec(D)};
    const double shared = rng.normal();
    for (std::size_t d = 0; d < D; ++d) {
      s.q[d] = cov.a[d] * shared + sw * rng.normal();
      s.u[d] = std_normal_cdf(s.q[d] / cov.sigma(d));
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Kendall's tau of dimensions i, j under the Gaussian copula: (2/π) asin ρ_ij.
inline double kendall_tau(const RankOneCovariance& cov, std::size_t i, std::size_t j) {
  if (i >= cov.dim() || j >= cov.dim()) throw std::out_of_range("kendall_tau: dimension index");
  if (i == j) throw std::invalid_argument("kendall_tau: needs two distinct dimensions");
  return 2.0 / std::numbers::pi * std::asin(std::clamp(cov.correlation(i, j), -1.0, 1.0));
}

inline RankOneCovariance covariance_of(const GcvaeHead& head) { return RankOneCovariance(head.a, head.omega()); }

/// Pairwise Kendall's tau of the head's copula; unit diagonal.
inline Mat rank_correlation_matrix(const GcvaeHead& head) {
  const auto cov = covariance_of(head);
  const std::size_t D = cov.dim();
  Mat m(D, D);
  for (std::size_t i = 0; i < D; ++i) {
    m(i, i) = 1.0;
    for (std::size_t j = i + 1; j < D; ++j) m(i, j) = m(j, i) = kendall_tau(cov, i, j);
  }
  return m;
}

namespace detail {

// Merge sort counting swaps (discordant exchanges) over y.
inline std::uint64_t merge_count(std::vector<double>& y, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_count(y, buf, lo, mid) + merge_count(y, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (y[j] < y[i]) {
      swaps += mid - i;
      buf[k++] = y[j++];
    } else {
      buf[k++] = y[i++];
    }
  }
  while (i < mid) buf[k++] = y[i++];
  while (j < hi) buf[k++] = y[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            y.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

// Σ t(t-1)/2 over runs of equal values in a sorted sequence.
template <typename It>
std::uint64_t tied_pairs(It first, It last) {
  std::uint64_t acc = 0;
  while (first != last) {
    It run = first;
    std::uint64_t t = 0;
    while (run != last && *run == *first) {
      ++run;
      ++t;
    }
    acc += t * (t - 1) / 2;
    first = run;
  }
  return acc;
}

}  // namespace detail

/// Sample Kendall's tau-b in O(n log n) (Knight's algorithm). Ties in either
/// variable are handled, so categorical columns can be passed directly.
inline double empirical_kendall_tau(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (y.size() != n) throw std::invalid_argument("empirical_kendall_tau: length mismatch");
  if (n < 2) throw std::invalid_argument("empirical_kendall_tau: needs at least two observations");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return x[i] < x[j] || (x[i] == x[j] && y[i] < y[j]);
  });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[idx[i]];
    ys[i] = y[idx[i]];
  }
  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t n1 = detail::tied_pairs(xs.begin(), xs.end());
  // Pairs tied in both x and y.
  std::uint64_t n3 = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && xs[j] == xs[i]) ++j;
    n3 += detail::tied_pairs(ys.begin() + static_cast<std::ptrdiff_t>(i), ys.begin() + static_cast<std::ptrdiff_t>(j));
    i = j;
  }
  std::vector<double> buf(n);
  const std::uint64_t swaps = detail::merge_count(ys, buf, 0, n);
  const std::uint64_t n2 = detail::tied_pairs(ys.begin(), ys.end());
  const double num = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                     static_cast<double>(n3) - 2.0 * static_cast<double>(swaps);
  const double den = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace gcvae
