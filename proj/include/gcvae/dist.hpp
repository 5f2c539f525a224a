#pragma once

// Scalar distribution primitives: the standard normal, categorical marginals
// and the continuous extension (jittering) of a discrete CDF.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ndcore.hpp"

namespace gcvae {

inline constexpr double kCdfFloor = 1e-12;
inline constexpr double kLog2Pi = 1.8378770664093454836;

inline double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline double std_normal_log_pdf(double x) { return -0.5 * (kLog2Pi + x * x); }

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double clamp_probability(double u) { return std::clamp(u, kCdfFloor, 1.0 - kCdfFloor); }

namespace detail {

// Acklam's rational approximation to the normal quantile, relative error
// about 1.15e-9 before refinement.
inline double acklam_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  constexpr double p_high = 1.0 - p_low;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > p_high) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

/// Φ⁻¹(u) for u in (0, 1): Acklam's approximation followed by one Halley step
/// against std_normal_cdf.
inline double std_normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("std_normal_quantile: argument must lie in (0, 1)");
  double x = detail::acklam_quantile(u);
  // Residual Φ(x) - u, evaluated on the smaller tail to keep precision.
  const double e = (u < 0.5) ? std_normal_cdf(x) - u : (1.0 - u) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  const double step = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= step / (1.0 + 0.5 * x * step);
  return x;
}

/// Categorical marginal over categories 1..J.
struct Categorical {
  std::vector<double> probs;

  std::size_t cardinality() const noexcept { return probs.size(); }

  /// Probability of category j (1-based).
  double prob(int j) const { return probs.at(static_cast<std::size_t>(j - 1)); }

  /// F(j) = P(x <= j) for integer j in 0..J.
  double cdf_at(int j) const {
    double acc = 0.0;
    for (int k = 0; k < j && k < static_cast<int>(probs.size()); ++k) acc += probs[static_cast<std::size_t>(k)];
    return std::min(acc, 1.0);
  }

  static Categorical from_logits(std::span<const double> logits) {
    Categorical c;
    c.probs.resize(logits.size());
    double mx = -INFINITY;
    for (double l : logits) mx = std::max(mx, l);
    double s = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) s += c.probs[j] = std::exp(logits[j] - mx);
    for (auto& p : c.probs) p /= s;
    return c;
  }

  void validate() const {
    if (probs.empty()) throw std::invalid_argument("Categorical: no categories");
    double s = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw std::invalid_argument("Categorical: negative or NaN probability");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("Categorical: probabilities do not sum to one");
  }
};

struct JitteredValue {
  int category = 1;
  double jitter = 0.0;
  double value = 1.0;  // category - jitter, in (category-1, category]
};

namespace detail {
inline void check_ce_domain(const Categorical& c, double xi, bool closed_right) {
  const double J = static_cast<double>(c.cardinality());
  const bool ok = closed_right ? (xi >= 0.0 && xi <= J) : (xi >= 0.0 && xi < J);
  if (!ok) throw std::domain_error("continuous extension evaluated outside [0, J]");
}
}  // namespace detail

/// Continuous-extension CDF F*(ξ) = F([ξ]) + (ξ - [ξ]) P(x = [ξ] + 1).
inline double ce_cdf(const Categorical& c, double xi) {
  detail::check_ce_domain(c, xi, true);
  const double fl = std::floor(xi);
  const int k = static_cast<int>(fl);
  if (k >= static_cast<int>(c.cardinality())) return 1.0;
  return std::min(1.0, c.cdf_at(k) + (xi - fl) * c.probs[static_cast<std::size_t>(k)]);
}

/// Continuous-extension density p*(ξ) = P(x = [ξ] + 1).
inline double ce_pdf(const Categorical& c, double xi) {
  detail::check_ce_domain(c, xi, false);
  return c.probs[static_cast<std::size_t>(std::floor(xi))];
}

/// x* = category - v with a fresh v ~ U[0, 1).
inline JitteredValue jitter_with(const Categorical& c, int category, double v) {
  if (category < 1 || category > static_cast<int>(c.cardinality()))
    throw std::invalid_argument("jitter: category " + std::to_string(category) + " outside 1.." +
                                std::to_string(c.cardinality()));
  return {category, v, static_cast<double>(category) - v};
}

inline JitteredValue jitter(const Categorical& c, int category, Rng& rng) {
  return jitter_with(c, category, rng.uniform());
}

}  // namespace gcvae
