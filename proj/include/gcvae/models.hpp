#pragma once

// Probabilistic encoder/decoder cores for the three model families
//
//   vae      diagonal Gaussian over continuous columns, categorical over the rest
//   vae_roc  Gaussian with rank-one-plus-isotropic covariance  ωI + aaᵀ
//   gcvae    Gaussian copula (same rank-one Ψ) over Gaussian and categorical
//            marginals, discrete columns handled by jittering
//
// together with the regularised lower bound and its exact gradient.
//
// Both networks end in an identity layer whose output vector is split into
// the head parameters. Encoder output: [η (K), log τ² (K)]. Decoder output:
//
//   vae      [μ (d_c), log σ² (d_c), logits (ΣJ)]
//   vae_roc  [μ (D), log ω, a (D)]
//   gcvae    [μ (d_c), log σ² (d_c), logits (ΣJ), log ω, a (d_c + d_s)]

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dist.hpp"
#include "errors.hpp"
#include "mixed.hpp"
#include "ndcore.hpp"
#include "nn.hpp"

namespace gcvae {

enum class ModelKind : std::uint32_t { vae = 0, vae_roc = 1, gcvae = 2 };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::vae: return "vae";
    case ModelKind::vae_roc: return "vae-roc";
    case ModelKind::gcvae: return "gcvae";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "vae") return ModelKind::vae;
  if (s == "vae-roc" || s == "vae_roc" || s == "roc") return ModelKind::vae_roc;
  if (s == "gcvae") return ModelKind::gcvae;
  throw std::invalid_argument("unknown model kind '" + s + "' (expected vae, vae-roc or gcvae)");
}

// ---------------------------------------------------------------------------
// Heads

struct EncoderOutput {
  Vec eta;
  Vec log_tau2;
};

struct DiagGaussianHead {
  Vec mu;
  Vec log_sigma2;
  std::vector<Categorical> betas;  // empty for purely continuous data
};

struct RocHead {
  Vec mu;
  double log_omega = 0.0;
  Vec a;

  double omega() const { return std::exp(log_omega); }
};

struct GcvaeHead {
  Vec mu;
  Vec log_sigma2;
  std::vector<Categorical> betas;
  double log_omega = 0.0;
  Vec a;  // d_c + d_s entries, continuous columns first

  double omega() const { return std::exp(log_omega); }
  double psi2(std::size_t i) const { return omega() + a[i] * a[i]; }
  double psi(std::size_t i) const { return std::sqrt(psi2(i)); }
};

using DecoderOutput = std::variant<DiagGaussianHead, RocHead, GcvaeHead>;

struct LatentSample {
  Vec z;
  Vec eps;
};

inline std::size_t head_width(ModelKind kind, const DataLayout& layout) {
  switch (kind) {
    case ModelKind::vae: return 2 * layout.n_cont + layout.total_categories();
    case ModelKind::vae_roc: return 2 * layout.n_cont + 1;
    case ModelKind::gcvae: return 2 * layout.n_cont + layout.total_categories() + 1 + layout.dim();
  }
  return 0;
}

inline void check_layout_for(ModelKind kind, const DataLayout& layout) {
  if (layout.dim() == 0) throw std::invalid_argument("data layout has no columns");
  if (kind == ModelKind::vae_roc && layout.n_cat() != 0)
    throw std::invalid_argument("vae-roc models continuous data only; use gcvae for categorical columns");
  for (int J : layout.cards)
    if (J < 2) throw std::invalid_argument("categorical columns need at least two categories");
}

namespace detail {
inline std::vector<Categorical> split_logits(std::span<const double> logits, const DataLayout& layout) {
  std::vector<Categorical> out;
  std::size_t off = 0;
  for (int J : layout.cards) {
    out.push_back(Categorical::from_logits(logits.subspan(off, static_cast<std::size_t>(J))));
    off += static_cast<std::size_t>(J);
  }
  return out;
}
}  // namespace detail

inline DecoderOutput decode_head(ModelKind kind, const DataLayout& layout, std::span<const double> raw) {
  if (raw.size() != head_width(kind, layout)) throw std::invalid_argument("decode_head: width mismatch");
  const std::size_t dc = layout.n_cont;
  const std::size_t nl = layout.total_categories();
  auto take = [&](std::size_t off, std::size_t n) { return Vec(raw.begin() + off, raw.begin() + off + n); };
  switch (kind) {
    case ModelKind::vae:
      return DiagGaussianHead{take(0, dc), take(dc, dc), detail::split_logits(raw.subspan(2 * dc, nl), layout)};
    case ModelKind::vae_roc: return RocHead{take(0, dc), raw[dc], take(dc + 1, dc)};
    case ModelKind::gcvae:
      return GcvaeHead{take(0, dc), take(dc, dc), detail::split_logits(raw.subspan(2 * dc, nl), layout),
                       raw[2 * dc + nl], take(2 * dc + nl + 1, layout.dim())};
  }
  throw std::invalid_argument("decode_head: unknown model kind");
}

// ---------------------------------------------------------------------------
// Encoder side

inline EncoderOutput split_encoder_output(std::span<const double> out) {
  if (out.size() % 2 != 0) throw std::invalid_argument("encoder output must have even width");
  const std::size_t K = out.size() / 2;
  return {Vec(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(K)),
          Vec(out.begin() + static_cast<std::ptrdiff_t>(K), out.end())};
}

inline EncoderOutput encode(const Mlp& encoder, std::span<const double> x) {
  return split_encoder_output(encoder.predict(x));
}

inline LatentSample reparameterize(const EncoderOutput& enc, std::span<const double> eps) {
  if (eps.size() != enc.eta.size()) throw std::invalid_argument("reparameterize: length mismatch");
  LatentSample s{Vec(eps.size()), Vec(eps.begin(), eps.end())};
  for (std::size_t k = 0; k < eps.size(); ++k) s.z[k] = enc.eta[k] + std::exp(0.5 * enc.log_tau2[k]) * eps[k];
  return s;
}

/// KL[N(η, diag τ²) || N(0, I)] in closed form.
inline double kl_term(const EncoderOutput& enc) {
  double acc = 0.0;
  for (std::size_t k = 0; k < enc.eta.size(); ++k) {
    const double lt = enc.log_tau2[k];
    acc += 1.0 + lt - std::exp(lt) - enc.eta[k] * enc.eta[k];
  }
  return -0.5 * acc;
}

// ---------------------------------------------------------------------------
// Decoder log-likelihoods

inline double diag_loglik(const DiagGaussianHead& head, std::span<const double> x) {
  if (x.size() != head.mu.size() || head.log_sigma2.size() != head.mu.size())
    throw std::invalid_argument("diag_loglik: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - head.mu[i];
    acc += -0.5 * (kLog2Pi + head.log_sigma2[i] + r * r * std::exp(-head.log_sigma2[i]));
  }
  return acc;
}

inline double categorical_loglik(const std::vector<Categorical>& betas, std::span<const int> cats) {
  if (betas.size() != cats.size()) throw std::invalid_argument("categorical_loglik: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < cats.size(); ++i) acc += std::log(betas[i].prob(cats[i]));
  return acc;
}

/// log N(x | μ, ωI + aaᵀ) in O(D) via the matrix determinant lemma and
/// Sherman-Morrison.
inline double roc_loglik(const RocHead& head, std::span<const double> x) {
  const std::size_t D = x.size();
  if (head.mu.size() != D || head.a.size() != D) throw std::invalid_argument("roc_loglik: length mismatch");
  const double w = head.omega();
  double rr = 0.0, aa = 0.0, ar = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    const double r = x[i] - head.mu[i];
    rr += r * r;
    aa += head.a[i] * head.a[i];
    ar += head.a[i] * r;
  }
  const double logdet = static_cast<double>(D) * head.log_omega + std::log1p(aa / w);
  const double quad = rr / w - ar * ar / (w * (w + aa));
  return -0.5 * (static_cast<double>(D) * kLog2Pi + logdet + quad);
}

// ---------------------------------------------------------------------------
// Gaussian copula decoder

/// Largest |normal score| reachable after clamping CDF values to [1e-12, 1-1e-12].
inline const double kMaxNormalScore = -std_normal_quantile(kCdfFloor);

/// q̃_i = ψ_i Φ⁻¹(u_i): u_i is the Gaussian marginal CDF at x_i for continuous
/// columns and the continuous-extension CDF at x_i - v_i for categorical ones.
inline Vec gcvae_normal_scores(const GcvaeHead& head, const MixedDatum& datum, std::span<const double> jitters) {
  const std::size_t dc = head.mu.size();
  const std::size_t ds = head.betas.size();
  if (datum.cont.size() != dc || datum.cat.size() != ds || jitters.size() != ds || head.a.size() != dc + ds)
    throw std::invalid_argument("gcvae_normal_scores: shape mismatch");
  Vec q(dc + ds);
  for (std::size_t i = 0; i < dc; ++i) {
    // Φ⁻¹(clamp(Φ(t))) reduces to clamping t itself.
    const double t = (datum.cont[i] - head.mu[i]) * std::exp(-0.5 * head.log_sigma2[i]);
    q[i] = head.psi(i) * std::clamp(t, -kMaxNormalScore, kMaxNormalScore);
  }
  for (std::size_t i = 0; i < ds; ++i) {
    const auto jv = jitter_with(head.betas[i], datum.cat[i], jitters[i]);
    const double u = clamp_probability(ce_cdf(head.betas[i], jv.value));
    q[dc + i] = head.psi(dc + i) * std_normal_quantile(u);
  }
  return q;
}

/// Copula part of the GCVAE bound with q̃ held constant:
///   Σ log ψ_i − ½ log|Ψ| − ½ q̃ᵀ(Ψ⁻¹ − S⁻¹)q̃,   Ψ = ωI + aaᵀ,  S = diag(ψ²).
inline double gcvae_copula_term(double log_omega, std::span<const double> a, std::span<const double> qt) {
  const std::size_t D = a.size();
  if (qt.size() != D) throw std::invalid_argument("gcvae_copula_term: length mismatch");
  const double w = std::exp(log_omega);
  double aa = 0.0, aq = 0.0, qq = 0.0, sum_log_psi = 0.0, q_s_q = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    const double p2 = w + a[i] * a[i];
    aa += a[i] * a[i];
    aq += a[i] * qt[i];
    qq += qt[i] * qt[i];
    sum_log_psi += 0.5 * std::log(p2);
    q_s_q += qt[i] * qt[i] / p2;
  }
  const double logdet = static_cast<double>(D) * log_omega + std::log1p(aa / w);
  const double q_psi_q = qq / w - aq * aq / (w * (w + aa));
  return sum_log_psi - 0.5 * logdet - 0.5 * (q_psi_q - q_s_q);
}

/// Full per-datum GCVAE lower bound: copula term, categorical and Gaussian
/// marginal log-likelihoods, minus the KL term.
inline double gcvae_elbo_term(const GcvaeHead& head, const MixedDatum& datum, std::span<const double> qt,
                              const EncoderOutput& enc) {
  const double cop = gcvae_copula_term(head.log_omega, head.a, qt);
  const double cat = categorical_loglik(head.betas, datum.cat);
  const double cont = diag_loglik(DiagGaussianHead{head.mu, head.log_sigma2, {}}, datum.cont);
  return cop + cat + cont - kl_term(enc);
}

// ---------------------------------------------------------------------------
// Regularisers

/// λ_a ‖a‖_p² for p ∈ {1, 2}.
inline double locality_penalty(std::span<const double> a, int p, double lambda_a) {
  if (p != 1 && p != 2) throw std::invalid_argument("locality_penalty: norm order must be 1 or 2");
  if (lambda_a < 0.0) throw std::invalid_argument("locality_penalty: lambda_a must be non-negative");
  double n = 0.0;
  if (p == 2) {
    for (double v : a) n += v * v;
    return lambda_a * n;
  }
  for (double v : a) n += std::abs(v);
  return lambda_a * n * n;
}

enum class RankMode : std::uint32_t {
  per_dimension = 0,  // each latent coordinate matched against its own sorted uniforms
  joint = 1           // Π_k Φ(z_k) matched against sorted products of K uniforms
};

/// Sorted reference draws for the rank penalty: one row of M sorted values per
/// latent dimension (per_dimension) or a single row (joint).
inline std::vector<Vec> draw_rank_uniforms(Rng& rng, std::size_t M, std::size_t K, RankMode mode) {
  std::vector<Vec> rows;
  if (mode == RankMode::per_dimension) {
    for (std::size_t k = 0; k < K; ++k) {
      Vec u = sample_uniform(rng, M);
      std::sort(u.begin(), u.end());
      rows.push_back(std::move(u));
    }
  } else {
    Vec u(M, 1.0);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t k = 0; k < K; ++k) u[m] *= rng.uniform();
    std::sort(u.begin(), u.end());
    rows.push_back(std::move(u));
  }
  return rows;
}

namespace detail {

// Penalty (λ_r/2) Σ (u_(m) − c_(m))² given per-datum statistics c and sorted
// uniforms; adds ∂penalty/∂c_m into dc when provided.
inline double sorted_match(std::span<const double> c, std::span<const double> u_sorted, double lambda_r,
                           std::span<double> dc) {
  const std::size_t M = c.size();
  std::vector<std::size_t> order(M);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return c[i] < c[j]; });
  double acc = 0.0;
  for (std::size_t r = 0; r < M; ++r) {
    const double d = u_sorted[r] - c[order[r]];
    acc += d * d;
    if (!dc.empty()) dc[order[r]] += -lambda_r * d;
  }
  return 0.5 * lambda_r * acc;
}

}  // namespace detail

/// Rank penalty for a batch of latent codes (z_batch[m][k]) against given
/// sorted reference draws. When dz is non-empty (same shape as z_batch) the
/// gradient of the penalty with respect to z is added into it.
/// Batches of fewer than two codes contribute nothing.
inline double rank_penalty_with(const std::vector<Vec>& z_batch, const std::vector<Vec>& u_sorted, double lambda_r,
                                RankMode mode = RankMode::per_dimension, std::vector<Vec>* dz = nullptr) {
  const std::size_t M = z_batch.size();
  if (M < 2 || lambda_r == 0.0) return 0.0;
  const std::size_t K = z_batch.front().size();
  double total = 0.0;
  if (mode == RankMode::per_dimension) {
    Vec c(M), g(M);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t m = 0; m < M; ++m) c[m] = std_normal_cdf(z_batch[m][k]);
      std::fill(g.begin(), g.end(), 0.0);
      total += detail::sorted_match(c, u_sorted.at(k), lambda_r, dz ? std::span<double>(g) : std::span<double>());
      if (dz)
        for (std::size_t m = 0; m < M; ++m) (*dz)[m][k] += g[m] * std_normal_pdf(z_batch[m][k]);
    }
    return total;
  }
  Vec c(M, 1.0), g(M, 0.0);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t k = 0; k < K; ++k) c[m] *= std_normal_cdf(z_batch[m][k]);
  total = detail::sorted_match(c, u_sorted.at(0), lambda_r, dz ? std::span<double>(g) : std::span<double>());
  if (dz)
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t k = 0; k < K; ++k) {
        double others = 1.0;
        for (std::size_t j = 0; j < K; ++j)
          if (j != k) others *= std_normal_cdf(z_batch[m][j]);
        (*dz)[m][k] += g[m] * std_normal_pdf(z_batch[m][k]) * others;
      }
  return total;
}

inline double rank_penalty(const std::vector<Vec>& z_batch, Rng& rng, double lambda_r,
                           RankMode mode = RankMode::per_dimension) {
  if (z_batch.size() < 2) return 0.0;
  return rank_penalty_with(z_batch, draw_rank_uniforms(rng, z_batch.size(), z_batch.front().size(), mode),
                           lambda_r, mode);
}

// ---------------------------------------------------------------------------
// Head log-likelihood with gradient with respect to the raw decoder output

namespace detail {

inline double diag_part(std::span<const double> mu, std::span<const double> ls, std::span<const double> x,
                        std::span<double> g_mu, std::span<double> g_ls) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = x[i] - mu[i];
    const double inv = std::exp(-ls[i]);
    acc += -0.5 * (kLog2Pi + ls[i] + r * r * inv);
    if (!g_mu.empty()) {
      g_mu[i] = r * inv;
      g_ls[i] = -0.5 + 0.5 * r * r * inv;
    }
  }
  return acc;
}

inline double categorical_part(std::span<const double> logits, const DataLayout& layout, std::span<const int> cats,
                               std::span<double> g) {
  double acc = 0.0;
  std::size_t off = 0;
  for (std::size_t i = 0; i < layout.cards.size(); ++i) {
    const std::size_t J = static_cast<std::size_t>(layout.cards[i]);
    const auto blk = logits.subspan(off, J);
    double mx = -INFINITY;
    for (double l : blk) mx = std::max(mx, l);
    double s = 0.0;
    for (double l : blk) s += std::exp(l - mx);
    const double lse = mx + std::log(s);
    const std::size_t hit = static_cast<std::size_t>(cats[i] - 1);
    acc += blk[hit] - lse;
    if (!g.empty())
      for (std::size_t j = 0; j < J; ++j) g[off + j] = (j == hit ? 1.0 : 0.0) - std::exp(blk[j] - lse);
    off += J;
  }
  return acc;
}

// Rank-one Gaussian log-density and gradients with respect to μ, log ω and a.
inline double roc_part(std::span<const double> mu, double lw, std::span<const double> a, std::span<const double> x,
                       std::span<double> g_mu, double* g_lw, std::span<double> g_a) {
  const std::size_t D = x.size();
  const double w = std::exp(lw);
  double rr = 0.0, aa = 0.0, ar = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    const double r = x[i] - mu[i];
    rr += r * r;
    aa += a[i] * a[i];
    ar += a[i] * r;
  }
  const double c = w + aa;
  const double Dd = static_cast<double>(D);
  const double val = -0.5 * (Dd * kLog2Pi + Dd * lw + std::log1p(aa / w) + rr / w - ar * ar / (w * c));
  if (!g_mu.empty()) {
    for (std::size_t i = 0; i < D; ++i) {
      const double r = x[i] - mu[i];
      g_mu[i] = r / w - ar * a[i] / (w * c);
      g_a[i] = -a[i] / c + ar * r / (w * c) - ar * ar * a[i] / (w * c * c);
    }
    *g_lw = -0.5 * (Dd - 1.0) - 0.5 * w / c + 0.5 * rr / w - 0.5 * ar * ar * (c + w) / (w * c * c);
  }
  return val;
}

// Copula term and gradients with respect to log ω and a (q̃ constant).
inline double copula_part(double lw, std::span<const double> a, std::span<const double> qt, double* g_lw,
                          std::span<double> g_a) {
  const std::size_t D = a.size();
  const double w = std::exp(lw);
  double aa = 0.0, aq = 0.0, qq = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    aa += a[i] * a[i];
    aq += a[i] * qt[i];
    qq += qt[i] * qt[i];
  }
  const double c = w + aa;
  const double val = gcvae_copula_term(lw, a, qt);
  if (g_lw) {
    double glw = -0.5 * (static_cast<double>(D) - 1.0) - 0.5 * w / c + 0.5 * qq / w -
                 0.5 * aq * aq * (c + w) / (w * c * c);
    for (std::size_t i = 0; i < D; ++i) {
      const double p2 = w + a[i] * a[i];
      glw += 0.5 * w / p2 - 0.5 * qt[i] * qt[i] * w / (p2 * p2);
      g_a[i] = a[i] / p2 - a[i] / c + aq * qt[i] / (w * c) - aq * aq * a[i] / (w * c * c) -
               qt[i] * qt[i] * a[i] / (p2 * p2);
    }
    *g_lw = glw;
  }
  return val;
}

}  // namespace detail

/// log p(x | z) for the decoder output `raw`. For gcvae, `scores` supplies q̃
/// (treated as constant). When grad is non-empty it receives ∂/∂raw.
inline double head_loglik(ModelKind kind, const DataLayout& layout, std::span<const double> raw,
                          const MixedDatum& x, std::span<const double> scores, std::span<double> grad) {
  const std::size_t dc = layout.n_cont;
  const std::size_t nl = layout.total_categories();
  const bool want = !grad.empty();
  auto gsub = [&](std::size_t off, std::size_t n) { return want ? grad.subspan(off, n) : std::span<double>(); };
  switch (kind) {
    case ModelKind::vae:
      return detail::diag_part(raw.subspan(0, dc), raw.subspan(dc, dc), x.cont, gsub(0, dc), gsub(dc, dc)) +
             detail::categorical_part(raw.subspan(2 * dc, nl), layout, x.cat, gsub(2 * dc, nl));
    case ModelKind::vae_roc:
      return detail::roc_part(raw.subspan(0, dc), raw[dc], raw.subspan(dc + 1, dc), x.cont, gsub(0, dc),
                              want ? &grad[dc] : nullptr, gsub(dc + 1, dc));
    case ModelKind::gcvae: {
      const std::size_t D = layout.dim();
      const std::size_t lw_at = 2 * dc + nl;
      return detail::diag_part(raw.subspan(0, dc), raw.subspan(dc, dc), x.cont, gsub(0, dc), gsub(dc, dc)) +
             detail::categorical_part(raw.subspan(2 * dc, nl), layout, x.cat, gsub(2 * dc, nl)) +
             detail::copula_part(raw[lw_at], raw.subspan(lw_at + 1, D), scores, want ? &grad[lw_at] : nullptr,
                                 gsub(lw_at + 1, D));
    }
  }
  throw std::invalid_argument("head_loglik: unknown model kind");
}

/// The principal direction a inside a raw decoder output (empty for vae).
inline std::span<const double> head_direction(ModelKind kind, const DataLayout& layout, std::span<const double> raw) {
  switch (kind) {
    case ModelKind::vae: return {};
    case ModelKind::vae_roc: return raw.subspan(layout.n_cont + 1, layout.n_cont);
    case ModelKind::gcvae: return raw.subspan(2 * layout.n_cont + layout.total_categories() + 1, layout.dim());
  }
  return {};
}

// ---------------------------------------------------------------------------
// Model and regularised objective

struct ModelConfig {
  ModelKind kind = ModelKind::vae;
  DataLayout layout;
  std::size_t latent = 2;
  std::vector<std::size_t> hidden{100};
  Activation activation = Activation::tanh;
  double init_scale = 1.0;
};

struct Model {
  ModelKind kind = ModelKind::vae;
  DataLayout layout;
  std::size_t latent = 0;
  Mlp encoder;  // one-hot input -> [η, log τ²]
  Mlp decoder;  // z -> raw head

  static Model create(const ModelConfig& cfg, Rng& rng) {
    check_layout_for(cfg.kind, cfg.layout);
    if (cfg.latent == 0) throw std::invalid_argument("latent dimension must be positive");
    MlpSpec enc{cfg.layout.one_hot_width(), {}};
    MlpSpec dec{cfg.latent, {}};
    for (std::size_t h : cfg.hidden) {
      if (h == 0) throw std::invalid_argument("hidden layer sizes must be positive");
      enc.layers.push_back({h, cfg.activation});
      dec.layers.push_back({h, cfg.activation});
    }
    enc.layers.push_back({2 * cfg.latent, Activation::identity});
    dec.layers.push_back({head_width(cfg.kind, cfg.layout), Activation::identity});
    Model m;
    m.kind = cfg.kind;
    m.layout = cfg.layout;
    m.latent = cfg.latent;
    m.encoder = init_mlp(enc, rng, cfg.init_scale);
    m.decoder = init_mlp(dec, rng, cfg.init_scale);
    return m;
  }

  EncoderOutput encode(const MixedDatum& x) const { return gcvae::encode(encoder, encode_for_network(x, layout)); }

  DecoderOutput decode(std::span<const double> z) const { return decode_head(kind, layout, decoder.predict(z)); }

  void reset_grads() {
    encoder.reset_grads();
    decoder.reset_grads();
  }

  std::size_t num_params() const { return encoder.num_params() + decoder.num_params(); }

  std::vector<std::span<double>> param_blocks() {
    auto p = encoder.param_blocks();
    auto q = decoder.param_blocks();
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }

  std::vector<std::span<double>> grad_blocks() {
    auto p = encoder.grad_blocks();
    auto q = decoder.grad_blocks();
    p.insert(p.end(), q.begin(), q.end());
    return p;
  }
};

struct ObjectiveConfig {
  double lambda_a = 0.0;  // locality weight
  int norm_p = 2;         // order of the locality norm
  double lambda_r = 0.0;  // rank weight
  RankMode rank_mode = RankMode::per_dimension;
  double data_size = 0.0;  // N in the N/M scaling; 0 means N = M
};

/// Noise consumed by one evaluation of the objective; fixed externally so the
/// objective is a deterministic function of the parameters.
struct BatchNoise {
  std::vector<Vec> eps;            // M x K
  std::vector<Vec> jitters;        // M x d_s
  std::vector<Vec> rank_uniforms;  // sorted reference draws
};

inline BatchNoise draw_batch_noise(const Model& model, std::size_t M, Rng& rng, const ObjectiveConfig& cfg) {
  BatchNoise n;
  for (std::size_t m = 0; m < M; ++m) n.eps.push_back(sample_std_normal(rng, model.latent));
  if (model.kind == ModelKind::gcvae)
    for (std::size_t m = 0; m < M; ++m) n.jitters.push_back(sample_uniform(rng, model.layout.n_cat()));
  if (cfg.lambda_r > 0.0 && M >= 2) n.rank_uniforms = draw_rank_uniforms(rng, M, model.latent, cfg.rank_mode);
  return n;
}

/// Batch sums of the individual terms plus the scaled objective value
///   (N/M) [ Σ_m (log p(x|z) − KL − λ_a‖a‖_p²) − (λ_r/2) Σ (u − Φ(z))² ].
struct ObjectiveTerms {
  double value = 0.0;
  double loglik = 0.0;
  double kl = 0.0;
  double locality = 0.0;
  double rank = 0.0;
};

struct ObjectiveOptions {
  bool accumulate_grads = true;
  const std::vector<Vec>* pinned_scores = nullptr;  // gcvae: reuse these q̃ instead of recomputing
  std::vector<Vec>* scores_out = nullptr;            // gcvae: receives the q̃ used
};

/// Evaluates the regularised lower bound on a batch with fixed noise and, if
/// requested, adds its exact gradient (ascent direction) into the model's
/// gradient slots. q̃ enters as a constant.
inline ObjectiveTerms evaluate_objective(Model& model, std::span<const MixedDatum> batch, const BatchNoise& noise,
                                         const ObjectiveConfig& cfg, ObjectiveOptions opt = {}) {
  const std::size_t M = batch.size();
  if (M == 0) throw std::invalid_argument("objective: empty minibatch");
  if (noise.eps.size() != M) throw std::invalid_argument("objective: noise does not match batch size");
  const std::size_t K = model.latent;
  const double scale = (cfg.data_size > 0.0 ? cfg.data_size : static_cast<double>(M)) / static_cast<double>(M);
  const bool grads = opt.accumulate_grads;

  std::vector<Tape> enc_tapes, dec_tapes;
  std::vector<EncoderOutput> encs(M);
  std::vector<Vec> zs(M), raw_grads(M);
  ObjectiveTerms t;
  if (opt.scores_out) opt.scores_out->assign(M, Vec());

  auto fail = [&](std::size_t m, const char* what) {
    throw NumericalError(std::string("objective: non-finite ") + what + " for batch item " + std::to_string(m));
  };

  for (std::size_t m = 0; m < M; ++m) {
    const MixedDatum& x = batch[m];
    auto [enc_out, enc_tape] = model.encoder.forward(encode_for_network(x, model.layout));
    encs[m] = split_encoder_output(enc_out);
    zs[m] = reparameterize(encs[m], noise.eps[m]).z;
    auto [raw, dec_tape] = model.decoder.forward(zs[m]);
    if (!all_finite(raw)) fail(m, "decoder output");

    Vec scores;
    if (model.kind == ModelKind::gcvae) {
      if (opt.pinned_scores) {
        scores = opt.pinned_scores->at(m);
      } else {
        const auto head = std::get<GcvaeHead>(decode_head(model.kind, model.layout, raw));
        scores = gcvae_normal_scores(head, x, noise.jitters.at(m));
      }
      if (opt.scores_out) (*opt.scores_out)[m] = scores;
    }
    raw_grads[m].assign(raw.size(), 0.0);
    const double ll = head_loglik(model.kind, model.layout, raw, x, scores,
                                  grads ? std::span<double>(raw_grads[m]) : std::span<double>());
    const double kl = kl_term(encs[m]);
    double loc = 0.0;
    const auto a = head_direction(model.kind, model.layout, raw);
    if (!a.empty() && cfg.lambda_a > 0.0) {
      loc = locality_penalty(a, cfg.norm_p, cfg.lambda_a);
      if (grads) {
        const std::size_t off = static_cast<std::size_t>(a.data() - raw.data());
        double l1 = 0.0;
        if (cfg.norm_p == 1)
          for (double v : a) l1 += std::abs(v);
        for (std::size_t i = 0; i < a.size(); ++i) {
          const double d = cfg.norm_p == 2 ? 2.0 * a[i] : 2.0 * l1 * ((a[i] > 0) - (a[i] < 0));
          raw_grads[m][off + i] -= cfg.lambda_a * d;
        }
      }
    }
    if (!std::isfinite(ll) || !std::isfinite(kl)) fail(m, "log-likelihood or KL");
    t.loglik += ll;
    t.kl += kl;
    t.locality += loc;
    enc_tapes.push_back(std::move(enc_tape));
    dec_tapes.push_back(std::move(dec_tape));
  }

  std::vector<Vec> dz_rank(M, Vec(K, 0.0));
  if (cfg.lambda_r > 0.0 && M >= 2) {
    if (noise.rank_uniforms.empty()) throw std::invalid_argument("objective: rank penalty needs reference draws");
    t.rank = rank_penalty_with(zs, noise.rank_uniforms, cfg.lambda_r, cfg.rank_mode, grads ? &dz_rank : nullptr);
  }
  t.value = scale * (t.loglik - t.kl - t.locality - t.rank);
  if (!std::isfinite(t.value)) throw NumericalError("objective: non-finite value");

  if (grads) {
    for (std::size_t m = 0; m < M; ++m) {
      for (auto& g : raw_grads[m]) g *= scale;
      Vec dz = model.decoder.backward(dec_tapes[m], raw_grads[m]);
      Vec d_enc(2 * K);
      for (std::size_t k = 0; k < K; ++k) {
        const double g = dz[k] - scale * dz_rank[m][k];
        const double lt = encs[m].log_tau2[k];
        d_enc[k] = g - scale * encs[m].eta[k];
        d_enc[K + k] = g * noise.eps[m][k] * 0.5 * std::exp(0.5 * lt) + scale * 0.5 * (1.0 - std::exp(lt));
      }
      model.encoder.backward(enc_tapes[m], d_enc);
    }
  }
  return t;
}

/// One stochastic evaluation: fresh ε, jitters and rank draws; gradient slots
/// are reset and then filled with the gradient of the returned value.
inline ObjectiveTerms grad_step_value(Model& model, std::span<const MixedDatum> batch, Rng& rng,
                                      const ObjectiveConfig& cfg) {
  const BatchNoise noise = draw_batch_noise(model, batch.size(), rng, cfg);
  model.reset_grads();
  return evaluate_objective(model, batch, noise, cfg);
}

}  // namespace gcvae
