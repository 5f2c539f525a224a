#pragma once

// Ancestral sampling from trained models and decoder-head grids over the
// latent space (equal-probability quantiles of N(0, 1) per axis).

#include <cmath>
#include <ostream>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <variant>
#include <vector>

#include "copula.hpp"
#include "dist.hpp"
#include "mixed.hpp"
#include "models.hpp"
#include "ndcore.hpp"

namespace gcvae {

/// Smallest category j with F(j) >= u.
inline int categorical_inverse_cdf(const Categorical& c, double u) {
  const int J = static_cast<int>(c.cardinality());
  double acc = 0.0;
  for (int j = 1; j < J; ++j) {
    acc += c.prob(j);
    if (u <= acc) return j;
  }
  return J;
}

/// Draws one observation from the decoder's output law at a given head.
inline MixedDatum sample_from_head(const DecoderOutput& out, Rng& rng) {
  MixedDatum x;
  if (const auto* h = std::get_if<DiagGaussianHead>(&out)) {
    for (std::size_t i = 0; i < h->mu.size(); ++i) x.cont.push_back(h->mu[i] + std::exp(0.5 * h->log_sigma2[i]) * rng.normal());
    for (const auto& b : h->betas) x.cat.push_back(categorical_inverse_cdf(b, rng.uniform()));
  } else if (const auto* h = std::get_if<RocHead>(&out)) {
    const double s = rng.normal();
    const double sw = std::sqrt(h->omega());
    for (std::size_t i = 0; i < h->mu.size(); ++i) x.cont.push_back(h->mu[i] + h->a[i] * s + sw * rng.normal());
  } else {
    const auto& g = std::get<GcvaeHead>(out);
    const std::size_t dc = g.mu.size();
    const auto cs = sample_copula(covariance_of(g), 1, rng).front();
    for (std::size_t i = 0; i < dc; ++i) x.cont.push_back(g.mu[i] + std::exp(0.5 * g.log_sigma2[i]) * cs.q[i] / g.psi(i));
    for (std::size_t i = 0; i < g.betas.size(); ++i) x.cat.push_back(categorical_inverse_cdf(g.betas[i], cs.u[dc + i]));
  }
  return x;
}

/// Most likely value under the head: the mean for continuous columns and the
/// mode for categorical ones.
inline MixedDatum head_mean(const DecoderOutput& out) {
  MixedDatum x;
  auto modes = [&](const std::vector<Categorical>& betas) {
    for (const auto& b : betas) {
      int best = 1;
      for (int j = 2; j <= static_cast<int>(b.cardinality()); ++j)
        if (b.prob(j) > b.prob(best)) best = j;
      x.cat.push_back(best);
    }
  };
  std::visit([&](const auto& h) {
    x.cont = h.mu;
    if constexpr (!std::is_same_v<std::decay_t<decltype(h)>, RocHead>) modes(h.betas);
  }, out);
  return x;
}

/// n ancestral samples: z ~ N(0, I), then x ~ p(x | z).
inline std::vector<MixedDatum> sample_model(const Model& model, std::size_t n, Rng& rng) {
  std::vector<MixedDatum> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec z = sample_std_normal(rng, model.latent);
    out.push_back(sample_from_head(model.decode(z), rng));
  }
  return out;
}

/// Row-major n x n grid over a 2-D latent space; each axis visits
/// Φ⁻¹((i + 0.5) / n), i = 0..n-1. Row r, column c is z = (g_r, g_c).
inline std::vector<Vec> latent_grid(std::size_t n, std::size_t latent) {
  if (latent != 2) throw std::invalid_argument("grid mode needs a 2-dimensional latent space");
  Vec axis(n);
  for (std::size_t i = 0; i < n; ++i) axis[i] = std_normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  std::vector<Vec> out;
  out.reserve(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) out.push_back({axis[r], axis[c]});
  return out;
}

struct ManifoldRow {
  Vec z;
  DecoderOutput head;
};

inline std::vector<ManifoldRow> manifold(const Model& model, std::size_t grid) {
  std::vector<ManifoldRow> rows;
  for (auto& z : latent_grid(grid, model.latent)) {
    auto h = model.decode(z);
    rows.push_back({std::move(z), std::move(h)});
  }
  return rows;
}

/// Mean ω over manifold rows (rank-one heads only).
inline double mean_omega(const std::vector<ManifoldRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("mean_omega: no rows");
  double s = 0.0;
  for (const auto& r : rows) {
    if (const auto* h = std::get_if<RocHead>(&r.head))
      s += h->omega();
    else if (const auto* g = std::get_if<GcvaeHead>(&r.head))
      s += g->omega();
    else
      throw std::invalid_argument("mean_omega: model has no rank-one head");
  }
  return s / static_cast<double>(rows.size());
}

/// Columns: z1..zK, mu*, then sigma2* (vae, gcvae), omega and a* (vae-roc,
/// gcvae), p<i>_<j> category probabilities (categorical columns).
inline void write_manifold_csv(std::ostream& os, const Model& model, const std::vector<ManifoldRow>& rows) {
  const auto& L = model.layout;
  auto seq = [&](const char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) os << ',' << p << i + 1;
  };
  for (std::size_t k = 0; k < model.latent; ++k) os << (k ? "," : "") << 'z' << k + 1;
  seq("mu", L.n_cont);
  if (model.kind != ModelKind::vae_roc) seq("sigma2_", L.n_cont);
  if (model.kind != ModelKind::vae) {
    os << ",omega";
    seq("a", model.kind == ModelKind::gcvae ? L.dim() : L.n_cont);
  }
  if (model.kind != ModelKind::vae_roc)
    for (std::size_t i = 0; i < L.n_cat(); ++i)
      for (int j = 1; j <= L.cards[i]; ++j) os << ",p" << i + 1 << '_' << j;
  os << '\n';
  os.precision(17);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.z.size(); ++k) os << (k ? "," : "") << r.z[k];
    auto vals = [&](const Vec& v) {
      for (double x : v) os << ',' << x;
    };
    auto exps = [&](const Vec& v) {
      for (double x : v) os << ',' << std::exp(x);
    };
    auto probs = [&](const std::vector<Categorical>& b) {
      for (const auto& c : b) vals(c.probs);
    };
    if (const auto* h = std::get_if<DiagGaussianHead>(&r.head)) {
      vals(h->mu);
      exps(h->log_sigma2);
      probs(h->betas);
    } else if (const auto* h = std::get_if<RocHead>(&r.head)) {
      vals(h->mu);
      os << ',' << h->omega();
      vals(h->a);
    } else {
      const auto& g = std::get<GcvaeHead>(r.head);
      vals(g.mu);
      exps(g.log_sigma2);
      os << ',' << g.omega();
      vals(g.a);
      probs(g.betas);
    }
    os << '\n';
  }
}

}  // namespace gcvae
