#pragma once

// Independent reference implementations used by the tests: dense Cholesky
// algebra, straight-line network evaluation and central finite differences.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "gcvae/gcvae.hpp"

namespace oracle {

using gcvae::Mat;
using gcvae::Vec;

inline Mat cholesky(const Mat& a) {
  const std::size_t n = a.rows();
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw std::domain_error("cholesky: matrix not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

inline double logdet(const Mat& a) {
  const Mat l = cholesky(a);
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += 2.0 * std::log(l(i, i));
  return s;
}

// Solves a x = b through the Cholesky factor.
inline Vec solve(const Mat& a, const Vec& b) {
  const Mat l = cholesky(a);
  const std::size_t n = b.size();
  Vec y(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

inline double quad(const Mat& a, const Vec& r) {
  const Vec x = solve(a, r);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * x[i];
  return s;
}

inline Mat rank_one(const Vec& a, double omega) {
  Mat s(a.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) s(i, j) = a[i] * a[j] + (i == j ? omega : 0.0);
  return s;
}

inline double gaussian_logpdf(const Vec& x, const Vec& mu, const Mat& cov) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - mu[i];
  return -0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) - 0.5 * logdet(cov) -
         0.5 * quad(cov, r);
}

// Σ log ψ_i − ½ log|Ψ| − ½ qᵀ(Ψ⁻¹ − S⁻¹)q with dense Ψ.
inline double copula_term(const Vec& q, const Mat& psi) {
  double s = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    s += 0.5 * std::log(psi(i, i));
    sq += q[i] * q[i] / psi(i, i);
  }
  return s - 0.5 * logdet(psi) - 0.5 * (quad(psi, q) - sq);
}

// Evaluates a network layer by layer with explicit loops.
inline Vec mlp_forward(const gcvae::Mlp& net, const Vec& x) {
  Vec h = x;
  for (const auto& l : net.layers()) {
    Vec o(l.bias.size());
    for (std::size_t r = 0; r < o.size(); ++r) {
      double s = l.bias[r];
      for (std::size_t c = 0; c < h.size(); ++c) s += l.weight(r, c) * h[c];
      switch (l.activation) {
        case gcvae::Activation::identity: break;
        case gcvae::Activation::tanh: s = std::tanh(s); break;
        case gcvae::Activation::relu: s = s > 0.0 ? s : 0.0; break;
        case gcvae::Activation::sigmoid: s = 1.0 / (1.0 + std::exp(-s)); break;
      }
      o[r] = s;
    }
    h = std::move(o);
  }
  return h;
}

inline double rel_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
  double worst = 0.0;
  std::size_t checked = 0;
};

// Compares the model's accumulated gradient against central differences of
// the objective with the given noise frozen. GCVAE normal scores are pinned
// at their unperturbed values.
inline GradCheck check_objective_gradient(gcvae::Model& model, std::span<const gcvae::MixedDatum> batch,
                                          const gcvae::BatchNoise& noise, const gcvae::ObjectiveConfig& cfg,
                                          double step = 1e-5) {
  std::vector<Vec> scores;
  gcvae::ObjectiveOptions collect;
  collect.scores_out = &scores;
  model.reset_grads();
  gcvae::evaluate_objective(model, batch, noise, cfg, collect);

  gcvae::ObjectiveOptions value_only;
  value_only.accumulate_grads = false;
  if (model.kind == gcvae::ModelKind::gcvae) value_only.pinned_scores = &scores;

  GradCheck out;
  auto params = model.param_blocks();
  auto grads = model.grad_blocks();
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double keep = params[b][i];
      params[b][i] = keep + step;
      const double up = gcvae::evaluate_objective(model, batch, noise, cfg, value_only).value;
      params[b][i] = keep - step;
      const double down = gcvae::evaluate_objective(model, batch, noise, cfg, value_only).value;
      params[b][i] = keep;
      const double fd = (up - down) / (2.0 * step);
      out.worst = std::max(out.worst, rel_error(grads[b][i], fd));
      ++out.checked;
    }
  }
  return out;
}

}  // namespace oracle
