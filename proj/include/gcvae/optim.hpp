#pragma once

// ADAM and the minibatch training loop: draw a batch, draw ε (and jitters for
// gcvae), compute normal scores and the gradient of the regularised bound,
// take an ascent step.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "models.hpp"
#include "ndcore.hpp"

namespace gcvae {

struct AdamParams {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamParams hp;
  Vec m;
  Vec v;
  std::uint64_t t = 0;

  AdamState() = default;
  AdamState(std::size_t n, AdamParams p) : hp(p), m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected ADAM step in the ascent direction (params += ...), over
/// parameter and gradient blocks laid out identically.
inline void adam_step(std::span<const std::span<double>> params, std::span<const std::span<double>> grads,
                      AdamState& state) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: block count mismatch");
  std::size_t total = 0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size()) throw std::invalid_argument("adam_step: block shape mismatch");
    total += params[b].size();
  }
  if (total != state.m.size()) throw std::invalid_argument("adam_step: state does not match parameter count");

  ++state.t;
  const auto& hp = state.hp;
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
  std::size_t k = 0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i, ++k) {
      const double g = grads[b][i];
      state.m[k] = hp.beta1 * state.m[k] + (1.0 - hp.beta1) * g;
      state.v[k] = hp.beta2 * state.v[k] + (1.0 - hp.beta2) * g * g;
      params[b][i] += hp.alpha * (state.m[k] / c1) / (std::sqrt(state.v[k] / c2) + hp.epsilon);
    }
  }
}

struct TrainConfig {
  ModelKind kind = ModelKind::vae;
  std::size_t latent = 2;
  std::vector<std::size_t> hidden{100};
  Activation activation = Activation::tanh;
  double init_scale = 1.0;
  std::size_t batch_size = 0;         // 0 or >= N: full batch
  std::size_t max_iterations = 1000;  // also the early-stopping point
  double lambda_a = 0.0;
  double lambda_r = 0.0;
  int norm_p = 2;
  RankMode rank_mode = RankMode::per_dimension;
  AdamParams adam;
  std::uint64_t seed = 1;
  std::size_t restarts = 1;
  bool parallel = false;
  std::size_t history_every = 1;  // record every n-th iteration

  void validate() const {
    if (latent == 0) throw std::invalid_argument("latent dimension must be positive");
    if (lambda_a < 0.0 || lambda_r < 0.0) throw std::invalid_argument("regularisation weights must be non-negative");
    if (norm_p != 1 && norm_p != 2) throw std::invalid_argument("norm order must be 1 or 2");
    if (!(adam.alpha > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
        !(adam.epsilon > 0.0))
      throw std::invalid_argument("invalid ADAM hyperparameters");
    if (restarts == 0) throw std::invalid_argument("restarts must be at least 1");
    if (history_every == 0) throw std::invalid_argument("history_every must be positive");
  }

  ModelConfig model_config(const DataLayout& layout) const {
    return {kind, layout, latent, hidden, activation, init_scale};
  }

  ObjectiveConfig objective(std::size_t n) const {
    return {lambda_a, norm_p, lambda_r, rank_mode, static_cast<double>(n)};
  }
};

struct HistoryRow {
  std::size_t iteration = 0;
  ObjectiveTerms terms;
};

struct TrainResult {
  Model model;
  std::vector<HistoryRow> history;
};

/// M distinct indices out of n by a partial Fisher-Yates shuffle.
inline std::vector<std::size_t> draw_minibatch(std::size_t n, std::size_t M, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (M >= n) return idx;
  for (std::size_t i = 0; i < M; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(M);
  return idx;
}

inline TrainResult train(std::span<const MixedDatum> data, const DataLayout& layout, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train: dataset is empty");
  for (const auto& x : data) layout.check(x);

  Rng rng(cfg.seed);
  TrainResult res{Model::create(cfg.model_config(layout), rng), {}};
  Model& model = res.model;
  const std::size_t N = data.size();
  const bool full = cfg.batch_size == 0 || cfg.batch_size >= N;
  const ObjectiveConfig obj = cfg.objective(N);
  AdamState adam(model.num_params(), cfg.adam);
  auto params = model.param_blocks();
  auto grads = model.grad_blocks();

  std::vector<MixedDatum> batch;
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    std::span<const MixedDatum> view = data;
    if (!full) {
      batch.clear();
      for (std::size_t i : draw_minibatch(N, cfg.batch_size, rng)) batch.push_back(data[i]);
      view = batch;
    }
    ObjectiveTerms t;
    try {
      t = grad_step_value(model, view, rng, obj);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(it) + ": " + e.what());
    }
    for (const auto& g : grads)
      if (!all_finite(g)) throw NumericalError("iteration " + std::to_string(it) + ": non-finite gradient");
    adam_step(params, grads, adam);
    if (it % cfg.history_every == 0 || it + 1 == cfg.max_iterations) res.history.push_back({it, t});
  }
  return res;
}

/// Outcome of one restart: either a trained model with its score or the error.
struct RestartOutcome {
  std::uint64_t seed = 0;
  std::optional<TrainResult> result;
  double score = -std::numeric_limits<double>::infinity();
  std::string error;
};

struct RestartReport {
  std::size_t best_index = 0;
  std::vector<RestartOutcome> runs;

  TrainResult& best() { return *runs[best_index].result; }
};

/// Seed used by restart r of a run seeded with `seed` (restart 0 keeps it).
inline std::uint64_t restart_seed(std::uint64_t seed, std::size_t r) {
  if (r == 0) return seed;
  Rng mix(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(r)));
  return mix.split();
}

/// Trains cfg.restarts models with distinct seeds and keeps the one with the
/// highest eval score; ties go to the lowest restart index. Throws only when
/// every restart fails.
inline RestartReport restart_best(std::span<const MixedDatum> data, const DataLayout& layout, const TrainConfig& cfg,
                                  const std::function<double(const Model&)>& eval) {
  cfg.validate();
  RestartReport rep;
  rep.runs.resize(cfg.restarts);
  auto run_one = [&](std::size_t r) {
    RestartOutcome& out = rep.runs[r];
    TrainConfig c = cfg;
    c.seed = restart_seed(cfg.seed, r);
    out.seed = c.seed;
    try {
      out.result = train(data, layout, c);
      out.score = eval(out.result->model);
      if (std::isnan(out.score)) out.score = -std::numeric_limits<double>::infinity();
    } catch (const std::exception& e) {
      out.result.reset();
      out.error = e.what();
    }
  };
  if (cfg.parallel && cfg.restarts > 1) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(cfg.restarts, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t r; (r = next.fetch_add(1)) < cfg.restarts;) run_one(r);
      });
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t r = 0; r < cfg.restarts; ++r) run_one(r);
  }

  bool any = false;
  for (std::size_t r = 0; r < rep.runs.size(); ++r) {
    if (!rep.runs[r].result) continue;
    if (!any || rep.runs[r].score > rep.runs[rep.best_index].score) rep.best_index = r;
    any = true;
  }
  if (!any) throw NumericalError("all " + std::to_string(cfg.restarts) + " restarts failed; first error: " +
                                 rep.runs.front().error);
  return rep;
}

inline void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& history) {
  os << "iteration,objective,loglik,kl,locality,rank\n";
  os.precision(17);
  for (const auto& h : history)
    os << h.iteration << ',' << h.terms.value << ',' << h.terms.loglik << ',' << h.terms.kl << ','
       << h.terms.locality << ',' << h.terms.rank << '\n';
}

}  // namespace gcvae
