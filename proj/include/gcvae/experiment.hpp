#pragma once

// Named dataset recipes and the sample-based evaluation protocol shared by
// the command-line tool and the experiment tests.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "data.hpp"
#include "evalkit.hpp"
#include "generate.hpp"
#include "models.hpp"
#include "optim.hpp"

namespace gcvae {

/// Train/validation/test sets in model space (normalised when the schema
/// carries statistics) plus the schema mapping back to data space.
struct PreparedData {
  std::string name;
  DatasetSchema schema;
  std::vector<MixedDatum> train;
  std::vector<MixedDatum> validation;
  std::vector<MixedDatum> test;
};

struct RecipeOptions {
  double noise_std = 0.02;
  WedgeSpec wedges;
  MixedSynthSpec mixed;
};

inline const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names{"hc", "hcw", "mixed-synth"};
  return names;
}

/// hc: 280/60/60 half-circle points. hcw: the same arc counts plus three
/// wedges of 100 training points (21 per wedge in validation and test).
/// mixed-synth: 500 draws split 400/50/50, normalised on the training part.
inline PreparedData make_recipe(const std::string& name, Rng& rng, const RecipeOptions& opt = {}) {
  PreparedData p;
  p.name = name;
  if (name == "hc" || name == "hcw") {
    p.schema = DatasetSchema::continuous(2);
    const bool wedges = name == "hcw";
    auto gen = [&](std::size_t n_arc, std::size_t n_wedge) {
      return as_continuous_rows(wedges ? gen_half_circle_wedges(n_arc, n_wedge, opt.noise_std, rng, opt.wedges)
                                       : gen_half_circle(n_arc, opt.noise_std, rng));
    };
    p.train = gen(280, 100);
    p.validation = gen(60, 21);
    p.test = gen(60, 21);
    return p;
  }
  if (name == "mixed-synth") {
    Dataset ds = gen_mixed_synthetic(500, opt.mixed, rng);
    const Split s = make_split(ds.rows.size(), 50, 50, rng);
    const auto train = select_rows(ds.rows, s.train);
    p.schema = ds.schema;
    fit_normalization(p.schema, train);
    p.train = normalize_all(train, p.schema);
    p.validation = normalize_all(select_rows(ds.rows, s.validation), p.schema);
    p.test = normalize_all(select_rows(ds.rows, s.test), p.schema);
    return p;
  }
  throw std::invalid_argument("unknown recipe '" + name + "' (expected hc, hcw or mixed-synth)");
}

/// Splits a loaded dataset, fits normalisation on the training rows and maps
/// all three parts into model space.
inline PreparedData prepare_dataset(const Dataset& ds, std::size_t n_validation, std::size_t n_test, Rng& rng,
                                    bool normalise = true) {
  PreparedData p;
  p.name = "csv";
  const Split s = make_split(ds.rows.size(), n_validation, n_test, rng);
  const auto train = select_rows(ds.rows, s.train);
  p.schema = ds.schema;
  if (normalise)
    fit_normalization(p.schema, train);
  else
    p.schema.reset_normalization();
  p.train = normalize_all(train, p.schema);
  p.validation = normalize_all(select_rows(ds.rows, s.validation), p.schema);
  p.test = normalize_all(select_rows(ds.rows, s.test), p.schema);
  return p;
}

struct EvalConfig {
  std::size_t n_samples = 10000;
  std::size_t repeats = 1;
  BandwidthGrid grid;
};

struct EvalReport {
  std::vector<BandwidthChoice> choices;  // one per repeat
  Vec test_loglik;                       // one per repeat
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over repeats; 0 for one repeat

  /// Most frequently selected bandwidth pair, smaller values first on ties.
  BandwidthChoice modal_choice() const {
    std::map<std::pair<double, double>, std::size_t> count;
    for (const auto& c : choices) ++count[{c.sigma, c.h}];
    std::pair<double, double> best{0.0, 0.0};
    std::size_t n = 0;
    for (const auto& [k, v] : count)
      if (v > n) {
        best = k;
        n = v;
      }
    return {best.first, best.second, 0.0};
  }
};

/// Bandwidth chosen on validation data and the resulting mean test
/// log-likelihood, for one set of model samples.
inline std::pair<BandwidthChoice, double> score_samples(std::span<const MixedDatum> samples,
                                                        std::span<const MixedDatum> validation,
                                                        std::span<const MixedDatum> test, const std::vector<int>& cards,
                                                        const BandwidthGrid& grid = {}) {
  const BandwidthChoice c = select_bandwidth(samples, validation, cards, grid);
  const double ll = KernelScorer(samples, test, cards).mean_log_density(c.sigma, c.h);
  return {c, ll};
}

/// Per repeat: draw n_samples from the model, pick (σ, h) on validation,
/// score the test set.
inline EvalReport evaluate_model(const Model& model, std::span<const MixedDatum> validation,
                                 std::span<const MixedDatum> test, const EvalConfig& cfg, Rng& rng) {
  if (cfg.repeats == 0 || cfg.n_samples == 0) throw std::invalid_argument("evaluation needs samples and repeats");
  EvalReport rep;
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const auto samples = sample_model(model, cfg.n_samples, rng);
    const auto [c, ll] = score_samples(samples, validation, test, model.layout.cards, cfg.grid);
    rep.choices.push_back(c);
    rep.test_loglik.push_back(ll);
  }
  const double n = static_cast<double>(cfg.repeats);
  for (double v : rep.test_loglik) rep.mean += v / n;
  if (cfg.repeats > 1) {
    double ss = 0.0;
    for (double v : rep.test_loglik) ss += (v - rep.mean) * (v - rep.mean);
    rep.std = std::sqrt(ss / (n - 1.0));
  }
  return rep;
}

/// Validation score used to rank restarts: one evaluation round on validation
/// data only (bandwidth and score both from the validation set).
inline double validation_score(const Model& model, std::span<const MixedDatum> validation, std::size_t n_samples,
                               Rng& rng, const BandwidthGrid& grid = {}) {
  const auto samples = sample_model(model, n_samples, rng);
  return select_bandwidth(samples, validation, model.layout.cards, grid).score;
}

/// KS distance between Φ(z_k) and U[0,1] for one posterior draw per datum,
/// averaged over latent dimensions.
inline double posterior_ks(const Model& model, std::span<const MixedDatum> data, Rng& rng) {
  if (data.empty()) throw std::invalid_argument("posterior_ks: no data");
  std::vector<Vec> u(model.latent);
  for (const auto& x : data) {
    const auto enc = model.encode(x);
    const auto z = reparameterize(enc, sample_std_normal(rng, model.latent)).z;
    for (std::size_t k = 0; k < model.latent; ++k) u[k].push_back(std_normal_cdf(z[k]));
  }
  double s = 0.0;
  for (const auto& v : u) s += ks_statistic_uniform(v);
  return s / static_cast<double>(model.latent);
}

/// Trains cfg.restarts models on p.train and keeps the best by validation
/// score. Every restart is scored with the same sample stream.
inline RestartReport train_best(const PreparedData& p, const TrainConfig& cfg, std::size_t score_samples_n = 10000,
                                const BandwidthGrid& grid = {}) {
  return restart_best(p.train, p.schema.layout(), cfg, [&](const Model& m) {
    Rng rng(Rng(cfg.seed ^ 0x5eed5eed5eedULL).split());
    return validation_score(m, p.validation, score_samples_n, rng, grid);
  });
}

}  // namespace gcvae
