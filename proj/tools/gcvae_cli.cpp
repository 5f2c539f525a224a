// gcvae: train, sample, inspect and evaluate VAE / VAE-ROC / GCVAE models.
//
// Exit codes: 0 success, 2 usage or schema error, 3 numerical or I/O failure.
// Outputs go to --output, else to $GCVAE_OUT_DIR (default ./gcvae_out). Every
// output file gets a <stem>.manifest.json next to it.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gcvae/gcvae.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gcvae;

namespace {

constexpr const char* kOutDirEnv = "GCVAE_OUT_DIR";
constexpr const char* kVersion = "1.0.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path out_dir() {
  const char* env = std::getenv(kOutDirEnv);
  return env && *env ? fs::path(env) : fs::path("gcvae_out");
}

/// Explicit path if given, else <out dir>/<fallback>. Parent dirs are created.
fs::path resolve_output(const std::string& explicit_path, const std::string& fallback) {
  fs::path p = explicit_path.empty() ? out_dir() / fallback : fs::path(explicit_path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  fs::path s = p;
  s.replace_extension();
  return s.string() + suffix;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_fingerprint(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read '" + p.string() + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c; f.get(c);) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing ") + what);
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " '" + path + "' does not exist");
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  return f;
}

void write_manifest(const fs::path& stem_of, const std::string& command, json config, std::uint64_t seed,
                    json inputs, json outputs, json metrics = json::object()) {
  json m;
  m["tool"] = "gcvae";
  m["version"] = kVersion;
  m["command"] = command;
  m["seed"] = seed;
  m["config"] = std::move(config);
  m["inputs"] = std::move(inputs);
  m["outputs"] = std::move(outputs);
  m["metrics"] = std::move(metrics);
  auto f = open_out(sibling(stem_of, ".manifest.json"));
  f << m.dump(2) << '\n';
}

Checkpoint load(const std::string& path) {
  require_file(path, "checkpoint");
  return load_checkpoint(path);
}

/// Reads a CSV under the checkpoint's schema and maps it into model space.
std::vector<MixedDatum> load_model_space(const std::string& path, const DatasetSchema& schema, const char* what) {
  require_file(path, what);
  DatasetSchema plain = schema;
  plain.reset_normalization();
  const Dataset ds = load_csv(path, plain);
  return normalize_all(ds.rows, schema);
}

void write_rows(const fs::path& p, const DatasetSchema& schema, const std::vector<MixedDatum>& model_space) {
  auto f = open_out(p);
  write_csv(f, schema, denormalize_all(model_space, schema));
}

// ---------------------------------------------------------------------------

struct DataOptions {
  std::string data;
  std::string schema;
  std::uint64_t data_seed = 42;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  bool no_normalize = false;
  double noise = 0.02;
};

void add_data_options(CLI::App* c, DataOptions& o) {
  c->add_option("--data", o.data, "Recipe (hc, hcw, mixed-synth) or annotated CSV path")->required();
  c->add_option("--schema", o.schema, "JSON schema sidecar for a plain-header CSV");
  c->add_option("--data-seed", o.data_seed, "Seed for data generation and splitting")->capture_default_str();
  c->add_option("--val", o.n_val, "Validation rows taken from a CSV dataset (default 10%)");
  c->add_option("--test", o.n_test, "Test rows taken from a CSV dataset (default 10%)");
  c->add_flag("--no-normalize", o.no_normalize, "Keep continuous CSV columns unscaled");
  c->add_option("--noise", o.noise, "Arc noise for the hc/hcw recipes")->capture_default_str();
}

json data_config(const DataOptions& o) {
  return {{"data", o.data},   {"schema", o.schema},   {"data_seed", o.data_seed}, {"val", o.n_val},
          {"test", o.n_test}, {"no_normalize", o.no_normalize}, {"noise", o.noise}};
}

PreparedData prepare(const DataOptions& o, json& inputs) {
  Rng rng(o.data_seed);
  const auto& names = recipe_names();
  if (std::find(names.begin(), names.end(), o.data) != names.end()) {
    RecipeOptions ro;
    ro.noise_std = o.noise;
    inputs.push_back({{"recipe", o.data}, {"data_seed", o.data_seed}, {"noise", o.noise}});
    return make_recipe(o.data, rng, ro);
  }
  require_file(o.data, "dataset");
  std::optional<DatasetSchema> schema;
  if (!o.schema.empty()) {
    require_file(o.schema, "schema sidecar");
    schema = load_schema_json(o.schema);
    inputs.push_back({{"path", o.schema}, {"fingerprint", file_fingerprint(o.schema)}});
  }
  const Dataset ds = load_csv(o.data, schema);
  inputs.push_back({{"path", o.data}, {"fingerprint", file_fingerprint(o.data)}, {"rows", ds.rows.size()}});
  if (ds.rows.size() < 3) throw UsageError("dataset '" + o.data + "' has fewer than 3 complete rows");
  const std::size_t tenth = std::max<std::size_t>(1, ds.rows.size() / 10);
  const std::size_t nv = o.n_val ? o.n_val : tenth, nt = o.n_test ? o.n_test : tenth;
  if (nv + nt >= ds.rows.size()) throw UsageError("--val + --test leave no training rows");
  return prepare_dataset(ds, nv, nt, rng, !o.no_normalize);
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  DataOptions data;
  std::string model = "vae";
  std::string output;
  std::size_t latent = 2;
  std::vector<std::size_t> hidden{100};
  std::string activation = "tanh";
  std::size_t iters = 1000;
  double lr = 1e-3;
  std::size_t batch = 0;
  double lambda_a = 0.0;
  double lambda_r = 0.0;
  int norm_p = 2;
  std::string rank_mode = "per_dimension";
  std::size_t restarts = 1;
  bool parallel = false;
  std::uint64_t seed = 1;
  std::size_t score_samples = 10000;
  std::size_t history_every = 1;
};

int cmd_train(const TrainOptions& o) {
  json inputs = json::array();
  const PreparedData p = prepare(o.data, inputs);

  TrainConfig cfg;
  cfg.kind = model_kind_from_string(o.model);
  cfg.latent = o.latent;
  cfg.hidden = o.hidden;
  cfg.activation = activation_from_string(o.activation);
  cfg.max_iterations = o.iters;
  cfg.adam.alpha = o.lr;
  cfg.batch_size = o.batch;
  cfg.lambda_a = o.lambda_a;
  cfg.lambda_r = o.lambda_r;
  cfg.norm_p = o.norm_p;
  cfg.rank_mode = o.rank_mode == "joint" ? RankMode::joint : RankMode::per_dimension;
  cfg.restarts = o.restarts;
  cfg.parallel = o.parallel;
  cfg.seed = o.seed;
  cfg.history_every = o.history_every;
  cfg.validate();

  RestartReport rep = cfg.restarts > 1 ? train_best(p, cfg, o.score_samples)
                                       : restart_best(p.train, p.schema.layout(), cfg, [](const Model&) { return 0.0; });
  TrainResult& best = rep.best();

  const std::string base = o.model + "_" + fs::path(o.data.data).stem().string();
  const fs::path ck = resolve_output(o.output, base + ".ckpt");
  save_checkpoint(ck.string(), best.model, p.schema);
  const fs::path hist = sibling(ck, ".history.csv");
  {
    auto f = open_out(hist);
    write_history_csv(f, best.history);
  }
  json outputs = {{{"role", "checkpoint"}, {"path", ck.string()}, {"fingerprint", file_fingerprint(ck)}},
                  {{"role", "history"}, {"path", hist.string()}}};
  for (const auto& [role, rows] : {std::pair{"train", &p.train}, {"validation", &p.validation}, {"test", &p.test}}) {
    const fs::path sp = sibling(ck, std::string(".") + role + ".csv");
    write_rows(sp, p.schema, *rows);
    outputs.push_back({{"role", role}, {"path", sp.string()}, {"fingerprint", hex64(fingerprint(p.schema, *rows))},
                       {"rows", rows->size()}});
  }

  json restarts = json::array();
  for (const auto& r : rep.runs)
    restarts.push_back({{"seed", r.seed}, {"score", std::isfinite(r.score) ? json(r.score) : json(nullptr)},
                        {"error", r.error}});
  json metrics = {{"best_restart", rep.best_index},
                  {"restarts", restarts},
                  {"final_objective", best.history.empty() ? json(nullptr) : json(best.history.back().terms.value)}};
  json config = {{"data", data_config(o.data)}, {"model", o.model},         {"latent", o.latent},
                 {"hidden", o.hidden},          {"activation", o.activation}, {"iters", o.iters},
                 {"lr", o.lr},                  {"batch", o.batch},          {"lambda_a", o.lambda_a},
                 {"lambda_r", o.lambda_r},      {"norm_p", o.norm_p},        {"rank_mode", o.rank_mode},
                 {"restarts", o.restarts},      {"parallel", o.parallel},    {"score_samples", o.score_samples}};
  write_manifest(ck, "train", config, o.seed, inputs, outputs, metrics);
  std::cout << ck.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// sample

struct SampleOptions {
  std::string checkpoint;
  std::string output;
  std::size_t n = 1000;
  std::size_t grid = 0;
  bool mean = false;
  std::uint64_t seed = 1;
};

int cmd_sample(const SampleOptions& o) {
  const Checkpoint ck = load(o.checkpoint);
  Rng rng(o.seed);
  std::vector<MixedDatum> rows;
  if (o.grid > 0) {
    if (ck.model.latent != 2) throw UsageError("--grid needs a checkpoint with a 2-dimensional latent space");
    for (const auto& z : latent_grid(o.grid, 2)) {
      const auto head = ck.model.decode(z);
      rows.push_back(o.mean ? head_mean(head) : sample_from_head(head, rng));
    }
  } else {
    if (o.mean) throw UsageError("--mean requires --grid");
    rows = sample_model(ck.model, o.n, rng);
  }
  const fs::path out = resolve_output(o.output, fs::path(o.checkpoint).stem().string() + ".samples.csv");
  write_rows(out, ck.schema, rows);
  write_manifest(out, "sample",
                 {{"checkpoint", o.checkpoint}, {"n", o.n}, {"grid", o.grid}, {"mean", o.mean}}, o.seed,
                 {{{"path", o.checkpoint}, {"fingerprint", file_fingerprint(o.checkpoint)}}},
                 {{{"path", out.string()}, {"rows", rows.size()}, {"fingerprint", file_fingerprint(out)}}});
  std::cout << out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// manifold

struct ManifoldOptions {
  std::string checkpoint;
  std::string output;
  std::size_t grid = 25;
};

int cmd_manifold(const ManifoldOptions& o) {
  const Checkpoint ck = load(o.checkpoint);
  if (ck.model.latent != 2) throw UsageError("manifold grids need a 2-dimensional latent space");
  if (o.grid == 0) throw UsageError("--grid must be positive");
  const auto rows = manifold(ck.model, o.grid);
  const fs::path out = resolve_output(o.output, fs::path(o.checkpoint).stem().string() + ".manifold.csv");
  {
    auto f = open_out(out);
    write_manifold_csv(f, ck.model, rows);
  }
  json metrics = json::object();
  if (ck.model.kind != ModelKind::vae) metrics["mean_omega"] = mean_omega(rows);
  write_manifest(out, "manifold", {{"checkpoint", o.checkpoint}, {"grid", o.grid}}, 0,
                 {{{"path", o.checkpoint}, {"fingerprint", file_fingerprint(o.checkpoint)}}},
                 {{{"path", out.string()}, {"rows", rows.size()}, {"fingerprint", file_fingerprint(out)}}}, metrics);
  std::cout << out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string checkpoint;
  std::string validation;
  std::string test;
  std::string output;
  std::string label;
  std::size_t n_samples = 10000;
  std::size_t repeats = 1;
  std::vector<double> sigmas = kDefaultSigmaGrid;
  std::vector<double> hs = kDefaultHGrid;
  std::uint64_t seed = 1;
};

int cmd_eval(const EvalOptions& o) {
  const Checkpoint ck = load(o.checkpoint);
  const auto val = load_model_space(o.validation, ck.schema, "validation set");
  const auto test = load_model_space(o.test, ck.schema, "test set");
  if (val.empty() || test.empty()) throw UsageError("validation and test sets must contain rows");
  EvalConfig cfg;
  cfg.n_samples = o.n_samples;
  cfg.repeats = o.repeats;
  cfg.grid = {o.sigmas, o.hs};
  Rng rng(o.seed);
  const EvalReport rep = evaluate_model(ck.model, val, test, cfg, rng);
  const BandwidthChoice c = rep.modal_choice();

  const std::string label = o.label.empty() ? fs::path(o.test).stem().string() : o.label;
  const fs::path out = resolve_output(o.output, fs::path(o.checkpoint).stem().string() + ".metrics.csv");
  {
    auto f = open_out(out);
    f << "dataset,model,sigma,h,mean,std,repeats\n";
    f << label << ',' << to_string(ck.model.kind) << ',' << detail::format_double(c.sigma) << ','
      << detail::format_double(c.h) << ',' << detail::format_double(rep.mean) << ',' << detail::format_double(rep.std)
      << ',' << o.repeats << '\n';
  }
  json per_repeat = json::array();
  for (std::size_t r = 0; r < rep.test_loglik.size(); ++r)
    per_repeat.push_back({{"sigma", rep.choices[r].sigma}, {"h", rep.choices[r].h},
                          {"validation", rep.choices[r].score}, {"test", rep.test_loglik[r]}});
  write_manifest(out, "eval",
                 {{"checkpoint", o.checkpoint}, {"validation", o.validation}, {"test", o.test},
                  {"n_samples", o.n_samples}, {"repeats", o.repeats}, {"sigma_grid", o.sigmas}, {"h_grid", o.hs}},
                 o.seed,
                 {{{"path", o.checkpoint}, {"fingerprint", file_fingerprint(o.checkpoint)}},
                  {{"path", o.validation}, {"fingerprint", file_fingerprint(o.validation)}},
                  {{"path", o.test}, {"fingerprint", file_fingerprint(o.test)}}},
                 {{{"path", out.string()}, {"fingerprint", file_fingerprint(out)}}},
                 {{"mean", rep.mean}, {"std", rep.std}, {"per_repeat", per_repeat}});
  std::cout << label << ' ' << to_string(ck.model.kind) << ' ' << detail::format_double(rep.mean) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// rankcorr

struct RankcorrOptions {
  std::string checkpoint;
  std::string output;
  std::vector<double> z;
  std::string datum;
  std::size_t row = 0;
};

int cmd_rankcorr(const RankcorrOptions& o) {
  const Checkpoint ck = load(o.checkpoint);
  if (ck.model.kind != ModelKind::gcvae) throw UsageError("rankcorr needs a gcvae checkpoint");
  Vec z;
  json inputs = {{{"path", o.checkpoint}, {"fingerprint", file_fingerprint(o.checkpoint)}}};
  if (!o.z.empty() == !o.datum.empty()) throw UsageError("give exactly one of --z or --datum");
  if (!o.z.empty()) {
    if (o.z.size() != ck.model.latent)
      throw UsageError("--z needs " + std::to_string(ck.model.latent) + " values");
    z = o.z;
  } else {
    const auto rows = load_model_space(o.datum, ck.schema, "datum file");
    if (o.row >= rows.size()) throw UsageError("--row is past the end of the datum file");
    z = ck.model.encode(rows[o.row]).eta;  // posterior mean
    inputs.push_back({{"path", o.datum}, {"fingerprint", file_fingerprint(o.datum)}});
  }
  const Mat m = rank_correlation_matrix(std::get<GcvaeHead>(ck.model.decode(z)));

  // Matrix order: continuous columns, then categorical ones.
  std::vector<std::string> names;
  for (auto role : {ColumnRole::continuous, ColumnRole::categorical})
    for (const auto& c : ck.schema.columns)
      if (c.role == role) names.push_back(c.name);
  const fs::path out = resolve_output(o.output, fs::path(o.checkpoint).stem().string() + ".rankcorr.csv");
  {
    auto f = open_out(out);
    f << "column";
    for (const auto& n : names) f << ',' << n;
    f << '\n';
    for (std::size_t i = 0; i < names.size(); ++i) {
      f << names[i];
      for (std::size_t j = 0; j < names.size(); ++j) f << ',' << detail::format_double(m(i, j));
      f << '\n';
    }
  }
  write_manifest(out, "rankcorr", {{"checkpoint", o.checkpoint}, {"z", z}, {"datum", o.datum}, {"row", o.row}}, 0,
                 inputs, {{{"path", out.string()}, {"fingerprint", file_fingerprint(out)}}});
  std::cout << out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const DataOptions& o, const std::string& output) {
  json inputs = json::array();
  const PreparedData p = prepare(o, inputs);
  const fs::path base = resolve_output(output, fs::path(o.data).stem().string() + ".csv");
  json outputs = json::array();
  for (const auto& [role, rows] : {std::pair{"train", &p.train}, {"validation", &p.validation}, {"test", &p.test}}) {
    const fs::path sp = sibling(base, std::string(".") + role + ".csv");
    write_rows(sp, p.schema, *rows);
    outputs.push_back({{"role", role}, {"path", sp.string()}, {"fingerprint", hex64(fingerprint(p.schema, *rows))},
                       {"rows", rows->size()}});
  }
  write_manifest(base, "gen", data_config(o), o.data_seed, inputs, outputs);
  std::cout << base.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational autoencoders with rank-one covariance and Gaussian copula decoders"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.footer(std::string("Outputs default to $") + kOutDirEnv + " (or ./gcvae_out). Exit codes: 0 ok, 2 usage/schema, 3 numerical/IO.");

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train a model and write checkpoint, history, splits and manifest");
  add_data_options(t, tr.data);
  t->add_option("--model", tr.model, "vae, vae-roc or gcvae")
      ->check(CLI::IsMember({"vae", "vae-roc", "gcvae"}))
      ->capture_default_str();
  t->add_option("-o,--output", tr.output, "Checkpoint path");
  t->add_option("--latent", tr.latent, "Latent dimension K")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--hidden", tr.hidden, "Hidden layer widths, e.g. 100 or 200,100")->delimiter(',')->capture_default_str();
  t->add_option("--activation", tr.activation)->check(CLI::IsMember({"tanh", "relu", "sigmoid", "identity"}))->capture_default_str();
  t->add_option("--iters", tr.iters, "Training iterations")->capture_default_str();
  t->add_option("--lr", tr.lr, "ADAM step size")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--batch", tr.batch, "Minibatch size (0 = full batch)")->capture_default_str();
  t->add_option("--lambda-a", tr.lambda_a, "Locality penalty weight")->capture_default_str()->check(CLI::NonNegativeNumber);
  t->add_option("--lambda-r", tr.lambda_r, "Rank penalty weight")->capture_default_str()->check(CLI::NonNegativeNumber);
  t->add_option("--norm", tr.norm_p, "Locality norm order (1 or 2)")->capture_default_str()->check(CLI::IsMember({1, 2}));
  t->add_option("--rank-mode", tr.rank_mode)->check(CLI::IsMember({"per_dimension", "joint"}))->capture_default_str();
  t->add_option("--restarts", tr.restarts, "Independent restarts; best by validation score")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_flag("--parallel", tr.parallel, "Run restarts on several threads");
  t->add_option("--seed", tr.seed, "Training seed")->capture_default_str();
  t->add_option("--score-samples", tr.score_samples, "Model samples for restart scoring")->capture_default_str();
  t->add_option("--history-every", tr.history_every, "Record every n-th iteration")->capture_default_str()->check(CLI::PositiveNumber);

  SampleOptions sa;
  auto* s = app.add_subcommand("sample", "Draw samples from a checkpoint");
  s->add_option("--checkpoint", sa.checkpoint)->required();
  s->add_option("-o,--output", sa.output, "CSV path");
  s->add_option("--n", sa.n, "Number of ancestral samples")->capture_default_str();
  s->add_option("--grid", sa.grid, "Latent CDF grid side (K=2); overrides --n");
  s->add_flag("--mean", sa.mean, "Emit the head mean/mode at grid points instead of a draw");
  s->add_option("--seed", sa.seed)->capture_default_str();

  ManifoldOptions ma;
  auto* m = app.add_subcommand("manifold", "Decoder head parameters over a latent grid");
  m->add_option("--checkpoint", ma.checkpoint)->required();
  m->add_option("-o,--output", ma.output, "CSV path");
  m->add_option("--grid", ma.grid, "Grid side")->capture_default_str();

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Kernel-density test log-likelihood of model samples");
  e->add_option("--checkpoint", ev.checkpoint)->required();
  e->add_option("--validation", ev.validation, "CSV used to pick the bandwidth")->required();
  e->add_option("--test", ev.test, "CSV scored with the chosen bandwidth")->required();
  e->add_option("-o,--output", ev.output, "Metrics CSV path");
  e->add_option("--label", ev.label, "Dataset label in the metrics row");
  e->add_option("--samples", ev.n_samples, "Model samples per repeat")->capture_default_str()->check(CLI::PositiveNumber);
  e->add_option("--repeats", ev.repeats)->capture_default_str()->check(CLI::PositiveNumber);
  e->add_option("--sigma-grid", ev.sigmas)->delimiter(',')->capture_default_str();
  e->add_option("--h-grid", ev.hs)->delimiter(',')->capture_default_str();
  e->add_option("--seed", ev.seed)->capture_default_str();

  RankcorrOptions rc;
  auto* r = app.add_subcommand("rankcorr", "Kendall's tau matrix of a gcvae head");
  r->add_option("--checkpoint", rc.checkpoint)->required();
  r->add_option("-o,--output", rc.output, "CSV path");
  r->add_option("--z", rc.z, "Latent point, comma separated")->delimiter(',');
  r->add_option("--datum", rc.datum, "CSV whose row is encoded to its posterior mean");
  r->add_option("--row", rc.row, "Row of --datum")->capture_default_str();

  DataOptions gd;
  std::string gen_out;
  auto* g = app.add_subcommand("gen", "Write the train/validation/test CSVs of a recipe or dataset");
  add_data_options(g, gd);
  g->add_option("-o,--output", gen_out, "Base path; splits go to <stem>.<split>.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*t) return cmd_train(tr);
    if (*s) return cmd_sample(sa);
    if (*m) return cmd_manifold(ma);
    if (*e) return cmd_eval(ev);
    if (*r) return cmd_rankcorr(rc);
    if (*g) return cmd_gen(gd, gen_out);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const SchemaError& err) {
    std::cerr << "schema error: " << err.what() << '\n';
    return 2;
  } catch (const ParseError& err) {
    std::cerr << "parse error: " << err.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << '\n';
    return 3;
  } catch (const FormatError& err) {
    std::cerr << "corrupt file: " << err.what() << '\n';
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "failure: " << err.what() << '\n';
    return 3;
  }
  return 2;
}
