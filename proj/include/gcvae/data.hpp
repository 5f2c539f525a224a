#pragma once

// Datasets: synthetic generators, the annotated CSV format, schemas with
// normalisation statistics, and reproducible train/validation/test splits.
//
// CSV format: comma separated, UTF-8, '.' decimal point, one header row whose
// cells read  name:role[:cardinality]  with role `cont`/`continuous` or
// `cat`/`categorical`. The third field of a categorical column is either the
// cardinality J (values are then the integers 1..J) or a '|'-separated list
// of level labels (values are matched as text, level k maps to category k).
// Empty cells and the markers ?, NA, nan mark missing entries; such rows are
// dropped. See docs/FORMATS.md.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "mixed.hpp"
#include "ndcore.hpp"

namespace gcvae {

enum class ColumnRole { continuous, categorical };

struct ColumnSpec {
  std::string name;
  ColumnRole role = ColumnRole::continuous;
  std::vector<std::string> levels;  // categorical only; category k is levels[k-1]

  int cardinality() const noexcept { return static_cast<int>(levels.size()); }
};

inline std::vector<std::string> integer_levels(int J) {
  std::vector<std::string> out;
  for (int j = 1; j <= J; ++j) out.push_back(std::to_string(j));
  return out;
}

struct DatasetSchema {
  std::vector<ColumnSpec> columns;
  // Normalisation of the continuous columns (in column order); identity by default.
  Vec mean;
  Vec stddev;

  std::size_t n_cont() const {
    return static_cast<std::size_t>(std::count_if(columns.begin(), columns.end(),
                                                  [](const ColumnSpec& c) { return c.role == ColumnRole::continuous; }));
  }

  DataLayout layout() const {
    DataLayout l;
    for (const auto& c : columns) {
      if (c.role == ColumnRole::continuous)
        ++l.n_cont;
      else
        l.cards.push_back(c.cardinality());
    }
    return l;
  }

  void reset_normalization() {
    mean.assign(n_cont(), 0.0);
    stddev.assign(n_cont(), 1.0);
  }

  void check_normalization() const {
    if (mean.size() != n_cont() || stddev.size() != n_cont())
      throw SchemaError("normalisation statistics do not match the continuous columns");
  }

  static DatasetSchema continuous(std::size_t d, const std::string& prefix = "x") {
    DatasetSchema s;
    for (std::size_t i = 0; i < d; ++i) s.columns.push_back({prefix + std::to_string(i + 1), ColumnRole::continuous, {}});
    s.reset_normalization();
    return s;
  }

  friend bool operator==(const DatasetSchema&, const DatasetSchema&) = default;
};

inline bool operator==(const ColumnSpec& a, const ColumnSpec& b) {
  return a.name == b.name && a.role == b.role && a.levels == b.levels;
}

struct Dataset {
  DatasetSchema schema;
  std::vector<MixedDatum> rows;
};

// ---------------------------------------------------------------------------
// Normalisation

/// Fits per-column mean and standard deviation on `train` (the only split
/// that may inform them). Constant columns keep a unit scale.
inline void fit_normalization(DatasetSchema& schema, std::span<const MixedDatum> train) {
  const std::size_t dc = schema.n_cont();
  schema.mean.assign(dc, 0.0);
  schema.stddev.assign(dc, 1.0);
  if (train.empty()) return;
  const double n = static_cast<double>(train.size());
  for (const auto& x : train)
    for (std::size_t i = 0; i < dc; ++i) schema.mean[i] += x.cont.at(i) / n;
  if (train.size() < 2) return;
  for (std::size_t i = 0; i < dc; ++i) {
    double ss = 0.0;
    for (const auto& x : train) ss += (x.cont[i] - schema.mean[i]) * (x.cont[i] - schema.mean[i]);
    const double sd = std::sqrt(ss / (n - 1.0));
    schema.stddev[i] = sd > 0.0 ? sd : 1.0;
  }
}

inline MixedDatum normalize(const MixedDatum& x, const DatasetSchema& schema) {
  schema.check_normalization();
  MixedDatum y = x;
  for (std::size_t i = 0; i < y.cont.size(); ++i) y.cont[i] = (x.cont[i] - schema.mean[i]) / schema.stddev[i];
  return y;
}

inline MixedDatum denormalize(const MixedDatum& x, const DatasetSchema& schema) {
  schema.check_normalization();
  MixedDatum y = x;
  for (std::size_t i = 0; i < y.cont.size(); ++i) y.cont[i] = x.cont[i] * schema.stddev[i] + schema.mean[i];
  return y;
}

inline std::vector<MixedDatum> normalize_all(std::span<const MixedDatum> rows, const DatasetSchema& schema) {
  std::vector<MixedDatum> out;
  out.reserve(rows.size());
  for (const auto& x : rows) out.push_back(normalize(x, schema));
  return out;
}

inline std::vector<MixedDatum> denormalize_all(std::span<const MixedDatum> rows, const DatasetSchema& schema) {
  std::vector<MixedDatum> out;
  out.reserve(rows.size());
  for (const auto& x : rows) out.push_back(denormalize(x, schema));
  return out;
}

/// Normalised continuous values followed by one-hot categorical blocks.
inline Vec encode_for_network(const MixedDatum& x, const DatasetSchema& schema) {
  return encode_for_network(normalize(x, schema), schema.layout());
}

// ---------------------------------------------------------------------------
// Splits

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Random partition of 0..n-1: n_test test indices, n_validation validation
/// indices, the rest training. Each part is returned in ascending order.
inline Split make_split(std::size_t n, std::size_t n_validation, std::size_t n_test, Rng& rng) {
  if (n_validation + n_test > n) throw std::invalid_argument("make_split: split sizes exceed the dataset");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  Split s;
  s.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test),
                      idx.begin() + static_cast<std::ptrdiff_t>(n_test + n_validation));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test + n_validation), idx.end());
  for (auto* v : {&s.train, &s.validation, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

inline std::vector<MixedDatum> select_rows(std::span<const MixedDatum> rows, std::span<const std::size_t> idx) {
  std::vector<MixedDatum> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(rows[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generators

/// Points on the upper unit half circle with isotropic Gaussian noise.
inline std::vector<Vec> gen_half_circle(std::size_t n, double noise_std, Rng& rng) {
  if (noise_std < 0.0) throw std::invalid_argument("gen_half_circle: noise_std must be non-negative");
  std::vector<Vec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::numbers::pi * rng.uniform();
    Vec p{std::cos(t), std::sin(t)};
    if (noise_std > 0.0) {
      p[0] += noise_std * rng.normal();
      p[1] += noise_std * rng.normal();
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct WedgeSpec {
  Vec angles{std::numbers::pi / 4, std::numbers::pi / 2, 3 * std::numbers::pi / 4};
  double inner_radius = 1.0;  // where each segment meets the arc
  double length = 0.5;        // radial extent of each segment
};

/// Half circle plus one radial segment ("wedge") per angle, each holding
/// n_per_wedge points spread uniformly along it. Arc and wedges share noise_std.
inline std::vector<Vec> gen_half_circle_wedges(std::size_t n_arc, std::size_t n_per_wedge, double noise_std, Rng& rng,
                                               const WedgeSpec& wedges = {}) {
  auto out = gen_half_circle(n_arc, noise_std, rng);
  for (double phi : wedges.angles) {
    for (std::size_t i = 0; i < n_per_wedge; ++i) {
      const double r = wedges.inner_radius + wedges.length * rng.uniform();
      Vec p{r * std::cos(phi), r * std::sin(phi)};
      if (noise_std > 0.0) {
        p[0] += noise_std * rng.normal();
        p[1] += noise_std * rng.normal();
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

struct MixedSynthSpec {
  std::size_t n_cont = 4;
  std::vector<int> cards{3, 3, 3};
  double coupling = 0.9;  // loading of every column on the shared factor, in [0, 1]
};

/// One shared standard-normal factor f drives every column: continuous
/// columns are ±coupling·f + √(1-coupling²)·e, categorical columns threshold
/// the same construction at equiprobable normal quantiles. Loadings alternate
/// in sign across columns.
inline Dataset gen_mixed_synthetic(std::size_t n, const MixedSynthSpec& spec, Rng& rng) {
  if (spec.coupling < 0.0 || spec.coupling > 1.0) throw std::invalid_argument("coupling must lie in [0, 1]");
  Dataset ds;
  for (std::size_t i = 0; i < spec.n_cont; ++i)
    ds.schema.columns.push_back({"c" + std::to_string(i + 1), ColumnRole::continuous, {}});
  for (std::size_t i = 0; i < spec.cards.size(); ++i) {
    if (spec.cards[i] < 2) throw std::invalid_argument("categorical columns need at least two categories");
    ds.schema.columns.push_back({"s" + std::to_string(i + 1), ColumnRole::categorical, integer_levels(spec.cards[i])});
  }
  ds.schema.reset_normalization();
  const double c = spec.coupling;
  const double r = std::sqrt(std::max(0.0, 1.0 - c * c));
  auto loading = [&](std::size_t col) { return (col % 2 == 0) ? c : -c; };
  for (std::size_t k = 0; k < n; ++k) {
    const double f = rng.normal();
    MixedDatum x;
    for (std::size_t i = 0; i < spec.n_cont; ++i) x.cont.push_back(loading(i) * f + r * rng.normal());
    for (std::size_t i = 0; i < spec.cards.size(); ++i) {
      const double y = loading(spec.n_cont + i) * f + r * rng.normal();
      const int J = spec.cards[i];
      const double u = 0.5 * std::erfc(-y / std::numbers::sqrt2);
      x.cat.push_back(std::clamp(1 + static_cast<int>(std::floor(u * J)), 1, J));
    }
    ds.rows.push_back(std::move(x));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool is_missing(const std::string& v) { return v.empty() || v == "?" || v == "NA" || v == "nan" || v == "NaN"; }

inline ColumnSpec parse_column_annotation(const std::string& cell, std::size_t line) {
  const auto parts = split(trim(cell), ':');
  if (parts.size() < 2 || parts.size() > 3 || parts[0].empty())
    throw ParseError("header cell '" + cell + "' is not of the form name:role[:cardinality]", line);
  ColumnSpec c{parts[0], ColumnRole::continuous, {}};
  const std::string& role = parts[1];
  if (role == "cont" || role == "continuous") {
    if (parts.size() == 3) throw ParseError("continuous column '" + c.name + "' takes no cardinality", line);
    return c;
  }
  if (role != "cat" && role != "categorical") throw ParseError("unknown column role '" + role + "'", line);
  c.role = ColumnRole::categorical;
  if (parts.size() != 3) throw ParseError("categorical column '" + c.name + "' needs a cardinality or level list", line);
  const std::string& spec = parts[2];
  if (spec.find('|') != std::string::npos) {
    c.levels = split(spec, '|');
  } else {
    std::size_t pos = 0;
    int J = 0;
    try {
      J = std::stoi(spec, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != spec.size() || J < 2) throw ParseError("bad cardinality '" + spec + "' for column '" + c.name + "'", line);
    c.levels = integer_levels(J);
  }
  return c;
}

inline double parse_double(const std::string& s, std::size_t line, const std::string& col) {
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  double v;
  if (!(is >> v) || !(is >> std::ws).eof() || !std::isfinite(v))
    throw ParseError("cannot parse '" + s + "' as a number in column '" + col + "'", line);
  return v;
}

/// Shortest text that parses back to exactly v.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

/// Reads a JSON schema sidecar:
///   {"columns": [{"name": "mpg", "role": "continuous"},
///                {"name": "origin", "role": "categorical", "levels": ["1","2","3"]},
///                {"name": "cyl", "role": "categorical", "cardinality": 5}]}
inline DatasetSchema parse_schema_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schema sidecar: ") + e.what(), 1);
  }
  DatasetSchema s;
  if (!j.contains("columns") || !j["columns"].is_array()) throw SchemaError("schema sidecar needs a 'columns' array");
  for (const auto& c : j["columns"]) {
    ColumnSpec col;
    col.name = c.value("name", "");
    const std::string role = c.value("role", "");
    if (col.name.empty()) throw SchemaError("schema column without a name");
    if (role == "continuous" || role == "cont") {
      col.role = ColumnRole::continuous;
    } else if (role == "categorical" || role == "cat") {
      col.role = ColumnRole::categorical;
      if (c.contains("levels")) {
        for (const auto& l : c["levels"]) col.levels.push_back(l.is_string() ? l.get<std::string>() : l.dump());
      } else {
        col.levels = integer_levels(c.value("cardinality", 0));
      }
      if (col.levels.size() < 2) throw SchemaError("categorical column '" + col.name + "' needs at least two levels");
    } else {
      throw SchemaError("column '" + col.name + "' has unknown role '" + role + "'");
    }
    s.columns.push_back(std::move(col));
  }
  s.reset_normalization();
  return s;
}

/// Parses CSV text. Without `schema` the header must carry role annotations;
/// with it, the header must list the schema's column names in order.
inline Dataset parse_csv(std::istream& is, const std::optional<DatasetSchema>& schema = std::nullopt) {
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::size_t dropped = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (!have_header) {
      have_header = true;
      if (schema) {
        ds.schema = *schema;
        if (cells.size() != ds.schema.columns.size()) throw ParseError("header width does not match the schema", lineno);
        for (std::size_t i = 0; i < cells.size(); ++i) {
          const std::string name = detail::split(detail::trim(cells[i]), ':').front();
          if (name != ds.schema.columns[i].name)
            throw ParseError("header column '" + name + "' does not match schema column '" +
                                 ds.schema.columns[i].name + "'",
                             lineno);
        }
      } else {
        for (const auto& c : cells) ds.schema.columns.push_back(detail::parse_column_annotation(c, lineno));
      }
      if (ds.schema.mean.size() != ds.schema.n_cont()) ds.schema.reset_normalization();
      continue;
    }
    if (cells.size() != ds.schema.columns.size())
      throw ParseError("expected " + std::to_string(ds.schema.columns.size()) + " fields, found " +
                           std::to_string(cells.size()),
                       lineno);
    MixedDatum x;
    bool missing = false;
    for (std::size_t i = 0; i < cells.size() && !missing; ++i) {
      const std::string v = detail::trim(cells[i]);
      if (detail::is_missing(v)) {
        missing = true;
        break;
      }
      const auto& col = ds.schema.columns[i];
      if (col.role == ColumnRole::continuous) {
        x.cont.push_back(detail::parse_double(v, lineno, col.name));
      } else {
        const auto it = std::find(col.levels.begin(), col.levels.end(), v);
        if (it == col.levels.end())
          throw SchemaError("line " + std::to_string(lineno) + ": unknown category '" + v + "' in column '" +
                            col.name + "'");
        x.cat.push_back(static_cast<int>(it - col.levels.begin()) + 1);
      }
    }
    if (missing) {
      ++dropped;
      continue;
    }
    ds.rows.push_back(std::move(x));
  }
  (void)dropped;
  return ds;
}

inline Dataset load_csv(const std::string& path, const std::optional<DatasetSchema>& schema = std::nullopt) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  return parse_csv(f, schema);
}

inline DatasetSchema load_schema_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open schema sidecar '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_schema_json(ss.str());
}

inline std::string header_cell(const ColumnSpec& c) {
  if (c.role == ColumnRole::continuous) return c.name + ":cont";
  if (c.levels == integer_levels(c.cardinality())) return c.name + ":cat:" + std::to_string(c.cardinality());
  std::string s = c.name + ":cat:";
  for (std::size_t i = 0; i < c.levels.size(); ++i) s += (i ? "|" : "") + c.levels[i];
  return s;
}

/// Writes rows in the annotated format; values are written as given (no
/// normalisation is applied).
inline void write_csv(std::ostream& os, const DatasetSchema& schema, std::span<const MixedDatum> rows) {
  for (std::size_t i = 0; i < schema.columns.size(); ++i) os << (i ? "," : "") << header_cell(schema.columns[i]);
  os << '\n';
  const DataLayout layout = schema.layout();
  for (const auto& x : rows) {
    layout.check(x);
    std::size_t ic = 0, is = 0;
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
      if (i) os << ',';
      const auto& col = schema.columns[i];
      if (col.role == ColumnRole::continuous)
        os << detail::format_double(x.cont[ic++]);
      else
        os << col.levels[static_cast<std::size_t>(x.cat[is++] - 1)];
    }
    os << '\n';
  }
}

/// FNV-1a 64-bit hash of the canonical CSV rendering of a dataset.
inline std::uint64_t fingerprint(const DatasetSchema& schema, std::span<const MixedDatum> rows) {
  std::ostringstream os;
  write_csv(os, schema, rows);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::vector<MixedDatum> as_continuous_rows(std::span<const Vec> pts) {
  std::vector<MixedDatum> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({p, {}});
  return out;
}

}  // namespace gcvae
