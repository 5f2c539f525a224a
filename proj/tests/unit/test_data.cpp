#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "gcvae/gcvae.hpp"

using namespace gcvae;

namespace {

Dataset parse(const std::string& text, const std::optional<DatasetSchema>& schema = std::nullopt) {
  std::istringstream is(text);
  return parse_csv(is, schema);
}

}  // namespace

TEST(HalfCircle, NoiselessPointsLieOnTheUpperArc) {
  Rng rng(1);
  const auto pts = gen_half_circle(280, 0.0, rng);
  ASSERT_EQ(pts.size(), 280u);
  for (const auto& p : pts) {
    EXPECT_NEAR(p[0] * p[0] + p[1] * p[1], 1.0, 1e-12);
    EXPECT_GE(p[1], 0.0);
  }
  EXPECT_THROW(gen_half_circle(3, -1.0, rng), std::invalid_argument);
}

TEST(HalfCircle, Reproducible) {
  Rng a(9), b(9);
  EXPECT_EQ(gen_half_circle(50, 0.02, a), gen_half_circle(50, 0.02, b));
}

TEST(Wedges, ZeroWedgePointsReduceToHalfCircle) {
  Rng a(2), b(2);
  EXPECT_EQ(gen_half_circle_wedges(40, 0, 0.02, a), gen_half_circle(40, 0.02, b));
}

TEST(Wedges, DefaultCountsAndRadialExtent) {
  Rng rng(3);
  const double noise = 0.02;
  const auto pts = gen_half_circle_wedges(280, 100, noise, rng);
  ASSERT_EQ(pts.size(), 580u);
  const WedgeSpec w;
  for (std::size_t k = 0; k < 3; ++k) {
    double rmax = 0.0;
    for (std::size_t i = 280 + 100 * k; i < 280 + 100 * (k + 1); ++i) {
      const double r = std::hypot(pts[i][0], pts[i][1]);
      rmax = std::max(rmax, r);
      EXPECT_NEAR(std::atan2(pts[i][1], pts[i][0]), w.angles[k], 0.2);
    }
    // Segments reach well outside the arc's 3-sigma noise band.
    EXPECT_GT(rmax - 1.0, 3 * noise);
  }
}

TEST(Wedges, NoiseFreeSegmentsAreExactlyRadial) {
  Rng rng(5);
  const auto pts = gen_half_circle_wedges(0, 50, 0.0, rng);
  const WedgeSpec w;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double r = std::hypot(pts[i][0], pts[i][1]);
    EXPECT_NEAR(std::atan2(pts[i][1], pts[i][0]), w.angles[i / 50], 1e-12);
    EXPECT_GE(r, w.inner_radius);
    EXPECT_LE(r, w.inner_radius + w.length);
  }
}

TEST(MixedSynthetic, SchemaAndRanges) {
  Rng rng(4);
  const auto ds = gen_mixed_synthetic(200, {}, rng);
  ASSERT_EQ(ds.schema.columns.size(), 7u);
  EXPECT_EQ(ds.schema.layout(), (DataLayout{4, {3, 3, 3}}));
  EXPECT_EQ(ds.schema.columns[0].name, "c1");
  EXPECT_EQ(ds.schema.columns[4].name, "s1");
  for (const auto& x : ds.rows) {
    for (int c : x.cat) {
      EXPECT_GE(c, 1);
      EXPECT_LE(c, 3);
    }
  }
  EXPECT_THROW(gen_mixed_synthetic(1, {2, {3}, 1.5}, rng), std::invalid_argument);
  EXPECT_THROW(gen_mixed_synthetic(1, {2, {1}, 0.5}, rng), std::invalid_argument);
}

TEST(MixedSynthetic, ZeroCouplingGivesIndependentColumns) {
  Rng rng(5);
  const auto ds = gen_mixed_synthetic(20000, {2, {3, 4}, 0.0}, rng);
  auto col = [&](std::size_t j) {
    Vec v;
    for (const auto& x : ds.rows) v.push_back(j < 2 ? x.cont[j] : static_cast<double>(x.cat[j - 2]));
    return v;
  };
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) EXPECT_NEAR(empirical_kendall_tau(col(i), col(j)), 0.0, 0.02);
}

TEST(MixedSynthetic, StrongCouplingGivesConcordance) {
  Rng rng(6);
  const auto ds = gen_mixed_synthetic(3000, {}, rng);
  Vec c0, c1, c2, s1;
  for (const auto& x : ds.rows) {
    c0.push_back(x.cont[0]);
    c1.push_back(x.cont[1]);
    c2.push_back(x.cont[2]);
    s1.push_back(x.cat[0]);
  }
  EXPECT_GT(std::abs(empirical_kendall_tau(c0, c1)), 0.3);
  EXPECT_GT(empirical_kendall_tau(c0, c2), 0.3);
  EXPECT_LT(empirical_kendall_tau(c0, c1), 0.0);  // alternating loadings
  EXPECT_GT(std::abs(empirical_kendall_tau(c0, s1)), 0.3);
}

TEST(MixedSynthetic, SchemaRoundTripsThroughCsv) {
  Rng rng(7);
  const auto ds = gen_mixed_synthetic(30, {}, rng);
  std::ostringstream os;
  write_csv(os, ds.schema, ds.rows);
  const auto back = parse(os.str());
  EXPECT_EQ(back.schema, ds.schema);
  ASSERT_EQ(back.rows.size(), ds.rows.size());
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].cont, ds.rows[i].cont);  // 17 significant digits round-trip exactly
    EXPECT_EQ(back.rows[i].cat, ds.rows[i].cat);
  }
  EXPECT_EQ(fingerprint(back.schema, back.rows), fingerprint(ds.schema, ds.rows));
}

TEST(Csv, AnnotatedHeaderAndLevels) {
  const auto ds = parse("mpg:cont, origin:cat:eu|us|jp ,cyl:cat:3\n1.5,us,2\n-2e-1,jp,3\n");
  ASSERT_EQ(ds.schema.columns.size(), 3u);
  EXPECT_EQ(ds.schema.columns[1].levels, (std::vector<std::string>{"eu", "us", "jp"}));
  EXPECT_EQ(ds.schema.columns[2].levels, (std::vector<std::string>{"1", "2", "3"}));
  ASSERT_EQ(ds.rows.size(), 2u);
  EXPECT_EQ(ds.rows[0].cont, (Vec{1.5}));
  EXPECT_EQ(ds.rows[0].cat, (std::vector<int>{2, 2}));
  EXPECT_EQ(ds.rows[1].cont, (Vec{-0.2}));
  EXPECT_EQ(ds.rows[1].cat, (std::vector<int>{3, 3}));
}

TEST(Csv, EmptyInputGivesEmptyDataset) {
  const auto ds = parse("");
  EXPECT_TRUE(ds.rows.empty());
  EXPECT_TRUE(ds.schema.columns.empty());
  EXPECT_TRUE(parse("x:cont\n").rows.empty());
}

TEST(Csv, RowsWithMissingEntriesAreDropped) {
  const auto ds = parse("a:cont,b:cat:2\n1,1\n?,2\n2,NA\n,1\n3,2\r\n\n");
  ASSERT_EQ(ds.rows.size(), 2u);
  EXPECT_EQ(ds.rows[1].cont, (Vec{3.0}));
}

TEST(Csv, MalformedRowsReportLineNumbers) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("a:cont\n1\nabc\n"), 3u);
  EXPECT_EQ(line_of("a:cont,b:cont\n1,2\n1,2,3\n"), 3u);
  EXPECT_EQ(line_of("a:cont\n1e999\n"), 2u);
  EXPECT_EQ(line_of("a:weird\n"), 1u);
  EXPECT_EQ(line_of("a:cat:1\n"), 1u);
  EXPECT_EQ(line_of("a\n"), 1u);
  EXPECT_THROW(parse("a:cat:2\n3\n"), SchemaError);
}

TEST(Csv, SchemaSidecar) {
  const auto schema = parse_schema_json(
      R"({"columns":[{"name":"x","role":"continuous"},{"name":"k","role":"categorical","levels":["lo","hi"]},)"
      R"({"name":"n","role":"cat","cardinality":3}]})");
  EXPECT_EQ(schema.layout(), (DataLayout{1, {2, 3}}));
  const auto ds = parse("x,k,n\n0.5,hi,3\n", schema);
  EXPECT_EQ(ds.rows[0].cat, (std::vector<int>{2, 3}));
  EXPECT_THROW(parse("x,kk,n\n", schema), ParseError);
  EXPECT_THROW(parse_schema_json("{"), ParseError);
  EXPECT_THROW(parse_schema_json(R"({"columns":[{"name":"x","role":"ordinal"}]})"), SchemaError);
  EXPECT_THROW(parse_schema_json(R"({"columns":[{"name":"x","role":"cat","cardinality":1}]})"), SchemaError);
  EXPECT_THROW(parse_schema_json(R"({"cols":[]})"), SchemaError);
}

TEST(Normalization, FitsOnTrainingRowsOnly) {
  DatasetSchema s = DatasetSchema::continuous(2);
  const std::vector<MixedDatum> train{{{1, 5}, {}}, {{3, 5}, {}}, {{5, 5}, {}}};
  fit_normalization(s, train);
  EXPECT_EQ(s.mean, (Vec{3, 5}));
  EXPECT_EQ(s.stddev, (Vec{2, 1}));  // sample std; constant column keeps unit scale
  const DatasetSchema before = s;
  // Normalising other rows never changes the statistics.
  (void)normalize_all(std::vector<MixedDatum>{{{100, -100}, {}}}, s);
  EXPECT_EQ(s, before);
}

TEST(Normalization, RoundTrip) {
  Rng rng(8);
  auto ds = gen_mixed_synthetic(100, {}, rng);
  for (auto& x : ds.rows)
    for (auto& c : x.cont) c = 10 + 7 * c;
  fit_normalization(ds.schema, ds.rows);
  const auto z = normalize_all(ds.rows, ds.schema);
  double m = 0;
  for (const auto& x : z) m += x.cont[0] / 100;
  EXPECT_NEAR(m, 0.0, 1e-12);
  const auto back = denormalize_all(z, ds.schema);
  for (std::size_t i = 0; i < back.size(); ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(back[i].cont[j], ds.rows[i].cont[j], 1e-12);
}

TEST(EncodeForNetwork, OneHotBlocks) {
  DatasetSchema s;
  s.columns = {{"x", ColumnRole::continuous, {}}, {"k", ColumnRole::categorical, integer_levels(3)},
               {"m", ColumnRole::categorical, integer_levels(2)}};
  s.mean = {2.0};
  s.stddev = {4.0};
  const MixedDatum x{{6.0}, {2, 1}};
  const Vec v = encode_for_network(x, s);
  EXPECT_EQ(v, (Vec{1.0, 0, 1, 0, 1, 0}));
  EXPECT_EQ(decode_from_network(v, s.layout()), normalize(x, s));
  EXPECT_EQ(encode_for_network(MixedDatum{{2.0}, {}}, DatasetSchema::continuous(1)), (Vec{2.0}));
}

TEST(Split, DisjointCoveringReproducible) {
  Rng a(10), b(10), c(11);
  const Split s = make_split(400, 60, 60, a);
  EXPECT_EQ(s.train.size(), 280u);
  EXPECT_EQ(s.validation.size(), 60u);
  EXPECT_EQ(s.test.size(), 60u);
  std::set<std::size_t> all;
  for (const auto* v : {&s.train, &s.validation, &s.test}) {
    EXPECT_TRUE(std::is_sorted(v->begin(), v->end()));
    all.insert(v->begin(), v->end());
  }
  EXPECT_EQ(all.size(), 400u);
  EXPECT_EQ(*all.rbegin(), 399u);
  const Split t = make_split(400, 60, 60, b);
  EXPECT_EQ(s.test, t.test);
  EXPECT_NE(make_split(400, 60, 60, c).test, s.test);
  EXPECT_THROW(make_split(10, 6, 6, a), std::invalid_argument);
}
