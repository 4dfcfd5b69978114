#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "grounded/dataset.hpp"
#include "grounded/simgen.hpp"

using namespace grounded;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "grounded_cate_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::filesystem::path write_file(const std::string& name, const std::string& contents) {
  const auto path = temp_file(name);
  std::ofstream out(path, std::ios::binary);
  out << contents;
  return path;
}

ColumnSchema basic_schema() {
  ColumnSchema schema;
  schema.treatment_col = "t";
  schema.outcome_col = "y";
  return schema;
}

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("load_csv parses a small numeric table") {
  const auto path = write_file("basic.csv", "x,t,y\n1.5,0,2\n-0.25,1,3.5\n2,1,-1\n");
  const Dataset ds = load_csv(path.string(), basic_schema());
  CHECK(ds.n() == 3);
  CHECK(ds.d() == 1);
  CHECK(ds.feature_names == std::vector<std::string>{"x"});
  CHECK(ds.features(0, 0) == 1.5);
  CHECK(ds.features(1, 0) == -0.25);
  CHECK(ds.treatment[0] == 0.0);
  CHECK(ds.treatment[2] == 1.0);
  CHECK(ds.outcome[1] == 3.5);
  CHECK_FALSE(ds.propensity.has_value());
}

TEST_CASE("load_csv rejects a non-binary treatment value, naming the row") {
  const auto path = write_file("badt.csv", "x,t,y\n1,0,2\n1,2,3\n");
  CHECK_THROWS_WITH_AS(load_csv(path.string(), basic_schema()),
                       doctest::Contains("row 2"), DataError);
}

TEST_CASE("load_csv reports unparsable numeric cells with row and column") {
  const auto path = write_file("badnum.csv", "x,t,y\n1,0,2\nfoo,1,3\n");
  try {
    load_csv(path.string(), basic_schema());
    FAIL("expected DataError");
  } catch (const DataError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("\"x\"") != std::string::npos);
  }
}

TEST_CASE("load_csv error cases") {
  CHECK_THROWS_AS(load_csv("/nonexistent/nope.csv", basic_schema()), DataError);
  const auto missing = write_file("missingcol.csv", "x,t\n1,0\n");
  CHECK_THROWS_WITH_AS(load_csv(missing.string(), basic_schema()),
                       doctest::Contains("missing column"), DataError);
  const auto empty = write_file("headeronly.csv", "x,t,y\n");
  CHECK_THROWS_WITH_AS(load_csv(empty.string(), basic_schema()),
                       doctest::Contains("no data rows"), DataError);
  const auto badprop = write_file("badprop.csv", "x,t,y,e\n1,0,2,1.5\n");
  ColumnSchema schema = basic_schema();
  schema.propensity_col = "e";
  CHECK_THROWS_AS(load_csv(badprop.string(), schema), DataError);
}

TEST_CASE("load_csv one-hot encodes categorical columns in place") {
  const auto path = write_file("cat.csv",
                               "x,race,t,y\n1,b,0,1\n2,a,1,2\n3,c,0,3\n4,a,1,4\n");
  ColumnSchema schema = basic_schema();
  schema.categorical_cols = {"race"};

  const Dataset full = load_csv(path.string(), schema, OneHotPolicy::full);
  CHECK(full.d() == 4);  // x + 3 levels
  CHECK(full.feature_names ==
        std::vector<std::string>{"x", "race=a", "race=b", "race=c"});
  for (Eigen::Index i = 0; i < full.n(); ++i)
    CHECK(full.features.row(i).segment(1, 3).sum() == 1.0);

  const Dataset dropped = load_csv(path.string(), schema, OneHotPolicy::drop_first);
  CHECK(dropped.d() == 3);  // x + 2 levels, "a" is the reference
  CHECK(dropped.feature_names == std::vector<std::string>{"x", "race=b", "race=c"});
}

TEST_CASE("load_csv honors drop_cols and quoted fields") {
  const auto path = write_file("quoted.csv",
                               "name,x,t,y\n\"doe, jane\",1,0,2\n\"say \"\"hi\"\"\",2,1,3\n");
  ColumnSchema schema = basic_schema();
  schema.drop_cols = {"name"};
  const Dataset ds = load_csv(path.string(), schema);
  CHECK(ds.d() == 1);
  CHECK(ds.n() == 2);
}

TEST_CASE("one_hot_encode examples") {
  const OneHotResult enc = one_hot_encode({"a", "b", "a"}, OneHotPolicy::full);
  CHECK(enc.levels == std::vector<std::string>{"a", "b"});
  Eigen::MatrixXd expected(3, 2);
  expected << 1, 0, 0, 1, 1, 0;
  CHECK(enc.columns == expected);

  const OneHotResult single = one_hot_encode({"a", "a"}, OneHotPolicy::full);
  CHECK(single.columns.cols() == 1);
  CHECK(single.columns.col(0).sum() == 2.0);

  const OneHotResult four =
      one_hot_encode({"w", "x", "y", "z", "x", "w"}, OneHotPolicy::full);
  CHECK(four.columns.cols() == 4);
  for (Eigen::Index i = 0; i < four.columns.rows(); ++i)
    CHECK(four.columns.row(i).sum() == 1.0);
}

TEST_CASE("one-hot rows sum to exactly 1 under full encoding (property)") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pick(0, 6);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::string> labels;
    for (int i = 0; i < 50; ++i) labels.push_back("L" + std::to_string(pick(rng)));
    const OneHotResult enc = one_hot_encode(labels, OneHotPolicy::full);
    for (Eigen::Index i = 0; i < enc.columns.rows(); ++i)
      CHECK(enc.columns.row(i).sum() == 1.0);
  }
}

namespace {
Dataset random_dataset(Eigen::Index n, Eigen::Index d, std::uint64_t seed, bool with_prop) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  Dataset ds;
  ds.features.resize(n, d);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < d; ++c) ds.features(r, c) = normal(rng);
  for (Eigen::Index c = 0; c < d; ++c) ds.feature_names.push_back("f" + std::to_string(c));
  ds.treatment.resize(n);
  ds.outcome.resize(n);
  if (with_prop) ds.propensity.emplace(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    ds.treatment[r] = rng() % 2 ? 1.0 : 0.0;
    ds.outcome[r] = normal(rng);
    if (with_prop) (*ds.propensity)[r] = unif(rng);
  }
  return ds;
}
}  // namespace

TEST_CASE("split sizes and determinism") {
  const Dataset ds = random_dataset(10, 2, 1, false);
  const auto [a, b] = split(ds, 0.5, 7);
  CHECK(a.n() == 5);
  CHECK(b.n() == 5);
  const auto [a2, b2] = split(ds, 0.5, 7);
  CHECK(a.features == a2.features);
  CHECK(b.outcome == b2.outcome);

  // round half away from zero: 4218 * 0.25 = 1054.5 rounds to 1055.
  const auto [idx1, idx2] = split_indices(4218, 0.25, 3);
  CHECK(idx1.size() == 1055);
  CHECK(idx2.size() == 3163);

  CHECK_THROWS_AS(split(ds, 0.001, 1), DataError);  // empty side
  CHECK_THROWS_AS(split(ds, 1.5, 1), ConfigError);
}

TEST_CASE("split parts re-concatenate to a permutation of the input rows") {
  const Dataset ds = random_dataset(37, 3, 5, true);
  for (const std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    const auto [a, b] = split(ds, 0.3, seed);
    CHECK(a.n() + b.n() == ds.n());
    std::multiset<std::string> original, recombined;
    const auto row_key = [](const Dataset& d, Eigen::Index i) {
      std::string key;
      for (Eigen::Index c = 0; c < d.d(); ++c) key += std::to_string(d.features(i, c)) + "|";
      key += std::to_string(d.outcome[i]);
      return key;
    };
    for (Eigen::Index i = 0; i < ds.n(); ++i) original.insert(row_key(ds, i));
    for (Eigen::Index i = 0; i < a.n(); ++i) recombined.insert(row_key(a, i));
    for (Eigen::Index i = 0; i < b.n(); ++i) recombined.insert(row_key(b, i));
    CHECK(original == recombined);
  }
}

TEST_CASE("csv round-trip reproduces parsed doubles bit for bit") {
  const Dataset ds = random_dataset(60, 3, 42, true);
  const auto path = temp_file("roundtrip.csv");
  write_csv(ds, path.string());

  ColumnSchema schema;
  schema.treatment_col = "treatment";
  schema.outcome_col = "outcome";
  schema.propensity_col = "propensity";
  const Dataset back = load_csv(path.string(), schema);
  CHECK(back.features == ds.features);
  CHECK(back.treatment == ds.treatment);
  CHECK(back.outcome == ds.outcome);
  REQUIRE(back.propensity.has_value());
  CHECK(*back.propensity == *ds.propensity);

  // And a second pass through the writer is byte-identical.
  const auto path2 = temp_file("roundtrip2.csv");
  write_csv(back, path2.string());
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string s1((std::istreambuf_iterator<char>(f1)), {});
  const std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
}

TEST_CASE("read_csv_column extracts extra columns") {
  const Dataset ds = random_dataset(5, 1, 9, false);
  std::vector<double> extra{1, 2, 3, 4, 5};
  const auto path = temp_file("extra.csv");
  write_csv(ds, path.string(), "y_gt", extra);
  CHECK(read_csv_column(path.string(), "y_gt") == extra);
}

TEST_CASE("validate_pair checks schemas and reports coverage") {
  const Dataset conf = random_dataset(500, 2, 1, false);
  const Dataset unc = random_dataset(100, 2, 2, true);
  const PairDiagnostics diag = validate_pair(conf, unc);
  CHECK(diag.unc_has_propensity);
  CHECK(diag.coverage_fraction >= 0.0);
  CHECK(diag.coverage_fraction <= 1.0);

  Dataset extra = unc;
  extra.features.conservativeResize(Eigen::NoChange, 3);
  extra.features.col(2).setZero();
  extra.feature_names.push_back("extra");
  CHECK_THROWS_WITH_AS(validate_pair(conf, extra), doctest::Contains("feature-name mismatch"),
                       DataError);
}

TEST_CASE("validate_pair coverage is near 1 for the synthetic pair") {
  SimConfig cfg;
  cfg.n_unc = 2000;
  cfg.n_conf = 20000;
  cfg.seed = 7;
  const Dataset unc = gen_unconfounded(cfg);
  const Dataset conf = gen_confounded(cfg);
  const PairDiagnostics diag = validate_pair(conf, unc);
  // UNC lives on [-1,1], well inside the confounded standard-normal support.
  CHECK(diag.coverage_fraction >= 0.95);
}

TEST_CASE("dataset invariants are enforced") {
  Dataset ds = random_dataset(4, 2, 3, false);
  ds.treatment[1] = 0.5;
  CHECK_THROWS_AS(ds.validate(), DataError);

  Dataset dup = random_dataset(4, 2, 3, false);
  dup.feature_names[1] = dup.feature_names[0];
  CHECK_THROWS_WITH_AS(dup.validate(), doctest::Contains("unique"), DataError);
}

TEST_SUITE_END();
