#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "metabalance/data/ingest.hpp"
#include "metabalance/eval/metrics.hpp"
#include "metabalance/train/trainer.hpp"

using namespace metabalance;
using namespace metabalance::data;
using testing::random_matrix;

namespace {

std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name,
                                 const std::string& body) {
  auto p = dir / name;
  std::ofstream(p) << body;
  return p;
}

Dataset counted(std::size_t per_class, int classes, std::uint64_t seed) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(classes), per_class);
  return testing::blobs(counts, 3, 1.0, seed);
}

// Accuracy of a softmax-regression model (no hidden layer) trained on `train`.
double linear_model_accuracy(const Dataset& train, const Dataset& test, int classes) {
  nn::MlpSpec spec{train.dim(), {}, static_cast<std::size_t>(classes), std::nullopt,
                   nn::Activation::relu};
  train::BaselineConfig cfg;
  cfg.optimizer = optim::adam(1e-2);
  cfg.loss.kind = nn::LossKind::cross_entropy;
  cfg.epochs = 20;
  cfg.batch_size = 32;
  auto result = train::train_baseline(nn::Mlp::build(spec, 1), train, cfg);
  auto pred = result.model.predict(test.features);
  return eval::per_class_accuracy(pred, test.labels, classes).overall_accuracy;
}

}  // namespace

TEST_CASE("load_csv") {
  auto dir = testing::temp_dir("load_csv");
  SUBCASE("numeric table with a categorical column and an excluded column") {
    auto p = write_file(dir, "t.csv",
                        "Time,a,purpose,b,Class\n"
                        "0,1.5,car,2,0\n"
                        "1,-0.5,debt,3e-1,1\n"
                        "2,4,car,7,0\n");
    LoadReport report;
    auto ds = load_csv(p, CsvOptions{"Class", {"Time"}, ','}, &report);
    CHECK(ds.size() == 3);
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.features(1, 0) == -0.5);
    CHECK(ds.features(1, 1) == 0.3);
    CHECK(ds.labels == std::vector<int>{0, 1, 0});
    CHECK(ds.class_counts.at(0) == 2);
    CHECK(ds.class_counts.at(1) == 1);
    CHECK(report.dropped_columns == std::vector<std::string>{"purpose"});
  }
  SUBCASE("string labels map to sorted indices") {
    auto p = write_file(dir, "s.csv", "x,y\n1,yes\n2,no\n3,yes\n");
    LoadReport report;
    auto ds = load_csv(p, CsvOptions{"y", {}, ','}, &report);
    CHECK(report.class_names == std::vector<std::string>{"no", "yes"});
    CHECK(ds.labels == std::vector<int>{1, 0, 1});
  }
  SUBCASE("unparseable cell reports row and column") {
    auto p = write_file(dir, "bad.csv", "a,b,label\n1,2,0\n3,oops,1\n");
    try {
      load_csv(p, CsvOptions{"label", {}, ','});
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 2") != std::string::npos);
      CHECK(msg.find("'b'") != std::string::npos);
    }
  }
  SUBCASE("missing label column") {
    auto p = write_file(dir, "nolabel.csv", "a,b\n1,2\n");
    CHECK_THROWS_AS(load_csv(p, CsvOptions{"Class", {}, ','}), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_csv(dir / "absent.csv", CsvOptions{"Class", {}, ','}), DataError);
  }
  SUBCASE("ragged row") {
    auto p = write_file(dir, "ragged.csv", "a,b,label\n1,2,0\n3,1\n");
    CHECK_THROWS_AS(load_csv(p, CsvOptions{"label", {}, ','}), DataError);
  }
}

TEST_CASE("csv write / read round trip") {
  auto dir = testing::temp_dir("csv_round_trip");
  auto ds = counted(5, 3, 1);
  write_csv(dir / "d.csv", ds);
  auto back = load_csv(dir / "d.csv", CsvOptions{"label", {}, ','});
  CHECK(back.labels == ds.labels);
  CHECK(testing::bit_equal(back.features, ds.features));
}

TEST_CASE("zscore is fit on one split and reused on another") {
  auto ds = Dataset::from(random_matrix(200, 4, 2, 3.0).array() + 5.0,
                          std::vector<int>(200, 0), 1);
  auto s = split(ds, SplitSpec{0.8, false, 1});
  auto z = ZScore::fit(s.train);
  auto train = z.transform(s.train);
  for (Eigen::Index j = 0; j < train.features.cols(); ++j) {
    const auto col = train.features.col(j).array();
    const double mean = col.mean();
    const double var = (col - mean).square().mean();
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
  }
  auto test = z.transform(s.test);
  CHECK(test.features(0, 0) == doctest::Approx((s.test.features(0, 0) - z.mean(0)) / z.stddev(0)));

  SUBCASE("constant columns get stddev 1") {
    auto flat = Dataset::from(MatrixD::Constant(5, 2, 3.0), {0, 0, 0, 0, 0}, 1);
    auto zf = ZScore::fit(flat);
    CHECK(zf.stddev(0) == 1.0);
    CHECK(zf.transform(flat).features.isZero());
  }
}

TEST_CASE("split") {
  auto ds = counted(5, 2, 3);  // 10 rows
  auto a = split(ds, SplitSpec{0.8, false, 7});
  CHECK(a.train.size() == 8);
  CHECK(a.test.size() == 2);

  std::set<std::size_t> all(a.train_rows.begin(), a.train_rows.end());
  for (auto r : a.test_rows) CHECK(all.insert(r).second);  // disjoint
  CHECK(all.size() == ds.size());                           // exhaustive

  auto b = split(ds, SplitSpec{0.8, false, 7});
  CHECK(a.train_rows == b.train_rows);
  CHECK(split_checksum(a) == split_checksum(b));
  auto c = split(ds, SplitSpec{0.8, false, 8});
  CHECK(split_checksum(a) != split_checksum(c));

  SUBCASE("stratified keeps class proportions") {
    auto big = testing::blobs({50, 10}, 2, 1.0, 4);
    auto s = split(big, SplitSpec{0.8, true, 1});
    CHECK(s.train.count(0) == 40);
    CHECK(s.train.count(1) == 8);
  }
  SUBCASE("stratified with a single minority row is an error") {
    auto tiny = testing::blobs({9, 1}, 2, 1.0, 5);
    CHECK_THROWS_AS(split(tiny, SplitSpec{0.8, true, 1}), DataError);
  }
  SUBCASE("fraction outside (0, 1)") {
    CHECK_THROWS_AS(split(ds, SplitSpec{1.0, false, 1}), ConfigError);
  }
}

TEST_CASE("simulate_imbalance") {
  auto ds = counted(100, 10, 6);
  SUBCASE("fixed count") {
    auto out = simulate_imbalance(ds, ImbalanceMode::fixed(5), 0, 1);
    CHECK(out.count(0) == 100);
    for (int c = 1; c < 10; ++c) CHECK(out.count(c) == 5);
  }
  SUBCASE("range") {
    auto out = simulate_imbalance(ds, ImbalanceMode::range(5, 50), 0, 2);
    CHECK(out.count(0) == 100);
    for (int c = 1; c < 10; ++c) {
      CHECK(out.count(c) >= 5);
      CHECK(out.count(c) <= 50);
    }
  }
  SUBCASE("fixed count equal to the class size keeps the class") {
    auto out = simulate_imbalance(ds, ImbalanceMode::fixed(100), 0, 3);
    CHECK(testing::bit_equal(out.features, ds.features));
  }
  SUBCASE("kept rows are original rows and the seed fixes them") {
    auto a = simulate_imbalance(ds, ImbalanceMode::fixed(5), 0, 4);
    auto b = simulate_imbalance(ds, ImbalanceMode::fixed(5), 0, 4);
    CHECK(testing::bit_equal(a.features, b.features));
    for (Eigen::Index r = 0; r < a.features.rows(); ++r) {
      bool found = false;
      for (Eigen::Index s = 0; s < ds.features.rows() && !found; ++s)
        found = a.features.row(r) == ds.features.row(s);
      CHECK(found);
    }
  }
  SUBCASE("too few rows") {
    CHECK_THROWS_AS(simulate_imbalance(ds, ImbalanceMode::fixed(101), 0, 1), DataError);
  }
}

TEST_CASE("make_synthetic") {
  SUBCASE("class means are pairwise `separation` apart") {
    auto means = simplex_means(10, 32, 4.0);
    for (int i = 0; i < 10; ++i)
      for (int j = i + 1; j < 10; ++j)
        CHECK((means.row(i) - means.row(j)).norm() == doctest::Approx(4.0).epsilon(1e-12));
  }
  SUBCASE("dimension too small for the simplex") {
    CHECK_THROWS_AS(simplex_means(10, 8, 4.0), ConfigError);
  }
  SUBCASE("severe-imbalance counts") {
    std::vector<std::size_t> counts{5000, 5, 5, 5, 5, 5, 5, 5, 5, 5};
    auto ds = make_synthetic(10, counts, 32, 4.0, 1);
    CHECK(ds.count(0) == 5000);
    for (int c = 1; c < 10; ++c) CHECK(ds.count(c) == 5);
  }
  SUBCASE("same seed gives identical data") {
    auto a = make_synthetic(3, {10, 10, 10}, 4, 2.0, 9);
    auto b = make_synthetic(3, {10, 10, 10}, 4, 2.0, 9);
    CHECK(checksum(a) == checksum(b));
  }
  SUBCASE("well separated 2-D blobs are linearly separable") {
    auto train = make_synthetic(3, {200, 200, 200}, 2, 10.0, 1);
    auto test = make_synthetic(3, {200, 200, 200}, 2, 10.0, 2);
    CHECK(linear_model_accuracy(train, test, 3) > 0.99);
  }
  SUBCASE("zero separation is at chance") {
    auto train = make_synthetic(3, {200, 200, 200}, 2, 0.0, 3);
    auto test = make_synthetic(3, {500, 500, 500}, 2, 0.0, 4);
    const double acc = linear_model_accuracy(train, test, 3);
    // 1/3 +- about 5 binomial standard deviations of a 1500-row test set
    CHECK(acc > 1.0 / 3 - 0.06);
    CHECK(acc < 1.0 / 3 + 0.06);
  }
}

TEST_CASE("prepare_dataset manifest") {
  auto dir = testing::temp_dir("prepare");
  auto ds = testing::blobs({80, 20}, 3, 2.0, 11);
  write_csv(dir / "d.csv", ds);
  auto a = prepare_dataset(dir / "d.csv", CsvOptions{"label", {}, ','}, SplitSpec{0.8, false, 0},
                           Normalize::zscore);
  auto b = prepare_dataset(dir / "d.csv", CsvOptions{"label", {}, ','}, SplitSpec{0.8, false, 0},
                           Normalize::zscore);
  CHECK(a.manifest.rows == 100);
  CHECK(a.manifest.class_counts.at(1) == 20);
  CHECK(a.manifest.train_class_counts.at(0) + a.manifest.test_class_counts.at(0) == 80);
  CHECK(a.manifest.split_checksum == b.manifest.split_checksum);
  CHECK(a.manifest.train_checksum == b.manifest.train_checksum);
  CHECK(a.manifest.test_checksum == b.manifest.test_checksum);
  REQUIRE(a.normalizer.has_value());
  // statistics come from the training rows only
  auto fitted = ZScore::fit(load_csv(dir / "d.csv", CsvOptions{"label", {}, ','}).subset(a.split.train_rows));
  CHECK(testing::bit_equal(MatrixD(fitted.mean), MatrixD(a.normalizer->mean)));
}

TEST_CASE("dataset invariants") {
  CHECK_THROWS_AS(Dataset::from(MatrixD::Zero(3, 2), {0, 1}), DataError);
  CHECK_THROWS_AS(Dataset::from(MatrixD::Zero(2, 2), {0, -1}), DataError);
  MatrixD nan = MatrixD::Zero(2, 2);
  nan(1, 1) = std::nan("");
  CHECK_THROWS_AS(Dataset::from(nan, {0, 1}), DataError);
  auto ds = Dataset::from(MatrixD::Zero(4, 1), {0, 2, 2, 0}, 3);
  CHECK(ds.class_counts.size() == 3);
  CHECK(ds.count(1) == 0);
  CHECK(ds.majority_class() == 0);
  CHECK(ds.minority_class() == 0);  // non-empty classes only, tie to lower label
}
