#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "dpro/data.hpp"
#include "dpro/errors.hpp"

using namespace dpro;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& body) {
    path = std::string("test_tmp_") + std::to_string(counter++) + ".csv";
    std::ofstream out(path);
    out << body;
  }
  ~TempCsv() { std::remove(path.c_str()); }
  static int counter;
};
int TempCsv::counter = 0;

Dataset tiny_regression() {
  Dataset ds;
  ds.feature_names = {"a", "b"};
  for (int i = 0; i < 6; ++i) {
    Observation obs;
    obs.features = Vec(2);
    obs.features << i, 3.0 * i - 2.0;
    obs.response = 2.0 * i + 1.0;
    ds.rows.push_back(obs);
  }
  return ds;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("loads a regression csv") {
  TempCsv f("x1,x2,target\n1,2,3\n4,5,6\n-1.5,0.25,2e-1\n");
  auto ds = load_csv(f.path, LossKind::squared);
  REQUIRE(ds.size() == 3);
  CHECK(ds.feature_names == std::vector<std::string>{"x1", "x2"});
  CHECK(ds.feature_dim() == 2);
  CHECK(ds.rows[0].features[0] == 1.0);
  CHECK(ds.rows[1].response == 6.0);
  CHECK(ds.rows[2].features[0] == -1.5);
  CHECK(ds.rows[2].response == 0.2);
}

TEST_CASE("maps 0/1 classification targets to -1/+1") {
  TempCsv f("x,target\n0.5,1\n-0.5,0\n");
  auto ds = load_csv(f.path, LossKind::logistic);
  CHECK(ds.rows[0].response == 1.0);
  CHECK(ds.rows[1].response == -1.0);

  TempCsv bad("x,target\n0.5,2\n");
  CHECK_THROWS_AS(load_csv(bad.path, LossKind::logistic), data_error);
}

TEST_CASE("location data is a bare target column") {
  TempCsv f("target\n1.5\n-2\n0\n");
  auto ds = load_csv(f.path, LossKind::gaussian_location);
  REQUIRE(ds.size() == 3);
  CHECK(ds.feature_dim() == 0);
  CHECK(ds.rows[1].response == -2.0);

  TempCsv with_features("x,target\n1,2\n");
  CHECK_THROWS_AS(load_csv(with_features.path, LossKind::gaussian_location), data_error);
}

TEST_CASE("malformed input") {
  CHECK_THROWS_AS(load_csv("no_such_file.csv", LossKind::squared), data_error);
  TempCsv no_target("x,y\n1,2\n");
  CHECK_THROWS_AS(load_csv(no_target.path, LossKind::squared), data_error);
  TempCsv ragged("x,target\n1,2\n1,2,3\n");
  CHECK_THROWS_AS(load_csv(ragged.path, LossKind::squared), data_error);
  TempCsv not_num("x,target\n1,two\n");
  CHECK_THROWS_AS(load_csv(not_num.path, LossKind::squared), data_error);
  TempCsv empty("");
  CHECK_THROWS_AS(load_csv(empty.path, LossKind::squared), data_error);
  TempCsv header_only("x,target\n");
  CHECK_THROWS_AS(load_csv(header_only.path, LossKind::squared), data_error);
}

TEST_CASE("standardize produces zero mean unit variance columns") {
  auto [std_ds, stats] = standardize(tiny_regression(), true);
  const auto n = static_cast<double>(std_ds.size());
  for (int j = 0; j < 2; ++j) {
    double m = 0, v = 0;
    for (const auto& r : std_ds.rows) m += r.features[j];
    m /= n;
    for (const auto& r : std_ds.rows) v += (r.features[j] - m) * (r.features[j] - m);
    v /= n;
    CHECK(std::abs(m) < 1e-12);
    CHECK(std::abs(v - 1.0) < 1e-12);
  }
  double mr = 0;
  for (const auto& r : std_ds.rows) mr += r.response;
  CHECK(std::abs(mr / n) < 1e-12);
  CHECK(stats.response_standardized);
}

TEST_CASE("standardizing an already standardized set is the identity") {
  auto [once, stats1] = standardize(tiny_regression());
  auto [twice, stats2] = standardize(once);
  for (std::size_t i = 0; i < once.rows.size(); ++i)
    CHECK((once.rows[i].features - twice.rows[i].features).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(std::abs(stats2.feature_mean[0]) < 1e-12);
  CHECK(std::abs(stats2.feature_sd[1] - 1.0) < 1e-12);
}

TEST_CASE("column shifts do not change the standardized output") {
  auto base = tiny_regression();
  auto shifted = base;
  for (auto& r : shifted.rows) r.features[0] += 17.5;
  auto a = standardize(base).first;
  auto b = standardize(shifted).first;
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    CHECK(std::abs(a.rows[i].features[0] - b.rows[i].features[0]) < 1e-12);
}

TEST_CASE("held-out data reuses training stats instead of re-centering") {
  auto train = tiny_regression();
  auto stats = standardize(train).second;
  Dataset test;
  test.feature_names = train.feature_names;
  Observation obs;
  obs.features = Vec(2);
  obs.features << 100.0, 0.0;  // far outside the training range
  obs.response = 0.0;
  test.rows.push_back(obs);
  auto applied = standardize_apply(test, stats);
  // (100 - mean)/sd under training stats, not 0 as re-centering would give
  CHECK(applied.rows[0].features[0] ==
        doctest::Approx((100.0 - stats.feature_mean[0]) / stats.feature_sd[0]));
  CHECK(applied.rows[0].features[0] > 10.0);
}

TEST_CASE("zero-variance columns are reported by name") {
  auto ds = tiny_regression();
  for (auto& r : ds.rows) r.features[1] = 4.0;
  try {
    standardize(ds);
    FAIL("expected data_error");
  } catch (const data_error& e) {
    CHECK(std::string(e.what()).find("'b'") != std::string::npos);
  }
}

TEST_CASE("matrix views match the rows") {
  auto ds = tiny_regression();
  auto x = feature_matrix(ds);
  auto y = response_vector(ds);
  REQUIRE(x.rows() == 6);
  REQUIRE(x.cols() == 2);
  CHECK(x(3, 1) == ds.rows[3].features[1]);
  CHECK(y[5] == ds.rows[5].response);
}

}  // TEST_SUITE
