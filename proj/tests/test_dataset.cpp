#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "bemkl/dataset.hpp"
#include "bemkl/error.hpp"

using namespace bemkl;
using Eigen::MatrixXd;

namespace {

FeatureMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in, "toy");
}


}  // namespace

TEST_CASE("parse delimited rows") {
  const auto m = parse("1,2,3,A\n4,5,6,B\n");
  CHECK(m.size() == 2);
  CHECK(m.dim() == 3);
  CHECK(m.rows(1, 2) == 6.0);
  CHECK(m.labels == std::vector<std::string>{"A", "B"});

  const auto mixed = parse("# header\n\n1.5\t-2e-3 x\n 0;7 ;y\r\n");
  CHECK(mixed.size() == 2);
  CHECK(mixed.rows(0, 1) == -2e-3);
  CHECK(mixed.labels == std::vector<std::string>{"x", "y"});
}

TEST_CASE("parse errors name row and column") {
  try {
    parse("1,2,A\n3,oops,B\n");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("1,inf,A\n"), FormatError);
  CHECK_THROWS_AS(parse("1,nan,A\n"), FormatError);
  CHECK_THROWS_AS(parse(""), FormatError);
  CHECK_THROWS_AS(parse("# only a comment\n"), FormatError);
  CHECK_THROWS_AS(parse("1,2,A\n1,B\n"), FormatError);
  CHECK_THROWS_AS(parse("A\n"), FormatError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/data.csv"), FormatError);
}

TEST_CASE("stratified split") {
  std::vector<std::string> labels;
  for (int i = 0; i < 100; ++i) labels.push_back(i < 37 ? "M" : "R");
  const auto a = split_train_test(labels, 9, 0.7);
  const auto b = split_train_test(labels, 9, 0.7);
  const auto c = split_train_test(labels, 10, 0.7);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.train != c.train);
  CHECK(a.train.size() == 70);
  CHECK(a.test.size() == 30);

  std::set<Eigen::Index> all(a.train.begin(), a.train.end());
  all.insert(a.test.begin(), a.test.end());
  CHECK(all.size() == 100);
  auto count_m = [&](const std::vector<Eigen::Index>& idx) {
    return std::count_if(idx.begin(), idx.end(), [&](auto i) { return labels[static_cast<std::size_t>(i)] == "M"; });
  };
  CHECK(count_m(a.train) == 26);
  CHECK(count_m(a.test) == 11);

  const auto small = split_train_test({"a", "a", "b", "b", "b"}, 1, 0.7);
  for (const auto* part : {&small.train, &small.test}) {
    std::set<std::string> seen;
    for (auto i : *part) seen.insert(std::vector<std::string>{"a", "a", "b", "b", "b"}[static_cast<std::size_t>(i)]);
    CHECK(seen.size() == 2);
  }

  CHECK_THROWS_AS(split_train_test({"a", "a", "a"}, 0, 0.7), std::invalid_argument);
  CHECK_THROWS_AS(split_train_test({"a", "b", "b"}, 0, 0.7), std::invalid_argument);
  CHECK_THROWS_AS(split_train_test(labels, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(split_train_test(labels, 0, 0.0), std::invalid_argument);
}

TEST_CASE("standardization uses train statistics") {
  FeatureMatrix train, test;
  train.rows.resize(4, 3);
  train.rows << 1, 5, 2,
                2, 5, 4,
                3, 5, 6,
                4, 5, 8;
  test.rows.resize(2, 3);
  test.rows << 10, 5, 2,
               0, 7, 4;
  const auto stats = standardize(train, test);
  CHECK(train.rows.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  const double sd0 = std::sqrt(5.0 / 3.0);
  CHECK(stats.scale[0] == doctest::Approx(sd0).epsilon(1e-15));
  CHECK(stats.scale[1] == 1.0);
  CHECK(train.rows.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(test.rows(0, 0) == doctest::Approx((10.0 - 2.5) / sd0).epsilon(1e-14));
  CHECK(test.rows(1, 1) == 2.0);
  const Eigen::RowVectorXd sd =
      (train.rows.colwise().squaredNorm() / 3.0).cwiseSqrt();
  CHECK(std::abs(sd[0] - 1.0) < 1e-12);
  CHECK(std::abs(sd[2] - 1.0) < 1e-12);
  CHECK(train.rows.allFinite());
}

TEST_CASE("binary label encoding") {
  const auto named = encode_binary({"R", "M", "M", "R"});
  CHECK(named.positive == "R");
  CHECK(named.y == (Eigen::VectorXd(4) << 1, -1, -1, 1).finished());
  CHECK(encode_binary({"-1", "1"}).positive == "1");
  CHECK(encode_binary({"0", "1", "0"}).y == (Eigen::VectorXd(3) << -1, 1, -1).finished());
  CHECK_THROWS_AS(encode_binary({"a", "a"}), std::invalid_argument);
  CHECK_THROWS_AS(encode_binary({"a", "b", "c"}), std::invalid_argument);
}

TEST_CASE("label files") {
  const auto path = std::filesystem::temp_directory_path() / "bemkl_labels.txt";
  std::ofstream(path) << format_labels({"a", "b c", "a"}) << "\n# note\n";
  CHECK(load_labels(path) == std::vector<std::string>{"a", "b c", "a"});
  std::ofstream(path) << "\n";
  CHECK_THROWS_AS(load_labels(path), FormatError);
}
