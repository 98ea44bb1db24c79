#include <doctest.h>

#include <random>

#include "bemkl/metrics.hpp"

using namespace bemkl;
using Eigen::VectorXd;

namespace {

double brute_auc(const VectorXd& s, const VectorXd& y) {
  double wins = 0.0, pairs = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (y[i] < 0) continue;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      if (y[j] > 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("accuracy") {
  CHECK(metric_accuracy(vec({1, -1, 1, 1}), vec({1, 1, 1, -1})) == 0.5);
  CHECK_THROWS_AS(metric_accuracy(vec({1}), vec({1, 1})), std::invalid_argument);
}

TEST_CASE("AUC examples") {
  CHECK(metric_auc(vec({0.9, 0.8, 0.3}), vec({1, -1, 1})) == 0.5);
  CHECK(metric_auc(vec({0.9, 0.8, 0.1, 0.2}), vec({1, 1, -1, -1})) == 1.0);
  CHECK(metric_auc(vec({0.4, 0.4, 0.4, 0.4}), vec({1, -1, 1, -1})) == 0.5);
  CHECK(metric_auc(vec({0.1, 0.2, 0.8, 0.9}), vec({1, 1, -1, -1})) == 0.0);
  CHECK_THROWS_AS(metric_auc(vec({0.1, 0.2}), vec({1, 1})), std::invalid_argument);
}

TEST_CASE("AUC equals brute-force pair counting") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> level(0, 9);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 99);
    VectorXd s(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      s[i] = level(rng) / 10.0;  // many ties
      y[i] = rng() % 2 ? 1.0 : -1.0;
    }
    y[0] = 1.0;
    y[1] = -1.0;
    CHECK(metric_auc(s, y) == doctest::Approx(brute_auc(s, y)).epsilon(1e-12));
  }
}

TEST_CASE("EER") {
  CHECK(metric_eer(vec({0.9, 0.8, 0.1, 0.2}), vec({1, 1, -1, -1})) == 0.0);
  CHECK(metric_eer(vec({0.1, 0.2, 0.8, 0.9}), vec({1, 1, -1, -1})) == 1.0);
  CHECK(metric_eer(vec({0.5, 0.5, 0.5, 0.5}), vec({1, -1, 1, -1})) == doctest::Approx(0.5));
  // One negative above one of two positives: FPR and FNR cross at 1/2.
  CHECK(metric_eer(vec({0.9, 0.8, 0.7, 0.1}), vec({1, -1, 1, -1})) == doctest::Approx(0.5));
  // Interpolated crossing between thresholds.
  const double eer = metric_eer(vec({0.9, 0.8, 0.7, 0.6, 0.5, 0.4}), vec({1, 1, -1, 1, -1, -1}));
  CHECK(eer == doctest::Approx(1.0 / 3.0));
}
