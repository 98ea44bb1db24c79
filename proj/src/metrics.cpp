#include "bemkl/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace bemkl {

namespace {

void check(const Eigen::VectorXd& a, const Eigen::VectorXd& truth) {
  if (a.size() != truth.size()) throw std::invalid_argument("metric inputs differ in length");
  if (a.size() == 0) throw std::invalid_argument("metric inputs are empty");
}

std::pair<double, double> class_counts(const Eigen::VectorXd& truth) {
  double pos = 0.0, neg = 0.0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) (truth[i] > 0 ? pos : neg) += 1.0;
  if (pos == 0.0 || neg == 0.0) throw std::invalid_argument("metric needs both classes present");
  return {pos, neg};
}

}  // namespace

double metric_accuracy(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  check(predicted, truth);
  return (predicted.array() == truth.array()).cast<double>().mean();
}

double metric_auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& truth) {
  check(scores, truth);
  const auto [pos, neg] = class_counts(truth);
  const auto n = static_cast<std::size_t>(scores.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return scores[static_cast<Eigen::Index>(a)] < scores[static_cast<Eigen::Index>(b)];
  });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[static_cast<Eigen::Index>(order[j])] == scores[static_cast<Eigen::Index>(order[i])]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j + 1);  // ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (truth[static_cast<Eigen::Index>(order[k])] > 0) rank_sum += avg;
    }
    i = j;
  }
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double metric_eer(const Eigen::VectorXd& scores, const Eigen::VectorXd& truth) {
  check(scores, truth);
  const auto [pos, neg] = class_counts(truth);
  const auto n = static_cast<std::size_t>(scores.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
  });
  // Sweep the threshold downward; a point is accepted when score >= t.
  double fp = 0.0, tp = 0.0;
  double prev_fpr = 0.0, prev_fnr = 1.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[static_cast<Eigen::Index>(order[j])] == scores[static_cast<Eigen::Index>(order[i])]) {
      (truth[static_cast<Eigen::Index>(order[j])] > 0 ? tp : fp) += 1.0;
      ++j;
    }
    const double fpr = fp / neg;
    const double fnr = 1.0 - tp / pos;
    if (fpr >= fnr) {
      const double d_prev = prev_fnr - prev_fpr;  // > 0
      const double d_cur = fnr - fpr;             // <= 0
      const double t = d_prev / (d_prev - d_cur);
      return prev_fpr + t * (fpr - prev_fpr);
    }
    prev_fpr = fpr;
    prev_fnr = fnr;
    i = j;
  }
  return 0.5 * (prev_fpr + prev_fnr);
}

}  // namespace bemkl
