// Classification metrics.
#ifndef BEMKL_METRICS_HPP
#define BEMKL_METRICS_HPP

#include <Eigen/Dense>

namespace bemkl {

/// Fraction of equal entries.
double metric_accuracy(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth);

/// Mann-Whitney rank statistic with averaged tie ranks. Truth is +-1;
/// larger scores mean "positive".
double metric_auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& truth);

/// Equal error rate: the ROC point where FPR = FNR, linearly interpolated
/// between consecutive distinct thresholds.
double metric_eer(const Eigen::VectorXd& scores, const Eigen::VectorXd& truth);

}  // namespace bemkl

#endif  // BEMKL_METRICS_HPP
