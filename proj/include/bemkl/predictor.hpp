// Predictive distributions for new points.
#ifndef BEMKL_PREDICTOR_HPP
#define BEMKL_PREDICTOR_HPP

#include <vector>

#include <Eigen/Dense>

#include "bemkl/engine.hpp"
#include "bemkl/kernels.hpp"

namespace bemkl {

struct Prediction {
  Eigen::VectorXd g_mean;  // per-kernel intermediate outputs
  Eigen::VectorXd g_var;   // NaN when the model carries only the a_cov diagonal
  double f_mean = 0.0;
  double f_var = 1.0;
  double p_positive = 0.5;

  double p_negative() const { return 1.0 - p_positive; }
  int label() const { return p_positive > 0.5 ? 1 : -1; }
};

struct PredictOptions {
  /// Adds sum_m <e_m^2> (g_var[m] - 1) to f_var instead of plugging in the
  /// mean of g*. Needs the full a_cov.
  bool propagate_g_variance = false;
};

/// `cross` is N x P: column m holds k_m(x_j, x*) over the training points.
struct GPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};
GPrediction predict_g(const TrainedModel& model, const Eigen::MatrixXd& cross, Eigen::Index cls = 0);

struct FPrediction {
  double mean;
  double var;
};
FPrediction predict_f(const TrainedModel& model, const Eigen::VectorXd& g_mean, Eigen::Index cls = 0);

/// Phi((f - nu)/s) / (Phi((f - nu)/s) + Phi((-f - nu)/s)), s = sqrt(f_var),
/// evaluated in log space.
double positive_probability(double f_mean, double f_var, double nu);

Prediction predict_point(const TrainedModel& model, const Eigen::MatrixXd& cross, Eigen::Index cls = 0,
                         const PredictOptions& options = {});

/// Predictions for every test point of the bundle. A bundle without a test
/// block predicts its own training points.
std::vector<Prediction> predict(const TrainedModel& model, const KernelBundle& bundle, Eigen::Index cls = 0,
                                const PredictOptions& options = {});

/// N x P cross-kernel matrix for test point t (training points when the
/// bundle has no test block).
Eigen::MatrixXd point_cross_kernels(const KernelBundle& bundle, Eigen::Index t);
Eigen::Index prediction_count(const KernelBundle& bundle);

struct Selection {
  std::size_t count = 0;
  std::vector<Eigen::Index> indices;
};

/// Kernels with |e_m| >= threshold * max |e|.
Selection selected_kernels(const Eigen::VectorXd& e_mean, double threshold);
Selection selected_kernels(const TrainedModel& model);

}  // namespace bemkl

#endif  // BEMKL_PREDICTOR_HPP
