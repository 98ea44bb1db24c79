#include "bemkl/predictor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bemkl/truncated_normal.hpp"

namespace bemkl {

namespace {

void check_class(const TrainedModel& model, Eigen::Index cls) {
  if (cls < 0 || cls >= model.posterior.num_classes()) throw std::out_of_range("class index outside model");
}

// Covariance of (b_c, e) pulled out of the joint factor.
Eigen::MatrixXd class_be_cov(const PosteriorState& s, Eigen::Index cls) {
  const Eigen::Index k = s.num_classes();
  const Eigen::Index p = s.num_kernels();
  Eigen::MatrixXd cov(p + 1, p + 1);
  cov(0, 0) = s.be_cov(cls, cls);
  cov.block(1, 0, p, 1) = s.be_cov.block(k, cls, p, 1);
  cov.block(0, 1, 1, p) = s.be_cov.block(cls, k, 1, p);
  cov.bottomRightCorner(p, p) = s.be_cov.bottomRightCorner(p, p);
  return cov;
}

}  // namespace

GPrediction predict_g(const TrainedModel& model, const Eigen::MatrixXd& cross, Eigen::Index cls) {
  check_class(model, cls);
  const auto& c = model.posterior.classes[static_cast<std::size_t>(cls)];
  if (cross.rows() != c.a_mean.size() || cross.cols() != model.posterior.num_kernels()) {
    throw std::invalid_argument("cross-kernel dimensions do not match the model");
  }
  GPrediction g;
  g.mean = cross.transpose() * c.a_mean;
  if (model.full_a_cov) {
    g.var = ((c.a_cov * cross).cwiseProduct(cross)).colwise().sum().transpose().array() + 1.0;
  } else {
    g.var = Eigen::VectorXd::Constant(cross.cols(), std::numeric_limits<double>::quiet_NaN());
  }
  return g;
}

FPrediction predict_f(const TrainedModel& model, const Eigen::VectorXd& g_mean, Eigen::Index cls) {
  check_class(model, cls);
  const auto& s = model.posterior;
  if (g_mean.size() != s.num_kernels()) throw std::invalid_argument("g_mean length does not match kernel count");
  Eigen::VectorXd x(g_mean.size() + 1);
  x[0] = 1.0;
  x.tail(g_mean.size()) = g_mean;
  FPrediction f;
  f.mean = s.be_mean[cls] + s.e_mean().dot(g_mean);
  f.var = 1.0 + x.dot(class_be_cov(s, cls) * x);
  return f;
}

double positive_probability(double f_mean, double f_var, double nu) {
  const double sd = std::sqrt(f_var);
  const double log_pos = log_normal_cdf((f_mean - nu) / sd);
  const double log_neg = log_normal_cdf((-f_mean - nu) / sd);
  // 1 / (1 + exp(log_neg - log_pos)), both logs finite.
  const double d = log_neg - log_pos;
  if (d > 0.0) {
    const double r = std::exp(-d);
    return r / (1.0 + r);
  }
  return 1.0 / (1.0 + std::exp(d));
}

Prediction predict_point(const TrainedModel& model, const Eigen::MatrixXd& cross, Eigen::Index cls,
                         const PredictOptions& options) {
  Prediction out;
  auto g = predict_g(model, cross, cls);
  auto f = predict_f(model, g.mean, cls);
  if (options.propagate_g_variance) {
    if (!model.full_a_cov) throw std::invalid_argument("variance propagation needs the full a covariance");
    const auto& s = model.posterior;
    const Eigen::VectorXd e = s.e_mean();
    const Eigen::ArrayXd e2 = e.array().square() + s.e_cov().diagonal().array();
    f.var += (e2 * (g.var.array() - 1.0)).sum();
  }
  out.g_mean = std::move(g.mean);
  out.g_var = std::move(g.var);
  out.f_mean = f.mean;
  out.f_var = f.var;
  out.p_positive = positive_probability(f.mean, f.var, model.nu());
  return out;
}

Eigen::Index prediction_count(const KernelBundle& bundle) {
  return bundle.has_test() ? bundle.n_test() : bundle.n_train();
}

Eigen::MatrixXd point_cross_kernels(const KernelBundle& bundle, Eigen::Index t) {
  const Eigen::Index n = bundle.n_train();
  const auto p = static_cast<Eigen::Index>(bundle.count());
  Eigen::MatrixXd cross(n, p);
  for (Eigen::Index m = 0; m < p; ++m) {
    const auto& src = bundle.has_test() ? bundle.cross_kernels[static_cast<std::size_t>(m)]
                                        : bundle.train_kernels[static_cast<std::size_t>(m)];
    cross.col(m) = src.row(t).transpose();
  }
  return cross;
}

std::vector<Prediction> predict(const TrainedModel& model, const KernelBundle& bundle, Eigen::Index cls,
                                const PredictOptions& options) {
  if (static_cast<Eigen::Index>(bundle.count()) != model.posterior.num_kernels()) {
    throw std::invalid_argument("bundle has " + std::to_string(bundle.count()) + " kernels but the model expects " +
                                std::to_string(model.posterior.num_kernels()));
  }
  if (bundle.n_train() != model.posterior.size()) {
    throw std::invalid_argument("bundle training size does not match the model");
  }
  if (!model.kernel_names.empty() && model.kernel_names != bundle.names) {
    throw std::invalid_argument("bundle kernel names do not match the model");
  }
  const Eigen::Index count = prediction_count(bundle);
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index t = 0; t < count; ++t) {
    out.push_back(predict_point(model, point_cross_kernels(bundle, t), cls, options));
  }
  return out;
}

Selection selected_kernels(const Eigen::VectorXd& e_mean, double threshold) {
  Selection s;
  if (e_mean.size() == 0) return s;
  const double cutoff = threshold * e_mean.cwiseAbs().maxCoeff();
  for (Eigen::Index m = 0; m < e_mean.size(); ++m) {
    if (std::abs(e_mean[m]) >= cutoff) s.indices.push_back(m);
  }
  s.count = s.indices.size();
  return s;
}

Selection selected_kernels(const TrainedModel& model) {
  return selected_kernels(model.posterior.e_mean(), model.selection_threshold);
}

}  // namespace bemkl
