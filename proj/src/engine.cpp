#include "bemkl/engine.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bemkl/error.hpp"
#include "bemkl/spd.hpp"
#include "bemkl/truncated_normal.hpp"

namespace bemkl {

void HyperParams::validate() const {
  const double gammas[] = {alpha_lambda, beta_lambda, alpha_gamma, beta_gamma, alpha_omega, beta_omega};
  for (double v : gammas) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("gamma hyperparameters must be strictly positive");
  }
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw std::invalid_argument("margin nu must be nonnegative");
  if (max_iterations < 1) throw std::invalid_argument("iteration budget must be positive");
  if (!(elbo_rel_tol >= 0.0)) throw std::invalid_argument("ELBO tolerance must be nonnegative");
}

KernelStack::KernelStack(std::span<const Eigen::MatrixXd> kernels) {
  if (kernels.empty()) throw std::invalid_argument("at least one kernel is required");
  n_ = kernels.front().rows();
  p_ = static_cast<Eigen::Index>(kernels.size());
  stacked_.resize(n_, n_ * p_);
  for (Eigen::Index m = 0; m < p_; ++m) {
    const auto& k = kernels[static_cast<std::size_t>(m)];
    if (k.rows() != n_ || k.cols() != n_) throw std::invalid_argument("kernels must share one square shape");
    stacked_.middleCols(m * n_, n_) = k;
  }
}

Eigen::MatrixXd KernelStack::gram_sum() const {
  Eigen::MatrixXd kk = Eigen::MatrixXd::Zero(n_, n_);
  kk.selfadjointView<Eigen::Lower>().rankUpdate(stacked_);
  return kk.selfadjointView<Eigen::Lower>();
}

Eigen::VectorXd KernelStack::combine(const Eigen::MatrixXd& rows) const {
  const Eigen::MatrixXd cols = rows.transpose();  // N x P, column m = row m
  return stacked_ * Eigen::Map<const Eigen::VectorXd>(cols.data(), n_ * p_);
}

Eigen::MatrixXd KernelStack::project(const Eigen::VectorXd& a) const {
  const Eigen::VectorXd v = stacked_.transpose() * a;
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), n_, p_).transpose();
}

Problem::Problem(std::span<const Eigen::MatrixXd> kernels, HyperParams hyper)
    : kernels_(kernels), hyper_(hyper) {
  hyper_.validate();
}

Problem::Problem(const KernelBundle& bundle, HyperParams hyper) : Problem(bundle.train_kernels, hyper) {}

void validate_labels(const Eigen::VectorXd& y) {
  bool pos = false, neg = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 1.0) pos = true;
    else if (y[i] == -1.0) neg = true;
    else throw std::invalid_argument("labels must be -1 or +1");
  }
  if (!pos || !neg) throw std::invalid_argument("labels must contain both classes");
}

namespace {

// Pre-truncation mean m with E[u] = target for u ~ N(m, 1) restricted to u > nu.
double pre_truncation_mean(double target, double nu) {
  double m = target;
  for (int it = 0; it < 100; ++it) {
    const auto tm = truncated_normal_moments(m, 1.0, nu);
    const double step = (tm.mean - target) / tm.variance;
    m -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(m))) break;
  }
  return m;
}

void set_f_moments(ClassFactors& cls, double nu) {
  const Eigen::Index n = cls.f_mu.size();
  cls.f_mean.resize(n);
  cls.f_var.resize(n);
  cls.f_log_partition.resize(n);
  cls.f_entropy.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto tm = truncated_normal_moments(cls.f_mu[i], cls.y[i], nu);
    cls.f_mean[i] = tm.mean;
    cls.f_var[i] = tm.variance;
    cls.f_log_partition[i] = tm.log_partition;
    cls.f_entropy[i] = tm.entropy;
  }
}

Eigen::Index class_count(const PosteriorState& s) { return s.num_classes(); }

}  // namespace

PosteriorState initialize(const Problem& problem, std::span<const Eigen::VectorXd> labels, const InitOptions& options) {
  if (labels.empty()) throw std::invalid_argument("at least one label vector is required");
  const auto& hp = problem.hyper();
  const Eigen::Index n = problem.size();
  const Eigen::Index p = problem.count();
  const auto k = static_cast<Eigen::Index>(labels.size());

  PosteriorState s;
  s.cached_KK = problem.kernels().gram_sum();

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double u0 = pre_truncation_mean(hp.nu + 1.0, hp.nu);

  for (const auto& y : labels) {
    if (y.size() != n) {
      std::ostringstream msg;
      msg << "label count " << y.size() << " does not match kernel size " << n;
      throw std::invalid_argument(msg.str());
    }
    validate_labels(y);
    ClassFactors c;
    c.y = y;
    c.lambda_shape = Eigen::VectorXd::Constant(n, hp.alpha_lambda);
    c.lambda_scale = Eigen::VectorXd::Constant(n, hp.beta_lambda);
    c.a_mean = Eigen::VectorXd::Zero(n);
    c.a_cov = Eigen::MatrixXd::Identity(n, n);
    c.G_mean = Eigen::VectorXd::Ones(p) * y.transpose();
    if (options.random) {
      for (Eigen::Index j = 0; j < c.G_mean.size(); ++j) c.G_mean.data()[j] += normal(rng);
    }
    c.G_cov = Eigen::MatrixXd::Identity(p, p);
    c.gamma_shape = hp.alpha_gamma;
    c.gamma_scale = hp.beta_gamma;
    c.f_mu = u0 * y;
    set_f_moments(c, hp.nu);
    c.f_mean = (hp.nu + 1.0) * y;
    s.classes.push_back(std::move(c));
  }

  s.omega_shape = Eigen::VectorXd::Constant(p, hp.alpha_omega);
  s.omega_scale = Eigen::VectorXd::Constant(p, hp.beta_omega);
  s.be_mean = Eigen::VectorXd::Zero(k + p);
  s.be_mean.tail(p).setOnes();
  s.be_cov = Eigen::MatrixXd::Identity(k + p, k + p);
  return s;
}

PosteriorState initialize(const Problem& problem, const Eigen::VectorXd& y, const InitOptions& options) {
  return initialize(problem, std::span<const Eigen::VectorXd>(&y, 1), options);
}

void update_lambda(const Problem& problem, PosteriorState& state) {
  const auto& hp = problem.hyper();
  for (auto& c : state.classes) {
    const Eigen::ArrayXd a2 = c.a_mean.array().square() + c.a_cov.diagonal().array();
    c.lambda_shape.setConstant(hp.alpha_lambda + 0.5);
    c.lambda_scale = (1.0 / hp.beta_lambda + 0.5 * a2).inverse().matrix();
  }
}

void update_a(const Problem& problem, PosteriorState& state) {
  for (auto& c : state.classes) {
    Eigen::MatrixXd precision = state.cached_KK;
    precision.diagonal() += c.lambda_mean();
    const SpdFactor chol(precision, "q(a) precision");
    c.a_mean = chol.solve(problem.kernels().combine(c.G_mean));
    c.a_cov = chol.inverse();
    c.a_log_det = -chol.log_det();
  }
}

void update_G(const Problem& problem, PosteriorState& state) {
  const Eigen::Index k = class_count(state);
  const Eigen::Index p = state.num_kernels();
  const Eigen::VectorXd e = state.e_mean();
  Eigen::MatrixXd ee = state.e_cov();
  ee.noalias() += e * e.transpose();
  ee.diagonal().array() += 1.0;
  const SpdFactor chol(ee, "q(G) precision");
  const Eigen::MatrixXd cov = chol.inverse();
  const double log_det = -chol.log_det();

  for (Eigen::Index ci = 0; ci < k; ++ci) {
    auto& c = state.classes[static_cast<std::size_t>(ci)];
    const Eigen::VectorXd be = state.b_mean(ci) * e + state.be_cov.block(k, ci, p, 1);
    Eigen::MatrixXd rhs = problem.kernels().project(c.a_mean);
    rhs.noalias() += e * c.f_mean.transpose();
    rhs.colwise() -= be;
    c.G_mean = chol.solve(rhs);
    c.G_cov = cov;
    c.G_log_det = log_det;
  }
}

void update_gamma(const Problem& problem, PosteriorState& state) {
  const auto& hp = problem.hyper();
  for (Eigen::Index ci = 0; ci < class_count(state); ++ci) {
    auto& c = state.classes[static_cast<std::size_t>(ci)];
    const double b2 = state.be_mean[ci] * state.be_mean[ci] + state.be_cov(ci, ci);
    c.gamma_shape = hp.alpha_gamma + 0.5;
    c.gamma_scale = 1.0 / (1.0 / hp.beta_gamma + 0.5 * b2);
  }
}

void update_omega(const Problem& problem, PosteriorState& state) {
  const auto& hp = problem.hyper();
  const Eigen::Index p = state.num_kernels();
  const Eigen::ArrayXd e2 =
      state.be_mean.tail(p).array().square() + state.be_cov.diagonal().tail(p).array();
  state.omega_shape.setConstant(hp.alpha_omega + 0.5);
  state.omega_scale = (1.0 / hp.beta_omega + 0.5 * e2).inverse().matrix();
}

void update_be(const Problem& /*problem*/, PosteriorState& state) {
  const Eigen::Index k = class_count(state);
  const Eigen::Index p = state.num_kernels();
  const double n = static_cast<double>(state.size());

  Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(k + p, k + p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + p);
  auto eblock = precision.bottomRightCorner(p, p);
  eblock.diagonal() = state.omega_mean();
  for (Eigen::Index ci = 0; ci < k; ++ci) {
    const auto& c = state.classes[static_cast<std::size_t>(ci)];
    precision(ci, ci) = c.gamma_mean() + n;
    const Eigen::VectorXd g1 = c.G_mean.rowwise().sum();
    precision.block(k, ci, p, 1) = g1;
    precision.block(ci, k, 1, p) = g1.transpose();
    eblock.selfadjointView<Eigen::Lower>().rankUpdate(c.G_mean);
    eblock += n * c.G_cov;
    rhs[ci] = c.f_mean.sum();
    rhs.tail(p).noalias() += c.G_mean * c.f_mean;
  }
  // rankUpdate filled the lower triangle only.
  eblock.triangularView<Eigen::StrictlyUpper>() = eblock.transpose();

  const SpdFactor chol(precision, "q(b, e) precision");
  state.be_mean = chol.solve(rhs);
  state.be_cov = chol.inverse();
  state.be_log_det = -chol.log_det();
}

void update_f(const Problem& problem, PosteriorState& state) {
  const double nu = problem.hyper().nu;
  const Eigen::VectorXd e = state.e_mean();
  for (Eigen::Index ci = 0; ci < class_count(state); ++ci) {
    auto& c = state.classes[static_cast<std::size_t>(ci)];
    c.f_mu = (c.G_mean.transpose() * e).array() + state.be_mean[ci];
    set_f_moments(c, nu);
  }
}

void sweep(const Problem& problem, PosteriorState& state) {
  for (auto update : kUpdates) update(problem, state);
}

void run_inference(const Problem& problem, PosteriorState& state, const std::function<void(int, double)>& on_iteration) {
  const auto& hp = problem.hyper();
  double previous = elbo(problem, state);
  for (int it = 0; it < hp.max_iterations; ++it) {
    sweep(problem, state);
    ++state.iterations;
    const double current = elbo(problem, state);
    state.elbo_trace.push_back(current);
    if (on_iteration) on_iteration(state.iterations, current);
    if (hp.elbo_rel_tol > 0.0 && std::abs(current - previous) < hp.elbo_rel_tol * std::abs(current)) break;
    previous = current;
  }
}

namespace {

TrainedModel fit_impl(const KernelBundle& bundle, std::span<const Eigen::VectorXd> labels, const HyperParams& hyper,
                      const FitOptions& options) {
  bundle.validate();
  const Problem problem(bundle, hyper);
  const auto start = std::chrono::steady_clock::now();
  TrainedModel model;
  model.posterior = initialize(problem, labels, options.init);
  run_inference(problem, model.posterior, options.on_iteration);
  model.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  model.hyper = hyper;
  model.kernel_names = bundle.names;
  model.selection_threshold = options.selection_threshold;
  return model;
}

}  // namespace

TrainedModel fit(const KernelBundle& bundle, const Eigen::VectorXd& y, const HyperParams& hyper,
                 const FitOptions& options) {
  return fit_impl(bundle, std::span<const Eigen::VectorXd>(&y, 1), hyper, options);
}

TrainedModel fit_shared(const KernelBundle& bundle, std::span<const Eigen::VectorXd> labels, const HyperParams& hyper,
                        const FitOptions& options) {
  return fit_impl(bundle, labels, hyper, options);
}

}  // namespace bemkl
