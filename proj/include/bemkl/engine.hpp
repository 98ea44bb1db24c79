// Variational inference for the conjugate multiple-kernel probit model.
//
// Generative model (binary case, labels y_i in {-1, +1}):
//
//   lambda_i ~ Gamma(alpha_lambda, beta_lambda)   a_i | lambda_i ~ N(0, 1/lambda_i)
//   g_i^m | a ~ N(a' k_{m,i}, 1)
//   gamma ~ Gamma(alpha_gamma, beta_gamma)        b | gamma ~ N(0, 1/gamma)
//   omega_m ~ Gamma(alpha_omega, beta_omega)      e_m | omega_m ~ N(0, 1/omega_m)
//   f_i | b, e, g_i ~ N(e' g_i + b, 1)            y_i | f_i = [f_i y_i > nu]
//
// Gamma distributions use the shape/scale parameterization. The posterior is
// approximated by q(lambda) q(a) q(G) q(gamma) q(omega) q(b, e) q(f) and
// each factor is updated in closed form.
//
// The state supports K label vectors that share the kernel weights e (the
// shared-weights multiclass model). Each class c owns its own lambda, a, G,
// gamma, f factors and bias b_c; the joint Gaussian factor covers
// (b_1, ..., b_K, e). Binary training is the K = 1 case.
#ifndef BEMKL_ENGINE_HPP
#define BEMKL_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bemkl/kernels.hpp"

namespace bemkl {

struct HyperParams {
  double alpha_lambda = 1.0;
  double beta_lambda = 1.0;
  double alpha_gamma = 1.0;
  double beta_gamma = 1.0;
  double alpha_omega = 1.0;
  double beta_omega = 1.0;
  double nu = 1.0;  // margin of the truncation f y > nu
  int max_iterations = 200;
  double elbo_rel_tol = 0.0;  // 0 disables early stopping

  /// Throws std::invalid_argument when a gamma parameter is not strictly
  /// positive, nu is negative, or the budget is not positive.
  void validate() const;
};

/// Concatenated train kernels [K_1 ... K_P] (N x NP), the layout every
/// per-iteration kernel product in the updates runs over.
class KernelStack {
 public:
  explicit KernelStack(std::span<const Eigen::MatrixXd> kernels);

  Eigen::Index size() const { return n_; }
  Eigen::Index count() const { return p_; }
  const Eigen::MatrixXd& stacked() const { return stacked_; }
  Eigen::Ref<const Eigen::MatrixXd> kernel(Eigen::Index m) const { return stacked_.middleCols(m * n_, n_); }

  /// sum_m K_m K_m'.
  Eigen::MatrixXd gram_sum() const;
  /// sum_m K_m rows.row(m)' for a P x N matrix.
  Eigen::VectorXd combine(const Eigen::MatrixXd& rows) const;
  /// P x N matrix whose row m is (K_m a)'.
  Eigen::MatrixXd project(const Eigen::VectorXd& a) const;

 private:
  Eigen::Index n_ = 0;
  Eigen::Index p_ = 0;
  Eigen::MatrixXd stacked_;
};

class Problem {
 public:
  Problem(std::span<const Eigen::MatrixXd> kernels, HyperParams hyper);
  Problem(const KernelBundle& bundle, HyperParams hyper);

  const KernelStack& kernels() const { return kernels_; }
  const HyperParams& hyper() const { return hyper_; }
  Eigen::Index size() const { return kernels_.size(); }
  Eigen::Index count() const { return kernels_.count(); }

 private:
  KernelStack kernels_;
  HyperParams hyper_;
};

/// Per-class variational factors.
struct ClassFactors {
  Eigen::VectorXd y;

  Eigen::VectorXd lambda_shape;
  Eigen::VectorXd lambda_scale;

  Eigen::VectorXd a_mean;
  Eigen::MatrixXd a_cov;
  double a_log_det = 0.0;

  Eigen::MatrixXd G_mean;  // P x N
  Eigen::MatrixXd G_cov;   // P x P, shared by every column
  double G_log_det = 0.0;

  double gamma_shape = 1.0;
  double gamma_scale = 1.0;

  Eigen::VectorXd f_mu;  // pre-truncation means
  Eigen::VectorXd f_mean;
  Eigen::VectorXd f_var;
  Eigen::VectorXd f_log_partition;
  Eigen::VectorXd f_entropy;

  Eigen::VectorXd lambda_mean() const { return lambda_shape.cwiseProduct(lambda_scale); }
  double gamma_mean() const { return gamma_shape * gamma_scale; }
};

struct PosteriorState {
  std::vector<ClassFactors> classes;

  Eigen::VectorXd omega_shape;
  Eigen::VectorXd omega_scale;

  Eigen::VectorXd be_mean;  // [b_1 .. b_K, e_1 .. e_P]
  Eigen::MatrixXd be_cov;
  double be_log_det = 0.0;

  Eigen::MatrixXd cached_KK;  // sum_m K_m K_m'

  std::vector<double> elbo_trace;
  int iterations = 0;

  Eigen::Index num_classes() const { return static_cast<Eigen::Index>(classes.size()); }
  Eigen::Index num_kernels() const { return omega_shape.size(); }
  Eigen::Index size() const { return classes.empty() ? 0 : classes.front().a_mean.size(); }

  double b_mean(Eigen::Index c = 0) const { return be_mean[c]; }
  Eigen::VectorXd e_mean() const { return be_mean.tail(num_kernels()); }
  Eigen::MatrixXd e_cov() const { return be_cov.bottomRightCorner(num_kernels(), num_kernels()); }
  Eigen::VectorXd omega_mean() const { return omega_shape.cwiseProduct(omega_scale); }
};

/// Checks entries are +-1 and both signs occur.
void validate_labels(const Eigen::VectorXd& y);

struct InitOptions {
  bool random = false;  // jitter G_mean with seeded standard-normal noise
  std::uint64_t seed = 0;
};

/// Deterministic starting point: a = 0 with identity covariance, column i of
/// G at y_i 1_P with identity covariance, (b, e) at (0, 1_P) with identity
/// covariance, f_mean = y (nu + 1), and every gamma factor at its prior.
PosteriorState initialize(const Problem& problem, std::span<const Eigen::VectorXd> labels,
                          const InitOptions& options = {});
PosteriorState initialize(const Problem& problem, const Eigen::VectorXd& y, const InitOptions& options = {});

void update_lambda(const Problem& problem, PosteriorState& state);
void update_a(const Problem& problem, PosteriorState& state);
void update_G(const Problem& problem, PosteriorState& state);
void update_gamma(const Problem& problem, PosteriorState& state);
void update_omega(const Problem& problem, PosteriorState& state);
void update_be(const Problem& problem, PosteriorState& state);
void update_f(const Problem& problem, PosteriorState& state);

/// One full coordinate-ascent pass in the fixed order
/// lambda, a, G, gamma, omega, (b, e), f.
void sweep(const Problem& problem, PosteriorState& state);

/// Names of the per-factor updates in sweep order.
inline constexpr const char* kUpdateOrder[] = {"lambda", "a", "G", "gamma", "omega", "be", "f"};
using UpdateFn = void (*)(const Problem&, PosteriorState&);
inline constexpr UpdateFn kUpdates[] = {update_lambda, update_a, update_G, update_gamma,
                                        update_omega,  update_be, update_f};

/// Evidence lower bound split into expected log-joint and entropy terms.
struct ElboTerms {
  double lambda = 0.0, a = 0.0, G = 0.0, gamma = 0.0, b = 0.0, omega = 0.0, e = 0.0, f = 0.0;
  double h_lambda = 0.0, h_a = 0.0, h_G = 0.0, h_gamma = 0.0, h_omega = 0.0, h_be = 0.0, h_f = 0.0;

  double total() const;
  /// Throws NumericalError naming the first non-finite term.
  void check_finite() const;
};

ElboTerms elbo_terms(const Problem& problem, const PosteriorState& state);
double elbo(const Problem& problem, const PosteriorState& state);

struct FitOptions {
  InitOptions init;
  double selection_threshold = 1e-3;
  /// Called after every full iteration with (iteration, elbo).
  std::function<void(int, double)> on_iteration;
};

/// Runs sweeps until the iteration budget or the relative ELBO stopping
/// rule; appends to state.elbo_trace.
void run_inference(const Problem& problem, PosteriorState& state,
                   const std::function<void(int, double)>& on_iteration = {});

/// Trained binary (or shared-weights) model: the final posterior plus what
/// prediction and persistence need.
struct TrainedModel {
  PosteriorState posterior;
  HyperParams hyper;
  std::vector<std::string> kernel_names;
  std::vector<std::string> class_names;  // optional, one per label column
  double selection_threshold = 1e-3;
  bool full_a_cov = true;  // false when loaded without the covariance sidecar
  double train_seconds = 0.0;

  double nu() const { return hyper.nu; }
  double final_elbo() const { return posterior.elbo_trace.empty() ? 0.0 : posterior.elbo_trace.back(); }
};

TrainedModel fit(const KernelBundle& bundle, const Eigen::VectorXd& y, const HyperParams& hyper,
                 const FitOptions& options = {});

/// Shared-kernel-weight fit over several label columns.
TrainedModel fit_shared(const KernelBundle& bundle, std::span<const Eigen::VectorXd> labels,
                        const HyperParams& hyper, const FitOptions& options = {});

}  // namespace bemkl

#endif  // BEMKL_ENGINE_HPP
