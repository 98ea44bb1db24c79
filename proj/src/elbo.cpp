#include <cmath>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>

#include "bemkl/engine.hpp"
#include "bemkl/error.hpp"

namespace bemkl {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);
const double kLog2PiE = kLog2Pi + 1.0;

struct GammaStats {
  double mean;
  double log_mean;  // E[log x]
};

GammaStats gamma_stats(double shape, double scale) {
  return {shape * scale, boost::math::digamma(shape) + std::log(scale)};
}

// E_q[log Gamma(x; alpha, beta)] for the prior (alpha, beta).
double gamma_prior_term(const GammaStats& q, double alpha, double beta) {
  return (alpha - 1.0) * q.log_mean - q.mean / beta - std::lgamma(alpha) - alpha * std::log(beta);
}

double gamma_entropy(double shape, double scale) {
  return shape + std::log(scale) + std::lgamma(shape) + (1.0 - shape) * boost::math::digamma(shape);
}

// E_q[log N(x; 0, 1/precision)] given E[x^2].
double normal_precision_term(const GammaStats& precision, double second_moment) {
  return -0.5 * kLog2Pi + 0.5 * precision.log_mean - 0.5 * precision.mean * second_moment;
}

}  // namespace

double ElboTerms::total() const {
  return lambda + a + G + gamma + b + omega + e + f + h_lambda + h_a + h_G + h_gamma + h_omega + h_be + h_f;
}

void ElboTerms::check_finite() const {
  const std::pair<const char*, double> named[] = {
      {"E[log p(lambda)]", lambda}, {"E[log p(a | lambda)]", a},   {"E[log p(G | a)]", G},
      {"E[log p(gamma)]", gamma},   {"E[log p(b | gamma)]", b},    {"E[log p(omega)]", omega},
      {"E[log p(e | omega)]", e},   {"E[log p(f | b, e, G)]", f},  {"H[q(lambda)]", h_lambda},
      {"H[q(a)]", h_a},             {"H[q(G)]", h_G},              {"H[q(gamma)]", h_gamma},
      {"H[q(omega)]", h_omega},     {"H[q(b, e)]", h_be},          {"H[q(f)]", h_f}};
  for (const auto& [name, value] : named) {
    if (!std::isfinite(value)) throw NumericalError(std::string("non-finite ELBO term ") + name);
  }
}

ElboTerms elbo_terms(const Problem& problem, const PosteriorState& state) {
  const auto& hp = problem.hyper();
  const Eigen::Index n = state.size();
  const Eigen::Index p = state.num_kernels();
  const Eigen::Index k = state.num_classes();
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);

  const Eigen::VectorXd e_mean = state.e_mean();
  Eigen::MatrixXd ee = state.e_cov();
  ee.noalias() += e_mean * e_mean.transpose();

  ElboTerms t;
  for (Eigen::Index ci = 0; ci < k; ++ci) {
    const auto& c = state.classes[static_cast<std::size_t>(ci)];

    for (Eigen::Index i = 0; i < n; ++i) {
      const auto lam = gamma_stats(c.lambda_shape[i], c.lambda_scale[i]);
      const double a2 = c.a_mean[i] * c.a_mean[i] + c.a_cov(i, i);
      t.lambda += gamma_prior_term(lam, hp.alpha_lambda, hp.beta_lambda);
      t.a += normal_precision_term(lam, a2);
      t.h_lambda += gamma_entropy(c.lambda_shape[i], c.lambda_scale[i]);
    }
    t.h_a += 0.5 * (nd * kLog2PiE + c.a_log_det);

    // G | a: squared residual of the means plus both covariance traces.
    const Eigen::MatrixXd proj = problem.kernels().project(c.a_mean);
    const double resid = (c.G_mean - proj).squaredNorm();
    const double trace_a = (c.a_cov.cwiseProduct(state.cached_KK)).sum();
    t.G += -0.5 * nd * pd * kLog2Pi - 0.5 * (resid + nd * c.G_cov.trace() + trace_a);
    t.h_G += 0.5 * nd * (pd * kLog2PiE + c.G_log_det);

    const auto gam = gamma_stats(c.gamma_shape, c.gamma_scale);
    const double b_mean = state.be_mean[ci];
    const double b2 = b_mean * b_mean + state.be_cov(ci, ci);
    t.gamma += gamma_prior_term(gam, hp.alpha_gamma, hp.beta_gamma);
    t.b += normal_precision_term(gam, b2);
    t.h_gamma += gamma_entropy(c.gamma_shape, c.gamma_scale);

    // f | b, e, G: E[(f_i - e'g_i - b)^2] summed over i.
    const Eigen::VectorXd f2 = c.f_var + c.f_mean.cwiseAbs2();
    const Eigen::VectorXd lin = (c.G_mean.transpose() * e_mean).array() + b_mean;
    const Eigen::VectorXd be = b_mean * e_mean + state.be_cov.block(k, ci, p, 1);
    const double quad = (ee * c.G_mean).cwiseProduct(c.G_mean).sum() + nd * ee.cwiseProduct(c.G_cov).sum();
    const double sq = f2.sum() - 2.0 * c.f_mean.dot(lin) + nd * b2 + 2.0 * be.dot(c.G_mean.rowwise().sum()) + quad;
    t.f += -0.5 * nd * kLog2Pi - 0.5 * sq;
    t.h_f += c.f_entropy.sum();
  }

  for (Eigen::Index m = 0; m < p; ++m) {
    const auto om = gamma_stats(state.omega_shape[m], state.omega_scale[m]);
    const double e2 = e_mean[m] * e_mean[m] + state.be_cov(k + m, k + m);
    t.omega += gamma_prior_term(om, hp.alpha_omega, hp.beta_omega);
    t.e += normal_precision_term(om, e2);
    t.h_omega += gamma_entropy(state.omega_shape[m], state.omega_scale[m]);
  }
  t.h_be = 0.5 * (static_cast<double>(k + p) * kLog2PiE + state.be_log_det);
  return t;
}

double elbo(const Problem& problem, const PosteriorState& state) {
  const auto t = elbo_terms(problem, state);
  t.check_finite();
  return t.total();
}

}  // namespace bemkl
