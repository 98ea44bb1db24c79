// Independent reference computations for the tests: quadrature, dense
// inverses and a Gibbs sampler. Nothing here calls the engine's numerics.
#ifndef BEMKL_TESTS_ORACLES_HPP
#define BEMKL_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "bemkl/engine.hpp"
#include "bemkl/kernels.hpp"

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------- instances

struct Instance {
  std::vector<MatrixXd> kernels;
  VectorXd y;
  MatrixXd features;
};

// Gaussian and polynomial kernels of random features, spherically
// normalized, with labels from a noisy linear rule (both classes present).
inline Instance random_instance(std::mt19937_64& rng, Index n, Index p, Index dims = 3) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Instance inst;
  inst.features.resize(n, dims);
  for (Index i = 0; i < inst.features.size(); ++i) inst.features.data()[i] = normal(rng);
  VectorXd w(dims);
  for (Index d = 0; d < dims; ++d) w[d] = normal(rng);
  inst.y.resize(n);
  for (Index i = 0; i < n; ++i) inst.y[i] = inst.features.row(i).dot(w) + 0.3 * normal(rng) >= 0.0 ? 1.0 : -1.0;
  inst.y[0] = 1.0;
  inst.y[1] = -1.0;
  std::uniform_int_distribution<Index> pick(0, dims - 1);
  for (Index m = 0; m < p; ++m) {
    MatrixXd x = inst.features;
    if (m % 4 == 3) x = inst.features.col(pick(rng));
    MatrixXd k;
    if (m % 3 == 2) {
      k = bemkl::polynomial_kernel(x, x, static_cast<int>(1 + m % 3));
    } else {
      k = bemkl::gaussian_kernel(x, x, std::ldexp(1.0, static_cast<int>(m % 5) - 1));
    }
    inst.kernels.push_back(bemkl::spherical_normalize(k).train);
  }
  return inst;
}

inline bemkl::KernelBundle to_bundle(const Instance& inst) {
  bemkl::KernelBundle b;
  b.train_kernels = inst.kernels;
  for (std::size_t m = 0; m < inst.kernels.size(); ++m) b.names.push_back("k" + std::to_string(m));
  return b;
}

// ------------------------------------------------------------ dense updates

inline MatrixXd dense_inverse(const MatrixXd& a) { return a.fullPivLu().inverse(); }

struct Gaussian {
  VectorXd mean;
  MatrixXd cov;
};

// q(a) from explicit sums over kernels and an LU inverse.
inline Gaussian dense_update_a(const std::vector<MatrixXd>& kernels, const bemkl::ClassFactors& c) {
  const Index n = c.a_mean.size();
  MatrixXd prec = MatrixXd::Zero(n, n);
  VectorXd rhs = VectorXd::Zero(n);
  for (std::size_t m = 0; m < kernels.size(); ++m) {
    const auto& k = kernels[m];
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        double s = 0.0;
        for (Index l = 0; l < n; ++l) s += k(i, l) * k(j, l);
        prec(i, j) += s;
      }
      for (Index l = 0; l < n; ++l) rhs[i] += k(i, l) * c.G_mean(static_cast<Index>(m), l);
    }
  }
  const VectorXd lam = c.lambda_shape.cwiseProduct(c.lambda_scale);
  for (Index i = 0; i < n; ++i) prec(i, i) += lam[i];
  Gaussian g;
  g.cov = dense_inverse(prec);
  g.mean = g.cov * rhs;
  return g;
}

// q(G) for class `cls`: shared covariance and the column means.
inline Gaussian dense_update_G(const std::vector<MatrixXd>& kernels, const bemkl::PosteriorState& s, Index cls,
                               MatrixXd* mean_out) {
  const Index k = s.num_classes();
  const Index p = s.num_kernels();
  const auto& c = s.classes[static_cast<std::size_t>(cls)];
  const Index n = c.a_mean.size();
  const VectorXd e = s.be_mean.tail(p);
  const MatrixXd see = s.be_cov.block(k, k, p, p) + e * e.transpose();
  Gaussian g;
  g.cov = dense_inverse(MatrixXd::Identity(p, p) + see);
  mean_out->resize(p, n);
  for (Index i = 0; i < n; ++i) {
    VectorXd r(p);
    for (Index m = 0; m < p; ++m) {
      double ka = 0.0;
      for (Index l = 0; l < n; ++l) ka += kernels[static_cast<std::size_t>(m)](l, i) * c.a_mean[l];
      const double be = s.be_mean[cls] * e[m] + s.be_cov(k + m, cls);
      r[m] = ka + e[m] * c.f_mean[i] - be;
    }
    mean_out->col(i) = g.cov * r;
  }
  return g;
}

// Joint q(b_1..b_K, e), precision assembled point by point.
inline Gaussian dense_update_be(const bemkl::PosteriorState& s) {
  const Index k = s.num_classes();
  const Index p = s.num_kernels();
  const Index n = s.size();
  MatrixXd prec = MatrixXd::Zero(k + p, k + p);
  VectorXd rhs = VectorXd::Zero(k + p);
  for (Index m = 0; m < p; ++m) prec(k + m, k + m) = s.omega_shape[m] * s.omega_scale[m];
  for (Index c = 0; c < k; ++c) {
    const auto& f = s.classes[static_cast<std::size_t>(c)];
    prec(c, c) = f.gamma_shape * f.gamma_scale + static_cast<double>(n);
    for (Index i = 0; i < n; ++i) {
      const VectorXd g = f.G_mean.col(i);
      prec.block(k, k, p, p) += g * g.transpose() + f.G_cov;
      prec.block(k, c, p, 1) += g;
      prec.block(c, k, 1, p) += g.transpose();
      rhs[c] += f.f_mean[i];
      rhs.tail(p) += g * f.f_mean[i];
    }
  }
  Gaussian g;
  g.cov = dense_inverse(prec);
  g.mean = g.cov * rhs;
  return g;
}

// --------------------------------------------------------------- quadrature

struct TruncatedOracle {
  double mean, variance, log_partition, entropy;
};

// u ~ N(mu, 1) restricted to y u > nu, by Gauss-Kronrod quadrature in the
// shifted variable t = y u - nu >= 0.
inline TruncatedOracle truncated_quadrature(double mu, double y, double nu) {
  using boost::math::quadrature::gauss_kronrod;
  const double z = nu - y * mu;
  const double peak = std::max(0.0, -z);
  const double c = z < 0.0 ? 0.5 * z * z : 0.0;
  // Unit panels over [0, peak + 40]; the integrand is below e^-800 beyond.
  auto moment = [&](int power) {
    auto f = [&](double t) { return std::pow(t - peak, power) * std::exp(-t * z - 0.5 * t * t - c); };
    double total = 0.0;
    for (double lo = 0.0; lo < peak + 40.0; lo += 1.0) {
      total += gauss_kronrod<double, 61>::integrate(f, lo, lo + 1.0, 6, 1e-14);
    }
    return total;
  };
  const double i0 = moment(0), i1 = moment(1), i2 = moment(2);
  const double shift = i1 / i0;
  const double mean_t = peak + shift;
  const double var_t = i2 / i0 - shift * shift;
  TruncatedOracle o;
  o.log_partition = -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) + c + std::log(i0);
  o.mean = y * (nu + mean_t);
  o.variance = var_t;
  const double second = var_t + (mean_t + z) * (mean_t + z);  // E[(t + z)^2]
  o.entropy = o.log_partition + 0.5 * std::log(2.0 * std::numbers::pi) + 0.5 * second;
  return o;
}

// E[log x] for x ~ Gamma(shape, scale) by quadrature over the unit-scale
// density.
inline double gamma_expected_log(double shape, double scale) {
  using boost::math::quadrature::exp_sinh;
  using boost::math::quadrature::tanh_sinh;
  const double log_norm = std::lgamma(shape);
  auto dens_log = [&](double u) { return std::exp((shape - 1.0) * std::log(u) - u - log_norm) * std::log(u); };
  tanh_sinh<double> ts;
  exp_sinh<double> es;
  const double head = ts.integrate(dens_log, 0.0, 1.0);
  const double tail = es.integrate(dens_log, 1.0, std::numeric_limits<double>::infinity());
  return std::log(scale) + head + tail;
}

// ------------------------------------------------------------- Gibbs sampler

// Standard normal restricted to s > z.
inline double truncated_standard_normal(std::mt19937_64& rng, double z) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (z < 0.45) {
    for (;;) {
      const double s = normal(rng);
      if (s > z) return s;
    }
  }
  const double rate = 0.5 * (z + std::sqrt(z * z + 4.0));
  std::exponential_distribution<double> expo(rate);
  for (;;) {
    const double s = z + expo(rng);
    if (unif(rng) <= std::exp(-0.5 * (s - rate) * (s - rate))) return s;
  }
}

inline VectorXd sample_gaussian_from_precision(std::mt19937_64& rng, const MatrixXd& precision, const VectorXd& rhs) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::LLT<MatrixXd> llt(precision);
  const VectorXd mean = llt.solve(rhs);
  VectorXd z(rhs.size());
  for (Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return mean + llt.matrixU().solve(z);
}

struct GibbsSummary {
  double b_mean = 0.0;
  VectorXd e_mean;  // folded so that sum(e) >= 0 in every draw
  VectorXd e_sd;
};

// Block Gibbs sampler of the full model. The posterior is invariant under
// (a, G, e) -> -(a, G, e); every draw is folded onto the sum(e) >= 0 side.
inline GibbsSummary gibbs(const std::vector<MatrixXd>& kernels, const VectorXd& y, const bemkl::HyperParams& hp,
                          int burn_in, int sweeps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Index n = y.size();
  const Index p = static_cast<Index>(kernels.size());
  MatrixXd kk = MatrixXd::Zero(n, n);
  for (const auto& k : kernels) kk += k * k.transpose();

  VectorXd lambda = VectorXd::Constant(n, hp.alpha_lambda * hp.beta_lambda);
  VectorXd omega = VectorXd::Constant(p, hp.alpha_omega * hp.beta_omega);
  double gamma = hp.alpha_gamma * hp.beta_gamma;
  VectorXd a = VectorXd::Zero(n);
  MatrixXd G = VectorXd::Ones(p) * y.transpose();
  VectorXd e = VectorXd::Ones(p);
  double b = 0.0;
  VectorXd f = (hp.nu + 1.0) * y;

  GibbsSummary out;
  out.e_mean = VectorXd::Zero(p);
  VectorXd e_sq = VectorXd::Zero(p);
  auto gamma_draw = [&](double shape, double scale) { return std::gamma_distribution<double>(shape, scale)(rng); };

  for (int it = 0; it < burn_in + sweeps; ++it) {
    for (Index i = 0; i < n; ++i) lambda[i] = gamma_draw(hp.alpha_lambda + 0.5, 1.0 / (1.0 / hp.beta_lambda + 0.5 * a[i] * a[i]));

    MatrixXd prec_a = kk;
    prec_a.diagonal() += lambda;
    VectorXd rhs_a = VectorXd::Zero(n);
    for (Index m = 0; m < p; ++m) rhs_a += kernels[static_cast<std::size_t>(m)] * G.row(m).transpose();
    a = sample_gaussian_from_precision(rng, prec_a, rhs_a);

    MatrixXd prec_g = MatrixXd::Identity(p, p) + e * e.transpose();
    for (Index i = 0; i < n; ++i) {
      VectorXd r(p);
      for (Index m = 0; m < p; ++m) r[m] = kernels[static_cast<std::size_t>(m)].col(i).dot(a);
      r += e * (f[i] - b);
      G.col(i) = sample_gaussian_from_precision(rng, prec_g, r);
    }

    gamma = gamma_draw(hp.alpha_gamma + 0.5, 1.0 / (1.0 / hp.beta_gamma + 0.5 * b * b));
    for (Index m = 0; m < p; ++m) omega[m] = gamma_draw(hp.alpha_omega + 0.5, 1.0 / (1.0 / hp.beta_omega + 0.5 * e[m] * e[m]));

    MatrixXd prec_be(p + 1, p + 1);
    prec_be(0, 0) = gamma + static_cast<double>(n);
    const VectorXd g1 = G.rowwise().sum();
    prec_be.block(1, 0, p, 1) = g1;
    prec_be.block(0, 1, 1, p) = g1.transpose();
    prec_be.bottomRightCorner(p, p) = G * G.transpose();
    prec_be.bottomRightCorner(p, p).diagonal() += omega;
    VectorXd rhs_be(p + 1);
    rhs_be[0] = f.sum();
    rhs_be.tail(p) = G * f;
    const VectorXd be = sample_gaussian_from_precision(rng, prec_be, rhs_be);
    b = be[0];
    e = be.tail(p);

    for (Index i = 0; i < n; ++i) {
      const double mu = e.dot(G.col(i)) + b;
      const double s = truncated_standard_normal(rng, hp.nu - y[i] * mu);
      f[i] = y[i] * (y[i] * mu + s);
    }

    if (it >= burn_in) {
      const VectorXd folded = e.sum() >= 0.0 ? VectorXd(e) : VectorXd(-e);
      out.b_mean += b;
      out.e_mean += folded;
      e_sq += folded.cwiseAbs2();
    }
  }
  out.b_mean /= sweeps;
  out.e_mean /= sweeps;
  out.e_sd = (e_sq / sweeps - out.e_mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace oracle

#endif  // BEMKL_TESTS_ORACLES_HPP
