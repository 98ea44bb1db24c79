// Moments of a unit-variance normal truncated to one side.
#ifndef BEMKL_TRUNCATED_NORMAL_HPP
#define BEMKL_TRUNCATED_NORMAL_HPP

namespace bemkl {

/// log(1 - Phi(z)), finite for every finite z.
double log_normal_sf(double z);

/// log Phi(x).
inline double log_normal_cdf(double x) { return log_normal_sf(-x); }

/// phi(z) / (1 - Phi(z)).
double inverse_mills_ratio(double z);

struct TruncatedMoments {
  double mean = 0.0;
  double variance = 1.0;
  double log_partition = 0.0;  // log of the retained probability mass
  double entropy = 0.0;
};

/// Moments of N(mu, 1) restricted to f * y > nu, y in {-1, +1}.
///
/// With z = nu - y mu and h = phi(z) / (1 - Phi(z)):
/// mean = mu + y h, variance = 1 + z h - h^2, log_partition = log(1 - Phi(z)).
/// For large z the ratio comes from a continued fraction so the variance keeps
/// full relative accuracy.
TruncatedMoments truncated_normal_moments(double mu, double y, double nu);

}  // namespace bemkl

#endif  // BEMKL_TRUNCATED_NORMAL_HPP
