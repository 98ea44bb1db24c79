#include "bemkl/truncated_normal.hpp"

#include <cmath>
#include <numbers>

namespace bemkl {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))
constexpr double kFractionThreshold = 5.0;

double log_normal_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

// h(z) - z = 1 / (z + 2 / (z + 3 / (z + ...))) for z >= kFractionThreshold.
double excess_from_fraction(double z) {
  // Backward evaluation, depth chosen from the convergence rate ~ k / z^2.
  const int depth = 60 + static_cast<int>(400.0 / z);
  double tail = z;
  for (int k = depth; k >= 2; --k) tail = z + static_cast<double>(k) / tail;
  return 1.0 / tail;
}

}  // namespace

double log_normal_sf(double z) {
  if (z < kFractionThreshold) return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
  const double h = z + excess_from_fraction(z);
  return log_normal_pdf(z) - std::log(h);
}

double inverse_mills_ratio(double z) {
  if (z < kFractionThreshold) return std::exp(log_normal_pdf(z) - log_normal_sf(z));
  return z + excess_from_fraction(z);
}

TruncatedMoments truncated_normal_moments(double mu, double y, double nu) {
  const double z = nu - y * mu;
  double h, excess, log_q;
  if (z < kFractionThreshold) {
    log_q = std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
    h = std::exp(log_normal_pdf(z) - log_q);
    excess = h - z;
  } else {
    excess = excess_from_fraction(z);
    h = z + excess;
    log_q = log_normal_pdf(z) - std::log(h);
  }
  TruncatedMoments m;
  m.mean = mu + y * h;
  m.variance = 1.0 - h * excess;
  m.log_partition = log_q;
  m.entropy = kLogSqrt2Pi + 0.5 + log_q + 0.5 * z * h;
  return m;
}

}  // namespace bemkl
