#ifndef STORYSIM_STATS_HPP
#define STORYSIM_STATS_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace storysim {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 35.0 ? x : std::log1p(std::exp(x)); }

inline double log_sigmoid(double x) { return -softplus(-x); }

inline double sigmoid(double x) {
  if (x >= 0.0) {
    double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  double z = std::exp(x);
  return z / (1.0 + z);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double normal_logpdf(double x, double mu, double sigma) {
  static const double log_sqrt_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - log_sqrt_2pi;
}

// Exponential with rate lambda; -inf outside the support.
inline double exponential_logpdf(double x, double rate) {
  if (x < 0.0) return kNegInf;
  return std::log(rate) - rate * x;
}

// Unnormalized in the constant that only depends on (a, b); fine for MH ratios,
// and exact for Beta(1,1).
inline double beta_logpdf_kernel(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) return kNegInf;
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

inline double logsumexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty range");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Unbiased sample variance.
inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance needs at least 2 values");
  double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

}  // namespace storysim

#endif
