#pragma once

#include <cmath>
#include <limits>
#include <span>

#include <boost/math/distributions/students_t.hpp>

#include "resrec/error.hpp"

namespace resrec::stats {

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator).
inline double sample_sd(std::span<const double> v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// P(T > t) for Student's t with `df` degrees of freedom.
inline double student_t_sf(double t, double df) {
  boost::math::students_t dist(df);
  return boost::math::cdf(boost::math::complement(dist, t));
}

/// P(|Z| > |z|) for a standard normal.
inline double two_sided_normal_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

/// One-sided paired t-test of H0: mean(treated) <= mean(baseline).
/// Zero-variance differences: p = 0 if the mean difference is positive, 1 if
/// negative, 0.5 if zero.
inline double paired_ttest_pvalue(std::span<const double> treated,
                                  std::span<const double> baseline) {
  require(treated.size() == baseline.size(), ErrorCode::InvalidArgument,
          "paired t-test: length mismatch");
  require(treated.size() >= 2, ErrorCode::InvalidArgument, "paired t-test: need k >= 2");
  const std::size_t k = treated.size();
  double md = 0.0;
  for (std::size_t j = 0; j < k; ++j) md += treated[j] - baseline[j];
  md /= static_cast<double>(k);
  double ss = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double r = (treated[j] - baseline[j]) - md;
    ss += r * r;
  }
  const double sd = std::sqrt(ss / static_cast<double>(k - 1));
  // Rounding leaves ~1e-17 residue when all differences are equal.
  if (sd <= 1e-14 * std::max(1.0, std::abs(md))) {
    if (md > 0) return 0.0;
    if (md < 0) return 1.0;
    return 0.5;
  }
  const double t = md / (sd / std::sqrt(static_cast<double>(k)));
  return student_t_sf(t, static_cast<double>(k - 1));
}

// ---------------------------------------------------------------------------
// Moments and normality tests

struct CentralMoments {
  double n = 0, m2 = 0, m3 = 0, m4 = 0;  // biased (1/n) central moments
};

inline CentralMoments central_moments(std::span<const double> v) {
  CentralMoments c;
  c.n = static_cast<double>(v.size());
  const double m = mean(v);
  for (double x : v) {
    const double d = x - m;
    const double d2 = d * d;
    c.m2 += d2;
    c.m3 += d2 * d;
    c.m4 += d2 * d2;
  }
  c.m2 /= c.n;
  c.m3 /= c.n;
  c.m4 /= c.n;
  return c;
}

namespace detail {
inline bool degenerate(const CentralMoments& c, std::span<const double> v) {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  return !(c.m2 > 1e-24 * std::max(1.0, scale * scale));
}
}  // namespace detail

/// Adjusted Fisher-Pearson skewness G1. Zero for constant samples or n < 3.
inline double skewness(std::span<const double> v) {
  if (v.size() < 3) return 0.0;
  const auto c = central_moments(v);
  if (detail::degenerate(c, v)) return 0.0;
  const double g1 = c.m3 / std::pow(c.m2, 1.5);
  return g1 * std::sqrt(c.n * (c.n - 1.0)) / (c.n - 2.0);
}

/// Sample excess kurtosis G2 (bias-adjusted); falls back to the plain moment
/// ratio minus 3 when n < 4. Zero for constant samples.
inline double excess_kurtosis(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const auto c = central_moments(v);
  if (detail::degenerate(c, v)) return 0.0;
  const double g2 = c.m4 / (c.m2 * c.m2) - 3.0;
  if (v.size() < 4) return g2;
  const double n = c.n;
  return ((n + 1.0) * g2 + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0));
}

/// D'Agostino's skewness Z statistic (uses the biased g1).
inline double skew_test_z(std::span<const double> v) {
  const auto c = central_moments(v);
  const double n = c.n;
  const double b2 = c.m3 / std::pow(c.m2, 1.5);
  double y = b2 * std::sqrt(((n + 1.0) * (n + 3.0)) / (6.0 * (n - 2.0)));
  const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                       ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  if (y == 0.0) y = 1.0;
  return delta * std::log(y / alpha + std::sqrt((y / alpha) * (y / alpha) + 1.0));
}

/// Anscombe-Glynn kurtosis Z statistic (uses the biased b2 = m4 / m2^2).
inline double kurt_test_z(std::span<const double> v) {
  const auto c = central_moments(v);
  const double n = c.n;
  const double b2 = c.m4 / (c.m2 * c.m2);
  const double e = 3.0 * (n - 1.0) / (n + 1.0);
  const double var_b2 =
      24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  const double x = (b2 - e) / std::sqrt(var_b2);
  const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                            std::sqrt((6.0 * (n + 3.0) * (n + 5.0)) / (n * (n - 2.0) * (n - 3.0)));
  const double a = 6.0 + 8.0 / sqrt_beta1 *
                             (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
  const double term1 = 1.0 - 2.0 / (9.0 * a);
  const double denom = 1.0 + x * std::sqrt(2.0 / (a - 4.0));
  const double term2 =
      denom == 0.0 ? 0.0 : std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
  return (term1 - term2) / std::sqrt(2.0 / (9.0 * a));
}

inline constexpr std::size_t kMinNormalityTestSize = 8;

/// Two-sided p-value of D'Agostino's skewness test. 1.0 for n < 8 or a
/// constant sample.
inline double skew_test_pvalue(std::span<const double> v) {
  if (v.size() < kMinNormalityTestSize) return 1.0;
  if (detail::degenerate(central_moments(v), v)) return 1.0;
  return two_sided_normal_p(skew_test_z(v));
}

/// Two-sided p-value of the Anscombe-Glynn kurtosis test. 1.0 for n < 8 or a
/// constant sample.
inline double kurt_test_pvalue(std::span<const double> v) {
  if (v.size() < kMinNormalityTestSize) return 1.0;
  if (detail::degenerate(central_moments(v), v)) return 1.0;
  return two_sided_normal_p(kurt_test_z(v));
}

}  // namespace resrec::stats
