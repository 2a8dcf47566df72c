#pragma once

// One-sample normality tests against N(0, 1), replicate summaries and QQ data.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "lrdf/core.hpp"

namespace lrdf {

inline constexpr std::size_t kMinTestSamples = 50;

struct NormalityResult {
  std::size_t n = 0;
  double ks_stat = 0.0;
  double ks_p = 1.0;
  double ad_stat = 0.0;
  double ad_p = 1.0;
};

/// Asymptotic Kolmogorov survival function Q(lambda) = P(K > lambda).
inline double kolmogorov_sf(double lambda) {
  if (!(lambda > 0)) return 1.0;
  if (lambda < 1.0) {
    // Jacobi-theta form, accurate for small lambda.
    const double x = -pi * pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1; k <= 50; k += 2) cdf += std::exp(x * k * k);
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * cdf, 0.0, 1.0);
  }
  double sf = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sf += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(sf, 0.0, 1.0);
}

namespace detail {

// Marsaglia & Marsaglia (2004): asymptotic Anderson-Darling CDF.
inline double adinf(double z) {
  if (!(z > 0)) return 0.0;
  if (z < 2.0)
    return std::exp(-1.2337141 / z) / std::sqrt(z) *
           (2.00012 + (0.247105 - (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) * z) * z);
  return std::exp(-std::exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) * z));
}

// Finite-n correction to adinf.
inline double ad_errfix(double n, double x) {
  if (x > 0.8)
    return (-130.2137 + (745.2337 - (1705.091 - (1950.646 - (1116.360 - 255.7844 * x) * x) * x) * x) * x) / n;
  const double c = 0.01265 + 0.1757 / n;
  if (x < c) {
    double t = x / c;
    t = std::sqrt(t) * (1.0 - t) * (49.0 * t - 102.0);
    return t * (0.0037 / (n * n) + 0.00078 / n + 0.00006) / n;
  }
  double t = (x - c) / (0.8 - c);
  t = -0.00022633 + (6.54034 - (14.6538 - (14.458 - (8.259 - 1.91864 * t) * t) * t) * t) * t;
  return t * (0.04213 / n + 0.01365 / (n * n)) / n;
}

}  // namespace detail

/// P(A^2_n > a) for a fully specified null distribution.
inline double anderson_darling_sf(double a, std::size_t n) {
  // The rounded errfix polynomial leaves ~-6e-4/n at cdf = 1, so beyond the
  // 1e-3 tail the asymptotic survival function is used as is.
  const double tail = a > 2.0 ? -std::expm1(-std::exp(1.0776 - (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * a) * a) * a) * a) * a))
                              : 1.0 - detail::adinf(a);
  if (tail < 1e-3) return std::max(tail, 0.0);
  const double cdf = 1.0 - tail;
  return std::clamp(1.0 - (cdf + detail::ad_errfix(double(n), cdf)), 0.0, 1.0);
}

/// KS with the Stephens small-sample correction and Anderson-Darling, both vs N(0, 1).
inline NormalityResult normality_tests(std::vector<double> x) {
  require(x.size() >= kMinTestSamples, ErrorKind::domain,
          "normality_tests: at least " + std::to_string(kMinTestSamples) + " samples required, got " +
              std::to_string(x.size()));
  for (double v : x) require(std::isfinite(v), ErrorKind::domain, "normality_tests: non-finite sample");
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  const double nd = double(n);
  NormalityResult r;
  r.n = n;
  double D = 0.0, A = 0.0;
  std::vector<double> F(n);
  for (std::size_t i = 0; i < n; ++i) F[i] = normal_cdf(x[i]);
  for (std::size_t i = 0; i < n; ++i) {
    D = std::max({D, (i + 1) / nd - F[i], F[i] - i / nd});
    const double lo = std::max(F[i], 1e-300);
    const double hi = std::max(normal_sf(x[n - 1 - i]), 1e-300);
    A += (2.0 * i + 1.0) * (std::log(lo) + std::log(hi));
  }
  r.ks_stat = D;
  const double sn = std::sqrt(nd);
  r.ks_p = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * D);
  r.ad_stat = -nd - A / nd;
  r.ad_p = anderson_darling_sf(r.ad_stat, n);
  return r;
}

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double se_mean = 0.0;
};

inline SampleMoments sample_moments(const std::vector<double>& x) {
  SampleMoments m;
  const std::size_t n = x.size();
  if (n == 0) return m;
  for (double v : x) m.mean += v;
  m.mean /= double(n);
  if (n < 2) return m;
  for (double v : x) m.variance += (v - m.mean) * (v - m.mean);
  m.variance /= double(n - 1);
  m.se_mean = std::sqrt(m.variance / double(n));
  return m;
}

/// (Phi^{-1}((i - 1/2) / n), x_(i)) pairs.
inline std::vector<std::pair<double, double>> qq_points(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const boost::math::normal_distribution<double> N;
  std::vector<std::pair<double, double>> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out.emplace_back(boost::math::quantile(N, (i + 0.5) / double(x.size())), x[i]);
  return out;
}

}  // namespace lrdf
