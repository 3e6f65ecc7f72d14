#pragma once

// Goodness-of-fit statistics: Kolmogorov-Smirnov (one and two sample) and
// Pearson chi-square.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "xsdist/error.hpp"

namespace xsdist::stats {

/// Q_KS(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2), the asymptotic
/// Kolmogorov tail probability.
inline double kolmogorov_q(double lambda) {
  if (lambda < 1.18) {
    // small lambda: the theta-function form converges faster
    if (lambda <= 0.0) return 1.0;
    const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
    double s = 0.0;
    for (int j = 1; j < 20; j += 2) s += std::pow(y, j * j);
    return 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s;
  }
  double s = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double n_effective = 0.0;
};

/// p-value with the Stephens finite-n correction lambda = (sqrt n + 0.12 + 0.11/sqrt n) D.
inline double ks_p_value(double d, double n_eff) {
  const double sn = std::sqrt(n_eff);
  return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

/// One-sample test of `samples` against a continuous CDF.
template <class Cdf>
KsResult ks_one_sample(std::span<const double> samples, Cdf&& cdf) {
  if (samples.empty()) throw DomainError("KS test needs samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return {d, ks_p_value(d, n), n};
}

/// Two-sample test.
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS test needs samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = na * nb / (na + nb);
  return {d, ks_p_value(d, ne), ne};
}

/// Critical value of D at significance alpha (asymptotic, Stephens-corrected).
inline double ks_critical_value(double n_eff, double alpha) {
  double lo = 0.0, hi = 5.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_q(mid) > alpha ? lo : hi) = mid;
  }
  const double sn = std::sqrt(n_eff);
  return hi / (sn + 0.12 + 0.11 / sn);
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  int bins_used = 0;
};

/// Pearson chi-square over bins whose expected count is at least min_expected;
/// dof = bins used - 1 - fitted_parameters.
inline ChiSquareResult chi_square(std::span<const double> observed, std::span<const double> expected,
                                  double min_expected = 5.0, int fitted_parameters = 0) {
  if (observed.size() != expected.size()) throw DimensionError("observed and expected counts differ in length");
  ChiSquareResult r;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] < min_expected) continue;
    const double d = observed[i] - expected[i];
    r.statistic += d * d / expected[i];
    ++r.bins_used;
  }
  r.dof = r.bins_used - 1 - fitted_parameters;
  if (r.dof < 1) throw DomainError("too few bins with sufficient expected count for a chi-square test");
  r.p_value = boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic);
  return r;
}

}  // namespace xsdist::stats
