#pragma once

#include <cmath>
#include <limits>

#include "edgeroute/error.hpp"

namespace edgeroute::stats {

namespace detail {
// Continued fraction for I_x(a, b), modified Lentz evaluation.
inline double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 1000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}
}  // namespace detail

/// Regularized incomplete beta function I_x(a, b), a, b > 0, x in [0, 1].
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) fail(ErrorKind::Usage, "incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::Usage, "incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  // The continued fraction converges fast only on this side of the mean.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

/// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees.
inline double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) fail(ErrorKind::Usage, "t distribution needs df > 0");
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

/// CDF of Student's t.
inline double t_cdf(double t, double df) {
  const double tail = t_two_sided_p(t, df) / 2.0;
  return t >= 0.0 ? 1.0 - tail : tail;
}

/// Quantile of Student's t, p in (0, 1), by bisection on the CDF.
inline double t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::Usage, "t_quantile: p outside (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -t_quantile(1.0 - p, df);
  double lo = 0.0, hi = 1.0;
  while (t_cdf(hi, df) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = lo + (hi - lo) / 2.0;
    (t_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return lo + (hi - lo) / 2.0;
}

}  // namespace edgeroute::stats
