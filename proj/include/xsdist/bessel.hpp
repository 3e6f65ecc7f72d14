#pragma once

// Bessel functions of integer order 0..4 for real argument.
//
// |x| < 25: Miller backward recurrence normalised with
//           J0 + 2(J2 + J4 + ...) = 1  (resp. exp(-x)(I0 + 2 sum I_k) = 1).
// |x| >= 25: Hankel asymptotic expansion for J0 and J1, upward recurrence
//            for J2..J4 (stable for n < x).
//
// The "reduced" functions J_n(w)/(w/2)^n are entire in z = w^2 and are what
// the orthogonal-class kernel actually consumes: m^{n/2} J_n(2 sqrt(XY))
// equals Y^n times the reduced value at z = 4XY.

#include <array>
#include <cmath>
#include <numbers>

namespace xsdist::bessel {

inline constexpr int kMaxOrder = 4;
using Orders = std::array<double, kMaxOrder + 1>;

namespace detail {

inline int miller_start(double x) {
  // Start order comfortably beyond both x and the highest order requested.
  const int n = static_cast<int>(x + 12.0 * std::cbrt(x + 1.0) + 20.0);
  return n % 2 == 0 ? n : n + 1;
}

inline Orders j_miller(double x) {
  Orders out{};
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const int start = miller_start(x);
  double next = 0.0;   // J_{n+1}
  double cur = 1e-30;  // J_n
  double norm = 0.0;
  for (int n = start; n >= 1; --n) {
    const double prev = 2.0 * n / x * cur - next;  // J_{n-1}
    next = cur;
    cur = prev;
    if (n - 1 <= kMaxOrder) out[static_cast<std::size_t>(n - 1)] = cur;
    if ((n - 1) % 2 == 0 && n - 1 > 0) norm += 2.0 * cur;
    // rescale to avoid overflow in long recurrences
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      next *= 1e-250;
      norm *= 1e-250;
      for (int k = n - 1; k <= kMaxOrder; ++k) out[static_cast<std::size_t>(k)] *= 1e-250;
    }
  }
  norm += cur;  // + J0
  for (auto& v : out) v /= norm;
  return out;
}

inline Orders i_miller_scaled(double x) {
  // Returns exp(-x) I_n(x), x > 0.
  Orders out{};
  const int start = miller_start(x) + static_cast<int>(std::sqrt(40.0 * x));
  double next = 0.0;
  double cur = 1e-30;
  double norm = 0.0;
  for (int n = start; n >= 1; --n) {
    const double prev = 2.0 * n / x * cur + next;  // I_{n-1}
    next = cur;
    cur = prev;
    if (n - 1 <= kMaxOrder) out[static_cast<std::size_t>(n - 1)] = cur;
    if (n - 1 > 0) norm += 2.0 * cur;
    if (cur > 1e250) {
      cur *= 1e-250;
      next *= 1e-250;
      norm *= 1e-250;
      for (int k = n - 1; k <= kMaxOrder; ++k) out[static_cast<std::size_t>(k)] *= 1e-250;
    }
  }
  norm += cur;
  for (auto& v : out) v /= norm;
  return out;
}

// Hankel asymptotic expansion J_nu(x) = sqrt(2/(pi x)) (P cos chi - Q sin chi).
inline double j_asymptotic(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  double last = 1e300;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(term) > last) break;  // asymptotic series started diverging
    last = std::abs(term);
    const int r = k % 4;
    // k odd contributes to Q, k even to P, with alternating signs
    if (r == 1) q += term;
    else if (r == 2) p -= term;
    else if (r == 3) q -= term;
    else p += term;
    if (std::abs(term) < 1e-17) break;
  }
  const double chi = x - (0.5 * nu + 0.25) * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

inline constexpr double kAsymptoticThreshold = 25.0;

/// J_0(x) ... J_4(x).
inline Orders cyl_j(double x) {
  const double ax = std::abs(x);
  Orders out{};
  if (ax < kAsymptoticThreshold) {
    out = detail::j_miller(ax);
  } else {
    out[0] = detail::j_asymptotic(0, ax);
    out[1] = detail::j_asymptotic(1, ax);
    for (int n = 1; n < kMaxOrder; ++n)
      out[static_cast<std::size_t>(n + 1)] = 2.0 * n / ax * out[static_cast<std::size_t>(n)] - out[static_cast<std::size_t>(n - 1)];
  }
  if (x < 0.0) {
    out[1] = -out[1];
    out[3] = -out[3];
  }
  return out;
}

inline double j0(double x) {
  const double ax = std::abs(x);
  if (ax < kAsymptoticThreshold) return detail::j_miller(ax)[0];
  return detail::j_asymptotic(0, ax);
}

inline double j1(double x) {
  const double ax = std::abs(x);
  const double v = ax < kAsymptoticThreshold ? detail::j_miller(ax)[1] : detail::j_asymptotic(1, ax);
  return x < 0.0 ? -v : v;
}

inline double jn(int n, double x) { return cyl_j(x)[static_cast<std::size_t>(n)]; }

/// I_0(x) ... I_4(x).
inline Orders cyl_i(double x) {
  const double ax = std::abs(x);
  Orders out{};
  if (ax == 0.0) {
    out[0] = 1.0;
    return out;
  }
  out = detail::i_miller_scaled(ax);
  const double scale = std::exp(ax);
  for (auto& v : out) v *= scale;
  if (x < 0.0) {
    out[1] = -out[1];
    out[3] = -out[3];
  }
  return out;
}

/// J_n(w)/(w/2)^n for n = 0..4 as entire functions of z = w^2, any real z.
/// For z < 0 this is I_n(s)/(s/2)^n with s = sqrt(-z), i.e. the continuation
/// J_n(i s) = i^n I_n(s).
///
/// Small |z|: power series for orders 4 and 5, then the downward recurrence
/// Jhat_{n-1} = n Jhat_n - (z/4) Jhat_{n+1}.
inline Orders reduced_j(double z) {
  Orders out{};
  if (std::abs(z) < 16.0) {
    const double y = -0.25 * z;
    double t4 = 1.0 / 24.0, t5 = 1.0 / 120.0;
    double s4 = t4, s5 = t5;
    for (int j = 1; j < 40; ++j) {
      t4 *= y / (j * (4.0 + j));
      t5 *= y / (j * (5.0 + j));
      s4 += t4;
      s5 += t5;
      if (std::abs(t4) < 1e-17 * std::abs(s4) && std::abs(t5) < 1e-17 * std::abs(s5)) break;
    }
    out[4] = s4;
    out[3] = 4.0 * s4 + y * s5;
    out[2] = 3.0 * out[3] + y * out[4];
    out[1] = 2.0 * out[2] + y * out[3];
    out[0] = out[1] + y * out[2];
    return out;
  }
  const double w = std::sqrt(std::abs(z));
  const Orders raw = z > 0.0 ? cyl_j(w) : cyl_i(w);
  const double half = 0.5 * w;
  double scale = 1.0;
  for (int n = 0; n <= kMaxOrder; ++n) {
    out[static_cast<std::size_t>(n)] = raw[static_cast<std::size_t>(n)] / scale;
    scale *= half;
  }
  return out;
}

/// n-th positive zero of J_0 (n >= 1): McMahon start plus Newton on J0' = -J1.
inline double j0_zero(int n) {
  const double beta = (n - 0.25) * std::numbers::pi;
  double x = beta + 1.0 / (8.0 * beta) - 31.0 / (384.0 * beta * beta * beta);
  for (int it = 0; it < 8; ++it) {
    const auto j = cyl_j(x);
    const double dx = j[0] / j[1];  // x_{k+1} = x + J0/J1
    x += dx;
    if (std::abs(dx) < 1e-15 * x) break;
  }
  return x;
}

}  // namespace xsdist::bessel
