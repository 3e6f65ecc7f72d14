#pragma once

// Integrand algebra of the orthogonal-class characteristic function: the
// per-channel quantities p, q, r, the combinations X, Y, omega^2 = 4XY and the
// kappa coefficients multiplying J_0..J_4(omega).
//
// Bessel terms are carried in reduced form. With Jhat_n = J_n(w)/(w/2)^n,
// an entire function of w^2,
//   m^{n/2} J_n(w) = Y^n Jhat_n,   l^{n/2} J_n(w) = X^n Jhat_n,   l = X/Y, m = Y/X.
// The functions kappa11 ... kappa43 below return the coefficients of Jhat_n,
// i.e. the printed coefficients with m^{n/2}, l^{n/2} replaced by Y^n, X^n.

#include <cmath>
#include <complex>
#include <limits>

#include "xsdist/bessel.hpp"
#include "xsdist/model.hpp"

namespace xsdist {

using cplx = std::complex<double>;

/// Integration point in the lambda variables. s_j = sqrt|lambda_j^2 - 1| is
/// stored separately so callers using cos/cosh substitutions avoid cancellation.
struct LambdaPoint {
  double l0 = 0.0, l1 = 1.0, l2 = 1.0;
  double s0 = 1.0, s1 = 0.0, s2 = 0.0;

  static LambdaPoint from_lambdas(double l0, double l1, double l2) {
    return {l0, l1, l2, std::sqrt(std::abs(l0 * l0 - 1.0)), std::sqrt(std::abs(l1 * l1 - 1.0)),
            std::sqrt(std::abs(l2 * l2 - 1.0))};
  }
  /// l0 = cos(theta0), l1 = cosh(u1), l2 = cosh(u2)
  static LambdaPoint from_angles(double theta0, double u1, double u2) {
    return {std::cos(theta0), std::cosh(u1), std::cosh(u2), std::sin(theta0), std::sinh(u1), std::sinh(u2)};
  }
};

struct ChannelPqr {
  double p0 = 0.0, p1 = 0.0, p2 = 0.0;
  double pp = 0.0, pm = 0.0;  // p^+ = p^1 + p^2, p^- = p^1 - p^2
  cplx qp, qm, rp, rm;
};

/// p_c^j = |k|/8 s_j/(g+ + l_j); q_c^+- = k/(8i) (eps + i g-)(...), r_c^+- = i k*/8 (eps - i g-)(...)
/// with eps = E / sqrt(4v^2 - E^2).
inline ChannelPqr pqr_terms(cplx k, const LambdaPoint& pt, double g_plus, double g_minus, double energy_ratio) {
  ChannelPqr c;
  const double kk = std::abs(k) / 8.0;
  const double d0 = 1.0 / (g_plus + pt.l0);
  const double d1 = 1.0 / (g_plus + pt.l1);
  const double d2 = 1.0 / (g_plus + pt.l2);
  c.p0 = kk * pt.s0 * d0;
  c.p1 = kk * pt.s1 * d1;
  c.p2 = kk * pt.s2 * d2;
  c.pp = c.p1 + c.p2;
  c.pm = c.p1 - c.p2;
  const cplx q_pre = k / cplx(0.0, 8.0) * cplx(energy_ratio, g_minus);
  const cplx r_pre = cplx(0.0, 1.0) * std::conj(k) / 8.0 * cplx(energy_ratio, -g_minus);
  const double sum = d1 + d2 - 2.0 * d0;
  const double diff = d1 - d2;
  c.qp = q_pre * sum;
  c.qm = q_pre * diff;
  c.rp = r_pre * sum;
  c.rm = r_pre * diff;
  return c;
}

struct KappaTerms {
  ChannelPqr a, b;
  cplx e2;        // exp(2 i psi)
  double x = 0.0;  // X = 2p_a^+ + q_a^- e^{-2i psi} + r_a^- e^{2i psi}
  double y = 0.0;  // Y = 2p_b^+ + q_b^- e^{2i psi} + r_b^- e^{-2i psi}
  double omega_sq = 0.0;
  bessel::Orders jhat{};

  double l() const { return x / y; }
  double m() const { return y / x; }
};

namespace detail {

inline double channel_x(const ChannelPqr& c, cplx e2) {
  // r = conj(q), so the sum is real: 2p^+ + 2 Re(q^- e^{-2i psi})
  return (2.0 * c.pp + c.qm * std::conj(e2) + c.rm * e2).real();
}

}  // namespace detail

inline KappaTerms make_kappa_terms(const ChannelPqr& a, const ChannelPqr& b, double psi) {
  KappaTerms t;
  t.a = a;
  t.b = b;
  t.e2 = std::polar(1.0, 2.0 * psi);
  t.x = detail::channel_x(a, t.e2);
  t.y = detail::channel_x(b, std::conj(t.e2));
  t.omega_sq = 4.0 * t.x * t.y;
  t.jhat = bessel::reduced_j(t.omega_sq);
  return t;
}

inline KappaTerms kappa_terms(cplx k, const LambdaPoint& pt, const ChannelKernel& kernel, double psi) {
  const int a = kernel.a(), b = kernel.b();
  return make_kappa_terms(pqr_terms(k, pt, kernel.g_plus(a), kernel.g_minus(a), kernel.energy_ratio()),
                          pqr_terms(k, pt, kernel.g_plus(b), kernel.g_minus(b), kernel.energy_ratio()), psi);
}

namespace detail {

/// {E}_+ = E(a, b, X, Y, e2) + E(b, a, Y, X, conj e2); swapping (a,b) and
/// psi -> -psi exchanges X and Y, i.e. l <-> m.
template <class Expr>
cplx bracket_plus(const KappaTerms& t, Expr&& e) {
  return e(t.a, t.b, t.x, t.y, t.e2) + e(t.b, t.a, t.y, t.x, std::conj(t.e2));
}

}  // namespace detail

// -- coefficients of Jhat_1 ---------------------------------------------------

inline cplx kappa11(const KappaTerms& t) {
  return -9.0 / 8.0 * detail::bracket_plus(t, [](const ChannelPqr& a, const ChannelPqr&, double, double y, cplx) {
           return cplx(a.pp * y);
         });
}

inline cplx kappa31(const KappaTerms& t) {
  return detail::bracket_plus(t, [](const ChannelPqr& a, const ChannelPqr& b, double x, double y, cplx e2) {
    const cplx e2i = std::conj(e2);
    const cplx e4 = e2 * e2, e4i = e2i * e2i;
    const cplx first = -2.0 * ((a.pp * a.pp + a.qm * a.rm) * y + 2.0 * (8.0 * a.p0 * b.p0 + a.pp * b.pp + a.pm * b.pm) * x) *
                       (e2 * b.qm + e2i * b.rm);
    const cplx second = 2.0 * ((a.pp * b.pm + 4.0 * a.pm * b.pp) * y + b.pp * b.pm * x) * (e2i * a.qp + e2 * a.rp);
    const cplx inner = 16.0 * a.p0 * (2.0 * a.p0 * b.pp - 3.0 * b.p0 * a.pp) + 6.0 * a.pp * (a.qp * b.qp + a.rp * b.rp) +
                       2.0 * b.pp * (4.0 * a.qp * a.rp - a.qm * a.rm) - 4.0 * a.pm * (a.pp * b.pm - 2.0 * a.pm * b.pp) -
                       3.0 * a.pp * (a.qm * b.qm + a.rm * b.rm + a.pp * b.pp) -
                       0.5 * e4i * a.qm * (4.0 * a.pp * b.rm + 3.0 * b.pp * a.qm + 2.0 * e2i * a.qm * b.rm - 8.0 * e2 * a.rp * b.rp) -
                       0.5 * e4 * a.rm * (4.0 * a.pp * b.qm + 3.0 * b.pp * a.rm + 2.0 * e2 * b.qm * a.rm - 8.0 * e2i * a.qp * b.qp);
    return first + second + inner * y;
  });
}

// -- coefficients of Jhat_0 = J_0 ---------------------------------------------

inline cplx kappa21(const KappaTerms& t) {
  const auto& a = t.a;
  const auto& b = t.b;
  const cplx plain = -0.25 * (128.0 * a.p0 * b.p0 + 14.0 * a.pp * b.pp + 32.0 * a.pm * b.pm);
  const cplx mixed = detail::bracket_plus(t, [](const ChannelPqr& a, const ChannelPqr& b, double, double, cplx e2) {
    return 3.0 * e2 * (a.pm * b.qp + b.pm * a.rp);
  });
  const cplx quartic = detail::bracket_plus(t, [](const ChannelPqr& a, const ChannelPqr& b, double, double, cplx e2) {
    const cplx e2i = std::conj(e2);
    return e2i * e2i * a.qm * b.rm;
  });
  return plain - mixed - quartic;
}

namespace detail {

/// Shorthands shared by kappa41 and kappa42, named after the channel and the
/// phase attached to the q/r partner.
struct Kappa4Factors {
  cplx aq, ar, bq, br;  // p_a^+ + e^{-2i psi} q_a^-, p_a^+ + e^{2i psi} r_a^-, p_b^+ + e^{2i psi} q_b^-, p_b^+ + e^{-2i psi} r_b^-
  cplx ca, cr, dq, dr;  // p_a^- + e^{-2i psi} q_a^+, p_a^- + e^{2i psi} r_a^+, p_b^- + e^{2i psi} q_b^+, p_b^- + e^{-2i psi} r_b^+

  explicit Kappa4Factors(const KappaTerms& t) {
    const cplx e2 = t.e2, e2i = std::conj(t.e2);
    aq = t.a.pp + e2i * t.a.qm;
    ar = t.a.pp + e2 * t.a.rm;
    bq = t.b.pp + e2 * t.b.qm;
    br = t.b.pp + e2i * t.b.rm;
    ca = t.a.pm + e2i * t.a.qp;
    cr = t.a.pm + e2 * t.a.rp;
    dq = t.b.pm + e2 * t.b.qp;
    dr = t.b.pm + e2i * t.b.rp;
  }
};

}  // namespace detail

inline cplx kappa41(const KappaTerms& t) {
  const detail::Kappa4Factors f(t);
  const double pa0 = t.a.p0, pb0 = t.b.p0;
  return 32.0 * (2.0 * pa0 * pa0 * f.dq * f.dr + 2.0 * pb0 * pb0 * f.ca * f.cr + pa0 * pb0 * (f.aq * f.br + f.ar * f.bq)) +
         256.0 * pa0 * pa0 * pb0 * pb0 + f.aq * f.aq * f.br * f.br + f.ar * f.ar * f.bq * f.bq +
         4.0 * (f.aq * f.bq - 2.0 * f.ca * f.dq) * (f.ar * f.br - 2.0 * f.cr * f.dr);
}

// -- coefficients of Jhat_2 ---------------------------------------------------

inline cplx kappa22(const KappaTerms& t) {
  return -0.25 * detail::bracket_plus(t, [](const ChannelPqr& a, const ChannelPqr&, double, double y, cplx) {
           return (a.pp * a.pp - 4.0 * a.qm * a.rm) * (y * y);
         });
}

inline cplx kappa42(const KappaTerms& t) {
  const detail::Kappa4Factors f(t);
  const double m = t.y * t.y;  // m J_2 -> Y^2 Jhat_2
  const double l = t.x * t.x;
  return -32.0 * t.a.p0 * t.b.p0 * (f.aq * f.ar * m + f.bq * f.br * l) +
         2.0 * (f.aq * f.bq - 2.0 * f.ca * f.dq) * (f.ar * f.ar * m + f.br * f.br * l) +
         2.0 * (f.ar * f.br - 2.0 * f.cr * f.dr) * (f.aq * f.aq * m + f.bq * f.bq * l);
}

// -- coefficients of Jhat_3, Jhat_4 -------------------------------------------

inline cplx kappa32(const KappaTerms& t) {
  return detail::bracket_plus(t, [](const ChannelPqr& a, const ChannelPqr&, double, double y, cplx e2) {
    const cplx e2i = std::conj(e2);
    const cplx qr = a.qm * a.rm;
    const cplx body = (a.pp * a.pp + 2.0 * qr) + 1.5 * (e2i * e2i * a.qm * a.qm + e2 * e2 * a.rm * a.rm) +
                      (2.0 * a.pp * a.pp + qr) * (e2i * a.qm + e2 * a.rm);
    return a.pp * body * (y * y * y);
  });
}

inline cplx kappa43(const KappaTerms& t) {
  return detail::bracket_plus(t, [](const ChannelPqr& a, const ChannelPqr&, double, double y, cplx e2) {
    const cplx u = a.pp + std::conj(e2) * a.qm;
    const cplx v = a.pp + e2 * a.rm;
    const double y2 = y * y;
    return u * u * v * v * (y2 * y2);
  });
}

/// kappa_1 + kappa_2 + kappa_3 + kappa_4 at one point.
inline cplx kappa_sum(const KappaTerms& t) {
  const auto& j = t.jhat;
  return (kappa11(t) + kappa31(t)) * j[1] + (kappa21(t) + kappa41(t)) * j[0] + (kappa22(t) + kappa42(t)) * j[2] +
         kappa32(t) * j[3] + kappa43(t) * j[4];
}

inline cplx kappa_sum(cplx k, const LambdaPoint& pt, const ChannelKernel& kernel, double psi) {
  return kappa_sum(kappa_terms(k, pt, kernel, psi));
}

}  // namespace xsdist
