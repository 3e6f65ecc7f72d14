#pragma once

// Characteristic function of S_ab for the unitary class:
//   R(k) = 1 - int_1^inf dl1 int_-1^1 dl2 |k|^2 / (4 (l1-l2)^2) F_U(l1,l2)
//                (t_a1 t_b1 + t_a2 t_b2) J0(|k| sqrt(t_a1 t_b1))
// with t_c^j = sqrt|l_j^2-1| / (g_c^+ + l_j) and F_U = prod_c (g_c^+ + l2)/(g_c^+ + l1).
//
// J0 depends on l1 only, so the l2-integral is a k-independent radial
// weight h(u) (l1 = cosh u); R = 1 - |k|^2/4 int_0^umax h(u) J0(|k| sqrt(s1(u))) du.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "xsdist/bessel.hpp"
#include "xsdist/error.hpp"
#include "xsdist/model.hpp"
#include "xsdist/quadrature.hpp"

namespace xsdist {

/// prod_c (g_c^+ + l2) / (g_c^+ + l1)
inline double channel_factor_unitary(double lambda1, double lambda2, const ChannelKernel& kernel) {
  double f = 1.0;
  for (double g : kernel.g_plus()) f *= (g + lambda2) / (g + lambda1);
  return f;
}

/// t_c^j = sqrt|l^2 - 1| / (g_c^+ + l)
inline double channel_amplitude(double lambda, double g_plus) {
  return std::sqrt(std::abs(lambda * lambda - 1.0)) / (g_plus + lambda);
}

/// Smallest u with prod_c (g_c^+ + 1)/(g_c^+ + cosh u) below 1e-2 * abs_tol,
/// capped at quad.u_max. Used for both symmetry classes.
inline double truncation_u(const ChannelKernel& kernel, const QuadratureSpec& quad, double lambda0 = 1.0) {
  const double target = 1e-2 * quad.abs_tol;
  auto bound = [&](double u) {
    double f = 1.0;
    for (double g : kernel.g_plus()) f *= (g + lambda0) / (g + std::cosh(u));
    return f;
  };
  double lo = 0.0, hi = 1.0;
  while (hi < quad.u_max && bound(hi) > target) hi *= 2.0;
  if (hi >= quad.u_max) return quad.u_max;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (bound(mid) > target ? lo : hi) = mid;
  }
  return hi;
}

class GueRadialWeight {
public:
  GueRadialWeight(const ChannelKernel& kernel, const QuadratureSpec& quad) : kernel_(kernel), quad_(quad) {
    if (kernel.symmetry() != Symmetry::unitary) throw DomainError("unitary characteristic function needs a beta=2 kernel");
    quad.validate();
    u_max_ = truncation_u(kernel, quad);
  }

  double u_max() const { return u_max_; }

  /// s1(u) = t_a^1 t_b^1 at l1 = cosh u; increases from 0 to 1.
  double s1(double u) const {
    const double l1 = std::cosh(u);
    return channel_amplitude(l1, kernel_.g_plus(kernel_.a())) * channel_amplitude(l1, kernel_.g_plus(kernel_.b()));
  }

  /// h(u) = sinh u int_-1^1 dl2 F_U (s1 + s2(l2)) / (l1 - l2)^2, evaluated in
  /// w = log(l1 - l2) so the near-corner peak of width l1-1 is resolved.
  IntegrationResult h(double u) const {
    if (u <= 0.0) return {};
    const double l1m1 = 2.0 * std::sinh(0.5 * u) * std::sinh(0.5 * u);  // cosh u - 1 without cancellation
    const double l1 = 1.0 + l1m1;
    const double s1v = s1(u);
    const double ga = kernel_.g_plus(kernel_.a());
    const double gb = kernel_.g_plus(kernel_.b());
    auto f = [&](double w) {
      const double y = std::exp(w);    // l1 - l2
      const double one_minus = y - l1m1;  // 1 - l2
      const double l2 = 1.0 - one_minus;
      const double s2 = one_minus * (2.0 - one_minus) / ((ga + l2) * (gb + l2));
      double fu = 1.0;
      for (double g : kernel_.g_plus()) fu *= (g + l2) / (g + l1);
      return fu * (s1v + s2) / y;  // dl2 / (l1-l2)^2 = dw / y
    };
    const double w_lo = std::log(l1m1);
    const double w_hi = std::log(l1m1 + 2.0);
    std::vector<double> breaks;
    for (double w = w_lo + 2.0; w < w_hi; w += 2.0) breaks.push_back(w);
    auto r = quad::integrate(f, w_lo, w_hi, 1e-3 * quad_.abs_tol, 1e-2 * quad_.rel_tol, quad_.max_subdivisions, breaks);
    const double sh = std::sinh(u);
    r.value *= sh;
    r.error *= sh;
    return r;
  }

  /// u where |k| sqrt(s1(u)) equals `target` (bisection; s1 is monotone).
  double u_at_argument(double k_mod, double target) const {
    double lo = 0.0, hi = u_max_;
    if (k_mod * std::sqrt(s1(hi)) <= target) return hi;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (k_mod * std::sqrt(s1(mid)) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

private:
  const ChannelKernel& kernel_;
  QuadratureSpec quad_;
  double u_max_ = 0.0;
};

/// R(|k|) for beta = 2. Throws QuadratureError if the tolerances cannot be met.
inline IntegrationResult charfunc_gue(double k_mod, const ChannelKernel& kernel, const QuadratureSpec& quad = {}) {
  k_mod = std::abs(k_mod);
  GueRadialWeight weight(kernel, quad);
  if (k_mod == 0.0) return {1.0, 0.0, 0, true};
  const double scale = 0.25 * k_mod * k_mod;
  double inner_rel = 0.0;  // worst relative error of the radial weight
  long inner_evals = 0;
  auto f = [&](double u) {
    const auto h = weight.h(u);
    if (h.value != 0.0) inner_rel = std::max(inner_rel, h.error / std::abs(h.value));
    inner_evals += h.evaluations;
    return h.value * bessel::j0(k_mod * std::sqrt(weight.s1(u)));
  };
  // Split at the zeros of the Bessel argument and at a few geometric points
  // near the corner where h has a u log u onset.
  std::vector<double> breaks{1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 4.0};
  for (int n = 1;; ++n) {
    const double z = bessel::j0_zero(n);
    if (z >= k_mod) break;
    breaks.push_back(weight.u_at_argument(k_mod, z));
  }
  auto r = quad::integrate(f, 0.0, weight.u_max(), quad.abs_tol / scale, quad.rel_tol, quad.max_subdivisions, breaks);
  IntegrationResult out;
  out.value = 1.0 - scale * r.value;
  out.error = scale * (r.error + inner_rel * std::abs(r.value));
  out.evaluations = r.evaluations + inner_evals;
  out.converged = r.converged;
  if (!r.converged && out.error > std::max(quad.abs_tol, quad.rel_tol * std::abs(out.value)))
    throw QuadratureError("unitary characteristic function did not converge", out.value, out.error);
  return out;
}

/// Bivariate form for a uniform interface; depends on |k| only.
inline std::complex<double> charfunc_gue_bivariate(double k1, double k2, const ChannelKernel& kernel,
                                                   const QuadratureSpec& quad = {}) {
  return {charfunc_gue(std::hypot(k1, k2), kernel, quad).value, 0.0};
}

}  // namespace xsdist
