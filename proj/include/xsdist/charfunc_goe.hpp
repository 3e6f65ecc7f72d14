#pragma once

// Characteristic function of S_ab for the orthogonal class:
//   R(k) = 1 + 1/(8 pi) int_-1^1 dl0 int_1^inf dl1 int_1^inf dl2 int_0^2pi dpsi
//              J(l0,l1,l2) F_O(l0,l1,l2) (kappa_1 + ... + kappa_4)
// with J = (1-l0^2)|l1-l2| / (2 (l1^2-1)^{1/2} (l2^2-1)^{1/2} (l1-l0)^2 (l2-l0)^2)
// and F_O = prod_c (g_c^+ + l0) / ((g_c^+ + l1)^{1/2} (g_c^+ + l2)^{1/2}).
//
// Evaluation: l0 = cos t, l_j = cosh u_j (the square roots in J cancel
// against the substitution Jacobians); the integrand depends on psi only via
// e^{2i psi}, so the psi-integral is a trapezoid mean over one period pi.
// Exchanging l1 <-> l2 together with psi -> psi + pi/2 leaves the integrand
// unchanged, so only u2 < u1 is integrated (u2 = s u1, s in [0,1]) and doubled.
// The remaining 3D integral is done by vector-valued adaptive cubature,
// one output component pair (Re, Im) per requested k.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "xsdist/charfunc_gue.hpp"
#include "xsdist/empirical.hpp"
#include "xsdist/error.hpp"
#include "xsdist/kappa.hpp"
#include "xsdist/model.hpp"
#include "xsdist/parallel.hpp"
#include "xsdist/quadrature.hpp"

namespace xsdist {

struct GoeDiagnostics {
  long points = 0;               // (t, u1, u2) points visited
  long psi_evaluations = 0;      // kappa_sum evaluations
  long psi_refinements = 0;      // points whose psi grid had to be doubled
  long psi_unconverged = 0;      // points still unconverged at max_psi
  long negative_omega_sq = 0;    // evaluations taking the I_n branch
  long omega_sq_above_one = 0;   // evaluations with omega^2 > 1
  int max_psi_used = 0;

  void merge(const GoeDiagnostics& o) {
    points += o.points;
    psi_evaluations += o.psi_evaluations;
    psi_refinements += o.psi_refinements;
    psi_unconverged += o.psi_unconverged;
    negative_omega_sq += o.negative_omega_sq;
    omega_sq_above_one += o.omega_sq_above_one;
    max_psi_used = std::max(max_psi_used, o.max_psi_used);
  }
};

/// Jacobian after substitution, J * sinh(u1) sinh(u2) sin(t):
///   sin^3 t |cosh u1 - cosh u2| / (2 (cosh u1 - cos t)^2 (cosh u2 - cos t)^2)
inline double goe_jacobian(double theta0, double u1, double u2) {
  const double h0 = 2.0 * std::pow(std::sin(0.5 * theta0), 2);  // 1 - cos t
  const double h1 = 2.0 * std::pow(std::sinh(0.5 * u1), 2);     // cosh u1 - 1
  const double h2 = 2.0 * std::pow(std::sinh(0.5 * u2), 2);
  const double d1 = h1 + h0;
  const double d2 = h2 + h0;
  const double diff = std::abs(2.0 * std::sinh(0.5 * (u1 + u2)) * std::sinh(0.5 * (u1 - u2)));
  const double s = std::sin(theta0);
  return s * s * s * diff / (2.0 * d1 * d1 * d2 * d2);
}

/// The unsubstituted Jacobian J(l0, l1, l2).
inline double goe_jacobian_lambda(double l0, double l1, double l2) {
  return (1.0 - l0 * l0) * std::abs(l1 - l2) /
         (2.0 * std::sqrt(l1 * l1 - 1.0) * std::sqrt(l2 * l2 - 1.0) * std::pow(l1 - l0, 2) * std::pow(l2 - l0, 2));
}

/// F_O = prod_c (g_c^+ + l0) / sqrt((g_c^+ + l1)(g_c^+ + l2))
inline double channel_factor_orthogonal(double l0, double l1, double l2, const ChannelKernel& kernel) {
  double f = 1.0;
  for (double g : kernel.g_plus()) f *= (g + l0) / std::sqrt((g + l1) * (g + l2));
  return f;
}

/// Mean of kappa_sum over psi in [0, pi) by trapezoid, doubling from
/// n_psi/2 points until the half-grid agrees with the full grid.
inline cplx psi_mean(const ChannelPqr& a, const ChannelPqr& b, const QuadratureSpec& quad, GoeDiagnostics& diag) {
  int n = std::max(2, quad.n_psi / 2);
  const int n_max = std::max(n, quad.max_psi / 2);
  std::vector<cplx> values;
  auto eval = [&](double psi) {
    const auto t = make_kappa_terms(a, b, psi);
    ++diag.psi_evaluations;
    if (t.omega_sq < 0.0) ++diag.negative_omega_sq;
    if (t.omega_sq > 1.0) ++diag.omega_sq_above_one;
    return kappa_sum(t);
  };
  cplx sum_even{0.0, 0.0}, sum_odd{0.0, 0.0};
  double abs_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const cplx v = eval(std::numbers::pi * i / n);
    abs_sum += std::abs(v);
    (i % 2 == 0 ? sum_even : sum_odd) += v;
  }
  bool refined = false;
  for (;;) {
    const cplx fine = (sum_even + sum_odd) / static_cast<double>(n);
    const cplx coarse = sum_even / static_cast<double>(n / 2);
    const double scale = abs_sum / n;
    if (std::abs(fine - coarse) <= std::max(1e-3 * quad.abs_tol, quad.rel_tol * scale)) {
      diag.max_psi_used = std::max(diag.max_psi_used, 2 * n);
      if (refined) ++diag.psi_refinements;
      return fine;
    }
    if (2 * n > n_max) {
      ++diag.psi_unconverged;
      diag.max_psi_used = std::max(diag.max_psi_used, 2 * n);
      return fine;
    }
    // New points interleave the existing grid; old points become the even set.
    refined = true;
    sum_even += sum_odd;
    sum_odd = {0.0, 0.0};
    for (int i = 0; i < n; ++i) {
      const cplx v = eval(std::numbers::pi * (2 * i + 1) / (2 * n));
      abs_sum += std::abs(v);
      sum_odd += v;
    }
    n *= 2;
  }
}

struct GoeCharfuncResult {
  std::vector<WaveVector> k;
  std::vector<cplx> value;
  std::vector<double> error;  // cubature error estimate on R (Re and Im combined)
  GoeDiagnostics diagnostics;
  long evaluations = 0;
  bool converged = true;
};

namespace detail {

inline GoeCharfuncResult charfunc_goe_serial(std::span<const WaveVector> ks, const ChannelKernel& kernel,
                                             const QuadratureSpec& quad) {
  GoeCharfuncResult res;
  res.k.assign(ks.begin(), ks.end());
  std::vector<cplx> kc;
  std::vector<std::size_t> active;  // k != 0
  for (std::size_t i = 0; i < ks.size(); ++i) {
    kc.emplace_back(ks[i].k1, ks[i].k2);
    if (kc.back() != cplx(0.0, 0.0)) active.push_back(i);
  }
  res.value.assign(ks.size(), cplx(1.0, 0.0));
  res.error.assign(ks.size(), 0.0);
  if (active.empty()) return res;

  // F_O decays like prod (g+1)/(g+cosh u) to the power 1/2 in each of u1, u2
  // and J adds 1/cosh u; truncate where the square of that bound is negligible.
  QuadratureSpec tail = quad;
  tail.abs_tol = quad.abs_tol * quad.abs_tol;
  const double u_max = truncation_u(kernel, tail);

  const int a = kernel.a(), b = kernel.b();
  const double ga = kernel.g_plus(a), gb = kernel.g_plus(b);
  const double ma = kernel.g_minus(a), mb = kernel.g_minus(b);
  const double eps = kernel.energy_ratio();
  GoeDiagnostics& diag = res.diagnostics;

  // Coordinates: theta0 = pi a, u1 = -log(1 - v), u2 = s u1. The log map
  // spreads the exponential tail of u1 over a bounded axis. The integrand is
  // singular along a = s = 0 (l0 = l2 = 1) like 1/|(a, s)|, so the (a, s)
  // square is split into two triangles with Duffy coordinates (rho, t):
  //   x[1] in [0, 1): s = rho, a = rho t;   x[1] in [1, 2]: a = rho, s = rho (t - 1).
  auto integrand = [&](std::span<const double> x, std::span<double> out) {
    const double rho = x[0], v = x[2];
    const bool lower_tri = x[1] < 1.0;
    const double t = lower_tri ? x[1] : x[1] - 1.0;
    const double a_coord = lower_tri ? rho * t : rho;
    const double s_coord = lower_tri ? rho : rho * t;
    const double theta0 = std::numbers::pi * a_coord, u1 = -std::log1p(-v), u2 = s_coord * u1;
    ++diag.points;
    const auto pt = LambdaPoint::from_angles(theta0, u1, u2);
    // doubled (l1<->l2 fold), times 2 pi (psi range) / (8 pi), du1 = dv/(1-v),
    // du2 = u1 ds, d theta0 = pi da, da ds = rho drho dt
    const double w = 0.5 * std::numbers::pi * rho * u1 / (1.0 - v) * goe_jacobian(theta0, u1, u2) *
                     channel_factor_orthogonal(pt.l0, pt.l1, pt.l2, kernel);
    for (std::size_t j = 0; j < active.size(); ++j) {
      const cplx k = kc[active[j]];
      cplx mean{0.0, 0.0};
      if (w != 0.0) mean = psi_mean(pqr_terms(k, pt, ga, ma, eps), pqr_terms(k, pt, gb, mb, eps), quad, diag);
      out[2 * j] = w * mean.real();
      out[2 * j + 1] = w * mean.imag();
    }
  };
  const double v_max = -std::expm1(-u_max);
  const std::array<quad::Region, 2> regions{quad::Region{{0.0, 0.0, 0.0}, {1.0, 1.0, v_max}},
                                            quad::Region{{0.0, 1.0, 0.0}, {1.0, 2.0, v_max}}};
  const long max_evals = static_cast<long>(quad.max_subdivisions) * 33;
  // Accuracy is judged on the complex value R = 1 + I per wave vector.
  auto accept = [&](std::span<const double> value, std::span<const double> error) {
    for (std::size_t j = 0; j < active.size(); ++j) {
      const double r_abs = std::abs(cplx(1.0 + value[2 * j], value[2 * j + 1]));
      if (std::hypot(error[2 * j], error[2 * j + 1]) > std::max(quad.abs_tol, quad.rel_tol * r_abs)) return false;
    }
    return true;
  };
  auto cub = quad::hcubature(integrand, 2 * active.size(), std::span<const quad::Region>(regions), accept, max_evals);
  res.evaluations = cub.evaluations;
  res.converged = cub.converged;
  for (std::size_t j = 0; j < active.size(); ++j) {
    const auto i = active[j];
    res.value[i] = cplx(1.0 + cub.value[2 * j], cub.value[2 * j + 1]);
    res.error[i] = std::hypot(cub.error[2 * j], cub.error[2 * j + 1]);
  }
  return res;
}

}  // namespace detail

/// R(k1, k2) for beta = 1 at every requested wave vector. k-points are split
/// into contiguous groups, one cubature per group; results do not depend on
/// the thread count (each k is integrated by its group's box sequence, and
/// groups are fixed by `group_size`).
inline GoeCharfuncResult charfunc_goe_batch(std::span<const WaveVector> ks, const ChannelKernel& kernel,
                                            const QuadratureSpec& quad = {}, int threads = 1,
                                            std::size_t group_size = 1) {
  if (kernel.symmetry() != Symmetry::orthogonal) throw DomainError("orthogonal characteristic function needs a beta=1 kernel");
  quad.validate();
  group_size = std::max<std::size_t>(1, group_size);
  const std::size_t groups = (ks.size() + group_size - 1) / group_size;
  std::vector<GoeCharfuncResult> parts(groups);
  parallel_chunks(groups, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t g = begin; g < end; ++g) {
      const std::size_t lo = g * group_size, hi = std::min(ks.size(), lo + group_size);
      parts[g] = detail::charfunc_goe_serial(ks.subspan(lo, hi - lo), kernel, quad);
    }
  });
  GoeCharfuncResult res;
  for (auto& p : parts) {
    res.k.insert(res.k.end(), p.k.begin(), p.k.end());
    res.value.insert(res.value.end(), p.value.begin(), p.value.end());
    res.error.insert(res.error.end(), p.error.begin(), p.error.end());
    res.diagnostics.merge(p.diagnostics);
    res.evaluations += p.evaluations;
    res.converged = res.converged && p.converged;
  }
  return res;
}

/// Representative of k under the exact symmetries of the beta = 1 integral:
/// R(-k) = R(k) always (psi -> psi + pi/2 flips q, r) and, at E = 0,
/// R(k1, -k2) = R(k1, k2) (H -> -H maps S to S*).
inline WaveVector canonical_wave_vector(WaveVector k, bool band_centre) {
  if (band_centre) return {std::abs(k.k1), std::abs(k.k2)};
  if (k.k1 < 0.0 || (k.k1 == 0.0 && k.k2 < 0.0)) return {-k.k1, -k.k2};
  return k;
}

/// R on an arbitrary set of wave vectors, integrating one representative per
/// symmetry orbit (one cubature each) and copying it to the other members.
inline GoeCharfuncResult charfunc_goe_grid(std::span<const WaveVector> ks, const ChannelKernel& kernel,
                                           const QuadratureSpec& quad = {}, int threads = 1) {
  const bool centre = kernel.energy_ratio() == 0.0;
  std::vector<WaveVector> unique;
  std::vector<std::size_t> index;
  for (const auto& k : ks) {
    const auto c = canonical_wave_vector(k, centre);
    auto it = std::find_if(unique.begin(), unique.end(), [&](const WaveVector& u) { return u.k1 == c.k1 && u.k2 == c.k2; });
    index.push_back(static_cast<std::size_t>(it - unique.begin()));
    if (it == unique.end()) unique.push_back(c);
  }
  auto r = charfunc_goe_batch(unique, kernel, quad, threads, 1);
  GoeCharfuncResult out;
  out.k.assign(ks.begin(), ks.end());
  for (auto i : index) {
    out.value.push_back(r.value[i]);
    out.error.push_back(r.error[i]);
  }
  out.diagnostics = r.diagnostics;
  out.evaluations = r.evaluations;
  out.converged = r.converged;
  return out;
}

struct ComplexIntegration {
  cplx value;
  double error = 0.0;
  GoeDiagnostics diagnostics;
};

/// Single-point R(k1, k2); throws QuadratureError if the cubature cannot
/// reach the tolerances.
inline ComplexIntegration charfunc_goe(double k1, double k2, const ChannelKernel& kernel, const QuadratureSpec& quad = {}) {
  const WaveVector k{k1, k2};
  auto r = charfunc_goe_batch(std::span<const WaveVector>(&k, 1), kernel, quad);
  if (!r.converged) throw QuadratureError("orthogonal characteristic function did not converge", r.value[0].real(), r.error[0]);
  return {r.value[0], r.error[0], r.diagnostics};
}

}  // namespace xsdist
