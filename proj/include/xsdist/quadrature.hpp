#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <vector>

#include "xsdist/bessel.hpp"
#include "xsdist/error.hpp"

namespace xsdist {

/// Numerical tolerances shared by the characteristic-function integrators.
struct QuadratureSpec {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  int max_subdivisions = 200000;
  double u_max = 40.0;  // cap for the cosh substitution
  int n_psi = 16;       // trapezoid points over [0, 2pi) before doubling
  int max_psi = 2048;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("tolerances must be positive");
    if (!(u_max > 0.0)) throw DomainError("u_max must be positive");
    if (n_psi < 4 || n_psi % 2 != 0) throw DomainError("n_psi must be an even integer >= 4");
    if (max_subdivisions < 1) throw DomainError("max_subdivisions must be positive");
  }
};

struct IntegrationResult {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
  bool converged = true;
};

namespace quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
inline Rule gauss_legendre(int n) {
  Rule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[static_cast<std::size_t>(i)] = -x;
    r.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    r.weights[static_cast<std::size_t>(i)] = w;
    r.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return r;
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gauss_kronrod_15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kKronrodNodes[static_cast<std::size_t>(j)];
    const double s = f(c - dx) + f(c + dx);
    kron += kKronrodWeights[static_cast<std::size_t>(j)] * s;
    if (j % 2 == 1) gauss += kGaussWeights[static_cast<std::size_t>(j / 2)] * s;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

/// Globally adaptive Gauss-Kronrod on [a, b]. `breakpoints` (inside (a,b))
/// seed the initial partition. Non-convergence is reported, not thrown.
template <class F>
IntegrationResult integrate(F&& f, double a, double b, double abs_tol, double rel_tol, int max_segments = 2000,
                            std::span<const double> breakpoints = {}) {
  std::priority_queue<Segment> heap;
  IntegrationResult out;
  std::vector<double> edges{a};
  for (double x : breakpoints)
    if (x > a && x < b) edges.push_back(x);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  double total = 0.0;
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (edges[i + 1] <= edges[i]) continue;
    auto s = gauss_kronrod_15(f, edges[i], edges[i + 1]);
    out.evaluations += 15;
    total += s.value;
    err += s.error;
    heap.push(s);
  }
  while (err > std::max(abs_tol, rel_tol * std::abs(total)) && static_cast<int>(heap.size()) < max_segments) {
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {  // interval exhausted by rounding
      heap.push(worst);
      break;
    }
    auto left = gauss_kronrod_15(f, worst.a, mid);
    auto right = gauss_kronrod_15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // recompute the sums to shed accumulated cancellation
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = err;
  out.converged = err <= std::max(abs_tol, rel_tol * std::abs(total));
  return out;
}

/// Euler (van Wijngaarden) transform of the partial sums of an alternating
/// series, applied through repeated averaging of the last terms.
inline double euler_accelerate(std::span<const double> partial_sums) {
  if (partial_sums.empty()) return 0.0;
  std::vector<double> s(partial_sums.begin(), partial_sums.end());
  while (s.size() > 1) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) s[i] = 0.5 * (s[i] + s[i + 1]);
    s.pop_back();
  }
  return s.front();
}

/// Integral over [0, inf) of f(x) J0(r x), integrating between consecutive
/// zeros of J0(r x) and accelerating the alternating tail. f must decay or
/// at least stay bounded so that the segment integrals alternate.
template <class F>
IntegrationResult integrate_j0_oscillatory(F&& f, double r, double abs_tol, double rel_tol, int max_zeros = 2000,
                                           int accel_window = 12) {
  IntegrationResult out;
  if (r <= 0.0) throw DomainError("Bessel scale must be positive");
  auto g = [&](double x) { return f(x) * bessel::j0(r * x); };
  double prev = 0.0;
  double sum = 0.0;
  std::vector<double> partial;
  double last_accel = std::numeric_limits<double>::quiet_NaN();
  for (int n = 1; n <= max_zeros; ++n) {
    const double next = bessel::j0_zero(n) / r;
    const auto seg = integrate(g, prev, next, 0.1 * abs_tol, 0.1 * rel_tol, 200);
    out.evaluations += seg.evaluations;
    out.error += seg.error;
    sum += seg.value;
    partial.push_back(sum);
    prev = next;
    if (partial.size() >= static_cast<std::size_t>(accel_window)) {
      const std::span<const double> tail(partial.end() - accel_window, partial.end());
      const double accel = euler_accelerate(tail);
      const double change = std::abs(accel - last_accel);
      last_accel = accel;
      if (change <= std::max(abs_tol, rel_tol * std::abs(accel))) {
        out.value = accel;
        out.error += change;
        return out;
      }
    }
  }
  out.value = std::isnan(last_accel) ? sum : last_accel;
  out.converged = false;
  return out;
}

/// Periodic trapezoid rule: mean of f over n equally spaced points of [0, period).
template <class F>
double periodic_mean(F&& f, int n, double period = 2.0 * std::numbers::pi) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += f(period * i / n);
  return s / n;
}

// ---------------------------------------------------------------------------
// h-adaptive cubature over an axis-aligned box with the degree-7 Genz-Malik
// rule and its embedded degree-5 rule for error estimation. The integrand is
// vector-valued: f(x, out) fills out[0..dim_out). Convergence requires every
// component to meet max(abs_tol, rel_tol*|I_j|).

struct CubatureResult {
  std::vector<double> value;
  std::vector<double> error;
  long evaluations = 0;
  int boxes = 0;
  bool converged = true;
};

namespace detail {

struct Box {
  std::vector<double> center;
  std::vector<double> half;
  std::vector<double> value;
  std::vector<double> error;
  double priority = 0.0;
  int split_dim = 0;
};

struct BoxOrder {
  bool operator()(const Box& a, const Box& b) const { return a.priority < b.priority; }
};

template <class F>
void genz_malik(F& f, Box& box, std::size_t dim_out, long& evals, std::vector<double>& scratch) {
  const std::size_t n = box.center.size();
  const double l2 = std::sqrt(9.0 / 70.0);
  const double l4 = std::sqrt(9.0 / 10.0);
  const double l5 = std::sqrt(9.0 / 19.0);
  const double dn = static_cast<double>(n);
  const double w1 = (12824.0 - 9120.0 * dn + 400.0 * dn * dn) / 19683.0;
  const double w2 = 980.0 / 6561.0;
  const double w3 = (1820.0 - 400.0 * dn) / 19683.0;
  const double w4 = 200.0 / 19683.0;
  const double w5 = 6859.0 / 19683.0 / std::ldexp(1.0, static_cast<int>(n));
  const double e1 = (729.0 - 950.0 * dn + 50.0 * dn * dn) / 729.0;
  const double e2 = 245.0 / 486.0;
  const double e3 = (265.0 - 100.0 * dn) / 1458.0;
  const double e4 = 25.0 / 729.0;

  std::vector<double> x(box.center);
  std::vector<double> f0(dim_out), s2(dim_out, 0.0), s3(dim_out, 0.0), s4(dim_out, 0.0), s5(dim_out, 0.0);
  std::vector<double> d2(n, 0.0);  // fourth-difference indicator per axis
  scratch.resize(dim_out);
  auto eval = [&](std::vector<double>& acc) {
    f(std::span<const double>(x), std::span<double>(scratch));
    ++evals;
    for (std::size_t j = 0; j < dim_out; ++j) acc[j] += scratch[j];
  };
  f(std::span<const double>(x), std::span<double>(f0));
  ++evals;
  std::vector<double> tmp2(dim_out), tmp3(dim_out);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(tmp2.begin(), tmp2.end(), 0.0);
    std::fill(tmp3.begin(), tmp3.end(), 0.0);
    x[i] = box.center[i] - l2 * box.half[i];
    eval(tmp2);
    x[i] = box.center[i] + l2 * box.half[i];
    eval(tmp2);
    x[i] = box.center[i] - l4 * box.half[i];
    eval(tmp3);
    x[i] = box.center[i] + l4 * box.half[i];
    eval(tmp3);
    x[i] = box.center[i];
    double diff = 0.0;
    for (std::size_t j = 0; j < dim_out; ++j) {
      s2[j] += tmp2[j];
      s3[j] += tmp3[j];
      diff += std::abs(tmp2[j] - 2.0 * f0[j] - (tmp3[j] - 2.0 * f0[j]) / 7.0);
    }
    d2[i] = diff;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      for (int si : {-1, 1}) {
        for (int sk : {-1, 1}) {
          x[i] = box.center[i] + si * l4 * box.half[i];
          x[k] = box.center[k] + sk * l4 * box.half[k];
          eval(s4);
        }
      }
      x[i] = box.center[i];
      x[k] = box.center[k];
    }
  }
  const std::size_t corners = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < corners; ++mask) {
    for (std::size_t i = 0; i < n; ++i) x[i] = box.center[i] + ((mask >> i) & 1U ? l5 : -l5) * box.half[i];
    eval(s5);
  }
  double vol = 1.0;
  for (double h : box.half) vol *= 2.0 * h;
  box.value.assign(dim_out, 0.0);
  box.error.assign(dim_out, 0.0);
  double worst = 0.0;
  for (std::size_t j = 0; j < dim_out; ++j) {
    const double r7 = vol * (w1 * f0[j] + w2 * s2[j] + w3 * s3[j] + w4 * s4[j] + w5 * s5[j]);
    const double r5 = vol * (e1 * f0[j] + e2 * s2[j] + e3 * s3[j] + e4 * s4[j]);
    box.value[j] = r7;
    box.error[j] = std::abs(r7 - r5);
    worst = std::max(worst, box.error[j]);
  }
  box.priority = worst;
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const bool tie = std::abs(d2[i] - d2[best]) <= 1e-10 * std::max(d2[i], d2[best]);
    if ((tie && box.half[i] > box.half[best]) || (!tie && d2[i] > d2[best])) best = i;
  }
  box.split_dim = static_cast<int>(best);
}

}  // namespace detail

/// Componentwise acceptance: every |error_j| <= max(abs_tol, rel_tol |value_j|).
struct ComponentwiseTolerance {
  double abs_tol, rel_tol;
  bool operator()(std::span<const double> value, std::span<const double> error) const {
    for (std::size_t j = 0; j < value.size(); ++j)
      if (error[j] > std::max(abs_tol, rel_tol * std::abs(value[j]))) return false;
    return true;
  }
};

struct Region {
  std::vector<double> lower, upper;
};

/// f(std::span<const double> x, std::span<double> out); `accept(value, error)`
/// decides convergence of the running totals. The integral is the sum over
/// `regions`, each seeding the box heap (useful when a change of variables
/// differs between pieces of the domain; f sees the region index via the
/// coordinates alone, so regions must not overlap).
template <class F, class Accept>
CubatureResult hcubature(F&& f, std::size_t dim_out, std::span<const Region> regions, Accept&& accept,
                         long max_evaluations) {
  if (regions.empty()) throw DimensionError("hcubature needs at least one region");
  const std::size_t n = regions.front().lower.size();
  CubatureResult res;
  std::vector<double> scratch;
  std::priority_queue<detail::Box, std::vector<detail::Box>, detail::BoxOrder> heap;
  std::vector<double> total(dim_out, 0.0), err(dim_out, 0.0);
  for (const auto& r : regions) {
    if (n < 2 || r.lower.size() != n || r.upper.size() != n)
      throw DimensionError("hcubature needs matching bounds of dimension >= 2");
    detail::Box root;
    for (std::size_t i = 0; i < n; ++i) {
      root.center.push_back(0.5 * (r.lower[i] + r.upper[i]));
      root.half.push_back(0.5 * (r.upper[i] - r.lower[i]));
    }
    detail::genz_malik(f, root, dim_out, res.evaluations, scratch);
    for (std::size_t j = 0; j < dim_out; ++j) {
      total[j] += root.value[j];
      err[j] += root.error[j];
    }
    heap.push(std::move(root));
  }
  auto done = [&] { return accept(std::span<const double>(total), std::span<const double>(err)); };
  while (!done()) {
    if (res.evaluations >= max_evaluations) {
      res.converged = false;
      break;
    }
    detail::Box box = heap.top();
    heap.pop();
    detail::Box lo = box, hi = box;
    const auto d = static_cast<std::size_t>(box.split_dim);
    lo.half[d] = hi.half[d] = 0.5 * box.half[d];
    lo.center[d] = box.center[d] - lo.half[d];
    hi.center[d] = box.center[d] + hi.half[d];
    detail::genz_malik(f, lo, dim_out, res.evaluations, scratch);
    detail::genz_malik(f, hi, dim_out, res.evaluations, scratch);
    for (std::size_t j = 0; j < dim_out; ++j) {
      total[j] += lo.value[j] + hi.value[j] - box.value[j];
      err[j] += lo.error[j] + hi.error[j] - box.error[j];
    }
    heap.push(std::move(lo));
    heap.push(std::move(hi));
  }
  res.boxes = static_cast<int>(heap.size());
  std::fill(total.begin(), total.end(), 0.0);
  std::fill(err.begin(), err.end(), 0.0);
  while (!heap.empty()) {
    const auto& b = heap.top();
    for (std::size_t j = 0; j < dim_out; ++j) {
      total[j] += b.value[j];
      err[j] += b.error[j];
    }
    heap.pop();
  }
  if (res.converged) res.converged = done();
  res.value = std::move(total);
  res.error = std::move(err);
  return res;
}

template <class F, class Accept>
CubatureResult hcubature(F&& f, std::size_t dim_out, std::span<const double> lower, std::span<const double> upper,
                         Accept&& accept, long max_evaluations) {
  const Region box{{lower.begin(), lower.end()}, {upper.begin(), upper.end()}};
  return hcubature(std::forward<F>(f), dim_out, std::span<const Region>(&box, 1), std::forward<Accept>(accept),
                   max_evaluations);
}

template <class F>
CubatureResult hcubature(F&& f, std::size_t dim_out, std::span<const double> lower, std::span<const double> upper,
                         double abs_tol, double rel_tol, long max_evaluations) {
  return hcubature(std::forward<F>(f), dim_out, lower, upper, ComponentwiseTolerance{abs_tol, rel_tol}, max_evaluations);
}

}  // namespace quad
}  // namespace xsdist
