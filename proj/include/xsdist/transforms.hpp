#pragma once

// From characteristic functions to densities:
//   p(sigma)   = 1/(4 pi) int d^2k R(k) J0(sqrt(sigma) |k|)
//              = 1/2 int_0^inf kappa Rbar(kappa) J0(sqrt(sigma) kappa) dkappa,
//   P(x1, x2)  = 1/(4 pi^2) int dk1 dk2 e^{i(k1 x1 + k2 x2)} R(k1, k2),
//   p(sigma)   = int dx1 dx2 delta(sigma - x1^2 - x2^2) P(x1, x2),
// where Rbar is the angular average of R over the circle |k| = kappa.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xsdist/charfunc_goe.hpp"
#include "xsdist/charfunc_gue.hpp"
#include "xsdist/empirical.hpp"
#include "xsdist/error.hpp"
#include "xsdist/model.hpp"
#include "xsdist/parallel.hpp"
#include "xsdist/quadrature.hpp"

namespace xsdist {

struct CharfuncValue {
  cplx value;
  double error = 0.0;
  bool converged = true;
};

/// R at each wave vector for either symmetry class. Results do not depend on
/// `threads`. GOE diagnostics are merged into `diag` when given. A beta = 1
/// cubature that hits its evaluation cap is returned with converged = false
/// (the unitary integral throws QuadratureError instead).
inline std::vector<CharfuncValue> evaluate_charfunc(std::span<const WaveVector> ks, const ChannelKernel& kernel,
                                                    const QuadratureSpec& quad, int threads = 1,
                                                    GoeDiagnostics* diag = nullptr) {
  std::vector<CharfuncValue> out(ks.size());
  if (kernel.symmetry() == Symmetry::orthogonal) {
    auto r = charfunc_goe_grid(ks, kernel, quad, threads);
    for (std::size_t i = 0; i < ks.size(); ++i) out[i] = {r.value[i], r.error[i], r.converged};
    if (diag) diag->merge(r.diagnostics);
    return out;
  }
  // unitary: one radial integral per distinct |k|
  std::vector<double> radii;
  std::vector<std::size_t> index;
  for (const auto& k : ks) {
    const double r = std::hypot(k.k1, k.k2);
    auto it = std::find(radii.begin(), radii.end(), r);
    index.push_back(static_cast<std::size_t>(it - radii.begin()));
    if (it == radii.end()) radii.push_back(r);
  }
  std::vector<IntegrationResult> vals(radii.size());
  parallel_chunks(radii.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) vals[i] = charfunc_gue(radii[i], kernel, quad);
  });
  for (std::size_t i = 0; i < ks.size(); ++i) out[i] = {cplx(vals[index[i]].value, 0.0), vals[index[i]].error};
  return out;
}

// ---------------------------------------------------------------------------
// Angular average

namespace detail {

/// Trapezoid means over n_phi and n_phi/2 points of R on the circle of radius
/// kappa; the difference is the discretisation error estimate.
inline std::vector<WaveVector> circle_points(double kappa, int n_phi) {
  std::vector<WaveVector> pts;
  for (int j = 0; j < n_phi; ++j) {
    const double phi = 2.0 * std::numbers::pi * j / n_phi;
    pts.push_back({kappa * std::cos(phi), kappa * std::sin(phi)});
  }
  return pts;
}

}  // namespace detail

/// Rbar(kappa) for several radii at once (all circle points share one batch,
/// so symmetry-equivalent points are integrated once). For beta = 2 the value
/// is R(kappa) itself.
inline std::vector<IntegrationResult> angular_averages(std::span<const double> kappas, const ChannelKernel& kernel,
                                                       int n_phi, const QuadratureSpec& quad, int threads = 1,
                                                       GoeDiagnostics* diag = nullptr) {
  for (double k : kappas)
    if (!(k >= 0.0)) throw DomainError("kappa must be non-negative");
  std::vector<IntegrationResult> out(kappas.size());
  if (kernel.symmetry() == Symmetry::unitary) {
    std::vector<WaveVector> ks;
    for (double k : kappas) ks.push_back({k, 0.0});
    const auto v = evaluate_charfunc(ks, kernel, quad, threads);
    for (std::size_t i = 0; i < kappas.size(); ++i) out[i] = {v[i].value.real(), v[i].error, 0, v[i].converged};
    return out;
  }
  if (n_phi < 4 || n_phi % 2 != 0) throw DomainError("n_phi must be an even integer >= 4");
  std::vector<WaveVector> ks;
  for (double k : kappas) {
    const auto pts = detail::circle_points(k, n_phi);
    ks.insert(ks.end(), pts.begin(), pts.end());
  }
  const auto v = evaluate_charfunc(ks, kernel, quad, threads, diag);
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    double fine = 0.0, coarse = 0.0, err = 0.0;
    bool conv = true;
    for (int j = 0; j < n_phi; ++j) {
      const auto& r = v[i * static_cast<std::size_t>(n_phi) + static_cast<std::size_t>(j)];
      fine += r.value.real();
      if (j % 2 == 0) coarse += r.value.real();
      err = std::max(err, r.error);
      conv = conv && r.converged;
    }
    fine /= n_phi;
    coarse /= n_phi / 2;
    out[i] = {fine, err + std::abs(fine - coarse), 0, conv};
  }
  return out;
}

inline IntegrationResult angular_average(double kappa, const ChannelKernel& kernel, int n_phi,
                                         const QuadratureSpec& quad = {}, int threads = 1) {
  return angular_averages(std::span<const double>(&kappa, 1), kernel, n_phi, quad, threads).front();
}

// ---------------------------------------------------------------------------
// Tabulated Rbar

struct TableOptions {
  int n_phi = 16;
  double interp_tol = 1e-6;  // midpoint check of the cubic interpolant
  double decay_tol = 1e-5;   // |Rbar| below this over a whole block ends the table
  double kappa_cap = 400.0;
  double kappa_cap_scale = 0.0;  // > 0: also stop at kappa_cap_scale / sqrt(sigma estimate)
  int max_points = 4000;
  int block = 8;             // points added per extension step
  int threads = 1;
};

/// Rbar on an adaptive kappa-grid with local cubic (4-point Lagrange)
/// interpolation; zero beyond the last node once the table has decayed.
struct CharfuncTable {
  std::vector<double> kappa;
  std::vector<double> value;
  std::vector<double> error;
  double mean_sigma_estimate = 0.0;  // from the curvature of Rbar at 0
  bool decayed = false;              // |Rbar| fell below decay_tol
  bool bound_violated = false;       // |Rbar| > 1 beyond its error: not a characteristic function
  double max_abs_beyond_one = 0.0;   // largest |Rbar| seen when bound_violated
  bool quadrature_converged = true;  // every node met its tolerance
  double interp_tol = 0.0;
  GoeDiagnostics diagnostics;

  double kappa_end() const { return kappa.empty() ? 0.0 : kappa.back(); }

  double max_error() const {
    double e = 0.0;
    for (double x : error) e = std::max(e, x);
    return e;
  }

  double operator()(double k) const {
    k = std::abs(k);
    if (kappa.empty() || k > kappa.back()) return 0.0;
    const auto n = kappa.size();
    if (n < 4) throw DimensionError("characteristic-function table needs at least 4 nodes");
    auto hi = static_cast<std::size_t>(std::upper_bound(kappa.begin(), kappa.end(), k) - kappa.begin());
    hi = std::clamp<std::size_t>(hi, 1, n - 1);
    const std::size_t first = std::clamp<std::size_t>(hi < 2 ? 0 : hi - 2, 0, n - 4);
    double sum = 0.0;
    for (std::size_t i = first; i < first + 4; ++i) {
      double w = 1.0;
      for (std::size_t j = first; j < first + 4; ++j)
        if (j != i) w *= (k - kappa[j]) / (kappa[i] - kappa[j]);
      sum += w * value[i];
    }
    return sum;
  }
};

namespace detail {

inline void insert_nodes(CharfuncTable& t, std::span<const double> ks, std::span<const IntegrationResult> vals) {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const auto pos = static_cast<std::size_t>(std::lower_bound(t.kappa.begin(), t.kappa.end(), ks[i]) - t.kappa.begin());
    t.kappa.insert(t.kappa.begin() + static_cast<std::ptrdiff_t>(pos), ks[i]);
    t.value.insert(t.value.begin() + static_cast<std::ptrdiff_t>(pos), vals[i].value);
    t.error.insert(t.error.begin() + static_cast<std::ptrdiff_t>(pos), vals[i].error);
  }
}

}  // namespace detail

/// Builds the table in three stages: a scale estimate <sigma> = 4 (1 - Rbar(k_s)) / k_s^2
/// at small k_s, extension in blocks of spacing 0.25/sqrt(<sigma>) until Rbar
/// decays (or exceeds 1, or the cap is hit), then midpoint refinement until
/// the cubic interpolant predicts every midpoint to interp_tol.
inline CharfuncTable build_charfunc_table(const ChannelKernel& kernel, const QuadratureSpec& quad,
                                          const TableOptions& opt = {}) {
  CharfuncTable t;
  t.interp_tol = opt.interp_tol;
  auto eval = [&](std::span<const double> ks) {
    auto r = angular_averages(ks, kernel, opt.n_phi, quad, opt.threads, &t.diagnostics);
    for (const auto& v : r) t.quadrature_converged = t.quadrature_converged && v.converged;
    return r;
  };
  const double k_s = 0.05;
  const double r_s = eval(std::span<const double>(&k_s, 1)).front().value;
  t.mean_sigma_estimate = 4.0 * (1.0 - r_s) / (k_s * k_s);
  if (!(t.mean_sigma_estimate > 0.0)) throw DomainError("characteristic function has no positive curvature at 0");
  const double h = 0.25 / std::sqrt(t.mean_sigma_estimate);
  const double cap = opt.kappa_cap_scale > 0.0
                         ? std::min(opt.kappa_cap, opt.kappa_cap_scale / std::sqrt(t.mean_sigma_estimate))
                         : opt.kappa_cap;

  // extension
  double next = 0.0;
  for (;;) {
    std::vector<double> ks;
    for (int i = 0; i < opt.block && next <= cap; ++i, next += h) ks.push_back(next);
    if (ks.empty()) break;
    const auto vals = eval(ks);
    detail::insert_nodes(t, ks, vals);
    bool all_small = true;
    for (const auto& v : vals) {
      all_small = all_small && std::abs(v.value) < opt.decay_tol;
      if (std::abs(v.value) > 1.0 + 10.0 * v.error + opt.interp_tol) {
        t.bound_violated = true;
        t.max_abs_beyond_one = std::max(t.max_abs_beyond_one, std::abs(v.value));
      }
    }
    if (all_small) {
      t.decayed = true;
      break;
    }
    if (t.bound_violated || static_cast<int>(t.kappa.size()) >= opt.max_points) break;
  }

  // refinement: check each interval's midpoint against the interpolant
  // (pointless once the bound is violated: no density exists to resolve)
  std::vector<std::pair<double, double>> pending;
  if (t.bound_violated) return t;
  for (std::size_t i = 0; i + 1 < t.kappa.size(); ++i) pending.emplace_back(t.kappa[i], t.kappa[i + 1]);
  while (!pending.empty() && static_cast<int>(t.kappa.size()) < opt.max_points) {
    std::vector<double> mids;
    std::vector<double> predicted;
    for (const auto& [a, b] : pending) {
      mids.push_back(0.5 * (a + b));
      predicted.push_back(t(mids.back()));
    }
    const auto vals = eval(mids);
    std::vector<std::pair<double, double>> next_pending;
    for (std::size_t i = 0; i < mids.size(); ++i) {
      // quadrature noise in the new value cannot be resolved by refinement
      if (std::abs(vals[i].value - predicted[i]) > opt.interp_tol + 2.0 * vals[i].error) {
        next_pending.emplace_back(pending[i].first, mids[i]);
        next_pending.emplace_back(mids[i], pending[i].second);
      }
    }
    detail::insert_nodes(t, mids, vals);
    pending = std::move(next_pending);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Curves

struct CurveMeta {
  std::string config_hash;
  QuadratureSpec quad;
  double max_error = 0.0;
  std::vector<std::pair<std::string, std::string>> notes;
};

struct DistributionCurve {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> errors;
  double mean = 0.0;
  double norm = 0.0;
  double p0 = 0.0;  // density extrapolated to the left end point 0
  bool converged = true;
  CurveMeta meta;
};

/// Quadratic through the three smallest grid points, evaluated at 0.
inline double extrapolate_to_zero(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 3 || y.size() < 3) throw DimensionError("need three points to extrapolate");
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    double w = 1.0;
    for (int j = 0; j < 3; ++j)
      if (j != i) w *= (0.0 - x[j]) / (x[i] - x[j]);
    s += w * y[i];
  }
  return s;
}

/// Integral of tabulated f over [x_0, x_n] by composite Simpson on
/// consecutive interval pairs (non-uniform form), trapezoid for a leftover.
inline double integrate_samples(std::span<const double> x, std::span<const double> f) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double s = 0.0;
  std::size_t i = 0;
  for (; i + 2 < n; i += 2) {
    const double h0 = x[i + 1] - x[i], h1 = x[i + 2] - x[i + 1];
    const double hs = h0 + h1;
    s += hs / 6.0 * ((2.0 - h1 / h0) * f[i] + hs * hs / (h0 * h1) * f[i + 1] + (2.0 - h0 / h1) * f[i + 2]);
  }
  if (i + 1 < n) s += 0.5 * (x[i + 1] - x[i]) * (f[i] + f[i + 1]);
  return s;
}

/// Fills p0, norm and mean; the density is extended to 0 by extrapolation.
inline void finalize_curve(DistributionCurve& c) {
  if (c.grid.size() < 3) throw DimensionError("a distribution curve needs at least 3 points");
  for (std::size_t i = 1; i < c.grid.size(); ++i)
    if (!(c.grid[i] > c.grid[i - 1])) throw DomainError("curve grid must be strictly increasing");
  if (c.grid.front() < 0.0) throw DomainError("curve grid must be non-negative");
  c.p0 = extrapolate_to_zero(c.grid, c.values);
  std::vector<double> x, f, xf;
  if (c.grid.front() > 0.0) {
    x.push_back(0.0);
    f.push_back(c.p0);
  }
  x.insert(x.end(), c.grid.begin(), c.grid.end());
  f.insert(f.end(), c.values.begin(), c.values.end());
  for (std::size_t i = 0; i < x.size(); ++i) xf.push_back(x[i] * f[i]);
  c.norm = integrate_samples(x, f);
  c.mean = integrate_samples(x, xf);
}

/// Uniform grid of n points on (0, upper].
inline std::vector<double> open_uniform_grid(double upper, int n) {
  if (!(upper > 0.0) || n < 3) throw DomainError("grid needs upper > 0 and at least 3 points");
  std::vector<double> g;
  for (int i = 1; i <= n; ++i) g.push_back(upper * i / n);
  return g;
}

/// p(sigma) = 1/2 int_0^inf kappa Rbar(kappa) J0(sqrt(sigma) kappa) dkappa from a table.
inline DistributionCurve pdf_sigma(const CharfuncTable& table, std::span<const double> sigma_grid,
                                   const QuadratureSpec& quad = {}, int threads = 1) {
  for (double s : sigma_grid)
    if (!(s > 0.0)) throw DomainError("sigma grid must exclude 0 (p(0) is extrapolated)");
  DistributionCurve c;
  c.grid.assign(sigma_grid.begin(), sigma_grid.end());
  c.values.resize(c.grid.size());
  c.errors.resize(c.grid.size());
  c.meta.quad = quad;
  const double kend = table.kappa_end();
  // error propagated from Rbar: 1/2 int_0^kend kappa |dR| dkappa
  const double table_err = 0.25 * kend * kend * (table.max_error() + table.interp_tol);
  std::vector<char> ok(c.grid.size(), 1);
  parallel_chunks(c.grid.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto f = [&](double k) { return k <= kend ? k * table(k) : 0.0; };
      const auto r = quad::integrate_j0_oscillatory(f, std::sqrt(c.grid[i]), quad.abs_tol, quad.rel_tol);
      c.values[i] = 0.5 * r.value;
      c.errors[i] = 0.5 * r.error + table_err;
      ok[i] = r.converged ? 1 : 0;
    }
  });
  c.converged = table.decayed && !table.bound_violated && table.quadrature_converged && std::all_of(ok.begin(), ok.end(), [](char v) { return v != 0; });
  for (double e : c.errors) c.meta.max_error = std::max(c.meta.max_error, e);
  if (!table.decayed) c.meta.notes.emplace_back("charfunc_table", "did not decay; transform truncated");
  if (table.bound_violated)
    c.meta.notes.emplace_back("charfunc_bound", "|Rbar| reached " + std::to_string(table.max_abs_beyond_one));
  finalize_curve(c);
  return c;
}

/// ptilde(y) = <sigma> p(<sigma> y).
inline DistributionCurve normalize_to_mean(const DistributionCurve& c) {
  if (!(c.mean > 0.0)) throw DomainError("cannot normalise a curve with non-positive mean");
  DistributionCurve out = c;
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    out.grid[i] = c.grid[i] / c.mean;
    out.values[i] = c.values[i] * c.mean;
    out.errors[i] = c.errors[i] * c.mean;
  }
  out.meta.max_error = c.meta.max_error * c.mean;
  finalize_curve(out);
  return out;
}

/// ptilde on the uniform grid (0, y_max]. <sigma> comes from a first pass
/// over (0, max(y_max, 15) * sigma_est], then p is evaluated at <sigma> y.
inline DistributionCurve pdf_normalized(const CharfuncTable& table, double y_max, int n_points,
                                        const QuadratureSpec& quad = {}, int threads = 1) {
  const double reach = std::max(y_max, 15.0) * table.mean_sigma_estimate;
  const auto coarse = pdf_sigma(table, open_uniform_grid(reach, 600), quad, threads);
  if (!(coarse.mean > 0.0))
    throw DomainError("density has non-positive mean " + std::to_string(coarse.mean) + " (norm " +
                      std::to_string(coarse.norm) + "); the characteristic-function table is not a valid distribution");
  auto grid = open_uniform_grid(y_max * coarse.mean, n_points);
  auto fine = pdf_sigma(table, grid, quad, threads);
  fine.mean = coarse.mean;
  fine.norm = coarse.norm;
  auto out = normalize_to_mean(fine);
  out.meta.notes.emplace_back("mean_sigma", std::to_string(coarse.mean));
  out.meta.notes.emplace_back("norm_sigma", std::to_string(coarse.norm));
  return out;
}

/// Linear interpolation of a curve (p0 at 0, zero beyond the grid).
inline double curve_at(const DistributionCurve& c, double x) {
  if (x <= 0.0) return c.p0;
  if (x >= c.grid.back()) return x == c.grid.back() ? c.values.back() : 0.0;
  auto it = std::upper_bound(c.grid.begin(), c.grid.end(), x);
  const auto i = static_cast<std::size_t>(it - c.grid.begin());
  const double x0 = i == 0 ? 0.0 : c.grid[i - 1];
  const double y0 = i == 0 ? c.p0 : c.values[i - 1];
  return y0 + (c.values[i] - y0) * (x - x0) / (c.grid[i] - x0);
}

// ---------------------------------------------------------------------------
// Joint density

struct JointDensityGrid {
  std::vector<double> x1, x2;
  std::vector<double> values;  // row-major: values[i1 * x2.size() + i2]
  double norm = 0.0;
  double max_imag_residue = 0.0;
  double error = 0.0;  // truncation + R-error estimate, uniform over the grid
  bool converged = true;
  // k-grid used by the transform and the section R(k1, 0) on it
  std::vector<double> k_axis;
  std::vector<cplx> r_section;
  CurveMeta meta;

  double at(std::size_t i1, std::size_t i2) const { return values[i1 * x2.size() + i2]; }
};

struct JpdfOptions {
  double k_extent = 0.0;  // 0: where the table falls below 1e-4
  double dk = 0.0;        // 0: pi / (4 max|x|)
  int threads = 1;
};

/// Weights of the trapezoid rule on a uniform grid.
inline std::vector<double> trapezoid_weights(std::size_t n, double h) {
  std::vector<double> w(n, h);
  if (n > 0) {
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
  return w;
}

/// P(x1, x2) by trapezoid quadrature of the inverse Fourier integral on a
/// square k-grid. For beta = 2 the grid values come from the radial table;
/// for beta = 1 R is integrated at every grid point (one per symmetry orbit).
inline JointDensityGrid jpdf(const ChannelKernel& kernel, const CharfuncTable& table, std::span<const double> x1,
                             std::span<const double> x2, const QuadratureSpec& quad = {}, const JpdfOptions& opt = {}) {
  if (x1.empty() || x2.empty()) throw DimensionError("empty x grid");
  double xmax = 0.0;
  for (double x : x1) xmax = std::max(xmax, std::abs(x));
  for (double x : x2) xmax = std::max(xmax, std::abs(x));
  if (!(xmax > 0.0)) throw DomainError("x grid must extend beyond 0");
  JointDensityGrid g;
  g.x1.assign(x1.begin(), x1.end());
  g.x2.assign(x2.begin(), x2.end());
  g.meta.quad = quad;

  double extent = opt.k_extent;
  if (extent <= 0.0) {
    extent = table.kappa_end();
    for (std::size_t i = table.kappa.size(); i-- > 0;)
      if (std::abs(table.value[i]) >= 1e-4) {
        extent = i + 1 < table.kappa.size() ? table.kappa[i + 1] : table.kappa[i];
        break;
      }
    if (!table.decayed || table.bound_violated) g.converged = false;
  }
  const double dk_max = opt.dk > 0.0 ? opt.dk : std::numbers::pi / (4.0 * xmax);
  const int half = static_cast<int>(std::ceil(extent / dk_max));
  const double dk = extent / half;
  const auto nk = static_cast<std::size_t>(2 * half + 1);
  for (int i = -half; i <= half; ++i) g.k_axis.push_back(dk * i);

  std::vector<cplx> r(nk * nk);
  double r_err = 0.0;
  if (kernel.symmetry() == Symmetry::unitary) {
    for (std::size_t i = 0; i < nk; ++i)
      for (std::size_t j = 0; j < nk; ++j) r[i * nk + j] = table(std::hypot(g.k_axis[i], g.k_axis[j]));
    r_err = table.max_error();
  } else {
    std::vector<WaveVector> ks;
    for (std::size_t i = 0; i < nk; ++i)
      for (std::size_t j = 0; j < nk; ++j) ks.push_back({g.k_axis[i], g.k_axis[j]});
    const auto v = evaluate_charfunc(ks, kernel, quad, opt.threads);
    for (std::size_t i = 0; i < v.size(); ++i) {
      r[i] = v[i].value;
      r_err = std::max(r_err, v[i].error);
      g.converged = g.converged && v[i].converged;
    }
  }
  g.r_section.resize(nk);
  for (std::size_t i = 0; i < nk; ++i) g.r_section[i] = r[i * nk + static_cast<std::size_t>(half)];

  // separable sum: P = 1/(4 pi^2) sum_k1 w e^{i k1 x1} sum_k2 w e^{i k2 x2} R
  const auto w = trapezoid_weights(nk, dk);
  const std::size_t n1 = x1.size(), n2 = x2.size();
  std::vector<cplx> inner(nk * n2);  // [k1][x2]
  parallel_chunks(nk, opt.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t b = 0; b < n2; ++b) {
        cplx s{0.0, 0.0};
        for (std::size_t j = 0; j < nk; ++j) s += w[j] * std::polar(1.0, g.k_axis[j] * x2[b]) * r[i * nk + j];
        inner[i * n2 + b] = s;
      }
  });
  g.values.resize(n1 * n2);
  std::vector<double> imag(n1 * n2);
  parallel_chunks(n1, opt.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a)
      for (std::size_t b = 0; b < n2; ++b) {
        cplx s{0.0, 0.0};
        for (std::size_t i = 0; i < nk; ++i) s += w[i] * std::polar(1.0, g.k_axis[i] * x1[a]) * inner[i * n2 + b];
        s /= 4.0 * std::numbers::pi * std::numbers::pi;
        g.values[a * n2 + b] = s.real();
        imag[a * n2 + b] = std::abs(s.imag());
      }
  });
  for (double v : imag) g.max_imag_residue = std::max(g.max_imag_residue, v);
  g.error = r_err * (2.0 * extent) * (2.0 * extent) / (4.0 * std::numbers::pi * std::numbers::pi);
  g.meta.max_error = g.error;

  // mass by 2D trapezoid over the (possibly non-uniform) x grids
  std::vector<double> row(n2), col(n1);
  for (std::size_t a = 0; a < n1; ++a) {
    for (std::size_t b = 0; b < n2; ++b) row[b] = g.values[a * n2 + b];
    col[a] = n2 > 1 ? integrate_samples(g.x2, row) : row[0];
  }
  g.norm = n1 > 1 ? integrate_samples(g.x1, col) : col[0];
  return g;
}

/// Marginal int P(x1, x2) dx2 at each x1.
inline std::vector<double> jpdf_marginal_x1(const JointDensityGrid& g) {
  std::vector<double> out, row(g.x2.size());
  for (std::size_t a = 0; a < g.x1.size(); ++a) {
    for (std::size_t b = 0; b < g.x2.size(); ++b) row[b] = g.at(a, b);
    out.push_back(integrate_samples(g.x2, row));
  }
  return out;
}

/// 1/(2 pi) int e^{i k x} f(k) dk by trapezoid on a uniform k grid (real part).
inline std::vector<double> inverse_fourier_1d(std::span<const double> k, std::span<const cplx> f,
                                              std::span<const double> x) {
  if (k.size() < 2 || k.size() != f.size()) throw DimensionError("k grid and values must match");
  const auto w = trapezoid_weights(k.size(), k[1] - k[0]);
  std::vector<double> out;
  for (double xv : x) {
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < k.size(); ++i) s += w[i] * std::polar(1.0, k[i] * xv) * f[i];
    out.push_back(s.real() / (2.0 * std::numbers::pi));
  }
  return out;
}

/// Bilinear interpolation of P; throws DomainError outside the grid.
inline double jpdf_at(const JointDensityGrid& g, double x1, double x2) {
  auto locate = [](const std::vector<double>& axis, double x) {
    if (x < axis.front() || x > axis.back()) throw DomainError("point outside the joint-density grid");
    auto i = static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), x) - axis.begin());
    i = std::clamp<std::size_t>(i, 1, axis.size() - 1);
    return std::pair{i - 1, (x - axis[i - 1]) / (axis[i] - axis[i - 1])};
  };
  const auto [i, tx] = locate(g.x1, x1);
  const auto [j, ty] = locate(g.x2, x2);
  return (1 - tx) * (1 - ty) * g.at(i, j) + tx * (1 - ty) * g.at(i + 1, j) + (1 - tx) * ty * g.at(i, j + 1) +
         tx * ty * g.at(i + 1, j + 1);
}

/// p(sigma) = 1/2 int_0^{2 pi} P(sqrt(sigma) cos t, sqrt(sigma) sin t) dt.
inline DistributionCurve pdf_from_jpdf(const JointDensityGrid& g, std::span<const double> sigma_grid,
                                       int n_theta = 512) {
  DistributionCurve c;
  const double reach = std::min({-g.x1.front(), g.x1.back(), -g.x2.front(), g.x2.back()});
  for (double s : sigma_grid) {
    if (!(s > 0.0)) throw DomainError("sigma grid must exclude 0");
    if (std::sqrt(s) > reach) throw DomainError("circle of radius sqrt(sigma) leaves the joint-density grid");
    const double r = std::sqrt(s);
    double sum = 0.0;
    for (int j = 0; j < n_theta; ++j) {
      const double t = 2.0 * std::numbers::pi * j / n_theta;
      sum += jpdf_at(g, r * std::cos(t), r * std::sin(t));
    }
    c.grid.push_back(s);
    c.values.push_back(std::numbers::pi * sum / n_theta);
    c.errors.push_back(std::numbers::pi * g.error);
  }
  c.converged = g.converged;
  c.meta = g.meta;
  c.meta.max_error = std::numbers::pi * g.error;
  finalize_curve(c);
  return c;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_meta(std::ostream& os, const CurveMeta& m) {
  os << "# config_hash=" << m.config_hash << "\n";
  os << "# rel_tol=" << m.quad.rel_tol << " abs_tol=" << m.quad.abs_tol << " max_subdivisions=" << m.quad.max_subdivisions
     << " n_psi=" << m.quad.n_psi << "\n";
  os << "# max_error=" << m.max_error << "\n";
  for (const auto& [k, v] : m.notes) os << "# " << k << "=" << v << "\n";
}

/// Columns: x, density, error. Header comments carry norm, mean and p(0).
inline void write_curve_csv(std::ostream& os, const DistributionCurve& c, const std::string& x_name = "sigma") {
  os.precision(17);
  write_meta(os, c.meta);
  os << "# norm=" << c.norm << " mean=" << c.mean << " p0=" << c.p0 << " converged=" << (c.converged ? 1 : 0) << "\n";
  os << x_name << ",density,error\n";
  for (std::size_t i = 0; i < c.grid.size(); ++i) os << c.grid[i] << "," << c.values[i] << "," << c.errors[i] << "\n";
}

/// Long form: x1, x2, density.
inline void write_grid_csv(std::ostream& os, const JointDensityGrid& g) {
  os.precision(17);
  write_meta(os, g.meta);
  os << "# norm=" << g.norm << " max_imag_residue=" << g.max_imag_residue << " converged=" << (g.converged ? 1 : 0)
     << "\n";
  os << "x1,x2,density\n";
  for (std::size_t a = 0; a < g.x1.size(); ++a)
    for (std::size_t b = 0; b < g.x2.size(); ++b) os << g.x1[a] << "," << g.x2[b] << "," << g.at(a, b) << "\n";
}

}  // namespace xsdist
