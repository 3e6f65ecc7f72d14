#pragma once

// Data analysis: CSV ingestion, windowing, polynomial background removal,
// normalisation to the mean, histograms and goodness-of-fit against curves.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "xsdist/empirical.hpp"
#include "xsdist/error.hpp"
#include "xsdist/stats.hpp"
#include "xsdist/transforms.hpp"

namespace xsdist {

struct ExcitationSeries {
  std::vector<double> abscissa;
  std::vector<double> sigma;
  std::string label;

  std::size_t size() const { return abscissa.size(); }
};

struct SSampleSeries {
  std::vector<double> abscissa;
  std::vector<double> re, im;
  std::string label;

  std::size_t size() const { return abscissa.size(); }
};

enum class SeriesSchema { excitation, smatrix };

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_number(const std::string& cell, const std::string& column, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": column '" + column + "' is not a finite number: '" + cell + "'",
                     column, line);
  }
}

}  // namespace detail

/// Column names required by each schema.
inline std::vector<std::string> schema_columns(SeriesSchema s) {
  if (s == SeriesSchema::excitation) return {"E", "sigma"};
  return {"f", "Re_S", "Im_S"};
}

namespace detail {

/// Alternative header names, so `simulate` output loads as an smatrix series.
inline std::string column_alias(const std::string& c) {
  if (c == "f") return "index";
  if (c == "Re_S") return "Re_Sab";
  if (c == "Im_S") return "Im_Sab";
  return {};
}

}  // namespace detail

/// Reads a comma-separated file: '#' comment lines and blank lines are
/// skipped, the first other line is the header and must contain the schema's
/// columns (extra columns are ignored). Abscissae must strictly increase.
inline std::variant<ExcitationSeries, SSampleSeries> load_series(std::istream& in, SeriesSchema schema,
                                                                 const std::string& label = {}) {
  const auto cols = schema_columns(schema);
  std::vector<std::size_t> pos;
  std::vector<std::vector<double>> data(cols.size());
  std::vector<std::size_t> line_of_row;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = detail::split_csv(t);
    if (!have_header) {
      for (const auto& c : cols) {
        const auto alias = detail::column_alias(c);
        auto it = std::find_if(cells.begin(), cells.end(), [&](const std::string& h) { return h == c || (!alias.empty() && h == alias); });
        if (it == cells.end()) throw ParseError("line " + std::to_string(lineno) + ": header lacks column '" + c + "'", c, lineno);
        pos.push_back(static_cast<std::size_t>(it - cells.begin()));
      }
      width = cells.size();
      have_header = true;
      continue;
    }
    if (cells.size() != width)
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(width) + " fields, found " +
                           std::to_string(cells.size()),
                       {}, lineno);
    for (std::size_t j = 0; j < cols.size(); ++j) data[j].push_back(detail::parse_number(cells[pos[j]], cols[j], lineno));
    line_of_row.push_back(lineno);
  }
  if (!have_header) throw ParseError("missing header row");
  const auto& x = data[0];
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1]))
      throw ValidationError("row " + std::to_string(i + 1) + " (line " + std::to_string(line_of_row[i]) + "): abscissa " +
                                (x[i] == x[i - 1] ? "duplicates" : "is below") + " the previous row",
                            i + 1);
  if (schema == SeriesSchema::excitation) {
    for (std::size_t i = 0; i < data[1].size(); ++i)
      if (data[1][i] < 0.0)
        throw ValidationError("row " + std::to_string(i + 1) + " (line " + std::to_string(line_of_row[i]) +
                                  "): negative cross section",
                              i + 1);
    return ExcitationSeries{std::move(data[0]), std::move(data[1]), label};
  }
  return SSampleSeries{std::move(data[0]), std::move(data[1]), std::move(data[2]), label};
}

inline std::variant<ExcitationSeries, SSampleSeries> load_series(const std::string& path, SeriesSchema schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return load_series(in, schema, path);
}

// ---------------------------------------------------------------------------

template <class Series>
struct WindowSplit {
  std::vector<Series> windows;
  std::vector<std::size_t> empty;  // indices of windows without points
};

namespace detail {

inline void copy_point(const ExcitationSeries& s, std::size_t i, ExcitationSeries& out) {
  out.abscissa.push_back(s.abscissa[i]);
  out.sigma.push_back(s.sigma[i]);
}

inline void copy_point(const SSampleSeries& s, std::size_t i, SSampleSeries& out) {
  out.abscissa.push_back(s.abscissa[i]);
  out.re.push_back(s.re[i]);
  out.im.push_back(s.im[i]);
}

}  // namespace detail

/// Windows [x0 + i stride, x0 + i stride + width) for i = 0 .. ceil(span/stride) - 1,
/// x0 the first abscissa; the last window is closed on the right so the final
/// point is kept. stride <= 0 means stride = width.
template <class Series>
WindowSplit<Series> window_split(const Series& s, double width, double stride = 0.0) {
  if (!(width > 0.0)) throw DomainError("window width must be positive");
  if (stride <= 0.0) stride = width;
  WindowSplit<Series> out;
  if (s.size() == 0) return out;
  const double x0 = s.abscissa.front();
  const double span = s.abscissa.back() - x0;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(span / stride * (1.0 - 1e-12))));
  out.windows.resize(n);
  for (std::size_t w = 0; w < n; ++w) {
    const double lo = x0 + static_cast<double>(w) * stride;
    const double hi = lo + width;
    auto& win = out.windows[w];
    win.label = s.label + "[" + std::to_string(w) + "]";
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double x = s.abscissa[i];
      const bool inside = x >= lo && (x < hi || (w + 1 == n && x <= hi) || (w + 1 == n && i + 1 == s.size()));
      if (inside) detail::copy_point(s, i, win);
    }
    if (win.size() == 0) out.empty.push_back(w);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct BackgroundFit {
  int degree = 0;
  std::vector<double> coefficients;  // c0 + c1 x + c2 x^2
  std::vector<double> std_errors;
  double residual_rms = 0.0;
  std::size_t points_used = 0;
  ExcitationSeries subtracted;  // sigma - background over the whole series

  double background(double x) const {
    double s = 0.0, p = 1.0;
    for (double c : coefficients) {
      s += c * p;
      p *= x;
    }
    return s;
  }
};

/// Degree 1 or 2: least squares on the points with fit_lo <= x < fit_hi,
/// standard errors from the residual variance. Degree 0: constant offset equal
/// to the minimum over the fit range (the subtracted series then has minimum 0
/// there); its standard error is reported as 0.
inline BackgroundFit fit_background_poly(const ExcitationSeries& s, int degree, double fit_lo, double fit_hi) {
  if (degree < 0 || degree > 2) throw DomainError("background degree must be 0, 1 or 2");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.abscissa[i] >= fit_lo && s.abscissa[i] < fit_hi) idx.push_back(i);
  if (idx.empty()) throw DomainError("background fit range contains no points");
  BackgroundFit fit;
  fit.degree = degree;
  fit.points_used = idx.size();
  if (degree == 0) {
    double m = s.sigma[idx.front()];
    for (auto i : idx) m = std::min(m, s.sigma[i]);
    fit.coefficients = {m};
    fit.std_errors = {0.0};
  } else {
    const auto p = static_cast<Eigen::Index>(degree + 1);
    const auto n = static_cast<Eigen::Index>(idx.size());
    if (n < p + 1) throw DomainError("background fit needs at least degree + 2 points");
    // scaled abscissa t = (x - c)/h for conditioning; mapped back below
    const double lo = s.abscissa[idx.front()], hi = s.abscissa[idx.back()];
    const double c = 0.5 * (lo + hi), h = hi > lo ? 0.5 * (hi - lo) : 1.0;
    Eigen::MatrixXd a(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double t = (s.abscissa[idx[static_cast<std::size_t>(r)]] - c) / h;
      double pw = 1.0;
      for (Eigen::Index j = 0; j < p; ++j, pw *= t) a(r, j) = pw;
      y(r) = s.sigma[idx[static_cast<std::size_t>(r)]];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < p) throw DomainError("background fit is rank deficient (too few distinct abscissae)");
    const Eigen::VectorXd d = qr.solve(y);
    const double rss = (a * d - y).squaredNorm();
    const double s2 = rss / static_cast<double>(n - p);
    const Eigen::MatrixXd cov_d = s2 * (a.transpose() * a).inverse();
    // c_j = sum_i d_i * coefficient of x^j in ((x - c)/h)^i
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        double binom = 1.0;
        for (Eigen::Index q = 0; q < j; ++q) binom = binom * static_cast<double>(i - q) / static_cast<double>(q + 1);
        m(j, i) = binom * std::pow(-c, static_cast<double>(i - j)) / std::pow(h, static_cast<double>(i));
      }
    const Eigen::VectorXd coef = m * d;
    const Eigen::MatrixXd cov = m * cov_d * m.transpose();
    for (Eigen::Index j = 0; j < p; ++j) {
      fit.coefficients.push_back(coef(j));
      fit.std_errors.push_back(std::sqrt(std::max(0.0, cov(j, j))));
    }
  }
  double ss = 0.0;
  for (auto i : idx) ss += std::pow(s.sigma[i] - fit.background(s.abscissa[i]), 2);
  fit.residual_rms = std::sqrt(ss / static_cast<double>(idx.size()));
  fit.subtracted.label = s.label;
  fit.subtracted.abscissa = s.abscissa;
  for (std::size_t i = 0; i < s.size(); ++i) fit.subtracted.sigma.push_back(s.sigma[i] - fit.background(s.abscissa[i]));
  return fit;
}

// ---------------------------------------------------------------------------

struct NormalizedSamples {
  std::vector<double> values;  // sigma / <sigma> after clamping
  double clamped_fraction = 0.0;
  double mean_before = 0.0;
};

/// Negative values (left over from background subtraction) become 0, then
/// everything is divided by the sample mean.
inline NormalizedSamples clamp_and_normalize(std::span<const double> sigma) {
  if (sigma.empty()) throw DomainError("no samples to normalise");
  NormalizedSamples out;
  std::size_t clamped = 0;
  double sum = 0.0;
  out.values.reserve(sigma.size());
  for (double v : sigma) {
    if (v < 0.0) {
      ++clamped;
      v = 0.0;
    }
    out.values.push_back(v);
    sum += v;
  }
  out.mean_before = sum / static_cast<double>(sigma.size());
  if (!(out.mean_before > 0.0)) throw DomainError("cannot normalise: mean cross section is zero");
  for (double& v : out.values) v /= out.mean_before;
  out.clamped_fraction = static_cast<double>(clamped) / static_cast<double>(sigma.size());
  return out;
}

// ---------------------------------------------------------------------------

struct Binning {
  enum class Kind { fixed, automatic } kind = Kind::automatic;
  double lo = 0.0, hi = 0.0;
  int bins = 0;

  static Binning fixed(double lo, double hi, int bins) { return {Kind::fixed, lo, hi, bins}; }
  static Binning automatic() { return {}; }
};

struct HistogramDensity {
  std::vector<double> edges;
  std::vector<double> density;
  std::vector<double> counts;
  double total = 0.0;  // samples inside [edges.front(), edges.back()]
  double outside = 0.0;

  std::size_t bins() const { return density.size(); }
  double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
  double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
};

/// Unit-normalised histogram. Automatic binning: Freedman-Diaconis width
/// 2 IQR n^{-1/3} over [min, max] (one unit-width bin for a single sample).
inline HistogramDensity histogram_density(std::span<const double> samples, Binning binning = Binning::automatic()) {
  if (samples.empty()) throw DomainError("histogram needs at least one sample");
  double lo = binning.lo, hi = binning.hi;
  int bins = binning.bins;
  if (binning.kind == Binning::Kind::automatic) {
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    if (x.size() == 1) {
      lo = x[0] - 0.5;
      hi = x[0] + 0.5;
      bins = 1;
    } else {
      lo = x.front();
      hi = x.back();
      if (!(hi > lo)) throw DomainError("degenerate sample range for automatic binning");
      auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(x.size() - 1);
        const auto i = static_cast<std::size_t>(pos);
        const double f = pos - static_cast<double>(i);
        return i + 1 < x.size() ? x[i] * (1 - f) + x[i + 1] * f : x[i];
      };
      const double iqr = quantile(0.75) - quantile(0.25);
      const double h = 2.0 * iqr * std::cbrt(1.0 / static_cast<double>(x.size()));
      bins = h > 0.0 ? std::max(1, static_cast<int>(std::ceil((hi - lo) / h))) : 1;
      bins = std::min(bins, 100000);
    }
  }
  if (!(hi > lo) || bins < 1) throw DomainError("degenerate histogram range");
  HistogramDensity h;
  const double w = (hi - lo) / bins;
  for (int i = 0; i <= bins; ++i) h.edges.push_back(i == bins ? hi : lo + i * w);
  h.counts.assign(static_cast<std::size_t>(bins), 0.0);
  for (double v : samples) {
    if (v < lo || v > hi) {
      h.outside += 1.0;
      continue;
    }
    auto b = static_cast<std::size_t>((v - lo) / w);
    if (b >= h.counts.size()) b = h.counts.size() - 1;
    h.counts[b] += 1.0;
    h.total += 1.0;
  }
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    h.density.push_back(h.total > 0.0 ? h.counts[i] / (h.total * h.width(i)) : 0.0);
  return h;
}

/// Same estimator as the Monte-Carlo one, applied to measured S_ab.
inline std::vector<CharfuncEstimate> empirical_charfunc_bivariate(const SSampleSeries& s,
                                                                  std::span<const WaveVector> grid) {
  std::vector<std::complex<double>> z;
  z.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) z.emplace_back(s.re[i], s.im[i]);
  return empirical_charfunc(z, grid);
}

// ---------------------------------------------------------------------------

/// CDF of a curve by trapezoid integration from 0 (p0 at the origin),
/// divided by the curve's total mass.
class CurveCdf {
public:
  explicit CurveCdf(const DistributionCurve& c) {
    x_.push_back(0.0);
    f_.push_back(0.0);
    double prev_x = 0.0, prev_y = c.p0, acc = 0.0;
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
      acc += 0.5 * (c.grid[i] - prev_x) * (c.values[i] + prev_y);
      x_.push_back(c.grid[i]);
      f_.push_back(acc);
      prev_x = c.grid[i];
      prev_y = c.values[i];
    }
    if (!(acc > 0.0)) throw DomainError("curve has no mass");
    for (double& v : f_) v /= acc;
  }

  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= x_.back()) return 1.0;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const auto i = static_cast<std::size_t>(it - x_.begin());
    return f_[i - 1] + (f_[i] - f_[i - 1]) * (x - x_[i - 1]) / (x_[i] - x_[i - 1]);
  }

  double upper() const { return x_.back(); }

private:
  std::vector<double> x_, f_;
};

struct GofReport {
  stats::KsResult ks;
  std::optional<stats::ChiSquareResult> chi2;
  double p0_data = 0.0;   // quadratic extrapolation from the three lowest nonempty bins
  double p0_curve = 0.0;
  std::size_t n = 0;
  HistogramDensity histogram;
  std::vector<double> expected_density;  // curve probability per bin / width
};

/// Compares samples with a density curve. Throws DomainError if samples lie
/// outside [0, last grid point] of the curve.
inline GofReport gof_compare(std::span<const double> samples, const DistributionCurve& curve,
                             Binning binning = Binning::automatic()) {
  if (samples.empty()) throw DomainError("no samples to compare");
  const CurveCdf cdf(curve);
  for (double v : samples)
    if (v < 0.0 || v > cdf.upper()) throw DomainError("samples extend beyond the support covered by the curve");
  GofReport r;
  r.n = samples.size();
  r.ks = stats::ks_one_sample(samples, cdf);
  r.histogram = histogram_density(samples, binning);
  const auto& h = r.histogram;
  std::vector<double> expected;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double prob = cdf(h.edges[i + 1]) - cdf(h.edges[i]);
    expected.push_back(prob * h.total);
    r.expected_density.push_back(prob / h.width(i));
  }
  try {
    r.chi2 = stats::chi_square(h.counts, expected);
  } catch (const DomainError&) {
    r.chi2.reset();
  }
  std::vector<double> cx, cy;
  for (std::size_t i = 0; i < h.bins() && cx.size() < 3; ++i)
    if (h.counts[i] > 0.0) {
      cx.push_back(h.center(i));
      cy.push_back(h.density[i]);
    }
  r.p0_data = cx.size() == 3 ? extrapolate_to_zero(cx, cy) : (cy.empty() ? 0.0 : cy.front());
  r.p0_curve = curve.p0;
  return r;
}

}  // namespace xsdist
