// xsdist: analytic cross-section distributions, Monte-Carlo ensembles and
// data analysis from the command line.
//
// Exit codes: 0 success, 1 usage error, 2 numerical nonconvergence,
// 3 data or config validation failure.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xsdist/config_io.hpp"
#include "xsdist/montecarlo.hpp"
#include "xsdist/parallel.hpp"
#include "xsdist/pipeline.hpp"
#include "xsdist/transforms.hpp"

using namespace xsdist;
using namespace xsdist::mc;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kNonconvergence = 2, kValidation = 3 };

struct Common {
  int threads = default_thread_count();
  QuadratureSpec quad;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--threads", c.threads, "worker threads (default: $XSDIST_THREADS, else hardware concurrency)")->check(CLI::PositiveNumber);
  app->add_option("--rel-tol", c.quad.rel_tol, "relative quadrature tolerance")->capture_default_str();
  app->add_option("--abs-tol", c.quad.abs_tol, "absolute quadrature tolerance")->capture_default_str();
  app->add_option("--max-subdivisions", c.quad.max_subdivisions, "adaptive subdivision budget")->capture_default_str();
  app->add_option("--u-max", c.quad.u_max, "cap of the cosh substitution")->capture_default_str();
  app->add_option("--n-psi", c.quad.n_psi, "initial psi trapezoid points")->capture_default_str();
  app->add_option("--max-psi", c.quad.max_psi, "psi refinement cap")->capture_default_str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ParseError("cannot write " + path);
  return os;
}

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json goe_diag_json(const GoeDiagnostics& d) {
  const double n = d.psi_evaluations > 0 ? static_cast<double>(d.psi_evaluations) : 1.0;
  return {{"points", d.points},
          {"psi_evaluations", d.psi_evaluations},
          {"psi_unconverged", d.psi_unconverged},
          {"omega_sq_negative_fraction", d.negative_omega_sq / n},
          {"omega_sq_above_one_fraction", d.omega_sq_above_one / n},
          {"max_psi_used", d.max_psi_used}};
}

std::vector<double> axis(double lo, double hi, int n) {
  if (n < 1) throw DomainError("grid needs at least one point");
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  return v;
}

// ---------------------------------------------------------------------------

struct CharfuncArgs {
  std::string config, out;
  double k1_min = 0.0, k1_max = 5.0, k2_min = 0.0, k2_max = 5.0;
  int n1 = 6, n2 = 6;
  bool radial = false;
};

int cmd_charfunc(const CharfuncArgs& a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_config(a.config);
  const ChannelKernel kernel(cfg);
  std::vector<WaveVector> ks;
  if (a.radial) {
    if (cfg.symmetry != Symmetry::unitary) throw DomainError("--radial applies to beta = 2 only (R depends on |k| alone)");
    for (double k : axis(a.k1_min, a.k1_max, a.n1)) ks.push_back({k, 0.0});
  } else {
    for (double k1 : axis(a.k1_min, a.k1_max, a.n1))
      for (double k2 : axis(a.k2_min, a.k2_max, a.n2)) ks.push_back({k1, k2});
  }
  GoeDiagnostics diag;
  const auto vals = evaluate_charfunc(ks, kernel, c.quad, c.threads, &diag);
  bool converged = true;
  auto os = open_out(a.out);
  os << "# manifest=" << manifest_path(a.out) << "\n# config_hash=" << config_hash(cfg) << "\n";
  os << "k1,k2,Re_R,Im_R,err\n" << std::setprecision(17);
  double max_err = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    os << ks[i].k1 << ',' << ks[i].k2 << ',' << vals[i].value.real() << ',' << vals[i].value.imag() << ','
       << vals[i].error << '\n';
    converged = converged && vals[i].converged;
    max_err = std::max(max_err, vals[i].error);
  }
  RunManifest m;
  m.command = "charfunc";
  m.config_hash = config_hash(cfg);
  m.config = config_to_json(cfg);
  m.tolerances = quadrature_to_json(c.quad);
  m.diagnostics = {{"max_error", max_err}, {"converged", converged}};
  if (cfg.symmetry == Symmetry::orthogonal) m.diagnostics["goe"] = goe_diag_json(diag);
  m.outputs.push_back(a.out);
  m.wall_time = seconds_since(t0);
  m.write(manifest_path(a.out));
  if (!converged) {
    std::cerr << "warning: cubature hit its evaluation budget; values carry the reported error estimates\n";
    return kNonconvergence;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct PdfArgs {
  std::string config, out;
  double sigma_max = 4.0;
  int n_points = 200;
  bool normalize = false;
  TableOptions table;
};

json table_json(const CharfuncTable& t) {
  return {{"nodes", t.kappa.size()},
          {"kappa_end", t.kappa_end()},
          {"decayed", t.decayed},
          {"bound_violated", t.bound_violated},
          {"max_abs_beyond_one", t.max_abs_beyond_one},
          {"max_error", t.max_error()},
          {"quadrature_converged", t.quadrature_converged},
          {"goe", goe_diag_json(t.diagnostics)}};
}

int cmd_pdf(PdfArgs a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_config(a.config);
  const ChannelKernel kernel(cfg);
  a.table.threads = c.threads;
  const auto table = build_charfunc_table(kernel, c.quad, a.table);
  auto curve = a.normalize ? pdf_normalized(table, a.sigma_max, a.n_points, c.quad, c.threads)
                           : pdf_sigma(table, open_uniform_grid(a.sigma_max, a.n_points), c.quad, c.threads);
  curve.meta.config_hash = config_hash(cfg);
  curve.meta.notes.emplace_back("manifest", manifest_path(a.out));
  auto os = open_out(a.out);
  write_curve_csv(os, curve, a.normalize ? "y" : "sigma");
  RunManifest m;
  m.command = a.normalize ? "pdf --normalize" : "pdf";
  m.config_hash = curve.meta.config_hash;
  m.config = config_to_json(cfg);
  m.tolerances = quadrature_to_json(c.quad);
  m.tolerances["interp_tol"] = a.table.interp_tol;
  m.tolerances["n_phi"] = a.table.n_phi;
  m.diagnostics = {{"table", table_json(table)}, {"max_error", curve.meta.max_error}, {"norm", curve.norm},
                   {"mean", curve.mean},         {"p0", curve.p0},                   {"converged", curve.converged}};
  m.outputs.push_back(a.out);
  m.wall_time = seconds_since(t0);
  m.write(manifest_path(a.out));
  if (!curve.converged) {
    if (table.bound_violated)
      std::cerr << "error: |R| exceeded 1 (max " << table.max_abs_beyond_one
                << "); the transform of this characteristic function is not a probability density\n";
    else
      std::cerr << "error: transform did not converge (see manifest diagnostics)\n";
    return kNonconvergence;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct JpdfArgs {
  std::string config, out;
  double x_max = 1.0;
  int n = 41;
  TableOptions table;
};

int cmd_jpdf(JpdfArgs a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_config(a.config);
  const ChannelKernel kernel(cfg);
  a.table.threads = c.threads;
  const auto table = build_charfunc_table(kernel, c.quad, a.table);
  const auto x = axis(-a.x_max, a.x_max, a.n);
  JpdfOptions jo;
  jo.threads = c.threads;
  auto g = jpdf(kernel, table, x, x, c.quad, jo);
  g.meta.config_hash = config_hash(cfg);
  g.meta.notes.emplace_back("manifest", manifest_path(a.out));
  auto os = open_out(a.out);
  write_grid_csv(os, g);
  RunManifest m;
  m.command = "jpdf";
  m.config_hash = g.meta.config_hash;
  m.config = config_to_json(cfg);
  m.tolerances = quadrature_to_json(c.quad);
  m.diagnostics = {{"table", table_json(table)},
                   {"norm", g.norm},
                   {"error", g.error},
                   {"max_imag_residue", g.max_imag_residue},
                   {"converged", g.converged}};
  m.outputs.push_back(a.out);
  m.wall_time = seconds_since(t0);
  m.write(manifest_path(a.out));
  return g.converged ? kOk : kNonconvergence;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config, out, engine = "dense";
  int n = 200;
  long samples = 10000;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateArgs& a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_config(a.config);
  EnsembleOptions opts;
  opts.threads = c.threads;
  opts.engine = a.engine == "block" ? Engine::block_tridiagonal : Engine::dense;
  const auto run = run_ensemble(cfg, a.n, a.samples, a.seed, opts);
  auto os = open_out(a.out);
  write_samples_csv(os, run, manifest_path(a.out));
  RunManifest m;
  m.command = "simulate";
  m.config_hash = config_hash(cfg);
  m.config = config_to_json(cfg);
  m.seeds = {{"seed", a.seed}};
  m.tolerances = {{"unitarity_bound", opts.unitarity_bound}};
  const auto& d = run.diagnostics;
  m.diagnostics = {{"N", a.n},
                   {"n_samples", a.samples},
                   {"engine", a.engine},
                   {"max_unitarity_residual", d.max_unitarity_residual},
                   {"max_symmetry_residual", d.max_symmetry_residual},
                   {"unitarity_failures", d.unitarity_failures},
                   {"singular_retries", d.singular_retries}};
  m.outputs.push_back(a.out);
  m.wall_time = seconds_since(t0);
  m.write(manifest_path(a.out));
  if (d.unitarity_failures > 0) {
    std::cerr << "error: " << d.unitarity_failures << " samples failed the unitarity check\n";
    return kNonconvergence;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string data, schema = "excitation", compare, out;
  int degree = -1;  // -1: no background subtraction
  double fit_min = -std::numeric_limits<double>::infinity();
  double fit_max = std::numeric_limits<double>::infinity();
  double window = 0.0, stride = 0.0;
  int bins = 0;
  double bin_max = 0.0;
  double curve_y_max = 12.0;
  TableOptions table;
};

struct WindowReport {
  json j;
  std::vector<double> samples;
};

int cmd_analyze(AnalyzeArgs a, const Common& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto schema = a.schema == "smatrix" ? SeriesSchema::smatrix : SeriesSchema::excitation;
  const auto loaded = load_series(a.data, schema);

  // sigma series: measured directly or |S_ab|^2
  ExcitationSeries sigma;
  std::optional<SSampleSeries> s_series;
  if (schema == SeriesSchema::excitation) {
    sigma = std::get<ExcitationSeries>(loaded);
  } else {
    s_series = std::get<SSampleSeries>(loaded);
    sigma.label = s_series->label;
    sigma.abscissa = s_series->abscissa;
    for (std::size_t i = 0; i < s_series->size(); ++i) sigma.sigma.push_back(std::norm(std::complex(s_series->re[i], s_series->im[i])));
  }

  json report;
  report["data"] = a.data;
  report["schema"] = a.schema;
  report["points"] = sigma.size();
  if (a.degree >= 0) {
    const auto fit = fit_background_poly(sigma, a.degree, a.fit_min, a.fit_max);
    report["background"] = {{"degree", a.degree},
                            {"coefficients", fit.coefficients},
                            {"std_errors", fit.std_errors},
                            {"residual_rms", fit.residual_rms},
                            {"points_used", fit.points_used}};
    sigma = fit.subtracted;
  }

  std::vector<ExcitationSeries> windows;
  if (a.window > 0.0) {
    auto split = window_split(sigma, a.window, a.stride);
    for (auto w : split.empty) std::cerr << "warning: window " << w << " contains no points\n";
    report["empty_windows"] = split.empty;
    windows = std::move(split.windows);
  } else {
    windows.push_back(sigma);
  }

  // normalise per window, pool the samples
  std::vector<double> pooled;
  json wj = json::array();
  double clamped = 0.0;
  for (const auto& w : windows) {
    if (w.size() == 0) continue;
    const auto n = clamp_and_normalize(w.sigma);
    wj.push_back({{"label", w.label}, {"points", w.size()}, {"mean", n.mean_before}, {"clamped_fraction", n.clamped_fraction}});
    clamped += n.clamped_fraction * static_cast<double>(w.size());
    pooled.insert(pooled.end(), n.values.begin(), n.values.end());
  }
  if (pooled.empty()) throw ValidationError("no data left after windowing");
  report["windows"] = wj;
  report["clamped_fraction"] = clamped / static_cast<double>(pooled.size());

  const Binning binning = a.bins > 0 ? Binning::fixed(0.0, a.bin_max > 0.0 ? a.bin_max : *std::max_element(pooled.begin(), pooled.end()), a.bins)
                                     : Binning::automatic();
  const std::string hist_path = a.out + ".histogram.csv";
  int status = kOk;
  if (!a.compare.empty()) {
    const auto cfg = load_config(a.compare);
    const ChannelKernel kernel(cfg);
    a.table.threads = c.threads;
    const auto table = build_charfunc_table(kernel, c.quad, a.table);
    const double y_max = std::max(a.curve_y_max, 1.01 * *std::max_element(pooled.begin(), pooled.end()));
    auto curve = pdf_normalized(table, y_max, 600, c.quad, c.threads);
    curve.meta.config_hash = config_hash(cfg);
    {
      auto os = open_out(a.out + ".curve.csv");
      write_curve_csv(os, curve, "y");
    }
    const auto g = gof_compare(pooled, curve, binning);
    report["compare"] = {{"config_hash", curve.meta.config_hash},
                         {"curve_converged", curve.converged},
                         {"curve_max_error", curve.meta.max_error},
                         {"ks_statistic", g.ks.statistic},
                         {"ks_p_value", g.ks.p_value},
                         {"p0_data", g.p0_data},
                         {"p0_curve", g.p0_curve}};
    if (g.chi2)
      report["compare"]["chi2"] = {{"statistic", g.chi2->statistic}, {"dof", g.chi2->dof}, {"p_value", g.chi2->p_value}};
    auto os = open_out(hist_path);
    os << "# manifest=" << manifest_path(a.out) << "\n" << std::setprecision(17);
    os << "lo,hi,count,density,expected_density\n";
    for (std::size_t i = 0; i < g.histogram.bins(); ++i)
      os << g.histogram.edges[i] << ',' << g.histogram.edges[i + 1] << ',' << g.histogram.counts[i] << ','
         << g.histogram.density[i] << ',' << g.expected_density[i] << '\n';
    if (!curve.converged) status = kNonconvergence;
  } else {
    const auto h = histogram_density(pooled, binning);
    std::vector<double> cx, cy;
    for (std::size_t i = 0; i < h.bins() && cx.size() < 3; ++i)
      if (h.counts[i] > 0.0) {
        cx.push_back(h.center(i));
        cy.push_back(h.density[i]);
      }
    if (cx.size() == 3) report["p0_data"] = extrapolate_to_zero(cx, cy);
    auto os = open_out(hist_path);
    os << "# manifest=" << manifest_path(a.out) << "\n" << std::setprecision(17);
    os << "lo,hi,count,density\n";
    for (std::size_t i = 0; i < h.bins(); ++i)
      os << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << ',' << h.density[i] << '\n';
  }
  if (s_series && s_series->size() >= 100) {
    std::vector<WaveVector> ks;
    double scale = 0.0;
    for (std::size_t i = 0; i < s_series->size(); ++i) scale += std::norm(std::complex(s_series->re[i], s_series->im[i]));
    const double kmax = 4.0 / std::sqrt(scale / static_cast<double>(s_series->size()));
    for (double k1 : axis(0.0, kmax, 9))
      for (double k2 : axis(0.0, kmax, 9)) ks.push_back({k1, k2});
    const auto est = empirical_charfunc_bivariate(*s_series, ks);
    auto os = open_out(a.out + ".charfunc.csv");
    os << "# manifest=" << manifest_path(a.out) << "\n" << std::setprecision(17) << "k1,k2,Re_R,Im_R,std_error\n";
    for (const auto& e : est)
      os << e.k.k1 << ',' << e.k.k2 << ',' << e.value.real() << ',' << e.value.imag() << ',' << e.std_error << '\n';
  }
  {
    auto os = open_out(a.out);
    os << std::setw(2) << report << "\n";
  }
  RunManifest m;
  m.command = "analyze";
  m.tolerances = quadrature_to_json(c.quad);
  m.diagnostics = {{"clamped_fraction", report["clamped_fraction"]}};
  m.outputs = {a.out, hist_path};
  m.wall_time = seconds_since(t0);
  m.write(manifest_path(a.out));
  return status;
}

// ---------------------------------------------------------------------------
// selftest

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::vector<Check> selftest_quick(const QuadratureSpec& q) {
  std::vector<Check> out;
  // unitary M = 2, T = 1: R(k) = 2 J1(k)/k
  {
    const ChannelKernel k(uniform_config(Symmetry::unitary, 2, 1.0));
    const double kk = 1.5;
    const double r = charfunc_gue(kk, k, q).value;
    const double exact = 2.0 * std::cyl_bessel_j(1.0, kk) / kk;
    out.push_back({"cue2 closed form", std::abs(r - exact) < 1e-6, fmt(r) + " vs " + fmt(exact)});
  }
  // orthogonal M = 2, T = 1 at k = 0.5 (independent 1D oracle). Larger k is
  // not checked here: the orthogonal formula drifts from the exact COE values
  // from order k^6 on.
  {
    const ChannelKernel k(uniform_config(Symmetry::orthogonal, 2, 1.0));
    auto qq = q;
    qq.rel_tol = std::max(q.rel_tol, 1e-6);
    qq.abs_tol = std::max(q.abs_tol, 1e-7);
    const auto r = charfunc_goe(0.5, 0.0, k, qq);
    const double exact = 0.979361013292;
    out.push_back({"coe2 oracle", std::abs(r.value - exact) < 1e-6, fmt(r.value.real()) + " vs " + fmt(exact)});
  }
  // R(0) = 1 for both classes
  for (auto s : {Symmetry::orthogonal, Symmetry::unitary}) {
    const ChannelKernel k(uniform_config(s, 3, 0.8));
    const WaveVector zero{0.0, 0.0};
    const auto r = evaluate_charfunc(std::span<const WaveVector>(&zero, 1), k, q).front();
    out.push_back({std::string("R(0)=1 beta=") + (s == Symmetry::orthogonal ? "1" : "2"), std::abs(r.value - 1.0) < 1e-10,
                   fmt(std::abs(r.value - 1.0))});
  }
  // conjugation identity and real omega^2 at random points
  {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    const ChannelKernel k(uniform_config(Symmetry::orthogonal, 4, 0.7, 0.3));
    for (int i = 0; i < 1000; ++i) {
      const cplx kv(6 * u(gen) - 3, 6 * u(gen) - 3);
      const auto pt = LambdaPoint::from_angles(std::numbers::pi * u(gen), 3 * u(gen), 3 * u(gen));
      const auto c = pqr_terms(kv, pt, k.g_plus(0), k.g_minus(0), k.energy_ratio());
      const double scale = std::abs(kv);
      worst = std::max({worst, std::abs(c.rp - std::conj(c.qp)) / scale, std::abs(c.rm - std::conj(c.qm)) / scale});
    }
    out.push_back({"r = conj(q)", worst < 1e-13, fmt(worst)});
  }
  // Monte-Carlo unitarity and symmetry
  {
    auto cfg = uniform_config(Symmetry::orthogonal, 4, 0.8);
    const auto run = run_ensemble(cfg, 60, 200, 11);
    out.push_back({"mc unitarity", run.diagnostics.max_unitarity_residual < 1e-8, fmt(run.diagnostics.max_unitarity_residual)});
    out.push_back({"mc symmetry", run.diagnostics.max_symmetry_residual < 1e-10, fmt(run.diagnostics.max_symmetry_residual)});
  }
  return out;
}

std::vector<Check> selftest_full(const QuadratureSpec& q, int threads) {
  std::vector<Check> out;
  // analytic vs Monte-Carlo on small grids
  for (auto s : {Symmetry::unitary, Symmetry::orthogonal}) {
    auto cfg = uniform_config(s, 3, 0.9);
    const ChannelKernel kernel(cfg);
    EnsembleOptions eo;
    eo.threads = threads;
    eo.engine = Engine::block_tridiagonal;
    const auto run = run_ensemble(cfg, 200, 40000, 2024, eo);
    const auto samples = run.samples_at();
    std::vector<WaveVector> ks;
    for (double k1 : {0.0, 1.0, 2.5})
      for (double k2 : {0.0, 1.5}) ks.push_back({k1, k2});
    auto qq = q;
    qq.rel_tol = std::max(q.rel_tol, 1e-6);
    qq.abs_tol = std::max(q.abs_tol, 1e-7);
    const auto an = evaluate_charfunc(ks, kernel, qq, threads);
    const auto em = empirical_charfunc(samples, ks);
    double worst = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i)
      if (em[i].std_error > 0.0) worst = std::max(worst, std::abs(an[i].value - em[i].value) / em[i].std_error);
    out.push_back({std::string("oracle equivalence beta=") + (s == Symmetry::orthogonal ? "1" : "2"), worst < 4.0,
                   "max deviation " + fmt(worst) + " SE"});
  }
  // unitary pdf normalisation
  {
    const ChannelKernel kernel(uniform_config(Symmetry::unitary, 5, 0.99));
    const auto table = build_charfunc_table(kernel, q);
    const auto c = pdf_normalized(table, 30.0, 600, q, threads);
    out.push_back({"pdf norm", std::abs(c.norm - 1.0) < 1e-3, fmt(c.norm)});
  }
  return out;
}

int cmd_selftest(const std::string& level, const Common& c) {
  auto checks = selftest_quick(c.quad);
  if (level == "full") {
    auto more = selftest_full(c.quad, c.threads);
    checks.insert(checks.end(), more.begin(), more.end());
  }
  bool ok = true;
  for (const auto& ch : checks) {
    std::cout << (ch.pass ? "PASS " : "FAIL ") << ch.name << "  (" << ch.detail << ")\n";
    ok = ok && ch.pass;
  }
  return ok ? kOk : kNonconvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-section distributions in chaotic scattering"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;

  CharfuncArgs ca;
  auto* charfunc = app.add_subcommand("charfunc", "characteristic function R(k1,k2) on a grid");
  charfunc->add_option("--config", ca.config, "JSON config")->required()->check(CLI::ExistingFile);
  charfunc->add_option("--out", ca.out, "output CSV")->required();
  charfunc->add_option("--k1-min", ca.k1_min)->capture_default_str();
  charfunc->add_option("--k1-max", ca.k1_max)->capture_default_str();
  charfunc->add_option("--n1", ca.n1)->capture_default_str();
  charfunc->add_option("--k2-min", ca.k2_min)->capture_default_str();
  charfunc->add_option("--k2-max", ca.k2_max)->capture_default_str();
  charfunc->add_option("--n2", ca.n2)->capture_default_str();
  charfunc->add_flag("--radial", ca.radial, "beta=2 only: |k| along k1, k2 = 0");
  add_common(charfunc, common);

  PdfArgs pa;
  auto* pdf = app.add_subcommand("pdf", "density of sigma = |S_ab|^2");
  pdf->add_option("--config", pa.config, "JSON config")->required()->check(CLI::ExistingFile);
  pdf->add_option("--out", pa.out, "output CSV")->required();
  pdf->add_option("--sigma-max", pa.sigma_max, "upper end of the grid (in units of <sigma> with --normalize)")
      ->capture_default_str();
  pdf->add_option("--n-points", pa.n_points)->capture_default_str();
  pdf->add_flag("--normalize", pa.normalize, "emit ptilde(y) = <sigma> p(<sigma> y)");
  pdf->add_option("--n-phi", pa.table.n_phi, "circle points of the beta=1 angular average")->capture_default_str();
  pdf->add_option("--interp-tol", pa.table.interp_tol, "interpolation tolerance of the R table")->capture_default_str();
  add_common(pdf, common);

  JpdfArgs ja;
  auto* jp = app.add_subcommand("jpdf", "joint density P(x1,x2) of (Re S_ab, Im S_ab)");
  jp->add_option("--config", ja.config, "JSON config")->required()->check(CLI::ExistingFile);
  jp->add_option("--out", ja.out, "output CSV")->required();
  jp->add_option("--x-max", ja.x_max)->capture_default_str();
  jp->add_option("--n", ja.n, "points per axis")->capture_default_str();
  jp->add_option("--n-phi", ja.table.n_phi)->capture_default_str();
  add_common(jp, common);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo ensemble of S_ab");
  sim->add_option("--config", sa.config, "JSON config")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", sa.out, "output CSV")->required();
  sim->add_option("--N", sa.n, "Hamiltonian dimension")->capture_default_str();
  sim->add_option("--samples", sa.samples)->capture_default_str();
  sim->add_option("--seed", sa.seed)->capture_default_str();
  sim->add_option("--engine", sa.engine)->check(CLI::IsMember({"dense", "block"}))->capture_default_str();
  add_common(sim, common);

  AnalyzeArgs aa;
  auto* an = app.add_subcommand("analyze", "histogram a data file and compare with the analytic density");
  an->add_option("--data", aa.data, "CSV with (E,sigma) or (f,Re_S,Im_S)")->required()->check(CLI::ExistingFile);
  an->add_option("--schema", aa.schema)->check(CLI::IsMember({"excitation", "smatrix"}))->capture_default_str();
  an->add_option("--background-degree", aa.degree, "polynomial background degree 0..2 (-1: none)")
      ->check(CLI::Range(-1, 2))
      ->capture_default_str();
  an->add_option("--fit-min", aa.fit_min, "lower end of the background fit range");
  an->add_option("--fit-max", aa.fit_max, "upper end (exclusive) of the background fit range");
  an->add_option("--window", aa.window, "window width (0: whole series)");
  an->add_option("--stride", aa.stride, "window stride (default: width)");
  an->add_option("--bins", aa.bins, "fixed bin count (0: Freedman-Diaconis)");
  an->add_option("--bin-max", aa.bin_max, "upper edge for fixed bins (default: sample maximum)");
  an->add_option("--compare", aa.compare, "config for the analytic comparison curve")->check(CLI::ExistingFile);
  an->add_option("--out", aa.out, "report (JSON)")->required();
  an->add_option("--n-phi", aa.table.n_phi)->capture_default_str();
  add_common(an, common);

  std::string level = "quick";
  auto* st = app.add_subcommand("selftest", "run the built-in invariant checks");
  st->add_option("level", level)->check(CLI::IsMember({"quick", "full"}))->capture_default_str();
  add_common(st, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    common.quad.validate();
    if (*charfunc) return cmd_charfunc(ca, common);
    if (*pdf) return cmd_pdf(pa, common);
    if (*jp) return cmd_jpdf(ja, common);
    if (*sim) return cmd_simulate(sa, common);
    if (*an) return cmd_analyze(aa, common);
    if (*st) return cmd_selftest(level, common);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const QuadratureError& e) {
    std::cerr << "error: " << e.what() << " (value " << e.value() << ", error estimate " << e.error_estimate() << ")\n";
    return kNonconvergence;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
