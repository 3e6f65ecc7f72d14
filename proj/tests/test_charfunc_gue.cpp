#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "xsdist/charfunc_gue.hpp"
#include "xsdist/empirical.hpp"
#include "xsdist/montecarlo.hpp"

using namespace xsdist;

namespace {

ChannelKernel unitary(int m, double t) { return ChannelKernel(uniform_config(Symmetry::unitary, m, t)); }

}  // namespace

TEST(ChannelFactorUnitary, Examples) {
  const ChannelKernel k(Symmetry::unitary, {1.0, 3.0}, {0.0, 0.0}, 0, 1);
  EXPECT_DOUBLE_EQ(channel_factor_unitary(1.0, 1.0, k), 1.0);
  EXPECT_DOUBLE_EQ(channel_factor_unitary(3.0, 1.0, k), 1.0 / 3.0);
  EXPECT_GT(channel_factor_unitary(40.0, -0.5, unitary(6, 1.0)), 0.0);
}

TEST(CharfuncGue, OneAtOrigin) {
  for (double t : {0.2, 0.7, 1.0}) EXPECT_EQ(charfunc_gue(0.0, unitary(3, t)).value, 1.0);
}

TEST(CharfuncGue, PerfectTwoChannelIsCue) {
  // CUE(2): S_12 = e^{i phi} sin(theta) with sin^2 theta uniform, so R = 2 J1(k)/k
  const auto k = unitary(2, 1.0);
  for (double km : {0.3, 1.0, 2.5, 5.0, 9.0, 20.0}) {
    const auto r = charfunc_gue(km, k);
    EXPECT_NEAR(r.value, 2.0 * std::cyl_bessel_j(1.0, km) / km, 1e-9) << km;
    EXPECT_LE(r.error, 1e-8);
  }
}

TEST(CharfuncGue, BoundedAndDecaying) {
  const auto k = unitary(5, 0.99);
  for (double km = 0.1; km <= 50.0; km += km < 5 ? 0.3 : 2.7) EXPECT_LE(std::abs(charfunc_gue(km, k).value), 1.0 + 1e-9) << km;
  EXPECT_LT(std::abs(charfunc_gue(50.0, k).value), 0.05);
}

TEST(CharfuncGue, EvenAndBivariateByModulus) {
  const auto k = unitary(3, 0.6);
  EXPECT_EQ(charfunc_gue(-2.0, k).value, charfunc_gue(2.0, k).value);
  EXPECT_EQ(charfunc_gue_bivariate(3.0, 4.0, k), charfunc_gue_bivariate(5.0, 0.0, k));
  EXPECT_EQ(charfunc_gue_bivariate(-2.0, 0.0, k), charfunc_gue_bivariate(2.0, 0.0, k));
  EXPECT_EQ(charfunc_gue_bivariate(0.0, 0.0, k), std::complex<double>(1.0, 0.0));
}

TEST(CharfuncGue, RejectsOrthogonalKernel) {
  EXPECT_THROW(charfunc_gue(1.0, ChannelKernel(uniform_config(Symmetry::orthogonal, 2, 0.5))), DomainError);
}

TEST(CharfuncGue, ReportsNonConvergence) {
  QuadratureSpec q;
  q.max_subdivisions = 3;
  EXPECT_THROW(charfunc_gue(7.0, unitary(4, 0.8), q), QuadratureError);
}

TEST(CharfuncGue, MatchesMonteCarlo) {
  const auto cfg = uniform_config(Symmetry::unitary, 5, 0.99);
  mc::EnsembleOptions opts;
  opts.engine = mc::Engine::block_tridiagonal;
  const auto run = mc::run_ensemble(cfg, 150, 100000, 2024, opts);
  const auto samples = run.samples_at();
  const std::vector<WaveVector> grid{{2.0, 0.0}, {0.0, 2.0}, {1.2, -1.6}, {4.0, 0.0}};
  const auto emp = empirical_charfunc(samples, grid);
  const ChannelKernel kern(cfg);
  for (const auto& e : emp) {
    const double r = charfunc_gue(std::hypot(e.k.k1, e.k.k2), kern).value;
    EXPECT_LT(std::abs(e.value - r), 3 * e.std_error) << e.k.k1 << "," << e.k.k2 << " " << e.value << " vs " << r;
  }
}

TEST(CharfuncGue, ExtraPerfectChannelSlowsDecay) {
  // Another open channel draws flux away from a -> b: S_ab concentrates near
  // 0, <sigma> drops and R spreads out, so the integral of |R| grows.
  auto area = [](const ChannelKernel& k) {
    double s = 0;
    for (double km = 0.05; km < 20.0; km += 0.1) s += std::abs(charfunc_gue(km, k).value) * 0.1;
    return s;
  };
  auto mean_sigma = [](const ChannelKernel& k) { return 4.0 * (1.0 - charfunc_gue(0.05, k).value) / (0.05 * 0.05); };
  for (double t : {0.5, 0.9}) {
    auto cfg = uniform_config(Symmetry::unitary, 3, t);
    const ChannelKernel before(cfg);
    cfg.channels.push_back(ChannelCoupling::from_transmission(1.0));
    const ChannelKernel after(cfg);
    EXPECT_GT(area(after), area(before)) << t;
    EXPECT_LT(mean_sigma(after), mean_sigma(before)) << t;
  }
}
