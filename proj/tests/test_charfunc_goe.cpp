#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "xsdist/charfunc_goe.hpp"
#include "xsdist/empirical.hpp"
#include "xsdist/montecarlo.hpp"

using namespace xsdist;

namespace {

QuadratureSpec loose() {
  QuadratureSpec q;
  q.rel_tol = 1e-6;
  q.abs_tol = 1e-7;
  return q;
}

ScatteringConfig two_channel() {
  auto cfg = uniform_config(Symmetry::orthogonal, 2, 0.9);
  cfg.channels[1] = ChannelCoupling::from_transmission(0.8);
  return cfg;
}

}  // namespace

TEST(GoeJacobian, NonNegative) {
  for (double t = 0.05; t < 3.1; t += 0.3)
    for (double u1 = 0.0; u1 < 5; u1 += 0.7)
      for (double u2 = 0.0; u2 < 5; u2 += 0.9) EXPECT_GE(goe_jacobian(t, u1, u2), 0.0);
}

TEST(ChannelFactorOrthogonal, Examples) {
  const ChannelKernel k(Symmetry::orthogonal, {1.0, 3.0}, {0.0, 0.0}, 0, 1);
  EXPECT_DOUBLE_EQ(channel_factor_orthogonal(1.0, 1.0, 1.0, k), 1.0);
  // (1+0)(3+0) / sqrt((1+3)(1+8)(3+3)(3+8))
  EXPECT_NEAR(channel_factor_orthogonal(0.0, 3.0, 8.0, k), 3.0 / std::sqrt(4.0 * 9 * 6 * 11), 1e-15);
}

TEST(CharfuncGoe, OneAtOrigin) {
  const ChannelKernel k(uniform_config(Symmetry::orthogonal, 3, 0.7, 0.3));
  const auto r = charfunc_goe(0.0, 0.0, k);
  EXPECT_EQ(r.value, cplx(1.0, 0.0));
}

TEST(CharfuncGoe, PerfectTwoChannelMatchesCoeAtSmallK) {
  // COE(2) oracle from the eigenphase representation, 1-D quadrature
  const ChannelKernel k(uniform_config(Symmetry::orthogonal, 2, 1.0));
  const auto r = charfunc_goe(0.5, 0.0, k);
  EXPECT_NEAR(r.value.real(), 0.979361013292, 1e-6);
  EXPECT_NEAR(charfunc_goe(0.0, 0.5, k, loose()).value.real(), 0.979361013292, 1e-6);
}

TEST(CharfuncGoe, SymmetricUnderKToMinusK) {
  const ChannelKernel k(uniform_config(Symmetry::orthogonal, 3, 0.8, 0.5));
  const auto a = charfunc_goe(1.0, 0.7, k, loose());
  const auto b = charfunc_goe(-1.0, -0.7, k, loose());
  EXPECT_LT(std::abs(a.value - b.value), 2 * (a.error + b.error) + 1e-12);
  EXPECT_LT(std::abs(a.value - 1.0), 1.0);
}

TEST(CharfuncGoe, BandCentreConjugationSymmetry) {
  const ChannelKernel k(two_channel());
  const auto a = charfunc_goe(1.2, 0.5, k, loose());
  const auto b = charfunc_goe(1.2, -0.5, k, loose());
  EXPECT_LT(std::abs(a.value - b.value), 2 * (a.error + b.error) + 1e-12);
}

TEST(CharfuncGoe, ImaginaryPartWithinErrorOnGrid) {
  std::vector<WaveVector> grid;
  for (double k1 : {-2.0, -1.0, 0.0, 1.0, 2.0})
    for (double k2 : {-2.0, -1.0, 0.0, 1.0, 2.0}) grid.push_back({k1, k2});
  const std::vector<ScatteringConfig> configs{two_channel(), uniform_config(Symmetry::orthogonal, 3, 0.6, 0.4),
                                              uniform_config(Symmetry::orthogonal, 4, 0.95)};
  for (const auto& cfg : configs) {
    const auto r = charfunc_goe_grid(grid, ChannelKernel(cfg), loose());
    EXPECT_TRUE(r.converged);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      EXPECT_LE(std::abs(r.value[i].imag()), 10 * r.error[i] + 1e-14) << grid[i].k1 << "," << grid[i].k2;
      EXPECT_LE(std::abs(r.value[i]), 1.0 + r.error[i]);
    }
  }
}

TEST(CharfuncGoe, GridMatchesPointEvaluation) {
  const ChannelKernel k(uniform_config(Symmetry::orthogonal, 3, 0.6, 0.4));
  const std::vector<WaveVector> grid{{1.0, 0.5}, {-1.0, -0.5}, {0.0, 1.1}};
  const auto g = charfunc_goe_grid(grid, k, loose());
  EXPECT_EQ(g.value[0], g.value[1]);
  for (std::size_t i : {0u, 2u}) {
    const auto p = charfunc_goe(grid[i].k1, grid[i].k2, k, loose());
    EXPECT_LT(std::abs(g.value[i] - p.value), 2 * (g.error[i] + p.error) + 1e-12);
  }
}

TEST(CharfuncGoe, MatchesMonteCarloAtModerateK) {
  const auto cfg = two_channel();
  mc::EnsembleOptions opts;
  opts.engine = mc::Engine::block_tridiagonal;
  const auto run = mc::run_ensemble(cfg, 100, 200000, 77, opts);
  const auto samples = run.samples_at();
  const std::vector<WaveVector> grid{{1.5, 0.0}, {0.0, 1.5}};
  const auto emp = empirical_charfunc(samples, grid);
  const ChannelKernel kern(cfg);
  std::vector<double> values;
  for (const auto& e : emp) {
    const auto r = charfunc_goe(e.k.k1, e.k.k2, kern);
    values.push_back(r.value.real());
    EXPECT_LT(std::abs(e.value - r.value), 4 * e.std_error) << e.k.k1 << "," << e.k.k2 << " " << e.value << " vs " << r.value;
  }
  // real and imaginary parts of S_12 are not equally distributed
  EXPECT_GT(std::abs(values[0] - values[1]), 1e-3);
}

TEST(CharfuncGoe, RejectsUnitaryKernel) {
  EXPECT_THROW(charfunc_goe(1.0, 0.0, ChannelKernel(uniform_config(Symmetry::unitary, 2, 0.5))), DomainError);
}
