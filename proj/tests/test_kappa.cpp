#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "reference_kappa.hpp"
#include "xsdist/kappa.hpp"
#include "xsdist/quadrature.hpp"

using namespace xsdist;

namespace {

struct RandomPoint {
  cplx k;
  LambdaPoint pt;
  double l0, l1, l2, psi;
};

RandomPoint draw(std::mt19937_64& gen, double kmax = 8.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomPoint p;
  p.k = cplx(kmax * (2 * u(gen) - 1), kmax * (2 * u(gen) - 1));
  const double t = std::numbers::pi * u(gen), u1 = 4 * u(gen), u2 = 4 * u(gen);
  p.pt = LambdaPoint::from_angles(t, u1, u2);
  p.l0 = std::cos(t);
  p.l1 = std::cosh(u1);
  p.l2 = std::cosh(u2);
  p.psi = 2 * std::numbers::pi * u(gen);
  return p;
}

ChannelKernel random_kernel(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double v = 0.5 + u(gen), e = (2 * u(gen) - 1) * 1.6 * v;
  ScatteringConfig cfg;
  cfg.symmetry = Symmetry::orthogonal;
  cfg.v = v;
  cfg.E = e;
  for (int c = 0; c < 3; ++c) cfg.channels.push_back(ChannelCoupling::from_gamma(0.05 + 3 * u(gen)));
  cfg.a = 1;
  cfg.b = 3;
  return ChannelKernel(cfg);
}

}  // namespace

TEST(PqrTerms, VanishAtZeroK) {
  const auto c = pqr_terms(0.0, LambdaPoint::from_lambdas(0.3, 1.7, 2.2), 1.4, 0.6, 0.2);
  EXPECT_EQ(c.p0, 0.0);
  EXPECT_EQ(c.pp, 0.0);
  EXPECT_EQ(std::abs(c.qp) + std::abs(c.qm) + std::abs(c.rp) + std::abs(c.rm), 0.0);
}

TEST(PqrTerms, EqualLambdasKillDifferences) {
  const auto c = pqr_terms(cplx(1.2, -0.7), LambdaPoint::from_lambdas(0.3, 1.9, 1.9), 1.4, 0.6, 0.2);
  EXPECT_EQ(c.pm, 0.0);
  EXPECT_EQ(std::abs(c.qm), 0.0);
  EXPECT_EQ(std::abs(c.rm), 0.0);
}

TEST(PqrTerms, PerfectCouplingAtBandCentreKillsQR) {
  const auto g = g_pm_from_gamma(1.0, 1.0, 0.0);
  const auto c = pqr_terms(cplx(2.0, 1.0), LambdaPoint::from_lambdas(-0.2, 1.3, 4.0), g.g_plus, g.g_minus, 0.0);
  EXPECT_EQ(std::abs(c.qp) + std::abs(c.qm) + std::abs(c.rp) + std::abs(c.rm), 0.0);
  EXPECT_GT(c.pp, 0.0);
}

TEST(PqrTerms, RIsConjugateOfQ) {
  std::mt19937_64 gen(11);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto kern = random_kernel(gen);
    const auto p = draw(gen);
    for (int c : {0, 2}) {
      const auto t = pqr_terms(p.k, p.pt, kern.g_plus(c), kern.g_minus(c), kern.energy_ratio());
      const double scale = std::max({std::abs(t.qp), std::abs(t.qm), 1e-300});
      worst = std::max({worst, std::abs(t.rp - std::conj(t.qp)) / scale, std::abs(t.rm - std::conj(t.qm)) / scale});
    }
  }
  EXPECT_LT(worst, 1e-13);
}

TEST(KappaTerms, XYAndOmegaSquaredAreReal) {
  // complex X, Y built literally from the definitions, imaginary parts compared with their size
  std::mt19937_64 gen(12);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto kern = random_kernel(gen);
    const auto p = draw(gen);
    const auto a = pqr_terms(p.k, p.pt, kern.g_plus(0), kern.g_minus(0), kern.energy_ratio());
    const auto b = pqr_terms(p.k, p.pt, kern.g_plus(2), kern.g_minus(2), kern.energy_ratio());
    const cplx e2 = std::polar(1.0, 2 * p.psi);
    const cplx x = 2.0 * a.pp + a.qm / e2 + a.rm * e2;
    const cplx y = 2.0 * b.pp + b.qm * e2 + b.rm / e2;
    const cplx w2 = 4.0 * x * y;
    worst = std::max({worst, std::abs(x.imag()) / std::abs(x), std::abs(y.imag()) / std::abs(y),
                      std::abs(w2.imag()) / std::abs(w2)});
    const auto t = make_kappa_terms(a, b, p.psi);
    EXPECT_NEAR(t.omega_sq, w2.real(), 1e-12 * std::abs(w2));
  }
  EXPECT_LT(worst, 1e-13);
}

TEST(KappaSum, ZeroAtZeroK) {
  std::mt19937_64 gen(13);
  const auto kern = random_kernel(gen);
  const auto p = draw(gen);
  EXPECT_EQ(std::abs(kappa_sum(0.0, p.pt, kern, p.psi)), 0.0);
}

TEST(KappaSum, MatchesStraightLineTranscription) {
  std::mt19937_64 gen(14);
  int compared = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto kern = random_kernel(gen);
    const auto p = draw(gen, 3.0);
    const auto t = kappa_terms(p.k, p.pt, kern, p.psi);
    if (!(t.x > 0.0 && t.y > 0.0)) continue;  // principal-branch reference only
    const auto ref = reference::kappa_sum(p.k, p.l0, p.l1, p.l2, p.psi, kern.g_plus(0), kern.g_minus(0), kern.g_plus(2),
                                          kern.g_minus(2), kern.energy(), kern.v());
    const cplx mine = kappa_sum(t);
    worst = std::max(worst, std::abs(mine - ref.sum) / ref.scale);
    ++compared;
  }
  EXPECT_GE(compared, 900);
  EXPECT_LT(worst, 1e-12);
}

TEST(KappaSum, PsiAverageIsReal) {
  std::mt19937_64 gen(15);
  for (int i = 0; i < 200; ++i) {
    const auto kern = random_kernel(gen);
    const auto p = draw(gen, 4.0);
    double re_scale = 0.0;
    const auto mean = [&](auto part) {
      return quad::periodic_mean([&](double psi) { return part(kappa_sum(p.k, p.pt, kern, psi)); }, 256);
    };
    const double re = mean([](cplx z) { return z.real(); });
    const double im = mean([](cplx z) { return z.imag(); });
    re_scale = mean([](cplx z) { return std::abs(z); });
    EXPECT_LT(std::abs(im), 1e-10 * std::max(re_scale, std::abs(re))) << i;
  }
}

TEST(KappaSum, InvariantUnderGMinusSignFlip) {
  // both roots gamma and v^2/gamma give the same T. Flipping g- rotates the
  // phases of q and r per channel, which a joint shift of psi and arg k undoes.
  std::mt19937_64 gen(16);
  for (int i = 0; i < 30; ++i) {
    const auto kern = random_kernel(gen);
    std::vector<double> gm = kern.g_minus();
    for (double& g : gm) g = -g;
    const ChannelKernel flipped(Symmetry::orthogonal, kern.g_plus(), gm, kern.a(), kern.b(), kern.v(), kern.energy());
    const auto p = draw(gen, 4.0);
    const double kabs = std::abs(p.k);
    auto avg = [&](const ChannelKernel& k, auto part) {
      return quad::periodic_mean(
          [&](double alpha) {
            return quad::periodic_mean([&](double psi) { return part(kappa_sum(std::polar(kabs, alpha), p.pt, k, psi)); }, 96);
          },
          96);
    };
    const auto re = [](cplx z) { return z.real(); };
    const double scale = avg(kern, [](cplx z) { return std::abs(z); });
    EXPECT_NEAR(avg(kern, re), avg(flipped, re), 1e-10 * scale) << i;
  }
}

TEST(KappaSum, BandCentreFlipIsAPsiShift) {
  std::mt19937_64 gen(18);
  for (int i = 0; i < 100; ++i) {
    const ChannelKernel kern(Symmetry::orthogonal, {1.3, 2.5, 4.0}, {0.4, -1.9, 3.7}, 0, 2);
    const ChannelKernel flipped(Symmetry::orthogonal, {1.3, 2.5, 4.0}, {-0.4, 1.9, -3.7}, 0, 2);
    const auto p = draw(gen, 4.0);
    const cplx a = kappa_sum(p.k, p.pt, kern, p.psi);
    const cplx b = kappa_sum(p.k, p.pt, flipped, p.psi + std::numbers::pi / 2);
    EXPECT_LT(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(a))) << i;
  }
}

TEST(KappaSum, PsiTrapezoidConvergesSpectrally) {
  std::mt19937_64 gen(17);
  const auto kern = random_kernel(gen);
  const auto p = draw(gen, 3.0);
  auto m = [&](int n) { return quad::periodic_mean([&](double psi) { return kappa_sum(p.k, p.pt, kern, psi).real(); }, n); };
  const double m64 = m(64), m128 = m(128), m256 = m(256);
  const double c1 = std::abs(m128 - m64), c2 = std::abs(m256 - m128);
  EXPECT_TRUE(c2 <= 1e-3 * c1 || c2 < 1e-15 * std::abs(m256)) << c1 << " " << c2;
}
