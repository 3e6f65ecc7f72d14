#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <vector>

#include "xsdist/rng.hpp"
#include "xsdist/stats.hpp"

using namespace xsdist;
using namespace xsdist::stats;

TEST(Kolmogorov, KnownQuantiles) {
  EXPECT_NEAR(kolmogorov_q(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(kolmogorov_q(1.6276), 0.01, 1e-4);
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
  EXPECT_LT(kolmogorov_q(5.0), 1e-20);
}

TEST(KsOneSample, UniformSamplesPass) {
  CounterRng rng(1, 0);
  std::vector<double> x(5000);
  for (auto& v : x) v = rng.uniform();
  const auto r = ks_one_sample(x, [](double t) { return t; });
  EXPECT_GT(r.p_value, 1e-3);
  EXPECT_LT(r.statistic, ks_critical_value(5000, 1e-3));
}

TEST(KsOneSample, ShiftedSamplesFail) {
  CounterRng rng(2, 0);
  std::vector<double> x(5000);
  for (auto& v : x) v = std::min(1.0, rng.uniform() + 0.05);
  EXPECT_LT(ks_one_sample(x, [](double t) { return std::clamp(t, 0.0, 1.0); }).p_value, 1e-6);
}

TEST(KsTwoSample, SameAndDifferentDistributions) {
  CounterRng rng(3, 0);
  std::vector<double> a(3000), b(4000), c(4000);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  for (auto& v : c) v = 1.3 * rng.normal();
  EXPECT_GT(ks_two_sample(a, b).p_value, 1e-3);
  EXPECT_NEAR(ks_two_sample(a, b).n_effective, 3000.0 * 4000 / 7000, 1e-9);
  EXPECT_LT(ks_two_sample(a, c).p_value, 1e-4);
}

TEST(KsCriticalValue, InvertsPValue) {
  for (double n : {20.0, 400.0, 1e5})
    for (double alpha : {0.1, 0.01}) EXPECT_NEAR(ks_p_value(ks_critical_value(n, alpha), n), alpha, 1e-10);
}

TEST(ChiSquare, StatisticDofAndPValue) {
  const std::vector<double> obs{12, 8, 10, 10, 30}, exp{10, 10, 10, 10, 1};
  const auto r = chi_square(obs, exp);
  EXPECT_EQ(r.bins_used, 4);
  EXPECT_EQ(r.dof, 3);
  EXPECT_NEAR(r.statistic, 0.8, 1e-12);
  EXPECT_NEAR(r.p_value, 0.849467, 1e-6);
  EXPECT_THROW(chi_square(obs, std::vector<double>{1, 2}), DimensionError);
  EXPECT_THROW(chi_square(std::vector<double>{1, 2}, std::vector<double>{1, 6}), DomainError);
}
