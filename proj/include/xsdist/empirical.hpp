#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "xsdist/error.hpp"

namespace xsdist {

struct WaveVector {
  double k1 = 0.0;
  double k2 = 0.0;
};

struct CharfuncEstimate {
  WaveVector k;
  std::complex<double> value;
  double std_error = 0.0;  // standard error of the complex mean, sqrt(E|z-mean|^2 / n)
};

/// Sample mean of exp(-i k1 Re s - i k2 Im s) with its standard error.
inline std::vector<CharfuncEstimate> empirical_charfunc(std::span<const std::complex<double>> samples,
                                                        std::span<const WaveVector> grid) {
  if (samples.empty()) throw DomainError("empirical characteristic function needs at least one sample");
  const double n = static_cast<double>(samples.size());
  std::vector<CharfuncEstimate> out;
  out.reserve(grid.size());
  for (const auto& k : grid) {
    if (k.k1 == 0.0 && k.k2 == 0.0) {
      out.push_back({k, {1.0, 0.0}, 0.0});
      continue;
    }
    std::complex<double> sum{0.0, 0.0};
    double sum_sq = 0.0;  // |z|^2 = 1 for every term
    for (const auto& s : samples) {
      const double phase = -(k.k1 * s.real() + k.k2 * s.imag());
      sum += std::complex<double>(std::cos(phase), std::sin(phase));
      sum_sq += 1.0;
    }
    const auto mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - std::norm(mean));
    out.push_back({k, mean, samples.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0});
  }
  return out;
}

}  // namespace xsdist
