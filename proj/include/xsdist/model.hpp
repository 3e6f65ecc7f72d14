#pragma once

// Physical parameters of the Heidelberg scattering model and the
// coupling-strength conversions shared by every other component.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "xsdist/error.hpp"

namespace xsdist {

enum class Symmetry : int { orthogonal = 1, unitary = 2 };

inline int dyson_index(Symmetry s) { return static_cast<int>(s); }

/// One channel, specified either by its transmission coefficient or by its
/// partial width.
struct ChannelCoupling {
  enum class Kind { transmission, partial_width };

  Kind kind = Kind::transmission;
  double value = 1.0;

  static ChannelCoupling from_transmission(double t) { return {Kind::transmission, t}; }
  static ChannelCoupling from_gamma(double g) { return {Kind::partial_width, g}; }
};

struct ScatteringConfig {
  Symmetry symmetry = Symmetry::orthogonal;
  std::vector<ChannelCoupling> channels;
  double v = 1.0;
  double E = 0.0;
  int a = 1;  // 1-based channel indices of the observed element S_ab
  int b = 2;

  int beta() const { return dyson_index(symmetry); }
  int num_channels() const { return static_cast<int>(channels.size()); }

  /// Throws DomainError naming the violated invariant.
  void validate() const {
    if (channels.size() < 2) throw DomainError("M must be at least 2");
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("v must be positive");
    if (!(std::abs(E) < 2.0 * v)) throw DomainError("|E| must be below 2v");
    const int m = num_channels();
    if (a < 1 || a > m || b < 1 || b > m) throw DomainError("channel index a or b out of range 1..M");
    if (a == b) throw DomainError("a and b must differ (off-diagonal element)");
    for (std::size_t c = 0; c < channels.size(); ++c) {
      const auto& ch = channels[c];
      const std::string where = "channel " + std::to_string(c + 1);
      if (ch.kind == ChannelCoupling::Kind::transmission) {
        if (!(ch.value > 0.0 && ch.value <= 1.0)) throw DomainError(where + ": T must lie in (0,1]");
      } else if (!(ch.value > 0.0) || !std::isfinite(ch.value)) {
        throw DomainError(where + ": gamma must be positive");
      }
    }
  }
};

/// Convenience: M identical channels with transmission `t`.
inline ScatteringConfig uniform_config(Symmetry s, int m, double t, double e = 0.0) {
  ScatteringConfig cfg;
  cfg.symmetry = s;
  cfg.channels.assign(static_cast<std::size_t>(m), ChannelCoupling::from_transmission(t));
  cfg.E = e;
  return cfg;
}

inline double semicircle_width(double v, double e) {
  if (!(std::abs(e) < 2.0 * v)) throw DomainError("|E| must be below 2v");
  return std::sqrt(4.0 * v * v - e * e);
}

inline double g_plus_from_transmission(double t) {
  if (!(t > 0.0 && t <= 1.0)) throw DomainError("transmission must lie in (0,1]");
  return 2.0 / t - 1.0;
}

inline double transmission_from_g_plus(double g_plus) { return 2.0 / (g_plus + 1.0); }

struct CouplingPair {
  double g_plus;
  double g_minus;
};

inline CouplingPair g_pm_from_gamma(double gamma, double v, double e) {
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
  const double s = semicircle_width(v, e);
  const double v2 = v * v;
  const double g2 = gamma * gamma;
  return {(v2 + g2) / (gamma * s), (v2 - g2) / (gamma * s)};
}

/// Smaller positive root gamma of (v^2+gamma^2)/(gamma sqrt(4v^2-E^2)) = 2/T-1.
/// The other root is v^2/gamma and yields the same T with g_minus negated.
inline double gamma_from_transmission(double t, double v, double e) {
  const double g = g_plus_from_transmission(t);
  const double s = semicircle_width(v, e);
  const double gs = g * s;
  const double disc = gs * gs - 4.0 * v * v;
  if (disc < 0.0) {
    // Only possible off band centre: min over gamma of g_plus is 2v/s > 1.
    throw DomainError("transmission too large for this energy: 2/T-1 must be at least 2v/sqrt(4v^2-E^2)");
  }
  const double larger = 0.5 * (gs + std::sqrt(disc));
  return v * v / larger;
}

/// Per-channel g_c^+ and g_c^- derived from a validated config, plus the
/// energy-dependent prefactor E/sqrt(4v^2-E^2). Immutable after construction.
class ChannelKernel {
public:
  explicit ChannelKernel(const ScatteringConfig& cfg)
      : symmetry_(cfg.symmetry), v_(cfg.v), e_(cfg.E), a_(cfg.a - 1), b_(cfg.b - 1) {
    cfg.validate();
    energy_ratio_ = e_ / semicircle_width(v_, e_);
    g_plus_.reserve(cfg.channels.size());
    g_minus_.reserve(cfg.channels.size());
    for (const auto& ch : cfg.channels) {
      const double gamma = ch.kind == ChannelCoupling::Kind::partial_width
                               ? ch.value
                               : gamma_from_transmission(ch.value, v_, e_);
      const auto pm = g_pm_from_gamma(gamma, v_, e_);
      // Keep g+ bit-exact with 2/T-1 for transmission-specified channels.
      g_plus_.push_back(ch.kind == ChannelCoupling::Kind::transmission ? g_plus_from_transmission(ch.value)
                                                                       : pm.g_plus);
      g_minus_.push_back(pm.g_minus);
    }
  }

  /// Direct construction from (g+, g-) lists; a and b are 0-based here.
  ChannelKernel(Symmetry s, std::vector<double> g_plus, std::vector<double> g_minus, int a, int b,
                double v = 1.0, double e = 0.0)
      : symmetry_(s), v_(v), e_(e), a_(a), b_(b), g_plus_(std::move(g_plus)), g_minus_(std::move(g_minus)) {
    if (g_plus_.size() != g_minus_.size() || g_plus_.size() < 2) throw DimensionError("need matching g+/g- lists, M>=2");
    if (a_ < 0 || b_ < 0 || a_ >= num_channels() || b_ >= num_channels() || a_ == b_)
      throw DomainError("invalid channel indices");
    for (double g : g_plus_)
      if (!(g >= 1.0)) throw DomainError("g+ must be at least 1");
    energy_ratio_ = e_ / semicircle_width(v_, e_);
  }

  Symmetry symmetry() const { return symmetry_; }
  int num_channels() const { return static_cast<int>(g_plus_.size()); }
  int a() const { return a_; }
  int b() const { return b_; }
  double v() const { return v_; }
  double energy() const { return e_; }
  double energy_ratio() const { return energy_ratio_; }
  const std::vector<double>& g_plus() const { return g_plus_; }
  const std::vector<double>& g_minus() const { return g_minus_; }
  double g_plus(int c) const { return g_plus_[static_cast<std::size_t>(c)]; }
  double g_minus(int c) const { return g_minus_[static_cast<std::size_t>(c)]; }
  double min_g_plus() const {
    double m = g_plus_.front();
    for (double g : g_plus_) m = g < m ? g : m;
    return m;
  }

  std::vector<double> transmissions() const {
    std::vector<double> t;
    t.reserve(g_plus_.size());
    for (double g : g_plus_) t.push_back(transmission_from_g_plus(g));
    return t;
  }

private:
  Symmetry symmetry_;
  double v_;
  double e_;
  int a_;
  int b_;
  double energy_ratio_ = 0.0;
  std::vector<double> g_plus_;
  std::vector<double> g_minus_;
};

}  // namespace xsdist
