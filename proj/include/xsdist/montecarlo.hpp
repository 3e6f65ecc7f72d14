#pragma once

// Monte-Carlo realisation of the Heidelberg model: Gaussian random H coupled
// to M channels through fixed orthogonal vectors W_c, with
//   S(E) = 1 - 2 pi i W^dag G(E) W,   G^{-1}(E) = E - H + i pi sum_c W_c W_c^dag.
// Serves as the independent oracle for the analytic characteristic functions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "xsdist/error.hpp"
#include "xsdist/model.hpp"
#include "xsdist/parallel.hpp"
#include "xsdist/rng.hpp"

namespace xsdist::mc {

using CMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Density proportional to exp(-beta N / (4 v^2) tr H^2):
///   beta=1: Var H_ii = 2v^2/N, Var H_ij = v^2/N
///   beta=2: Var H_ii = v^2/N,  Var Re H_ij = Var Im H_ij = v^2/(2N)
/// giving a semicircle of radius 2v.
inline CMatrix sample_hamiltonian(int n, Symmetry sym, double v, CounterRng& rng) {
  if (n < 1) throw DimensionError("N must be positive");
  CMatrix h(n, n);
  const double scale = v / std::sqrt(static_cast<double>(n));
  if (sym == Symmetry::orthogonal) {
    for (int j = 0; j < n; ++j) {
      h(j, j) = std::sqrt(2.0) * scale * rng.normal();
      for (int i = j + 1; i < n; ++i) {
        const double x = scale * rng.normal();
        h(i, j) = x;
        h(j, i) = x;
      }
    }
  } else {
    const double off = scale / std::sqrt(2.0);
    for (int j = 0; j < n; ++j) {
      h(j, j) = scale * rng.normal();
      for (int i = j + 1; i < n; ++i) {
        const double re = off * rng.normal();
        const double im = off * rng.normal();
        h(i, j) = Complex(re, im);
        h(j, i) = Complex(re, -im);
      }
    }
  }
  return h;
}

/// M mutually orthogonal columns with |W_c|^2 = gamma_c / pi, taken from the
/// orthonormalised first M columns of a Gaussian frame (real for beta=1).
inline CMatrix coupling_vectors(int n, std::span<const double> gammas, Symmetry sym, CounterRng& rng) {
  const int m = static_cast<int>(gammas.size());
  if (m > n) throw DimensionError("number of channels M exceeds Hamiltonian dimension N");
  CMatrix frame(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      frame(i, j) = sym == Symmetry::orthogonal ? Complex(rng.normal(), 0.0) : Complex(rng.normal(), rng.normal());
  Eigen::HouseholderQR<CMatrix> qr(frame);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, m);
  for (int c = 0; c < m; ++c) {
    if (!(gammas[static_cast<std::size_t>(c)] >= 0.0)) throw DomainError("partial widths must be non-negative");
    q.col(c) *= std::sqrt(gammas[static_cast<std::size_t>(c)] / std::numbers::pi);
  }
  return q;
}

/// S = 1 - 2 pi i W^dag G W, one LU solve of G^{-1} against [W_1 ... W_M].
inline CMatrix smatrix(const CMatrix& h, const CMatrix& w, double energy) {
  const auto n = h.rows();
  if (h.cols() != n || w.rows() != n) throw DimensionError("H must be N x N and W must be N x M");
  const Complex i_pi(0.0, std::numbers::pi);
  CMatrix g_inv = -h;
  g_inv.diagonal().array() += energy;
  g_inv.noalias() += i_pi * (w * w.adjoint());
  Eigen::PartialPivLU<CMatrix> lu(g_inv);
  const CMatrix x = lu.solve(w);
  if (!x.allFinite()) throw SingularSolveError("resolvent solve produced non-finite values");
  CMatrix s = CMatrix::Identity(w.cols(), w.cols());
  s.noalias() -= Complex(0.0, 2.0 * std::numbers::pi) * (w.adjoint() * x);
  return s;
}

inline double unitarity_residual(const CMatrix& s) {
  return (s * s.adjoint() - CMatrix::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff();
}

inline double symmetry_residual(const CMatrix& s) { return (s - s.transpose()).cwiseAbs().maxCoeff(); }

/// One reduced sample: diagonal blocks D_k (m_k x m_k) and couplings R_k
/// (m_{k+1} x m_k) of the block-tridiagonal form of H.
struct BlockChain {
  std::vector<CMatrix> diag;
  std::vector<CMatrix> coupling;
};

inline BlockChain sample_block_chain(int n, int m, Symmetry sym, double v, CounterRng& rng) {
  if (m < 1 || m > n) throw DimensionError("number of channels M must lie in [1, N]");
  const double scale = v / std::sqrt(static_cast<double>(n));
  const bool real = sym == Symmetry::orthogonal;
  const double off = real ? scale : scale / std::sqrt(2.0);
  auto gaussian = [&] { return real ? Complex(off * rng.normal(), 0.0) : Complex(off * rng.normal(), off * rng.normal()); };
  BlockChain chain;
  int size = m;
  int remaining = n - m;
  for (;;) {
    CMatrix d(size, size);
    for (int j = 0; j < size; ++j) {
      d(j, j) = (real ? std::sqrt(2.0) : 1.0) * scale * rng.normal();
      for (int i = j + 1; i < size; ++i) {
        d(i, j) = gaussian();
        d(j, i) = std::conj(d(i, j));
      }
    }
    chain.diag.push_back(std::move(d));
    if (remaining == 0) break;
    const int next = std::min(size, remaining);
    CMatrix r = CMatrix::Zero(next, size);
    for (int i = 0; i < next; ++i) {
      // |column|^2 of the remaining Gaussian rows: off^2 chi^2 with beta*(rows) dof.
      r(i, i) = off * rng.chi((real ? 1 : 2) * (remaining - i));
      for (int j = i + 1; j < size; ++j) r(i, j) = gaussian();
    }
    chain.coupling.push_back(std::move(r));
    remaining -= next;
    size = next;
  }
  return chain;
}

namespace detail {

inline CMatrix s_from_resolvent(const CMatrix& g11, std::span<const double> gammas) {
  const auto m = static_cast<Eigen::Index>(gammas.size());
  Eigen::VectorXd root(m);
  for (Eigen::Index c = 0; c < m; ++c) root(c) = std::sqrt(gammas[static_cast<std::size_t>(c)]);
  CMatrix s = CMatrix::Identity(m, m);
  s.noalias() -= Complex(0.0, 2.0) * (root.asDiagonal() * g11 * root.asDiagonal());
  return s;
}

// Sparse LU of the whole damped chain. Slower than the Schur recursion but
// free of its cancellation when an inner sub-chain is close to resonance.
inline CMatrix smatrix_block_sparse(const BlockChain& chain, std::span<const double> gammas, double energy) {
  std::vector<Eigen::Index> offset{0};
  for (const auto& d : chain.diag) offset.push_back(offset.back() + d.rows());
  std::vector<Eigen::Triplet<Complex>> entries;
  for (std::size_t k = 0; k < chain.diag.size(); ++k) {
    const auto& d = chain.diag[k];
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      for (Eigen::Index i = 0; i < d.rows(); ++i) {
        Complex a = -d(i, j);
        if (i == j) a += energy;
        if (k == 0 && i == j && static_cast<std::size_t>(i) < gammas.size()) a += Complex(0.0, gammas[static_cast<std::size_t>(i)]);
        entries.emplace_back(offset[k] + i, offset[k] + j, a);
      }
    if (k < chain.coupling.size()) {
      const auto& r = chain.coupling[k];
      for (Eigen::Index i = 0; i < r.rows(); ++i)
        for (Eigen::Index j = 0; j < r.cols(); ++j) {
          entries.emplace_back(offset[k + 1] + i, offset[k] + j, -r(i, j));
          entries.emplace_back(offset[k] + j, offset[k + 1] + i, -std::conj(r(i, j)));
        }
    }
  }
  Eigen::SparseMatrix<Complex> a(offset.back(), offset.back());
  a.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu(a);
  if (lu.info() != Eigen::Success) throw SingularSolveError("sparse LU of the block chain failed");
  const auto m = static_cast<Eigen::Index>(gammas.size());
  const CMatrix g = lu.solve(CMatrix::Identity(offset.back(), m));
  if (!g.allFinite()) throw SingularSolveError("block chain solve produced non-finite values");
  return s_from_resolvent(g.topRows(m), gammas);
}

}  // namespace detail

/// Residual above which a recursion result is recomputed by sparse LU.
inline constexpr double kBlockRecheck = 1e-12;

/// S from a block chain with channel c coupled to basis vector c of the first
/// block: G_11 by backward Schur complements, S = 1 - 2i Gamma^{1/2} G_11 Gamma^{1/2}.
/// Samples whose S fails the unitarity (or, for real chains, symmetry) check at
/// kBlockRecheck are redone by sparse LU; this hits well under 1% of samples.
inline CMatrix smatrix_block(const BlockChain& chain, std::span<const double> gammas, double energy,
                             bool real_symmetric = false) {
  const auto k_last = chain.diag.size() - 1;
  CMatrix sigma;
  for (std::size_t k = k_last + 1; k-- > 0;) {
    CMatrix a = -chain.diag[k];
    a.diagonal().array() += energy;
    if (k < k_last) a.noalias() -= chain.coupling[k].adjoint() * sigma * chain.coupling[k];
    if (k == 0)
      for (std::size_t c = 0; c < gammas.size(); ++c) a(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) += Complex(0.0, gammas[c]);
    sigma = Eigen::PartialPivLU<CMatrix>(a).inverse();
    if (!sigma.allFinite()) return detail::smatrix_block_sparse(chain, gammas, energy);
  }
  CMatrix s = detail::s_from_resolvent(sigma, gammas);
  const double res = std::max(unitarity_residual(s), real_symmetric ? symmetry_residual(s) : 0.0);
  return res > kBlockRecheck ? detail::smatrix_block_sparse(chain, gammas, energy) : s;
}

/// Partial widths of a config, with transmission-specified channels mapped
/// through the smaller-root convention.
inline std::vector<double> partial_widths(const ScatteringConfig& cfg) {
  std::vector<double> out;
  for (const auto& ch : cfg.channels)
    out.push_back(ch.kind == ChannelCoupling::Kind::partial_width ? ch.value
                                                                   : gamma_from_transmission(ch.value, cfg.v, cfg.E));
  return out;
}

/// dense: literal N x N Hamiltonian and one LU solve per sample.
/// block_tridiagonal: the same ensemble after block Householder reduction
/// with the channel frame as the first block. Invariance of the ensemble makes
/// the reduced matrix exact in distribution: diagonal blocks are small
/// GOE/GUE matrices, off-diagonal blocks are the R factors of Gaussian
/// matrices (chi-distributed diagonal, Gaussian upper triangle). Cost O(N M^2).
enum class Engine { dense, block_tridiagonal };

struct EnsembleOptions {
  Engine engine = Engine::dense;
  int threads = 1;
  bool keep_full_matrices = false;
  std::vector<double> energies;  // empty: {config.E}
  int max_retries = 8;
  double unitarity_bound = 1e-8;
};

struct EnsembleDiagnostics {
  double max_unitarity_residual = 0.0;
  double max_symmetry_residual = 0.0;   // beta=1 only
  long unitarity_failures = 0;          // samples above the bound
  long singular_retries = 0;
};

struct EnsembleRun {
  ScatteringConfig config;
  int n = 0;
  long n_samples = 0;
  std::uint64_t seed = 0;
  std::vector<double> energies;
  CMatrix coupling;  // fixed W frame, N x M (dense engine only)
  // Sample-major storage: index = sample * energies.size() + energy_index.
  std::vector<Complex> s_ab;
  std::vector<Complex> s_diag;  // (... ) * M + c
  std::vector<CMatrix> full;    // only when requested
  EnsembleDiagnostics diagnostics;
  Engine engine = Engine::dense;

  /// Contiguous copy of S_ab at one energy.
  std::vector<Complex> samples_at(std::size_t energy_index = 0) const {
    std::vector<Complex> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    for (long s = 0; s < n_samples; ++s) out.push_back(s_ab[static_cast<std::size_t>(s) * energies.size() + energy_index]);
    return out;
  }
};

/// Stream id reserved for the coupling frame; per-sample streams use the
/// sample index (retries are offset into the upper half of the id space).
inline constexpr std::uint64_t kFrameStream = ~std::uint64_t{0};
inline constexpr std::uint64_t kRetryStride = std::uint64_t{1} << 40;

inline EnsembleRun run_ensemble(const ScatteringConfig& cfg, int n, long n_samples, std::uint64_t seed,
                                const EnsembleOptions& opts = {}) {
  cfg.validate();
  if (n_samples < 1) throw DomainError("n_samples must be positive");
  EnsembleRun run;
  run.config = cfg;
  run.n = n;
  run.n_samples = n_samples;
  run.seed = seed;
  run.engine = opts.engine;
  run.energies = opts.energies.empty() ? std::vector<double>{cfg.E} : opts.energies;
  const int m = cfg.num_channels();
  const auto n_e = run.energies.size();
  const auto gammas = partial_widths(cfg);
  if (m > n) throw DimensionError("number of channels M exceeds Hamiltonian dimension N");
  const bool dense = opts.engine == Engine::dense;
  if (dense) {
    CounterRng frame_rng(seed, kFrameStream);
    run.coupling = coupling_vectors(n, gammas, cfg.symmetry, frame_rng);
  }
  run.s_ab.resize(static_cast<std::size_t>(n_samples) * n_e);
  run.s_diag.resize(static_cast<std::size_t>(n_samples) * n_e * static_cast<std::size_t>(m));
  if (opts.keep_full_matrices) run.full.resize(static_cast<std::size_t>(n_samples) * n_e);

  const int threads = std::max(1, opts.threads);
  const auto total = static_cast<std::size_t>(n_samples);
  // Worker-local diagnostics, merged in chunk order afterwards.
  std::mutex slot_guard;
  std::vector<std::pair<std::size_t, EnsembleDiagnostics>> partials;
  parallel_chunks(total, threads, [&](std::size_t begin, std::size_t end) {
    EnsembleDiagnostics diag;
    for (std::size_t s = begin; s < end; ++s) {
      for (int attempt = 0;; ++attempt) {
        try {
          CounterRng rng(seed, s + static_cast<std::uint64_t>(attempt) * kRetryStride);
          CMatrix h;
          BlockChain chain;
          if (dense)
            h = sample_hamiltonian(n, cfg.symmetry, cfg.v, rng);
          else
            chain = sample_block_chain(n, m, cfg.symmetry, cfg.v, rng);
          for (std::size_t e = 0; e < n_e; ++e) {
            const CMatrix sm = dense ? smatrix(h, run.coupling, run.energies[e]) : smatrix_block(chain, gammas, run.energies[e], cfg.symmetry == Symmetry::orthogonal);
            const double ures = unitarity_residual(sm);
            diag.max_unitarity_residual = std::max(diag.max_unitarity_residual, ures);
            if (ures > opts.unitarity_bound) ++diag.unitarity_failures;
            if (cfg.symmetry == Symmetry::orthogonal)
              diag.max_symmetry_residual = std::max(diag.max_symmetry_residual, symmetry_residual(sm));
            const std::size_t slot = s * n_e + e;
            run.s_ab[slot] = sm(cfg.a - 1, cfg.b - 1);
            for (int c = 0; c < m; ++c) run.s_diag[slot * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)] = sm(c, c);
            if (opts.keep_full_matrices) run.full[slot] = sm;
          }
          break;
        } catch (const SingularSolveError&) {
          ++diag.singular_retries;
          if (attempt >= opts.max_retries) throw;
        }
      }
    }
    std::lock_guard lock(slot_guard);
    partials.emplace_back(begin, diag);
  });
  std::sort(partials.begin(), partials.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [begin, d] : partials) {
    auto& agg = run.diagnostics;
    agg.max_unitarity_residual = std::max(agg.max_unitarity_residual, d.max_unitarity_residual);
    agg.max_symmetry_residual = std::max(agg.max_symmetry_residual, d.max_symmetry_residual);
    agg.unitarity_failures += d.unitarity_failures;
    agg.singular_retries += d.singular_retries;
  }
  return run;
}

struct TransmissionEstimate {
  std::vector<double> value;
  std::vector<double> std_error;
};

/// T_c = 1 - |<S_cc>|^2 (ensemble-averaged convention) with a bootstrap
/// standard error over `n_boot` resamples.
inline TransmissionEstimate empirical_transmission(const EnsembleRun& run, std::size_t energy_index = 0,
                                                   int n_boot = 200, std::uint64_t boot_seed = 0x5eed) {
  const int m = run.config.num_channels();
  const auto n_e = run.energies.size();
  const auto ns = static_cast<std::size_t>(run.n_samples);
  auto diag = [&](std::size_t s, int c) {
    return run.s_diag[(s * n_e + energy_index) * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)];
  };
  TransmissionEstimate out;
  for (int c = 0; c < m; ++c) {
    Complex mean{0.0, 0.0};
    for (std::size_t s = 0; s < ns; ++s) mean += diag(s, c);
    mean /= static_cast<double>(ns);
    out.value.push_back(1.0 - std::norm(mean));
  }
  std::vector<double> sum(static_cast<std::size_t>(m), 0.0), sum_sq(static_cast<std::size_t>(m), 0.0);
  for (int b = 0; b < n_boot; ++b) {
    CounterRng rng(boot_seed, static_cast<std::uint64_t>(b));
    std::vector<Complex> mean(static_cast<std::size_t>(m), Complex{0.0, 0.0});
    for (std::size_t s = 0; s < ns; ++s) {
      const auto pick = std::min(ns - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(ns)));
      for (int c = 0; c < m; ++c) mean[static_cast<std::size_t>(c)] += diag(pick, c);
    }
    for (int c = 0; c < m; ++c) {
      const double t = 1.0 - std::norm(mean[static_cast<std::size_t>(c)] / static_cast<double>(ns));
      sum[static_cast<std::size_t>(c)] += t;
      sum_sq[static_cast<std::size_t>(c)] += t * t;
    }
  }
  for (int c = 0; c < m; ++c) {
    const double mu = sum[static_cast<std::size_t>(c)] / n_boot;
    out.std_error.push_back(std::sqrt(std::max(0.0, sum_sq[static_cast<std::size_t>(c)] / n_boot - mu * mu)));
  }
  return out;
}

}  // namespace xsdist::mc
