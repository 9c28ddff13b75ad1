#ifndef CLAB_MODEL_HPP
#define CLAB_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "clab/linalg.hpp"
#include "clab/rng.hpp"
#include "clab/types.hpp"

namespace clab {

// Disorder ensembles and Hamiltonian assembly for the chiral strip
//   (H psi)_n = T_{n+1}^* psi_{n+1} + T_n psi_{n-1} (+ V_n psi_n),
// with even-site hoppings drawn from alpha0 and odd-site from alpha1.

struct DistributionSpec {
  enum class Kind { Ginibre, DiagonalComplexUniform, ShiftedGinibre };

  Kind kind = Kind::Ginibre;
  double sigma = 1.0;       // Ginibre / ShiftedGinibre entry scale, E|entry|^2 = sigma^2
  double radius_min = 1.0;  // DiagonalComplexUniform modulus range
  double radius_max = 1.0;
  CMatrix base;             // ShiftedGinibre offset
  double resample_threshold = 1e-8;

  static DistributionSpec ginibre(double s) {
    DistributionSpec d;
    d.kind = Kind::Ginibre;
    d.sigma = s;
    return d;
  }
  static DistributionSpec diagonal_uniform(double rmin, double rmax) {
    DistributionSpec d;
    d.kind = Kind::DiagonalComplexUniform;
    d.radius_min = rmin;
    d.radius_max = rmax;
    return d;
  }
  static DistributionSpec shifted_ginibre(CMatrix base, double s) {
    DistributionSpec d;
    d.kind = Kind::ShiftedGinibre;
    d.base = std::move(base);
    d.sigma = s;
    return d;
  }
};

struct OnsiteSpec {
  double gue_scale = 1.0;  // E|offdiag|^2 = gue_scale^2
};

struct ModelConfig {
  int n_internal = 1;
  DistributionSpec alpha0 = DistributionSpec::ginibre(1.0);
  DistributionSpec alpha1 = DistributionSpec::ginibre(1.0);
  std::optional<OnsiteSpec> onsite;  // present: Wegner W-orbital variant
  std::uint64_t seed = 0;

  bool chiral() const { return !onsite.has_value(); }
};

inline CMatrix sample_raw(const DistributionSpec& spec, int n, RngStream& rng) {
  CMatrix t = CMatrix::Zero(n, n);
  switch (spec.kind) {
    case DistributionSpec::Kind::Ginibre:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t(i, j) = spec.sigma * rng.next_complex_normal();
      break;
    case DistributionSpec::Kind::DiagonalComplexUniform:
      for (int i = 0; i < n; ++i) {
        double r = spec.radius_min + (spec.radius_max - spec.radius_min) * rng.next_double();
        double phi = 2.0 * std::numbers::pi * rng.next_double();
        t(i, i) = Complex(r * std::cos(phi), r * std::sin(phi));
      }
      break;
    case DistributionSpec::Kind::ShiftedGinibre:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t(i, j) = spec.sigma * rng.next_complex_normal();
      t += spec.base;
      break;
  }
  return t;
}

/// Draw one hopping block; rejection keeps the smallest singular value above
/// the spec threshold so T^o stays well defined.
inline CMatrix sample_hopping(const DistributionSpec& spec, int n_internal, RngStream& rng,
                              int* resamples = nullptr) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    CMatrix t = sample_raw(spec, n_internal, rng);
    // Cheap sufficient test first: sigma_min = 1/||t^-1||_2 >= 1/||t^-1||_F,
    // so a moderate inverse Frobenius norm certifies the draw without an SVD.
    Eigen::PartialPivLU<CMatrix> lu(t);
    double inv_fro = lu.inverse().norm();
    bool ok = std::isfinite(inv_fro) && inv_fro * spec.resample_threshold <= 1.0;
    if (!ok) ok = smallest_singular_value(t) >= spec.resample_threshold;
    if (ok) {
      if (resamples) *resamples = attempt;
      return t;
    }
  }
  throw ResampleLimit("sample_hopping: 100 consecutive rejections");
}

/// Hermitian GUE-type block: (A + A*)/2 with A Ginibre(scale * sqrt(2)), so
/// off-diagonal entries have E|entry|^2 = scale^2.
inline CMatrix sample_gue(double scale, int n, RngStream& rng) {
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = scale * std::sqrt(2.0) * rng.next_complex_normal();
  return 0.5 * (a + CMatrix(a.adjoint()));
}

inline int parity_of(long n) { return static_cast<int>(((n % 2) + 2) % 2); }

struct Realization {
  long a = 1, b = 0;            // window [a, b]
  int n_internal = 1;
  std::vector<CMatrix> hopping;  // T_n, n = a..b
  std::vector<CMatrix> onsite;   // V_n, empty in the chiral case
  std::uint64_t master_seed = 0;
  std::uint64_t index = 0;
  long resample_total = 0;

  long size() const { return b - a + 1; }
  const CMatrix& t(long n) const {
    if (n < a || n > b) throw WindowMismatch("Realization::t: site outside window");
    return hopping[static_cast<std::size_t>(n - a)];
  }
  const CMatrix& v(long n) const {
    if (onsite.empty()) throw NotChiral("Realization::v: chiral realization has no onsite");
    if (n < a || n > b) throw WindowMismatch("Realization::v: site outside window");
    return onsite[static_cast<std::size_t>(n - a)];
  }
};

/// Deterministic in (seed, index, window): each T_n draws from its own stream
/// keyed by (master seed, realization index, n, parity), so any sub-window of
/// a larger window reproduces the same blocks.
inline Realization sample_realization(const ModelConfig& config, long a, long b,
                                      std::uint64_t realization_index) {
  if (b < a) throw WindowMismatch("sample_realization: empty window");
  Realization r;
  r.a = a;
  r.b = b;
  r.n_internal = config.n_internal;
  r.master_seed = config.seed;
  r.index = realization_index;
  r.hopping.reserve(static_cast<std::size_t>(b - a + 1));
  for (long n = a; n <= b; ++n) {
    int par = parity_of(n);
    const DistributionSpec& spec = (par == 0) ? config.alpha0 : config.alpha1;
    RngStream rng(derive_seed(config.seed, realization_index, n, static_cast<std::uint64_t>(par)));
    int resamples = 0;
    r.hopping.push_back(sample_hopping(spec, config.n_internal, rng, &resamples));
    r.resample_total += resamples;
  }
  if (config.onsite) {
    r.onsite.reserve(static_cast<std::size_t>(b - a + 1));
    for (long n = a; n <= b; ++n) {
      RngStream rng(derive_seed(config.seed, realization_index, n, 2));
      r.onsite.push_back(sample_gue(config.onsite->gue_scale, config.n_internal, rng));
    }
  }
  return r;
}

struct FiniteHamiltonian {
  long a = 1, b = 0;
  int n_internal = 1;
  CMatrix h;  // order n_internal * (b - a + 1), block tridiagonal, Hermitian
  bool chiral = true;

  long sites() const { return b - a + 1; }
  Eigen::Index offset(long n) const {
    if (n < a || n > b) throw WindowMismatch("FiniteHamiltonian: site outside window");
    return static_cast<Eigen::Index>(n - a) * n_internal;
  }
  CMatrix block(long x, long y) const {
    return h.block(offset(x), offset(y), n_internal, n_internal);
  }
};

/// Dirichlet restriction H_[a,b]: block (n, n-1) = T_n for n = a+1..b,
/// block (n-1, n) = T_n^*, diagonal V_n (zero when chiral). T_a is unused.
inline FiniteHamiltonian assemble_hamiltonian(const Realization& r, long a, long b) {
  if (a < r.a || b > r.b || b < a) throw WindowMismatch("assemble_hamiltonian: window not covered");
  const int nn = r.n_internal;
  FiniteHamiltonian fh;
  fh.a = a;
  fh.b = b;
  fh.n_internal = nn;
  fh.chiral = r.onsite.empty();
  const Eigen::Index dim = static_cast<Eigen::Index>(b - a + 1) * nn;
  fh.h = CMatrix::Zero(dim, dim);
  for (long n = a + 1; n <= b; ++n) {
    Eigen::Index i = fh.offset(n), j = fh.offset(n - 1);
    fh.h.block(i, j, nn, nn) = r.t(n);
    fh.h.block(j, i, nn, nn) = r.t(n).adjoint();
  }
  if (!r.onsite.empty())
    for (long n = a; n <= b; ++n) fh.h.block(fh.offset(n), fh.offset(n), nn, nn) = r.v(n);
  return fh;
}

inline FiniteHamiltonian assemble_hamiltonian(const Realization& r) {
  return assemble_hamiltonian(r, r.a, r.b);
}

/// Chirality operator (-1)^X as a sign per site block.
inline RVector chirality_signs(const FiniteHamiltonian& h) {
  RVector s(h.h.rows());
  for (long n = h.a; n <= h.b; ++n) {
    double sign = (parity_of(n) == 0) ? 1.0 : -1.0;
    for (int i = 0; i < h.n_internal; ++i) s[h.offset(n) + i] = sign;
  }
  return s;
}

struct BlochData {
  Eigen::MatrixXd singulars;  // k_grid x N, singular values of A e^{-ik} + B
  double min_singular = 0.0;  // refined inf_k s_min(k): gap estimate of |H|
};

inline RVector bloch_singulars_at(const CMatrix& A, const CMatrix& B, double k) {
  Complex phase(std::cos(k), -std::sin(k));
  return singular_values(CMatrix(A * phase + B)).values;
}

/// Bloch decomposition of the 2-periodic chain with even hoppings A and odd
/// hoppings B: sigma(H^2) = union_k sigma(|S(k)|^2), S(k) = A e^{-ik} + B.
inline BlochData bloch_spectrum(const CMatrix& A, const CMatrix& B, int k_grid) {
  if (k_grid < 2) throw Error("bloch_spectrum: k_grid must be >= 2");
  const int n = static_cast<int>(A.rows());
  BlochData out;
  out.singulars.resize(k_grid, n);
  double best = std::numeric_limits<double>::infinity();
  double best_k = 0.0;
  for (int j = 0; j < k_grid; ++j) {
    double k = 2.0 * std::numbers::pi * j / k_grid;
    RVector s = bloch_singulars_at(A, B, k);
    for (int i = 0; i < n; ++i) out.singulars(j, i) = s[i];
    double smin = s[n - 1];
    if (smin < best) {
      best = smin;
      best_k = k;
    }
  }
  // local refinement around the grid minimizer, so the reported infimum is
  // not limited by grid resolution
  double lo = best_k - 2.0 * std::numbers::pi / k_grid;
  double hi = best_k + 2.0 * std::numbers::pi / k_grid;
  for (int it = 0; it < 200; ++it) {
    double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    double f1 = bloch_singulars_at(A, B, m1)[n - 1];
    double f2 = bloch_singulars_at(A, B, m2)[n - 1];
    if (f1 < f2) hi = m2; else lo = m1;
    best = std::min(best, std::min(f1, f2));
  }
  out.min_singular = best;
  return out;
}

/// Right-hand side of the periodic gap lemma:
/// ||A|| ||B|| dist(sigma(|A^{-1}B|), 1) dist(sigma(|AB^{-1}|), 1),
/// an upper bound on inf sigma(H^2) for the 2-periodic chain.
inline double periodic_gap_bound(const CMatrix& A, const CMatrix& B) {
  if (smallest_singular_value(A) <= 0 || smallest_singular_value(B) <= 0)
    throw SingularHopping("periodic_gap_bound: A, B must be invertible");
  auto dist_to_one = [](const RVector& vals) {
    double d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < vals.size(); ++i) d = std::min(d, std::abs(vals[i] - 1.0));
    return d;
  };
  RVector s1 = singular_values(CMatrix(inverse(A) * B)).values;
  RVector s2 = singular_values(CMatrix(A * inverse(B))).values;
  return operator_norm(A) * operator_norm(B) * dist_to_one(s1) * dist_to_one(s2);
}

}  // namespace clab

#endif
