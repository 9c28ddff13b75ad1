#ifndef CLAB_GREENS_HPP
#define CLAB_GREENS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "clab/fit.hpp"
#include "clab/linalg.hpp"
#include "clab/lyapunov.hpp"
#include "clab/model.hpp"
#include "clab/parallel.hpp"
#include "clab/transfer.hpp"
#include "clab/types.hpp"

namespace clab {

// Finite-volume Green's functions G_[a,b](x,y;z) = <delta_x, (H_[a,b]-z)^{-1} delta_y>
// from direct block solves, the zero-energy closed form, and the fractional
// moment Monte Carlo diagnostics. Block norms use the trace norm throughout.

struct GreensTable {
  long a = 1, b = 0;
  Complex z;
  std::map<std::pair<long, long>, CMatrix> entries;

  const CMatrix& at(long x, long y) const {
    auto it = entries.find({x, y});
    if (it == entries.end()) throw WindowMismatch("GreensTable::at: pair not computed");
    return it->second;
  }
};

/// Blocks of (H - z)^{-1} at the requested (x, y) pairs; one LU, one column
/// solve per distinct y.
inline GreensTable greens_finite(const FiniteHamiltonian& h, Complex z,
                                 const std::vector<std::pair<long, long>>& pairs) {
  const int nn = h.n_internal;
  const Eigen::Index dim = h.h.rows();
  CMatrix m = h.h - z * CMatrix::Identity(dim, dim);
  Eigen::PartialPivLU<CMatrix> lu(m);
  double rc = lu.rcond();
  if (z.imag() == 0.0 && (!(rc > 0.0) || rc * tol_scale(m) < 1e-10))
    throw NearSingular("greens_finite: real z within ~1e-10 of the finite-volume spectrum");
  std::set<long> cols;
  for (const auto& p : pairs) cols.insert(p.second);
  GreensTable table;
  table.a = h.a;
  table.b = h.b;
  table.z = z;
  std::map<long, CMatrix> col_blocks;
  for (long y : cols) {
    CMatrix rhs = CMatrix::Zero(dim, nn);
    rhs.block(h.offset(y), 0, nn, nn) = CMatrix::Identity(nn, nn);
    CMatrix g = lu.solve(rhs);
    if (!g.allFinite()) throw NearSingular("greens_finite: non-finite resolvent column");
    col_blocks.emplace(y, std::move(g));
  }
  for (const auto& p : pairs) {
    const CMatrix& g = col_blocks.at(p.second);
    table.entries[{p.first, p.second}] = g.block(h.offset(p.first), 0, nn, nn);
  }
  return table;
}

/// Full column G(., y): block rows of one resolvent column solve.
inline std::vector<CMatrix> greens_column(const FiniteHamiltonian& h, Complex z, long y) {
  const int nn = h.n_internal;
  const Eigen::Index dim = h.h.rows();
  CMatrix m = h.h - z * CMatrix::Identity(dim, dim);
  Eigen::PartialPivLU<CMatrix> lu(m);
  double rc = lu.rcond();
  if (z.imag() == 0.0 && (!(rc > 0.0) || rc * tol_scale(m) < 1e-10))
    throw NearSingular("greens_column: real z within ~1e-10 of the finite-volume spectrum");
  CMatrix rhs = CMatrix::Zero(dim, nn);
  rhs.block(h.offset(y), 0, nn, nn) = CMatrix::Identity(nn, nn);
  CMatrix g = lu.solve(rhs);
  if (!g.allFinite()) throw NearSingular("greens_column: non-finite resolvent column");
  std::vector<CMatrix> out;
  out.reserve(static_cast<std::size_t>(h.sites()));
  for (long n = h.a; n <= h.b; ++n) out.push_back(g.block(h.offset(n), 0, nn, nn));
  return out;
}

/// Zero-energy closed form on an even chiral window [1, 2n]:
/// G(2k, 2l+1; 0) = (-T_{2k}^o T_{2k-1}) ... (-T_{2l+4}^o T_{2l+3}) T_{2l+2}^o
/// for k > l; all same-parity blocks (including the diagonal) are exact zeros,
/// as is every (even, odd) block with the even index on the wrong side.
inline CMatrix greens_zero_closed_form(const Realization& r, long x, long y) {
  const int nn = r.n_internal;
  if (x < r.a || x > r.b || y < r.a || y > r.b)
    throw WindowMismatch("greens_zero_closed_form: site outside window");
  if (parity_of(x) == parity_of(y)) return CMatrix::Zero(nn, nn);
  if (parity_of(x) == 1) {
    // odd row: G(odd, even; 0) = G(even, odd; 0)^* with swapped arguments
    return greens_zero_closed_form(r, y, x).adjoint();
  }
  // x even, y odd
  if (x < y) return CMatrix::Zero(nn, nn);
  long l = (y - 1) / 2;  // y = 2l+1
  CMatrix g = circ(r.t(2 * l + 2));
  for (long j = 2 * l + 4; j <= x; j += 2) g = (-(circ(r.t(j)) * r.t(j - 1))) * g;
  return g;
}

/// Number of singular values of H below tol_rel * sigma_max.
inline int kernel_dim(const FiniteHamiltonian& h, double tol_rel = 1e-8) {
  SingularSpectrum s = singular_values(h.h);
  double cutoff = tol_rel * (s.values.size() ? s.values[0] : 0.0);
  int count = 0;
  for (Eigen::Index i = 0; i < s.values.size(); ++i)
    if (s.values[i] < cutoff) ++count;
  return count;
}

namespace detail {

/// Per-realization trace norms ||G(1+d, 1; z)|| for every distance d in
/// 1..window_len-1 on the window [1, window_len]. At eta = 0 even chiral
/// windows are used after a kernel check; rejected realizations are counted.
struct DistanceProfile {
  std::vector<long> distances;
  std::vector<std::vector<double>> norms;  // [realization][distance]
  long rejected = 0;
};

inline DistanceProfile distance_profile(const ModelConfig& config, Complex z, long window_len,
                                        int n_realizations, std::uint64_t index0 = 0) {
  DistanceProfile prof;
  for (long d = 1; d < window_len; ++d) prof.distances.push_back(d);
  prof.norms.assign(static_cast<std::size_t>(n_realizations), {});
  std::vector<long> rejected(static_cast<std::size_t>(n_realizations), 0);
  parallel_for(n_realizations, [&](long i) {
    std::uint64_t idx = index0 + static_cast<std::uint64_t>(i);
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 100) throw ResampleLimit("distance_profile: kernel resample limit");
      Realization r = sample_realization(config, 1, window_len, idx);
      FiniteHamiltonian h = assemble_hamiltonian(r);
      if (z.imag() == 0.0 && z.real() == 0.0 && kernel_dim(h) != 0) {
        idx += static_cast<std::uint64_t>(n_realizations) * 1000ULL;
        ++rejected[static_cast<std::size_t>(i)];
        continue;
      }
      try {
        std::vector<CMatrix> col = greens_column(h, z, 1);
        std::vector<double>& row = prof.norms[static_cast<std::size_t>(i)];
        row.reserve(prof.distances.size());
        for (long d = 1; d < window_len; ++d)
          row.push_back(trace_norm(col[static_cast<std::size_t>(d)]));
        return;
      } catch (const NearSingular&) {
        // real energy hit the finite-volume spectrum; draw a fresh realization
        idx += static_cast<std::uint64_t>(n_realizations) * 1000ULL;
        ++rejected[static_cast<std::size_t>(i)];
      }
    }
  });
  for (long c : rejected) prof.rejected += c;
  return prof;
}

inline double symm_poly(const RVector& vals, int j) {
  // elementary symmetric polynomial e_j
  std::vector<double> e(static_cast<std::size_t>(j) + 1, 0.0);
  e[0] = 1.0;
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    for (int k = std::min<int>(j, static_cast<int>(i) + 1); k >= 1; --k)
      e[static_cast<std::size_t>(k)] += vals[i] * e[static_cast<std::size_t>(k - 1)];
  return e[static_cast<std::size_t>(j)];
}

}  // namespace detail

struct FMEstimate {
  double s = 0.5;
  double lambda = 0.0;
  double eta = 0.0;
  std::vector<long> distances;
  std::vector<double> sample_means;  // E-hat[||G(1+d,1)||^s]
  std::vector<double> std_errors;
  std::vector<long> counts;
  DecayFit fit;
  double mu = 0.0;       // fitted decay rate
  double mu_band = 0.0;  // bootstrap standard deviation of mu
  long rejected_realizations = 0;
};

/// Monte Carlo fractional-moment decay estimate at z = lambda + i eta with
/// exponential fit and a 200-resample bootstrap band on the rate. The fit
/// window defaults to distances >= 10 with the top 10% excluded.
inline FMEstimate fm_estimate(const ModelConfig& config, double lambda, double eta, double s,
                              long window_len, int n_realizations, double fit_lo = -1.0,
                              double fit_hi = -1.0) {
  if (!(s > 0.0 && s < 1.0)) throw Error("fm_estimate: s must be in (0,1)");
  if (eta < 0.0) throw Error("fm_estimate: eta must be >= 0");
  Complex z(lambda, eta);
  detail::DistanceProfile prof = detail::distance_profile(config, z, window_len, n_realizations);
  FMEstimate est;
  est.s = s;
  est.lambda = lambda;
  est.eta = eta;
  est.distances = prof.distances;
  est.rejected_realizations = prof.rejected;
  const std::size_t nd = prof.distances.size();
  const std::size_t nr = prof.norms.size();
  if (nr < 8) throw TooFewSamples("fm_estimate: fewer than 8 realizations per distance");
  est.sample_means.assign(nd, 0.0);
  est.std_errors.assign(nd, 0.0);
  est.counts.assign(nd, static_cast<long>(nr));
  for (std::size_t d = 0; d < nd; ++d) {
    double sum = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < nr; ++i) {
      double v = std::pow(prof.norms[i][d], s);
      sum += v;
      ss += v * v;
    }
    double mean = sum / nr;
    est.sample_means[d] = mean;
    est.std_errors[d] = std::sqrt(std::max(0.0, ss / nr - mean * mean) / nr);
  }
  double dmax = static_cast<double>(prof.distances.back());
  if (fit_lo < 0.0) fit_lo = 10.0;
  if (fit_hi < 0.0) fit_hi = 0.9 * dmax;
  std::vector<double> xs(nd);
  for (std::size_t d = 0; d < nd; ++d) xs[d] = static_cast<double>(prof.distances[d]);
  est.fit = fit_exponential(xs, est.sample_means, fit_lo, fit_hi, "fm_decay");
  est.mu = est.fit.rate();
  // bootstrap over realizations
  RngStream boot(derive_seed(config.seed, 0xB007, 0, 0));
  std::vector<double> mus;
  mus.reserve(200);
  std::vector<double> means(nd);
  for (int rep = 0; rep < 200; ++rep) {
    std::fill(means.begin(), means.end(), 0.0);
    for (std::size_t i = 0; i < nr; ++i) {
      std::size_t pick = static_cast<std::size_t>(boot.next_u64() % nr);
      for (std::size_t d = 0; d < nd; ++d) means[d] += std::pow(prof.norms[pick][d], s);
    }
    for (std::size_t d = 0; d < nd; ++d) means[d] /= static_cast<double>(nr);
    try {
      mus.push_back(fit_exponential(xs, means, fit_lo, fit_hi).rate());
    } catch (const DegenerateFit&) {
    }
  }
  est.mu_band = detail::sd(mus);
  return est;
}

struct AprioriRow {
  Complex z;
  double one_step_mean = 0.0;   // E-hat[||G(x,x-1;z)||^s]
  double diag_scaled_mean = 0.0;  // E-hat[|z|^s ||G(x,x;z)||^s]
  bool flagged = false;
};

/// One-step and |z|-scaled diagonal fractional moments at a mid-window site,
/// across a list of energies; rows whose one-step mean exceeds 10x the
/// across-z median are flagged as blow-ups.
inline std::vector<AprioriRow> apriori_scan(const ModelConfig& config,
                                            const std::vector<Complex>& z_list, double s,
                                            int n_realizations, long window_len = 64) {
  if (!(s > 0.0 && s < 1.0)) throw Error("apriori_scan: s must be in (0,1)");
  std::vector<AprioriRow> rows(z_list.size());
  long x = window_len / 2;
  for (std::size_t zi = 0; zi < z_list.size(); ++zi) {
    Complex z = z_list[zi];
    std::vector<double> one_step(static_cast<std::size_t>(n_realizations), 0.0);
    std::vector<double> diag(static_cast<std::size_t>(n_realizations), 0.0);
    parallel_for(n_realizations, [&](long i) {
      // common realization indices across z (common random numbers)
      Realization r = sample_realization(config, 1, window_len, static_cast<std::uint64_t>(i));
      FiniteHamiltonian h = assemble_hamiltonian(r);
      GreensTable g = greens_finite(h, z, {{x, x - 1}, {x, x}});
      one_step[static_cast<std::size_t>(i)] = std::pow(trace_norm(g.at(x, x - 1)), s);
      diag[static_cast<std::size_t>(i)] =
          std::pow(std::abs(z) * trace_norm(g.at(x, x)), s);
    });
    rows[zi].z = z;
    rows[zi].one_step_mean =
        std::accumulate(one_step.begin(), one_step.end(), 0.0) / n_realizations;
    rows[zi].diag_scaled_mean = std::accumulate(diag.begin(), diag.end(), 0.0) / n_realizations;
  }
  std::vector<double> means;
  for (const AprioriRow& r : rows) means.push_back(r.one_step_mean);
  std::sort(means.begin(), means.end());
  double median = means[means.size() / 2];
  for (AprioriRow& r : rows) r.flagged = r.one_step_mean > 10.0 * median;
  return rows;
}

struct CombesThomasRow {
  double eta = 0.0;
  DecayFit fit;
  double mu = 0.0;
  double mu_band = 0.0;
};

/// Fitted resolvent decay rate mu(eta) at z = E + i eta for each eta in the
/// list; the Combes-Thomas bound predicts mu non-decreasing in eta.
inline std::vector<CombesThomasRow> combes_thomas_scan(const ModelConfig& config, double E,
                                                       const std::vector<double>& eta_list,
                                                       double s, long window_len,
                                                       int n_realizations) {
  std::vector<CombesThomasRow> rows;
  for (double eta : eta_list) {
    if (!(eta > 0.0)) throw Error("combes_thomas_scan: eta must be positive");
    FMEstimate est = fm_estimate(config, E, eta, s, window_len, n_realizations);
    CombesThomasRow row;
    row.eta = eta;
    row.fit = est.fit;
    row.mu = est.mu;
    row.mu_band = est.mu_band;
    rows.push_back(row);
  }
  return rows;
}

/// Decay fit of the Fermi projection P = chi_{(-inf, E_F)}(H) along a
/// mid-window row: log ||P(x0, y)|| against |y - x0|.
inline DecayFit fermi_projection_decay(const FiniteHamiltonian& h, double fermi_energy) {
  EigenSystem es = herm_eig(h.h);
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    if (std::abs(es.values[i] - fermi_energy) < 1e-10)
      throw EigenfailureAtFermi("fermi_projection_decay: eigenvalue at the Fermi energy");
  const Eigen::Index dim = h.h.rows();
  CMatrix p = CMatrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    if (es.values[i] < fermi_energy) p += es.vectors.col(i) * es.vectors.col(i).adjoint();
  long x0 = h.a + h.sites() / 2;
  const int nn = h.n_internal;
  std::vector<double> xs, ys;
  for (long y = h.a; y <= h.b; ++y) {
    if (y == x0) continue;
    CMatrix blk = p.block(h.offset(x0), h.offset(y), nn, nn);
    xs.push_back(static_cast<double>(std::abs(y - x0)));
    ys.push_back(trace_norm(blk));
  }
  double dmax = *std::max_element(xs.begin(), xs.end());
  return fit_exponential(xs, ys, 1.0, 0.8 * dmax, "fermi_projection");
}

/// The Fermi projection itself (test hook for idempotency and chirality).
inline CMatrix fermi_projection(const FiniteHamiltonian& h, double fermi_energy) {
  EigenSystem es = herm_eig(h.h);
  const Eigen::Index dim = h.h.rows();
  CMatrix p = CMatrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    if (es.values[i] < fermi_energy) p += es.vectors.col(i) * es.vectors.col(i).adjoint();
  return p;
}

struct ConvergenceRow {
  long half_width = 0;  // window [-n+1, n]
  CMatrix g00;
  double diff_from_prev = std::numeric_limits<double>::quiet_NaN();
};

/// Strong-resolvent-convergence scan: G_{[-n+1,n]}(0,0;z) on one fixed
/// realization for growing windows; reports the Cauchy differences.
inline std::vector<ConvergenceRow> resolvent_convergence_scan(const ModelConfig& config, Complex z,
                                                              const std::vector<long>& window_lens,
                                                              std::uint64_t index = 0) {
  if (z.imag() == 0.0) throw Error("resolvent_convergence_scan: need Im z != 0");
  long max_n = *std::max_element(window_lens.begin(), window_lens.end());
  Realization r = sample_realization(config, -max_n + 1, max_n, index);
  std::vector<ConvergenceRow> rows;
  for (long n : window_lens) {
    FiniteHamiltonian h = assemble_hamiltonian(r, -n + 1, n);
    GreensTable g = greens_finite(h, z, {{0, 0}});
    ConvergenceRow row;
    row.half_width = n;
    row.g00 = g.at(0, 0);
    if (!rows.empty()) row.diff_from_prev = trace_norm(CMatrix(row.g00 - rows.back().g00));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct WedgeRatioReport {
  double lhs = 0.0;        // lambda_max |Psi_{m-1}|^2
  double bound = 0.0;      // ratio * lambda_max |Psi_{k-1}|^2
  double ratio = 0.0;      // tr|wedge^{l-1} BP|^2 / tr|wedge^l BP|^2
  double psd_defect = 0.0; // most negative eigenvalue of (bound matrix - lhs matrix)
  bool holds = false;
};

/// Numerical check of the wedge-ratio Green's function bound
/// |Psi_{m-1}|^2 <= (tr|wedge^{l-1}(BP)|^2 / tr|wedge^l(BP)|^2) |Psi_{k-1}|^2
/// with B = A_{k-1}...A_m and Psi_n the super-wave-function column of G(.,k).
/// Short windows only: B is an explicit product of at most 20 factors.
inline WedgeRatioReport wedge_ratio_bound_check(const Realization& r, Complex z, long k, long m) {
  if (k - m > 20) throw Error("wedge_ratio_bound_check: explicit products limited to 20 steps");
  if (m < r.a || k > r.b || m > k) throw WindowMismatch("wedge_ratio_bound_check: bad sites");
  const int nn = r.n_internal;
  FiniteHamiltonian h = assemble_hamiltonian(r);
  std::vector<CMatrix> col = greens_column(h, z, k);
  auto g_at = [&](long n) -> CMatrix {
    if (n < r.a || n > r.b) return CMatrix::Zero(nn, nn);
    return col[static_cast<std::size_t>(n - r.a)];
  };
  CMatrix psi_m(2 * nn, nn), psi_k(2 * nn, nn);
  psi_m.topRows(nn) = r.t(m).adjoint() * g_at(m);
  psi_m.bottomRows(nn) = g_at(m - 1);
  psi_k.topRows(nn) = r.t(k).adjoint() * g_at(k);
  psi_k.bottomRows(nn) = g_at(k - 1);
  // projection onto the range of Psi_{m-1}; at the left edge this is the
  // projector onto the first N coordinates
  CMatrix p = CMatrix::Zero(2 * nn, 2 * nn);
  int l = 0;
  if (m == r.a) {
    p.topLeftCorner(nn, nn) = CMatrix::Identity(nn, nn);
    l = nn;
  } else {
    Eigen::JacobiSVD<CMatrix> svd(psi_m, Eigen::ComputeThinU);
    double smax = svd.singularValues()[0];
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > 1e-12 * smax) ++l;
    CMatrix u = svd.matrixU().leftCols(l);
    p = u * u.adjoint();
  }
  CMatrix b = explicit_product(r, z, m, k - 1);
  RVector sq = singular_values(CMatrix(b * p)).values.array().square();
  double num = detail::symm_poly(sq, l - 1);
  double den = detail::symm_poly(sq, l);
  WedgeRatioReport rep;
  rep.ratio = num / den;
  CMatrix lhs_m = psi_m.adjoint() * psi_m;
  CMatrix rhs_m = rep.ratio * (psi_k.adjoint() * psi_k);
  rep.lhs = herm_eig(lhs_m).values.maxCoeff();
  rep.bound = herm_eig(rhs_m).values.maxCoeff();
  rep.psd_defect = herm_eig(CMatrix(rhs_m - lhs_m)).values.minCoeff();
  double scale = std::max(1.0, rep.bound);
  rep.holds = rep.psd_defect >= -1e-9 * scale;
  return rep;
}

}  // namespace clab

#endif
