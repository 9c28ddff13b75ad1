#ifndef CLAB_LYAPUNOV_HPP
#define CLAB_LYAPUNOV_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "clab/model.hpp"
#include "clab/parallel.hpp"
#include "clab/transfer.hpp"
#include "clab/types.hpp"

namespace clab {

// Lyapunov spectrum estimation via running QR deflation; gamma_j is the mean
// per-step log of the j-th R diagonal over the accumulated product.

struct LyapunovEstimate {
  Complex z;
  std::vector<double> gammas;      // descending
  std::vector<double> std_errors;  // matched to gammas
  long steps = 0;
  int realizations = 0;
  std::string method = "full";

  double antisymmetry_defect() const {
    double d = 0.0;
    std::size_t m = gammas.size();
    for (std::size_t j = 0; j < m; ++j) d = std::max(d, std::abs(gammas[j] + gammas[m - 1 - j]));
    return d;
  }
  double sum() const { return std::accumulate(gammas.begin(), gammas.end(), 0.0); }
};

namespace detail {

constexpr int kBatchCount = 32;

struct RunAccum {
  std::vector<double> exponents;                 // per-direction mean log growth
  std::vector<std::vector<double>> batch_means;  // [direction][batch]
};

/// Drives one accumulator through `steps` applications produced by `step_fn(i)`
/// and records per-batch means for the batch-means error estimate.
template <typename StepFn>
RunAccum run_accumulator(int dim, long steps, StepFn&& step_fn) {
  ProductAccumulator acc(dim, dim);
  std::vector<double> prev(static_cast<std::size_t>(dim), 0.0);
  RunAccum out;
  out.exponents.assign(static_cast<std::size_t>(dim), 0.0);
  out.batch_means.assign(static_cast<std::size_t>(dim), {});
  long batch_size = std::max<long>(steps / kBatchCount, 1);
  long next_batch = batch_size;
  long last_boundary = 0;
  for (long i = 0; i < steps; ++i) {
    acc.apply(step_fn(i));
    if (i + 1 == next_batch || i + 1 == steps) {
      acc.deflate();
      const std::vector<double>& ls = acc.log_sums();
      long done = i + 1;
      for (int j = 0; j < dim; ++j) {
        double cur = ls[static_cast<std::size_t>(j)];
        out.batch_means[static_cast<std::size_t>(j)].push_back(
            (cur - prev[static_cast<std::size_t>(j)]) / static_cast<double>(done - last_boundary));
        prev[static_cast<std::size_t>(j)] = cur;
      }
      last_boundary = done;
      next_batch = std::min(next_batch + batch_size, steps);
      if (done == steps) {
        for (int j = 0; j < dim; ++j)
          out.exponents[static_cast<std::size_t>(j)] = ls[static_cast<std::size_t>(j)] / steps;
        break;
      }
    }
  }
  return out;
}

/// One hopping draw together with the LU factorization of its adjoint, which
/// the sector step needs anyway. The rejection rule matches sample_hopping:
/// keep sigma_min above the spec threshold, certified here by the cheap bound
/// sigma_min >= |det| / ||t||_F^{n-1} with an exact SVD fallback.
struct GuardedDraw {
  CMatrix t;
  Eigen::PartialPivLU<CMatrix> lu_adj;
};

inline void guarded_draw(const DistributionSpec& spec, int n, RngStream& rng, GuardedDraw& d) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    d.t = sample_raw(spec, n, rng);
    d.lu_adj.compute(d.t.adjoint());
    double log_det = 0.0;
    for (int i = 0; i < n; ++i) log_det += std::log(std::abs(d.lu_adj.matrixLU()(i, i)));
    bool ok = std::isfinite(log_det) &&
              log_det - (n - 1) * std::log(d.t.norm()) >= std::log(spec.resample_threshold);
    if (!ok) ok = smallest_singular_value(d.t) >= spec.resample_threshold;
    if (ok) return;
  }
  throw ResampleLimit("sector sampling: 100 consecutive rejections");
}

/// Batch-means bookkeeping shared by the spectrum runners.
struct BatchTracker {
  RunAccum out;
  std::vector<double> prev;
  long steps, batch_size, next_batch = 0, last_boundary = 0;

  BatchTracker(int dim, long total_steps) : steps(total_steps) {
    out.exponents.assign(static_cast<std::size_t>(dim), 0.0);
    out.batch_means.assign(static_cast<std::size_t>(dim), {});
    prev.assign(static_cast<std::size_t>(dim), 0.0);
    batch_size = std::max<long>(steps / kBatchCount, 1);
    next_batch = batch_size;
  }

  template <typename Acc>
  void record(Acc& acc, long done) {
    if (done != next_batch && done != steps) return;
    acc.deflate();
    const auto& ls = acc.log_sums();
    for (std::size_t j = 0; j < prev.size(); ++j) {
      out.batch_means[j].push_back((ls[j] - prev[j]) / static_cast<double>(done - last_boundary));
      prev[j] = ls[j];
    }
    last_boundary = done;
    next_batch = std::min(next_batch + batch_size, steps);
    if (done == steps)
      for (std::size_t j = 0; j < prev.size(); ++j) out.exponents[j] = ls[j] / steps;
  }
};

/// Fixed-size twin of ProductAccumulator for the sector hot loop: stack
/// storage, deflation every few steps, logs of |R| diagonals. Q's column
/// phases are left as HouseholderQR produces them; they conjugate later R
/// factors without changing the diagonal moduli.
template <int N>
struct FixedAccumulator {
  using Mat = Eigen::Matrix<Complex, N, N>;
  Mat frame = Mat::Identity();
  std::array<double, N> sums{};
  int since = 0;

  const std::array<double, N>& log_sums() const { return sums; }

  void deflate() {
    if (since == 0) return;
    Eigen::HouseholderQR<Mat> qr(frame);
    for (int i = 0; i < N; ++i) sums[static_cast<std::size_t>(i)] += std::log(std::abs(qr.matrixQR()(i, i)));
    frame = qr.householderQ();
    since = 0;
  }

  template <typename Pre>
  void apply_with(Pre&& pre) {
    pre(frame);
    if (++since >= 4 || frame.squaredNorm() > 1e200) deflate();
  }
};

/// Fixed-size variant of run_sector_pair (below); same sampling stream and
/// arithmetic, with all matrix work on stack-allocated N x N blocks.
template <int N>
void run_sector_pair_fixed(const ModelConfig& config, long steps, std::uint64_t idx,
                           RunAccum& plus, RunAccum& minus) {
  using Mat = Eigen::Matrix<Complex, N, N>;
  struct Draw {
    Mat t;
    Eigen::PartialPivLU<Mat> lu_adj;
  };
  FixedAccumulator<N> acc_p, acc_m;
  BatchTracker track_p(N, steps), track_m(N, steps);
  Mat tmp;
  Draw e, o, o_prev;
  auto draw = [&](long site, Draw& d) {
    int par = parity_of(site);
    const DistributionSpec& spec = (par == 0) ? config.alpha0 : config.alpha1;
    RngStream rng(derive_seed(config.seed, idx, site, static_cast<std::uint64_t>(par)));
    for (int attempt = 0; attempt < 100; ++attempt) {
      d.t = sample_raw(spec, N, rng);
      d.lu_adj.compute(d.t.adjoint());
      double log_det = 0.0;
      for (int i = 0; i < N; ++i) log_det += std::log(std::abs(d.lu_adj.matrixLU()(i, i)));
      bool ok = std::isfinite(log_det) &&
                log_det - (N - 1) * std::log(d.t.norm()) >= std::log(spec.resample_threshold);
      if (!ok) ok = smallest_singular_value(CMatrix(d.t)) >= spec.resample_threshold;
      if (ok) return;
    }
    throw ResampleLimit("sector sampling: 100 consecutive rejections");
  };
  for (long x = 0; x < steps; ++x) {
    draw(2 * x + 2, e);
    if (x > 0) {
      acc_m.apply_with([&](Mat& f) {
        tmp.noalias() = o_prev.t * f;
        f = e.lu_adj.solve(tmp);
      });
      track_m.record(acc_m, x);
    }
    draw(2 * x + 3, o);
    acc_p.apply_with([&](Mat& f) {
      tmp.noalias() = e.t * f;
      f = o.lu_adj.solve(tmp);
    });
    track_p.record(acc_p, x + 1);
    std::swap(o_prev, o);
  }
  draw(2 * steps + 2, e);
  acc_m.apply_with([&](Mat& f) {
    tmp.noalias() = o_prev.t * f;
    f = e.lu_adj.solve(tmp);
  });
  track_m.record(acc_m, steps);
  plus = std::move(track_p.out);
  minus = std::move(track_m.out);
}

/// Runs both zero-energy sector cocycles in one pass over the sites of a
/// single disorder realization, so each hopping block is drawn once and its
/// adjoint LU serves the guard and the solve. Plus-sector step x maps the
/// frame through -T_{2x+3}^o T_{2x+2}; minus-sector step x through
/// -T_{2x+4}^o T_{2x+3}, lagging the plus sector by one drawn pair. The
/// overall sign of a step never reaches the exponents (QR sees only column
/// spans and positive R diagonals), so the minus is not applied.
inline void run_sector_pair(const ModelConfig& config, long steps, std::uint64_t idx,
                            RunAccum& plus, RunAccum& minus) {
  const int nn = config.n_internal;
  ProductAccumulator acc_p(nn, nn), acc_m(nn, nn);
  BatchTracker track_p(nn, steps), track_m(nn, steps);
  CMatrix tmp(nn, nn);
  GuardedDraw e, o, o_prev;
  auto draw = [&](long site, GuardedDraw& d) {
    int par = parity_of(site);
    const DistributionSpec& spec = (par == 0) ? config.alpha0 : config.alpha1;
    RngStream rng(derive_seed(config.seed, idx, site, static_cast<std::uint64_t>(par)));
    guarded_draw(spec, nn, rng, d);
  };
  for (long x = 0; x < steps; ++x) {
    draw(2 * x + 2, e);
    if (x > 0) {
      acc_m.apply_with([&](CMatrix& f) {
        tmp.noalias() = o_prev.t * f;
        f = e.lu_adj.solve(tmp);
      });
      track_m.record(acc_m, x);
    }
    draw(2 * x + 3, o);
    acc_p.apply_with([&](CMatrix& f) {
      tmp.noalias() = e.t * f;
      f = o.lu_adj.solve(tmp);
    });
    track_p.record(acc_p, x + 1);
    std::swap(o_prev, o);
  }
  draw(2 * steps + 2, e);
  acc_m.apply_with([&](CMatrix& f) {
    tmp.noalias() = o_prev.t * f;
    f = e.lu_adj.solve(tmp);
  });
  track_m.record(acc_m, steps);
  plus = std::move(track_p.out);
  minus = std::move(track_m.out);
}

inline double sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (xs.size() - 1));
}

/// Combines per-realization runs into mean exponents and standard errors;
/// across-realization variance when there are >= 8 runs, pooled batch means
/// otherwise. Directions are sorted jointly by descending exponent.
inline void reduce_runs(const std::vector<RunAccum>& runs, std::vector<double>& gammas,
                        std::vector<double>& ses) {
  const std::size_t dim = runs.front().exponents.size();
  const std::size_t nr = runs.size();
  gammas.assign(dim, 0.0);
  ses.assign(dim, 0.0);
  for (std::size_t j = 0; j < dim; ++j) {
    std::vector<double> per_run;
    per_run.reserve(nr);
    for (const RunAccum& r : runs) per_run.push_back(r.exponents[j]);
    gammas[j] = std::accumulate(per_run.begin(), per_run.end(), 0.0) / nr;
    if (nr >= 8) {
      ses[j] = sd(per_run) / std::sqrt(static_cast<double>(nr));
    } else {
      std::vector<double> batches;
      for (const RunAccum& r : runs)
        batches.insert(batches.end(), r.batch_means[j].begin(), r.batch_means[j].end());
      ses[j] = sd(batches) / std::sqrt(static_cast<double>(batches.size()));
    }
  }
  std::vector<std::size_t> order(dim);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return gammas[a] > gammas[b]; });
  std::vector<double> g(dim), s(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    g[j] = gammas[order[j]];
    s[j] = ses[order[j]];
  }
  gammas = std::move(g);
  ses = std::move(s);
}

}  // namespace detail

/// Full 2N-frame estimate of the Lyapunov spectrum at energy z. Hopping blocks
/// stream site by site from the realization's seed derivation, so nothing is
/// materialized. Sites run n = 1..steps (even step counts complete alpha0/alpha1
/// periods).
inline LyapunovEstimate estimate_spectrum(const ModelConfig& config, Complex z, long steps,
                                          int realizations, std::uint64_t index0 = 0) {
  if (steps < 2 || realizations < 1) throw Error("estimate_spectrum: need steps >= 2, realizations >= 1");
  const int dim = 2 * config.n_internal;
  std::vector<detail::RunAccum> runs(static_cast<std::size_t>(realizations));
  parallel_for(realizations, [&](long r) {
    std::uint64_t idx = index0 + static_cast<std::uint64_t>(r);
    runs[static_cast<std::size_t>(r)] = detail::run_accumulator(dim, steps, [&](long i) {
      long n = i + 1;
      int par = parity_of(n);
      const DistributionSpec& spec = (par == 0) ? config.alpha0 : config.alpha1;
      RngStream rng(derive_seed(config.seed, idx, n, static_cast<std::uint64_t>(par)));
      return transfer_block(sample_hopping(spec, config.n_internal, rng), z);
    });
  });
  LyapunovEstimate est;
  est.z = z;
  est.steps = steps;
  est.realizations = realizations;
  est.method = "full";
  detail::reduce_runs(runs, est.gammas, est.std_errors);
  return est;
}

struct SectorSpectrum {
  std::vector<double> xi_plus, se_plus;    // descending, odd-site sector
  std::vector<double> xi_minus, se_minus;  // descending, even-site sector
  long steps = 0;                          // two-step applications
  int realizations = 0;

  double min_abs() const {
    double m = std::numeric_limits<double>::infinity();
    for (double x : xi_plus) m = std::min(m, std::abs(x));
    for (double x : xi_minus) m = std::min(m, std::abs(x));
    return m;
  }
};

/// Zero-energy sector spectra: the problem splits into two independent N x N
/// cocycles, psi_{2x+1} = -T_{2x+1}^o T_{2x} psi_{2x-1} (plus sector) and
/// psi_{2x+2} = -T_{2x+2}^o T_{2x+1} psi_{2x} (minus sector). The sector maps
/// are merely elements of GL_N, so no symplectic pairing holds within a sector.
inline SectorSpectrum sector_spectrum_zero(const ModelConfig& config, long steps,
                                           int realizations, std::uint64_t index0 = 0) {
  if (config.onsite) throw NotChiral("sector_spectrum_zero: onsite disorder present");
  if (steps < 1 || realizations < 1)
    throw Error("sector_spectrum_zero: need steps >= 1, realizations >= 1");
  std::vector<detail::RunAccum> plus(static_cast<std::size_t>(realizations));
  std::vector<detail::RunAccum> minus(static_cast<std::size_t>(realizations));
  parallel_for(realizations, [&](long r) {
    std::uint64_t idx = index0 + static_cast<std::uint64_t>(r);
    detail::RunAccum& p = plus[static_cast<std::size_t>(r)];
    detail::RunAccum& m = minus[static_cast<std::size_t>(r)];
    switch (config.n_internal) {
      case 1: detail::run_sector_pair_fixed<1>(config, steps, idx, p, m); break;
      case 2: detail::run_sector_pair_fixed<2>(config, steps, idx, p, m); break;
      case 4: detail::run_sector_pair_fixed<4>(config, steps, idx, p, m); break;
      case 8: detail::run_sector_pair_fixed<8>(config, steps, idx, p, m); break;
      default: detail::run_sector_pair(config, steps, idx, p, m); break;
    }
  });
  SectorSpectrum s;
  s.steps = steps;
  s.realizations = realizations;
  detail::reduce_runs(plus, s.xi_plus, s.se_plus);
  detail::reduce_runs(minus, s.xi_minus, s.se_minus);
  return s;
}

namespace detail {

/// digamma at a positive integer: psi(k) = -gamma_E + H_{k-1}.
inline double digamma_int(int k) {
  constexpr double euler_gamma = 0.57721566490153286060651209;
  double h = 0.0;
  for (int i = 1; i < k; ++i) h += 1.0 / i;
  return h - euler_gamma;
}

}  // namespace detail

/// Exact zero-energy sector spectrum for the Ginibre/Ginibre model. Each sector
/// cocycle is an alternating product of independent Ginibre and inverse-adjoint
/// Ginibre factors; both families are bi-unitarily invariant, so their Newman
/// exponents combine index by index, with the inverted family reversed:
///   xi_j = log(sigma0/sigma1) + (psi(N-j+1) - psi(j)) / 2,   j = 1..N,
/// descending. The minus sector swaps the roles of sigma0 and sigma1. For N = 1
/// this reduces to E[log|alpha0|] - E[log|alpha1|] = log(sigma0/sigma1).
inline SectorSpectrum ginibre_closed_form(double sigma0, double sigma1, int n_internal) {
  if (sigma0 <= 0 || sigma1 <= 0) throw Error("ginibre_closed_form: sigmas must be positive");
  SectorSpectrum s;
  double xi = std::log(sigma0 / sigma1);
  for (int j = 1; j <= n_internal; ++j) {
    double spread = 0.5 * (detail::digamma_int(n_internal - j + 1) - detail::digamma_int(j));
    s.xi_plus.push_back(xi + spread);
    s.xi_minus.push_back(-xi + spread);
  }
  s.se_plus.assign(static_cast<std::size_t>(n_internal), 0.0);
  s.se_minus.assign(static_cast<std::size_t>(n_internal), 0.0);
  return s;
}

/// Smallest |xi| over both sectors, ignoring entries that vanish identically
/// (the exact kernel direction present whenever the closed-form spread hits
/// minus the log-ratio). Useful for localization-length scaling in W where the
/// raw minimum is pinned at zero.
inline double min_abs_nonzero(const SectorSpectrum& s, double zero_tol = 1e-12) {
  double m = std::numeric_limits<double>::infinity();
  auto scan = [&](const std::vector<double>& xs) {
    for (double x : xs)
      if (std::abs(x) > zero_tol) m = std::min(m, std::abs(x));
  };
  scan(s.xi_plus);
  scan(s.xi_minus);
  return m;
}

enum class ZeroVerdict { Localized, Critical, Inconclusive };

inline const char* to_string(ZeroVerdict v) {
  switch (v) {
    case ZeroVerdict::Localized: return "Localized";
    case ZeroVerdict::Critical: return "Critical";
    default: return "Inconclusive";
  }
}

/// Localization-at-zero decision: all exponents separated from zero by
/// k_sigma standard errors -> Localized; any within one SE -> Critical.
inline ZeroVerdict localized_at_zero(const SectorSpectrum& spec, double k_sigma = 3.0) {
  bool all_separated = true;
  bool any_critical = false;
  auto scan = [&](const std::vector<double>& xis, const std::vector<double>& ses) {
    for (std::size_t j = 0; j < xis.size(); ++j) {
      double a = std::abs(xis[j]);
      if (!(a > k_sigma * ses[j])) all_separated = false;
      if (a <= ses[j]) any_critical = true;
    }
  };
  scan(spec.xi_plus, spec.se_plus);
  scan(spec.xi_minus, spec.se_minus);
  if (all_separated) return ZeroVerdict::Localized;
  if (any_critical) return ZeroVerdict::Critical;
  return ZeroVerdict::Inconclusive;
}

/// Spectrum scan over an energy grid with common random numbers: the same
/// (seed, index) streams at every grid point, so curves are smooth in lambda.
inline std::vector<LyapunovEstimate> spectrum_vs_energy(const ModelConfig& config,
                                                        const std::vector<double>& lambda_grid,
                                                        long steps, int realizations) {
  if (lambda_grid.empty()) throw Error("spectrum_vs_energy: empty grid");
  std::vector<LyapunovEstimate> out;
  out.reserve(lambda_grid.size());
  for (double lam : lambda_grid)
    out.push_back(estimate_spectrum(config, Complex(lam, 0.0), steps, realizations));
  return out;
}

}  // namespace clab

#endif
