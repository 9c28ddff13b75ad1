// Acceptance gate: run as `acceptance <n>` for criterion n in 1..12, or with
// no argument to run all. Prints one line per criterion and exits nonzero on
// any failure. All tolerances are pinned here.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "clab/clab.hpp"

using namespace clab;

namespace {

ModelConfig ginibre_config(int n, double s0, double s1, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.n_internal = n;
  cfg.seed = seed;
  cfg.alpha0 = DistributionSpec::ginibre(s0);
  cfg.alpha1 = DistributionSpec::ginibre(s1);
  return cfg;
}

// 1: exact Ginibre sector exponents at W = 8 against the closed form
// log(sigma0/sigma1) + (psi(W-j+1) - psi(j))/2, under the sigma rule and at
// the equal-sigma point (log-ratio term dropping out).
bool criterion1(std::string& detail) {
  const int w = 8;
  double worst = 0.0;
  bool ok = true;
  auto check = [&](const ModelConfig& cfg, double s0, double s1) {
    SectorSpectrum spec = sector_spectrum_zero(cfg, 200000, 8);
    SectorSpectrum exact = ginibre_closed_form(s0, s1, w);
    for (std::size_t j = 0; j < spec.xi_plus.size(); ++j) {
      double dev = std::abs(spec.xi_plus[j] - exact.xi_plus[j]);
      worst = std::max(worst, dev);
      if (dev > std::max(3.0 * spec.se_plus[j], 0.01)) ok = false;
      double devm = std::abs(spec.xi_minus[j] - exact.xi_minus[j]);
      worst = std::max(worst, devm);
      if (devm > std::max(3.0 * spec.se_minus[j], 0.01)) ok = false;
    }
  };
  check(ginibre_config(w, std::exp(-1.0 / w), std::exp(-2.0 / w), 1001), std::exp(-1.0 / w),
        std::exp(-2.0 / w));
  check(ginibre_config(w, 0.7, 0.7, 1002), 0.7, 0.7);
  char buf[128];
  std::snprintf(buf, sizeof buf, "worst |xi - closed form| = %.3g", worst);
  detail = buf;
  return ok;
}

// 2: scalar closed form log(sigma0/sigma1) = 1 at (e, 1) with tight SE.
bool criterion2(std::string& detail) {
  ModelConfig cfg = ginibre_config(1, std::exp(1.0), 1.0, 1003);
  SectorSpectrum spec = sector_spectrum_zero(cfg, 1000000, 1);
  double xi = spec.xi_plus[0], se = spec.se_plus[0];
  char buf[128];
  std::snprintf(buf, sizeof buf, "xi = %.4f, SE = %.2g", xi, se);
  detail = buf;
  return std::abs(xi - 1.0) <= 3.0 * se && se <= 0.01;
}

// 3: zero-energy closed form vs direct inversion on even windows.
bool criterion3(std::string& detail) {
  double worst = 0.0, worst_parity = 0.0;
  bool diag_zero = true;
  int used = 0;
  for (int seed = 0; used < 100; ++seed) {
    int n_internal = 1 + seed % 3;
    long n_half = 2 + seed % 15;  // windows [1, 2n], n <= 16
    ModelConfig cfg = ginibre_config(n_internal, 1.0, 1.0, 2000 + static_cast<std::uint64_t>(seed));
    Realization r = sample_realization(cfg, 1, 2 * n_half, 0);
    FiniteHamiltonian h = assemble_hamiltonian(r);
    if (kernel_dim(h) != 0) continue;
    ++used;
    double scale = tol_scale(h.h);
    std::vector<std::pair<long, long>> pairs;
    for (long x = 1; x <= 2 * n_half; ++x)
      for (long y = 1; y <= 2 * n_half; ++y) pairs.emplace_back(x, y);
    GreensTable g = greens_finite(h, Complex(0, 0), pairs);
    for (const auto& p : pairs) {
      CMatrix closed = greens_zero_closed_form(r, p.first, p.second);
      worst = std::max(worst, max_abs(CMatrix(g.at(p.first, p.second) - closed)) / scale);
      if (parity_of(p.first) == parity_of(p.second)) {
        worst_parity = std::max(worst_parity, max_abs(g.at(p.first, p.second)) / scale);
        if (max_abs(closed) != 0.0) diag_zero = false;
      }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "max dev %.3g, same-parity max %.3g over %d seeds", worst,
                worst_parity, used);
  detail = buf;
  return worst <= 1e-8 && worst_parity <= 1e-10 && diag_zero;
}

// 4: kernel dimensions of odd and even chiral windows.
bool criterion4(std::string& detail) {
  for (int seed = 0; seed < 100; ++seed) {
    int n_internal = 1 + seed % 3;
    ModelConfig cfg = ginibre_config(n_internal, 1.0, 1.0, 3000 + static_cast<std::uint64_t>(seed));
    long n_half = 2 + seed % 5;
    Realization r = sample_realization(cfg, 1, 2 * n_half + 1, 0);
    if (kernel_dim(assemble_hamiltonian(r, 1, 2 * n_half)) != 0) {
      detail = "even window with a kernel at seed " + std::to_string(seed);
      return false;
    }
    if (kernel_dim(assemble_hamiltonian(r, 1, 2 * n_half + 1)) != n_internal) {
      detail = "odd window kernel != N at seed " + std::to_string(seed);
      return false;
    }
  }
  detail = "100 seeds, N in {1,2,3}";
  return true;
}

// 5: symplectic algebra: membership, chart round trips, product charts,
// singular-value pairing.
bool criterion5(std::string& detail) {
  RngStream rng(derive_seed(4000, 0, 0, 0));
  auto rand_mat = [&](int n) {
    return CMatrix::NullaryExpr(n, n,
                                [&](Eigen::Index, Eigen::Index) { return rng.next_complex_normal(); });
  };
  auto rand_herm = [&](int n) {
    CMatrix a = rand_mat(n);
    return CMatrix(0.5 * (a + a.adjoint()));
  };
  auto rand_invertible = [&](int n) {
    for (;;) {
      CMatrix t = rand_mat(n);
      if (smallest_singular_value(t) >= 1e-2) return t;
    }
  };
  double worst_mem = 0.0, worst_rt = 0.0, worst_prod = 0.0, worst_pair = 0.0;
  for (int i = 0; i < 1000; ++i) {
    int n = 1 + i % 3;
    DRSChart c;
    c.D = rand_invertible(n);
    c.R = rand_herm(n);
    c.S = rand_herm(n);
    CMatrix m = matrix_from_chart(c);
    MembershipReport mem = is_symplectic(m);
    worst_mem = std::max(worst_mem, mem.residual / std::max(1.0, mat_norm(m) * mat_norm(m)));
    DRSChart back = chart_from_matrix(m);
    worst_rt = std::max({worst_rt, max_abs(CMatrix(back.D - c.D)), max_abs(CMatrix(back.R - c.R)),
                         max_abs(CMatrix(back.S - c.S))});
    double lambda = 0.5 + rng.next_double();
    CMatrix t1 = rand_invertible(n), t2 = rand_invertible(n), t3 = rand_invertible(n);
    CMatrix prod2 = transfer_block(t1, Complex(lambda, 0)) * transfer_block(t2, Complex(lambda, 0));
    DRSChart c2 = product_chart_two(t1, t2, lambda);
    DRSChart c2x = chart_from_matrix(prod2);
    worst_prod = std::max({worst_prod, max_abs(CMatrix(c2.D - c2x.D)),
                           max_abs(CMatrix(c2.R - c2x.R)), max_abs(CMatrix(c2.S - c2x.S))});
    CMatrix prod3 = transfer_block(t3, Complex(lambda, 0)) * prod2;
    DRSChart c3 = product_chart_three(t3, c2, lambda);
    DRSChart c3x = chart_from_matrix(prod3);
    worst_prod = std::max({worst_prod, max_abs(CMatrix(c3.D - c3x.D)),
                           max_abs(CMatrix(c3.R - c3x.R)), max_abs(CMatrix(c3.S - c3x.S))});
    SymmetryReport sym = spectral_symmetry_check(prod3);
    worst_pair = std::max(worst_pair, sym.sv_pair_defect);
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "membership %.2g, round-trip %.2g, product %.2g, pairing %.2g",
                worst_mem, worst_rt, worst_prod, worst_pair);
  detail = buf;
  return worst_mem <= 1e-10 && worst_rt <= 1e-10 && worst_prod <= 1e-10 && worst_pair <= 1e-7;
}

// 6: Lyapunov antisymmetry, zero sum, and simplicity for N = 2 at lambda = 1.
bool criterion6(std::string& detail) {
  ModelConfig cfg = ginibre_config(2, 1.0, 1.0, 1006);
  LyapunovEstimate est = estimate_spectrum(cfg, Complex(1, 0), 100000, 8);
  bool ok = true;
  double se_comb = 0.0;
  for (std::size_t j = 0; j < est.gammas.size(); ++j) {
    std::size_t k = est.gammas.size() - 1 - j;
    if (std::abs(est.gammas[j] + est.gammas[k]) > 3.0 * (est.std_errors[j] + est.std_errors[k]))
      ok = false;
  }
  for (double s : est.std_errors) se_comb += s;
  if (std::abs(est.sum()) > 3.0 * se_comb) ok = false;
  for (std::size_t j = 0; j + 1 < est.gammas.size(); ++j)
    if (est.gammas[j] - est.gammas[j + 1] <= 3.0 * (est.std_errors[j] + est.std_errors[j + 1]))
      ok = false;
  char buf[160];
  std::snprintf(buf, sizeof buf, "defect %.3g, sum %.3g, min gap %.3g", est.antisymmetry_defect(),
                est.sum(),
                est.gammas[0] - est.gammas[1]);
  detail = buf;
  return ok;
}

// 7: typical decay matches gamma_N and the FM fit is positive with good r2.
bool criterion7(std::string& detail) {
  ModelConfig cfg = ginibre_config(1, 1.0, 1.0, 1007);
  const long n = 200;
  std::vector<double> rates;
  for (int i = 0; rates.size() < 200 && i < 260; ++i) {
    Realization r = sample_realization(cfg, 1, n, static_cast<std::uint64_t>(i));
    FiniteHamiltonian h = assemble_hamiltonian(r);
    try {
      GreensTable g = greens_finite(h, Complex(1, 0), {{n, 1L}});
      rates.push_back(-std::log(trace_norm(g.at(n, 1))) / static_cast<double>(n));
    } catch (const NearSingular&) {
    }
  }
  std::sort(rates.begin(), rates.end());
  double median = rates[rates.size() / 2];
  LyapunovEstimate est = estimate_spectrum(cfg, Complex(1, 0), 200000, 8);
  double gamma_n = est.gammas[0];
  FMEstimate fm = fm_estimate(cfg, 1.0, 0.0, 0.5, 64, 200);
  char buf[200];
  std::snprintf(buf, sizeof buf, "median %.4f vs gamma %.4f, mu %.3f (band %.3f), r2 %.3f", median,
                gamma_n, fm.mu, fm.mu_band, fm.fit.r_squared);
  detail = buf;
  return std::abs(median - gamma_n) <= 0.15 * gamma_n && fm.mu > 3.0 * fm.mu_band &&
         fm.fit.r_squared >= 0.9;
}

// 8: a-priori one-step bound: no blow-up as z -> 0 along the imaginary axis.
bool criterion8(std::string& detail) {
  ModelConfig cfg = ginibre_config(2, 1.0, 1.0, 1008);
  std::vector<Complex> zs;
  for (int k = 1; k <= 6; ++k) zs.emplace_back(0.0, std::pow(10.0, -k));
  std::vector<AprioriRow> rows = apriori_scan(cfg, zs, 0.5, 500, 32);
  std::vector<double> means;
  for (const AprioriRow& r : rows) means.push_back(r.one_step_mean);
  std::vector<double> sorted = means;
  std::sort(sorted.begin(), sorted.end());
  double med = sorted[sorted.size() / 2];
  bool ok = true;
  double worst = 1.0;
  for (double m : means) {
    double ratio = std::max(m / med, med / m);
    worst = std::max(worst, ratio);
    if (ratio > 10.0) ok = false;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "worst mean/median ratio %.2f over k = 1..6", worst);
  detail = buf;
  return ok;
}

// 9: Combes-Thomas rates mu(eta) non-decreasing within fit bands.
bool criterion9(std::string& detail) {
  ModelConfig cfg = ginibre_config(1, 1.0, 1.0, 1009);
  std::vector<CombesThomasRow> rows = combes_thomas_scan(cfg, 1.0, {0.25, 0.5, 1.0, 2.0}, 0.5, 48, 100);
  bool ok = true;
  std::string mus;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%smu(%.2g) = %.3f", i ? ", " : "", rows[i].eta, rows[i].mu);
    mus += buf;
    if (i > 0 &&
        rows[i].mu + 3.0 * (rows[i].mu_band + rows[i - 1].mu_band) < rows[i - 1].mu)
      ok = false;
  }
  detail = mus;
  return ok;
}

// 10: Bloch infimum vs the periodic gap bound, plus grid refinement at the
// gapless free point.
bool criterion10(std::string& detail) {
  RngStream rng(derive_seed(4010, 0, 0, 0));
  auto rand_invertible = [&](int n) {
    for (;;) {
      CMatrix t = CMatrix::NullaryExpr(
          n, n, [&](Eigen::Index, Eigen::Index) { return rng.next_complex_normal(); });
      if (smallest_singular_value(t) >= 1e-2) return t;
    }
  };
  double worst_excess = 0.0;
  for (int i = 0; i < 1000; ++i) {
    int n = 1 + i % 2;
    CMatrix a = rand_invertible(n), b = rand_invertible(n);
    BlochData bd = bloch_spectrum(a, b, 256);
    double inf_h2 = bd.min_singular * bd.min_singular;
    double bound = periodic_gap_bound(a, b);
    worst_excess = std::max(worst_excess, inf_h2 - bound);
    if (inf_h2 > bound + 1e-8) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "violation: inf %.6g > bound %.6g", inf_h2, bound);
      detail = buf;
      return false;
    }
  }
  CMatrix one = CMatrix::Identity(1, 1);
  BlochData free_pt = bloch_spectrum(one, one, 4096);
  char buf[128];
  std::snprintf(buf, sizeof buf, "worst excess %.2g, free-point grid min %.2g", worst_excess,
                free_pt.min_singular);
  detail = buf;
  return free_pt.min_singular <= 1e-3;
}

// 11: sqrt-W sweep: the smallest exponent away from the exact kernel
// direction satisfies W * min |xi| = 2 under the sigma rule, slope -1 in W.
bool criterion11(std::string& detail) {
  harness::SweepResult res = harness::sqrt_w_sweep(1011, {2, 4, 8}, 200000, 8);
  bool ok = true;
  std::string per_w;
  for (const harness::SweepRow& row : res.rows) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "W=%d: %.4f ", row.w, row.w_times_min_xi);
    per_w += buf;
    double se = std::max(row.min_xi_se, 1e-4);
    if (std::abs(row.w_times_min_xi - 2.0) > 3.0 * row.w * se) ok = false;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "slope %.3f", res.loglog_slope);
  detail = per_w + buf;
  return ok && std::abs(res.loglog_slope + 1.0) <= 0.1;
}

// 12: byte-identical reruns of a representative config per experiment family.
bool criterion12(std::string& detail) {
  namespace fs = std::filesystem;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  struct Case {
    const char* name;
    const char* text;
    const char* file;
  };
  const Case cases[] = {
      {"lyapunov",
       "experiment = lyapunov\n[model]\nn_internal = 1\nseed = 12\n"
       "[params]\nsteps = 4000\nrealizations = 4\nz_re = 1\n",
       "lyapunov.csv"},
      {"sector-zero",
       "experiment = sector-zero\n[model]\nn_internal = 2\nseed = 12\n"
       "[params]\nsteps = 2000\nrealizations = 4\n",
       "sector.csv"},
      {"zero-energy-check",
       "experiment = zero-energy-check\n[model]\nn_internal = 2\nseed = 12\n"
       "[params]\nn_half = 4\nseeds = 5\n",
       "zero_energy_check.csv"},
      {"chart-check",
       "experiment = chart-check\n[model]\nn_internal = 2\nseed = 12\n"
       "[params]\nsamples = 100\n",
       "chart_check.csv"},
      {"fm-decay",
       "experiment = fm-decay\n[model]\nn_internal = 1\nseed = 12\n"
       "[params]\nwindow = 24\nrealizations = 16\neta = 0.5\n",
       "fm_decay.csv"},
  };
  for (const Case& c : cases) {
    fs::path d1 = fs::temp_directory_path() / ("clab_acc12a_" + std::string(c.name));
    fs::path d2 = fs::temp_directory_path() / ("clab_acc12b_" + std::string(c.name));
    fs::remove_all(d1);
    fs::remove_all(d2);
    harness::run(harness::parse_config_text(c.text), d1.string());
    harness::run(harness::parse_config_text(c.text), d2.string());
    if (slurp(d1 / c.file) != slurp(d2 / c.file) ||
        slurp(d1 / "result.json") != slurp(d2 / "result.json")) {
      detail = std::string("mismatch in ") + c.name;
      return false;
    }
  }
  detail = "5 experiment families, CSV and JSON identical";
  return true;
}

using CriterionFn = bool (*)(std::string&);
const CriterionFn kCriteria[] = {criterion1, criterion2, criterion3, criterion4,
                                 criterion5, criterion6, criterion7, criterion8,
                                 criterion9, criterion10, criterion11, criterion12};

bool run_one(int i) {
  std::string detail;
  bool ok = false;
  try {
    ok = kCriteria[i - 1](detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  std::printf("criterion %2d: %s (%s)\n", i, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) {
    int i = std::atoi(argv[1]);
    if (i < 1 || i > 12) {
      std::fprintf(stderr, "usage: acceptance [1-12]\n");
      return 2;
    }
    return run_one(i) ? 0 : 1;
  }
  bool all = true;
  for (int i = 1; i <= 12; ++i) all = run_one(i) && all;
  return all ? 0 : 1;
}
