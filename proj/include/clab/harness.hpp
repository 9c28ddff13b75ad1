#ifndef CLAB_HARNESS_HPP
#define CLAB_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "clab/fit.hpp"
#include "clab/greens.hpp"
#include "clab/lyapunov.hpp"
#include "clab/model.hpp"
#include "clab/parallel.hpp"
#include "clab/symplectic.hpp"
#include "clab/types.hpp"

namespace clab::harness {

// User-facing surface: flat key-value config with [section] headers, seeded
// deterministic experiment dispatch, CSV/JSON persistence. Every default is
// echoed back into the result so runs reproduce from artifacts alone.

struct KV {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::string get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigInvalid("missing config key: " + key);
    return it->second;
  }
  std::string get_or(const std::string& key, const std::string& dflt) {
    auto it = values.find(key);
    if (it == values.end()) {
      values[key] = dflt;  // defaults become part of the echo
      return dflt;
    }
    return it->second;
  }
  double get_num(const std::string& key) {
    std::string v = get(key);
    try {
      std::size_t pos = 0;
      double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigInvalid("config key " + key + ": not a number: " + v);
    }
  }
  double get_num_or(const std::string& key, double dflt) {
    if (!has(key)) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", dflt);
      values[key] = buf;
      return dflt;
    }
    return get_num(key);
  }
  long get_int_or(const std::string& key, long dflt) {
    if (!has(key)) {
      values[key] = std::to_string(dflt);
      return dflt;
    }
    return static_cast<long>(get_num(key));
  }
  std::vector<double> get_list(const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(get(key));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.find_first_not_of(" \t") == std::string::npos) continue;
      out.push_back(std::stod(tok));
    }
    if (out.empty()) throw ConfigInvalid("config key " + key + ": empty list");
    return out;
  }
};

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

/// Flat `key = value` lines; `[section]` headers prefix subsequent keys;
/// '#' starts a comment.
inline KV parse_config_text(const std::string& text) {
  KV kv;
  std::string section;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigInvalid("config line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigInvalid("config line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    kv.values[key] = val;
  }
  return kv;
}

inline KV parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline DistributionSpec distribution_from(KV& kv, const std::string& prefix) {
  std::string kind = kv.get_or(prefix + ".kind", "ginibre");
  DistributionSpec d;
  if (kind == "ginibre") {
    d = DistributionSpec::ginibre(kv.get_num_or(prefix + ".sigma", 1.0));
  } else if (kind == "diagonal_uniform") {
    d = DistributionSpec::diagonal_uniform(kv.get_num_or(prefix + ".radius_min", 0.5),
                                           kv.get_num_or(prefix + ".radius_max", 1.5));
  } else {
    throw ConfigInvalid("unknown distribution kind: " + kind);
  }
  d.resample_threshold = kv.get_num_or(prefix + ".resample_threshold", 1e-8);
  return d;
}

inline ModelConfig model_from(KV& kv) {
  ModelConfig m;
  m.n_internal = static_cast<int>(kv.get_int_or("model.n_internal", 1));
  if (m.n_internal < 1) throw ConfigInvalid("model.n_internal must be >= 1");
  m.seed = static_cast<std::uint64_t>(kv.get_int_or("model.seed", 0));
  m.alpha0 = distribution_from(kv, "model.alpha0");
  m.alpha1 = distribution_from(kv, "model.alpha1");
  if (kv.has("model.onsite.gue_scale"))
    m.onsite = OnsiteSpec{kv.get_num("model.onsite.gue_scale")};
  return m;
}

/// Sorted key=value echo; the config hash (FNV-1a 64) is taken over this.
inline std::string canonical_echo(const KV& kv) {
  std::string s;
  for (const auto& [k, v] : kv.values) {
    s += k;
    s += '=';
    s += v;
    s += '\n';
  }
  return s;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t config_hash(const KV& kv) { return fnv1a64(canonical_echo(kv)); }

inline std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::uint64_t hash, const std::string& columns)
      : out_(path) {
    if (!out_) throw Error("cannot open output file: " + path.string());
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    out_ << "# config_hash=" << buf << "\n" << columns << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ",";
      out_ << cells[i];
    }
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

struct RunResult {
  KV config_echo;
  std::uint64_t hash = 0;
  double wall_seconds = 0.0;
  nlohmann::json summary;
  std::vector<std::string> warnings;
};

struct SweepRow {
  int w = 0;
  double min_xi = 0.0;  // smallest |xi| away from the exact kernel direction
  double min_xi_se = 0.0;
  double w_times_min_xi = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double loglog_slope = 0.0;
};

/// Zero-energy sweep over strip widths with the sigma rule sigma0 = e^{-1/W},
/// sigma1 = e^{-2/W}. The sigma rule exactly cancels the digamma spread at one
/// index per sector, pinning a kernel exponent at zero; the localization-length
/// scale is the smallest nonzero exponent, which the closed form puts at
/// exactly 2/W. So W * min_xi = 2 and the log-log slope in W is -1. The
/// estimated spectrum is index-aligned with the closed form (both descending),
/// which is how the kernel direction is excluded.
inline SweepResult sqrt_w_sweep(std::uint64_t seed, const std::vector<int>& w_list, long steps,
                                int realizations) {
  SweepResult out;
  std::vector<double> log_w, log_minxi;
  for (int w : w_list) {
    ModelConfig cfg;
    cfg.n_internal = w;
    cfg.seed = seed;
    cfg.alpha0 = DistributionSpec::ginibre(std::exp(-1.0 / w));
    cfg.alpha1 = DistributionSpec::ginibre(std::exp(-2.0 / w));
    SectorSpectrum spec = sector_spectrum_zero(cfg, steps, realizations);
    SectorSpectrum exact = ginibre_closed_form(std::exp(-1.0 / w), std::exp(-2.0 / w), w);
    SweepRow row;
    row.w = w;
    row.min_xi = std::numeric_limits<double>::infinity();
    auto scan = [&](const std::vector<double>& est, const std::vector<double>& ses,
                    const std::vector<double>& ex) {
      for (std::size_t j = 0; j < est.size(); ++j) {
        if (std::abs(ex[j]) <= 1e-9) continue;
        if (std::abs(est[j]) < row.min_xi) {
          row.min_xi = std::abs(est[j]);
          row.min_xi_se = ses[j];
        }
      }
    };
    scan(spec.xi_plus, spec.se_plus, exact.xi_plus);
    scan(spec.xi_minus, spec.se_minus, exact.xi_minus);
    row.w_times_min_xi = w * row.min_xi;
    out.rows.push_back(row);
    log_w.push_back(std::log(static_cast<double>(w)));
    log_minxi.push_back(row.min_xi);
  }
  if (w_list.size() >= 3) {
    DecayFit f = fit_exponential(log_w, log_minxi);
    out.loglog_slope = f.slope;
  }
  return out;
}

namespace experiments {

using nlohmann::json;

inline json lyapunov(KV& kv, const std::filesystem::path& out, std::uint64_t hash) {
  ModelConfig m = model_from(kv);
  Complex z(kv.get_num_or("params.z_re", 1.0), kv.get_num_or("params.z_im", 0.0));
  long steps = kv.get_int_or("params.steps", m.n_internal <= 4 ? 100000 : 10000);
  int realizations = static_cast<int>(kv.get_int_or("params.realizations", 8));
  LyapunovEstimate est = estimate_spectrum(m, z, steps, realizations);
  CsvWriter csv(out / "lyapunov.csv", hash, "z_re,z_im,j,gamma,stderr,steps,realizations");
  for (std::size_t j = 0; j < est.gammas.size(); ++j)
    csv.row({fmt(z.real()), fmt(z.imag()), std::to_string(j + 1), fmt(est.gammas[j]),
             fmt(est.std_errors[j]), std::to_string(steps), std::to_string(realizations)});
  json s;
  s["antisymmetry_defect"] = est.antisymmetry_defect();
  s["gamma_sum"] = est.sum();
  s["gammas"] = est.gammas;
  s["std_errors"] = est.std_errors;
  return s;
}

inline json sector_zero(KV& kv, const std::filesystem::path& out, std::uint64_t hash) {
  ModelConfig m = model_from(kv);
  long steps = kv.get_int_or("params.steps", 100000);
  int realizations = static_cast<int>(kv.get_int_or("params.realizations", 8));
  SectorSpectrum spec = sector_spectrum_zero(m, steps, realizations);
  ZeroVerdict v = localized_at_zero(spec);
  CsvWriter csv(out / "sector.csv", hash, "sector,j,xi,stderr,steps,realizations");
  for (std::size_t j = 0; j < spec.xi_plus.size(); ++j)
    csv.row({"+", std::to_string(j + 1), fmt(spec.xi_plus[j]), fmt(spec.se_plus[j]),
             std::to_string(steps), std::to_string(realizations)});
  for (std::size_t j = 0; j < spec.xi_minus.size(); ++j)
    csv.row({"-", std::to_string(j + 1), fmt(spec.xi_minus[j]), fmt(spec.se_minus[j]),
             std::to_string(steps), std::to_string(realizations)});
  json s;
  s["verdict"] = to_string(v);
  s["min_abs_xi"] = spec.min_abs();
  s["xi_plus"] = spec.xi_plus;
  s["xi_minus"] = spec.xi_minus;
  if (m.alpha0.kind == DistributionSpec::Kind::Ginibre &&
      m.alpha1.kind == DistributionSpec::Kind::Ginibre) {
    SectorSpectrum cf = ginibre_closed_form(m.alpha0.sigma, m.alpha1.sigma, m.n_internal);
    s["closed_form_xi_plus"] = cf.xi_plus;
    s["closed_form_xi_minus"] = cf.xi_minus;
  }
  return s;
}

inline json fm_decay(KV& kv, const std::filesystem::path& out, std::uint64_t hash) {
  ModelConfig m = model_from(kv);
  double lambda = kv.get_num_or("params.lambda", 1.0);
  double eta = kv.get_num_or("params.eta", 0.0);
  double s_exp = kv.get_num_or("params.s", 0.5);
  long window = kv.get_int_or("params.window", 64);
  int realizations = static_cast<int>(kv.get_int_or("params.realizations", 200));
  FMEstimate est = fm_estimate(m, lambda, eta, s_exp, window, realizations);
  CsvWriter csv(out / "fm_decay.csv", hash, "distance,mean,stderr,n");
  for (std::size_t d = 0; d < est.distances.size(); ++d)
    csv.row({std::to_string(est.distances[d]), fmt(est.sample_means[d]), fmt(est.std_errors[d]),
             std::to_string(est.counts[d])});
  json fit;
  fit["mu"] = est.mu;
  fit["intercept"] = est.fit.intercept;
  fit["r2"] = est.fit.r_squared;
  fit["band"] = est.mu_band;
  std::ofstream(out / "fit.json") << fit.dump(2) << "\n";
  json s;
  s["mu"] = est.mu;
  s["mu_band"] = est.mu_band;
  s["r2"] = est.fit.r_squared;
  s["rejected_realizations"] = est.rejected_realizations;
  return s;
}

inline json apriori(KV& kv, const std::filesystem::path& out, std::uint64_t hash) {
  ModelConfig m = model_from(kv);
  double s_exp = kv.get_num_or("params.s", 0.5);
  long window = kv.get_int_or("params.window", 64);
  int realizations = static_cast<int>(kv.get_int_or("params.realizations", 500));
  kv.get_or("params.z_im_list", "0.1,0.01,0.001,0.0001,0.00001,0.000001");
  std::vector<Complex> zs;
  for (double im : kv.get_list("params.z_im_list")) zs.emplace_back(0.0, im);
  std::vector<AprioriRow> rows = apriori_scan(m, zs, s_exp, realizations, window);
  CsvWriter csv(out / "apriori.csv", hash, "z_re,z_im,one_step_mean,diag_scaled_mean,flagged");
  bool any_flag = false;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const AprioriRow& r : rows) {
    csv.row({fmt(r.z.real()), fmt(r.z.imag()), fmt(r.one_step_mean), fmt(r.diag_scaled_mean),
             r.flagged ? "1" : "0"});
    any_flag = any_flag || r.flagged;
    lo = std::min(lo, r.one_step_mean);
    hi = std::max(hi, r.one_step_mean);
  }
  json s;
  s["any_flagged"] = any_flag;
  s["one_step_spread"] = hi / lo;
  return s;
}

inline json combes_thomas(KV& kv, const std::filesystem::path& out, std::uint64_t hash) {
  ModelConfig m = model_from(kv);
  double E = kv.get_num_or("params.energy", 1.0);
  double s_exp = kv.get_num_or("params.s", 0.5);
  long window = kv.get_int_or("params.window", 64);
  int realizations = static_cast<int>(kv.get_int_or("params.realizations", 100));
  kv.get_or("params.eta_list", "0.25,0.5,1,2");
  std::vector<double> etas = kv.get_list("params.eta_list");
  std::vector<CombesThomasRow> rows = combes_thomas_scan(m, E, etas, s_exp, window, realizations);
  CsvWriter csv(out / "combes_thomas.csv", hash, "eta,mu,mu_band,r2,mu_over_eta");
  bool monotone = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const CombesThomasRow& r = rows[i];
    csv.row({fmt(r.eta), fmt(r.mu), fmt(r.mu_band), fmt(r.fit.r_squared), fmt(r.mu / r.eta)});
    if (i > 0 && r.mu + 3.0 * (r.mu_band + rows[i - 1].mu_band) < rows[i - 1].mu) monotone = false;
  }
  json s;
  s["monotone_within_bands"] = monotone;
  return s;
}

inline json zero_energy_check(KV& kv, const std::filesystem::path& out, std::uint64_t hash) {
  ModelConfig m = model_from(kv);
  long n_half = kv.get_int_or("params.n_half", 8);  // window [1, 2*n_half]
  int seeds = static_cast<int>(kv.get_int_or("params.seeds", 10));
  double max_dev = 0.0, max_checkerboard = 0.0;
  bool diag_zero = true;
  for (int sd = 0; sd < seeds; ++sd) {
    Realization r = sample_realization(m, 1, 2 * n_half, static_cast<std::uint64_t>(sd));
    FiniteHamiltonian h = assemble_hamiltonian(r);
    double scale = 1.0 + mat_norm(h.h);
    std::vector<std::pair<long, long>> pairs;
    for (long x = 1; x <= 2 * n_half; ++x)
      for (long y = 1; y <= 2 * n_half; ++y) pairs.emplace_back(x, y);
    GreensTable g = greens_finite(h, Complex(0, 0), pairs);
    for (long x = 1; x <= 2 * n_half; ++x)
      for (long y = 1; y <= 2 * n_half; ++y) {
        CMatrix closed = greens_zero_closed_form(r, x, y);
        double dev = max_abs(CMatrix(g.at(x, y) - closed));
        max_dev = std::max(max_dev, dev / scale);
        if (parity_of(x) == parity_of(y))
          max_checkerboard = std::max(max_checkerboard, max_abs(g.at(x, y)) / scale);
        if (x == y && max_abs(closed) != 0.0) diag_zero = false;
      }
  }
  CsvWriter csv(out / "zero_energy_check.csv", hash,
                "n_half,seeds,closed_form_max_dev,checkerboard_max,diag_exact_zero");
  csv.row({std::to_string(n_half), std::to_string(seeds), fmt(max_dev), fmt(max_checkerboard),
           diag_zero ? "1" : "0"});
  json s;
  s["closed_form_max_dev"] = max_dev;
  s["checkerboard_max"] = max_checkerboard;
  s["diag_exact_zero"] = diag_zero;
  return s;
}

inline json chart_check(KV& kv, const std::filesystem::path& out, std::uint64_t hash) {
  ModelConfig m = model_from(kv);
  int samples = static_cast<int>(kv.get_int_or("params.samples", 1000));
  double lambda = kv.get_num_or("params.lambda", 1.0);
  const int n = m.n_internal;
  double max_membership = 0.0, max_roundtrip = 0.0, max_product = 0.0, max_pairing = 0.0;
  RngStream rng(derive_seed(m.seed, 0xC4AE7, 0, 0));
  for (int i = 0; i < samples; ++i) {
    // random chart -> matrix -> chart
    DRSChart c;
    c.D = CMatrix::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) { return rng.next_complex_normal(); });
    CMatrix r0 = CMatrix::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) { return rng.next_complex_normal(); });
    CMatrix s0 = CMatrix::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) { return rng.next_complex_normal(); });
    c.R = 0.5 * (r0 + r0.adjoint());
    c.S = 0.5 * (s0 + s0.adjoint());
    if (smallest_singular_value(c.D) < 1e-3) continue;
    CMatrix mat = matrix_from_chart(c);
    MembershipReport mem = is_symplectic(mat);
    max_membership = std::max(max_membership, mem.residual / std::max(1.0, mat_norm(mat) * mat_norm(mat)));
    DRSChart back = chart_from_matrix(mat);
    double rt = std::max({max_abs(CMatrix(back.D - c.D)), max_abs(CMatrix(back.R - c.R)),
                          max_abs(CMatrix(back.S - c.S))});
    max_roundtrip = std::max(max_roundtrip, rt);
    // product charts vs explicit transfer products
    CMatrix t1 = sample_hopping(m.alpha0, n, rng);
    CMatrix t2 = sample_hopping(m.alpha1, n, rng);
    CMatrix prod = transfer_block(t1, Complex(lambda, 0)) * transfer_block(t2, Complex(lambda, 0));
    DRSChart c2 = product_chart_two(t1, t2, lambda);
    DRSChart c2x = chart_from_matrix(prod);
    double p2 = std::max({max_abs(CMatrix(c2.D - c2x.D)), max_abs(CMatrix(c2.R - c2x.R)),
                          max_abs(CMatrix(c2.S - c2x.S))});
    CMatrix t3 = sample_hopping(m.alpha0, n, rng);
    CMatrix prod3 = transfer_block(t3, Complex(lambda, 0)) * prod;
    DRSChart c3 = product_chart_three(t3, c2, lambda);
    DRSChart c3x = chart_from_matrix(prod3);
    double p3 = std::max({max_abs(CMatrix(c3.D - c3x.D)), max_abs(CMatrix(c3.R - c3x.R)),
                          max_abs(CMatrix(c3.S - c3x.S))});
    max_product = std::max({max_product, p2, p3});
    SymmetryReport sym = spectral_symmetry_check(prod3);
    max_pairing = std::max(max_pairing, sym.sv_pair_defect);
  }
  CsvWriter csv(out / "chart_check.csv", hash,
                "samples,max_membership_residual,max_chart_defect,max_product_defect,max_sv_pairing_defect");
  csv.row({std::to_string(samples), fmt(max_membership), fmt(max_roundtrip), fmt(max_product),
           fmt(max_pairing)});
  json s;
  s["max_chart_defect"] = max_roundtrip;
  s["max_membership_residual"] = max_membership;
  s["max_product_defect"] = max_product;
  s["max_sv_pairing_defect"] = max_pairing;
  return s;
}

inline json bloch(KV& kv, const std::filesystem::path& out, std::uint64_t hash) {
  ModelConfig m = model_from(kv);
  int samples = static_cast<int>(kv.get_int_or("params.samples", 1000));
  int k_grid = static_cast<int>(kv.get_int_or("params.k_grid", 1024));
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  RngStream rng(derive_seed(m.seed, 0xB70C4, 0, 0));
  CsvWriter csv(out / "bloch.csv", hash, "sample,inf_sigma_h2,gap_bound,ok");
  for (int i = 0; i < samples; ++i) {
    CMatrix a = sample_hopping(m.alpha0, m.n_internal, rng);
    CMatrix b = sample_hopping(m.alpha1, m.n_internal, rng);
    BlochData bd = bloch_spectrum(a, b, k_grid);
    double inf_h2 = bd.min_singular * bd.min_singular;
    double bound = periodic_gap_bound(a, b);
    bool ok = inf_h2 <= bound + 1e-8;
    if (!ok) ++violations;
    worst_margin = std::min(worst_margin, bound + 1e-8 - inf_h2);
    csv.row({std::to_string(i), fmt(inf_h2), fmt(bound), ok ? "1" : "0"});
  }
  json s;
  s["violations"] = violations;
  s["worst_margin"] = worst_margin;
  return s;
}

inline json fermi(KV& kv, const std::filesystem::path& out, std::uint64_t hash) {
  ModelConfig m = model_from(kv);
  long window = kv.get_int_or("params.window", 128);
  int seeds = static_cast<int>(kv.get_int_or("params.seeds", 8));
  double fermi_energy = kv.get_num_or("params.fermi_energy", 0.0);
  CsvWriter csv(out / "fermi.csv", hash, "seed,slope,r2");
  double slope_sum = 0.0;
  int used = 0;
  for (int sd = 0; sd < seeds; ++sd) {
    Realization r = sample_realization(m, 1, window, static_cast<std::uint64_t>(sd));
    FiniteHamiltonian h = assemble_hamiltonian(r);
    if (fermi_energy == 0.0 && kernel_dim(h) != 0) continue;
    DecayFit f = fermi_projection_decay(h, fermi_energy);
    csv.row({std::to_string(sd), fmt(f.slope), fmt(f.r_squared)});
    slope_sum += f.slope;
    ++used;
  }
  if (used == 0) throw TooFewSamples("fermi: every seed rejected by the kernel check");
  json s;
  s["mean_slope"] = slope_sum / used;
  s["seeds_used"] = used;
  return s;
}

inline json convergence(KV& kv, const std::filesystem::path& out, std::uint64_t hash) {
  ModelConfig m = model_from(kv);
  Complex z(kv.get_num_or("params.z_re", 0.0), kv.get_num_or("params.z_im", 0.5));
  kv.get_or("params.window_lens", "8,16,32,64,128");
  std::vector<long> lens;
  for (double v : kv.get_list("params.window_lens")) lens.push_back(static_cast<long>(v));
  std::vector<ConvergenceRow> rows = resolvent_convergence_scan(m, z, lens);
  CsvWriter csv(out / "convergence.csv", hash, "half_width,diff_from_prev");
  bool cauchy = true;
  double prev = std::numeric_limits<double>::infinity();
  for (const ConvergenceRow& r : rows) {
    csv.row({std::to_string(r.half_width),
             std::isnan(r.diff_from_prev) ? "nan" : fmt(r.diff_from_prev)});
    if (!std::isnan(r.diff_from_prev)) {
      if (r.diff_from_prev > prev) cauchy = false;
      prev = r.diff_from_prev;
    }
  }
  json s;
  s["cauchy_decreasing"] = cauchy;
  return s;
}

inline json sqrt_w(KV& kv, const std::filesystem::path& out, std::uint64_t hash) {
  std::uint64_t seed = static_cast<std::uint64_t>(kv.get_int_or("model.seed", 0));
  kv.get_or("params.w_list", "2,4,8");
  std::vector<int> ws;
  for (double v : kv.get_list("params.w_list")) ws.push_back(static_cast<int>(v));
  long steps = kv.get_int_or("params.steps", 200000);
  int realizations = static_cast<int>(kv.get_int_or("params.realizations", 8));
  SweepResult res = sqrt_w_sweep(seed, ws, steps, realizations);
  CsvWriter csv(out / "sqrt_w_sweep.csv", hash, "w,min_xi,min_xi_se,w_times_min_xi");
  for (const SweepRow& r : res.rows)
    csv.row({std::to_string(r.w), fmt(r.min_xi), fmt(r.min_xi_se), fmt(r.w_times_min_xi)});
  json s;
  s["loglog_slope"] = res.loglog_slope;
  json rows = json::array();
  for (const SweepRow& r : res.rows)
    rows.push_back({{"w", r.w}, {"min_xi", r.min_xi}, {"w_times_min_xi", r.w_times_min_xi}});
  s["rows"] = rows;
  return s;
}

}  // namespace experiments

/// Validate, dispatch, persist. Throws ConfigInvalid before any computation on
/// bad input; numerical failures propagate as clab::Error. The config hash is
/// taken over the user-provided config; defaults resolved during the run are
/// echoed into result.json so runs reproduce from artifacts alone.
inline RunResult run(KV config, const std::string& out_dir) {
  const std::string experiment = config.has("experiment") ? config.get("experiment") : "";
  static const std::vector<std::string> known = {
      "lyapunov",    "sector-zero", "fm-decay", "apriori",     "combes-thomas",
      "zero-energy-check", "chart-check", "bloch", "fermi", "convergence", "sqrt-w-sweep"};
  if (std::find(known.begin(), known.end(), experiment) == known.end())
    throw ConfigInvalid("unknown experiment: '" + experiment + "'");
  if (experiment != "sqrt-w-sweep") {
    KV probe = config;  // fail fast on malformed model blocks
    (void)model_from(probe);
  }
  std::filesystem::path out(out_dir);
  std::filesystem::create_directories(out);
  auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t hash = config_hash(config);
  KV effective = config;
  nlohmann::json summary;
  if (experiment == "lyapunov") summary = experiments::lyapunov(effective, out, hash);
  else if (experiment == "sector-zero") summary = experiments::sector_zero(effective, out, hash);
  else if (experiment == "fm-decay") summary = experiments::fm_decay(effective, out, hash);
  else if (experiment == "apriori") summary = experiments::apriori(effective, out, hash);
  else if (experiment == "combes-thomas") summary = experiments::combes_thomas(effective, out, hash);
  else if (experiment == "zero-energy-check") summary = experiments::zero_energy_check(effective, out, hash);
  else if (experiment == "chart-check") summary = experiments::chart_check(effective, out, hash);
  else if (experiment == "bloch") summary = experiments::bloch(effective, out, hash);
  else if (experiment == "fermi") summary = experiments::fermi(effective, out, hash);
  else if (experiment == "convergence") summary = experiments::convergence(effective, out, hash);
  else summary = experiments::sqrt_w(effective, out, hash);
  RunResult res;
  res.config_echo = effective;
  res.hash = hash;
  res.summary = summary;
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  nlohmann::json result;
  char hbuf[32];
  std::snprintf(hbuf, sizeof hbuf, "%016llx", static_cast<unsigned long long>(hash));
  result["config_hash"] = hbuf;
  result["experiment"] = experiment;
  result["summary"] = summary;
  nlohmann::json echo;
  for (const auto& [k, v] : effective.values) echo[k] = v;
  result["config_echo"] = echo;
  // wall time goes to a separate, rerun-variable file so every science
  // artifact stays byte-identical across reruns
  std::ofstream(out / "result.json") << result.dump(2) << "\n";
  std::ofstream(out / "timing.txt") << fmt(res.wall_seconds) << "\n";
  return res;
}

}  // namespace clab::harness

#endif
