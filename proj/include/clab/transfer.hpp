#ifndef CLAB_TRANSFER_HPP
#define CLAB_TRANSFER_HPP

#include <cmath>
#include <vector>

#include "clab/linalg.hpp"
#include "clab/model.hpp"
#include "clab/symplectic.hpp"
#include "clab/types.hpp"

namespace clab {

// Transfer matrices A_n(z) = [[z T_n^o, -T_n],[T_n^o, 0]] propagating the
// super wave function Psi_n = (T_{n+1}^* psi_{n+1}, psi_n), and the QR-deflated
// running product used for Lyapunov estimation.

struct TransferMatrix {
  Complex z;
  long n = 0;
  CMatrix matrix;  // order 2N
};

inline CMatrix transfer_block(const CMatrix& t, Complex z) {
  const Eigen::Index n = t.rows();
  CMatrix tc = circ(t);
  CMatrix a = CMatrix::Zero(2 * n, 2 * n);
  a.topLeftCorner(n, n) = z * tc;
  a.topRightCorner(n, n) = -t;
  a.bottomLeftCorner(n, n) = tc;
  return a;
}

inline TransferMatrix transfer_matrix(const CMatrix& t_n, Complex z, long site = 0) {
  return {z, site, transfer_block(t_n, z)};
}

/// The deterministic factor S(z) of the factorization A_n(z) = S(z) a(T_n).
inline CMatrix transfer_factor_s(int n, Complex z) {
  CMatrix s = CMatrix::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    s(i, i) = z;
    s(i, n + i) = Complex(-1, 0);
    s(n + i, i) = Complex(1, 0);
  }
  return s;
}

/// The random factor a(X) = diag(X^o, X).
inline CMatrix transfer_factor_a(const CMatrix& x) {
  const Eigen::Index n = x.rows();
  CMatrix m = CMatrix::Zero(2 * n, 2 * n);
  m.topLeftCorner(n, n) = circ(x);
  m.bottomRightCorner(n, n) = x;
  return m;
}

/// Zero-energy sector map: psi_{2x+1} = -T_{2x+1}^o T_{2x} psi_{2x-1}.
inline CMatrix zero_energy_sector_step(const CMatrix& t_odd, const CMatrix& t_even) {
  return -(circ(t_odd) * t_even);
}

/// QR-deflated product of transfer matrices. Column i of the frame tracks the
/// i-th growth rate; log_sums accumulate log diag(R) at each deflation.
class ProductAccumulator {
 public:
  ProductAccumulator(int dim, int k, int reorth_period = 0)
      : frame_(CMatrix::Identity(dim, k)),
        log_sums_(static_cast<std::size_t>(k), 0.0),
        period_(reorth_period > 0 ? reorth_period : 4) {}

  void apply(const CMatrix& a) {
    frame_ = a * frame_;
    ++steps_;
    ++since_deflate_;
    if (since_deflate_ >= period_ || frame_.squaredNorm() > 1e200) deflate();
  }

  /// In-place variant: `pre` overwrites the frame with (step matrix) * frame.
  /// Lets callers apply factored steps (e.g. an LU solve) without forming the
  /// step matrix explicitly.
  template <typename Pre>
  void apply_with(Pre&& pre) {
    pre(frame_);
    ++steps_;
    ++since_deflate_;
    if (since_deflate_ >= period_ || frame_.squaredNorm() > 1e200) deflate();
  }

  void deflate() {
    if (since_deflate_ == 0) return;
    QRPair qr = qr_pos(frame_);
    frame_ = std::move(qr.Q);
    for (Eigen::Index i = 0; i < qr.R.rows(); ++i)
      log_sums_[static_cast<std::size_t>(i)] += std::log(qr.R(i, i).real());
    since_deflate_ = 0;
  }

  const CMatrix& frame() const { return frame_; }
  const std::vector<double>& log_sums() const { return log_sums_; }
  long steps() const { return steps_; }

 private:
  CMatrix frame_;
  std::vector<double> log_sums_;
  long steps_ = 0;
  int period_;
  int since_deflate_ = 0;
};

inline void propagate(ProductAccumulator& acc, const TransferMatrix& a) { acc.apply(a.matrix); }

struct WronskianValue {
  CMatrix value;
  long site = 0;
};

/// C_n(phi, psi) = phi_n T_{n+1}^* psi_{n+1} - phi_{n+1} T_{n+1} psi_n for a
/// row solution phi and a column solution psi; independent of n when both
/// solve the recursion. Solutions are indexed relative to the window start.
inline WronskianValue wronskian(const std::vector<CMatrix>& phi, const std::vector<CMatrix>& psi,
                                const Realization& r, long n) {
  long i = n - r.a;
  if (i < 0 || i + 1 >= static_cast<long>(phi.size()) || i + 1 >= static_cast<long>(psi.size()) ||
      n + 1 > r.b)
    throw WindowMismatch("wronskian: site outside common window");
  const CMatrix& t_next = r.t(n + 1);
  CMatrix c = phi[static_cast<std::size_t>(i)] * t_next.adjoint() * psi[static_cast<std::size_t>(i + 1)] -
              phi[static_cast<std::size_t>(i + 1)] * t_next * psi[static_cast<std::size_t>(i)];
  return {std::move(c), n};
}

/// psi_{n+1} = T_{n+1}^{-*}(z psi_n - T_n psi_{n-1}); generates a matrix
/// solution over the window from initial data (psi_{a-1}, psi_a).
inline std::vector<CMatrix> propagate_column_solution(const Realization& r, Complex z,
                                                      const CMatrix& psi_prev,
                                                      const CMatrix& psi_first) {
  std::vector<CMatrix> psi;
  psi.reserve(static_cast<std::size_t>(r.size()));
  CMatrix prev = psi_prev, cur = psi_first;
  psi.push_back(cur);
  for (long n = r.a; n < r.b; ++n) {
    CMatrix next = circ(r.t(n + 1)) * (z * cur - r.t(n) * prev);
    prev = cur;
    cur = next;
    psi.push_back(cur);
  }
  return psi;
}

/// Row version: phi_{n+1} = (z phi_n - phi_{n-1} T_n^*) T_{n+1}^{-1}.
inline std::vector<CMatrix> propagate_row_solution(const Realization& r, Complex z,
                                                   const CMatrix& phi_prev,
                                                   const CMatrix& phi_first) {
  std::vector<CMatrix> phi;
  phi.reserve(static_cast<std::size_t>(r.size()));
  CMatrix prev = phi_prev, cur = phi_first;
  phi.push_back(cur);
  for (long n = r.a; n < r.b; ++n) {
    CMatrix next = solve(CMatrix(r.t(n + 1).transpose()),
                         CMatrix((z * cur - prev * r.t(n).adjoint()).transpose()))
                       .transpose();
    prev = cur;
    cur = next;
    phi.push_back(cur);
  }
  return phi;
}

/// Explicit product B_{n,m}(z) = A_n(z) ... A_m(z); diagnostic windows only.
inline CMatrix explicit_product(const Realization& r, Complex z, long m, long n) {
  if (m < r.a || n > r.b || n < m - 1) throw WindowMismatch("explicit_product: bad range");
  const int nn = r.n_internal;
  CMatrix b = CMatrix::Identity(2 * nn, 2 * nn);
  for (long j = m; j <= n; ++j) b = transfer_block(r.t(j), z) * b;
  return b;
}

}  // namespace clab

#endif
