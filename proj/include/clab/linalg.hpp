#ifndef CLAB_LINALG_HPP
#define CLAB_LINALG_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "clab/types.hpp"

namespace clab {

struct QRPair {
  CMatrix Q;  // unitary
  CMatrix R;  // upper triangular, real positive diagonal
};

struct SingularSpectrum {
  RVector values;  // descending, nonnegative

  double product() const {
    double p = 1.0;
    for (Eigen::Index i = 0; i < values.size(); ++i) p *= values[i];
    return p;
  }
};

struct EigenSystem {
  RVector values;   // ascending
  CMatrix vectors;  // columns
};

struct SolveReport {
  double rcond = 1.0;
  bool ill_conditioned = false;
};

/// QR with the uniqueness convention diag(R) real and positive; the phase is
/// absorbed into Q. Works for square and tall inputs (thin factorization).
inline QRPair qr_pos(const CMatrix& m) {
  require_finite(m, "qr_pos");
  const Eigen::Index rows = m.rows(), cols = m.cols();
  Eigen::HouseholderQR<CMatrix> qr(m);
  CMatrix q = qr.householderQ() * CMatrix::Identity(rows, cols);
  CMatrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < cols; ++i) {
    double d = std::abs(r(i, i));
    if (d < 1e-300) throw RankDeficient("qr_pos: diagonal pivot underflow");
    Complex phase = r(i, i) / d;
    r.row(i) *= std::conj(phase);
    q.col(i) *= phase;
    r(i, i) = d;  // exactly real
  }
  // exact structural zeros below the diagonal
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = j + 1; i < cols; ++i) r(i, j) = Complex(0, 0);
  return {std::move(q), std::move(r)};
}

inline SingularSpectrum singular_values(const CMatrix& m) {
  require_finite(m, "singular_values");
  if (std::min(m.rows(), m.cols()) > 32) {
    Eigen::BDCSVD<CMatrix> svd(m);
    return {svd.singularValues()};
  }
  Eigen::JacobiSVD<CMatrix> svd(m);
  return {svd.singularValues()};
}

/// Norm of the j-th exterior power: the product of the top j singular values.
inline double wedge_norm(const CMatrix& m, int j) {
  const int n = static_cast<int>(std::min(m.rows(), m.cols()));
  if (j < 0 || j > n) throw BadOrder("wedge_norm: order out of range");
  if (j == 0) return 1.0;
  SingularSpectrum s = singular_values(m);
  double p = 1.0;
  for (int i = 0; i < j; ++i) p *= s.values[i];
  return p;
}

inline CMatrix solve(const CMatrix& m, const CMatrix& rhs, SolveReport* report = nullptr) {
  require_finite(m, "solve");
  require_finite(rhs, "solve rhs");
  if (m.rows() != m.cols() || m.rows() != rhs.rows()) throw Error("solve: shape mismatch");
  Eigen::PartialPivLU<CMatrix> lu(m);
  double rc = lu.rcond();
  if (!(rc > 0.0) || !std::isfinite(rc)) throw Singular("solve: numerically singular matrix");
  CMatrix x = lu.solve(rhs);
  if (!x.allFinite()) throw Singular("solve: non-finite solution");
  if (report) {
    report->rcond = rc;
    report->ill_conditioned = rc < 1e-14;
  }
  return x;
}

inline CMatrix inverse(const CMatrix& m, SolveReport* report = nullptr) {
  return solve(m, CMatrix::Identity(m.rows(), m.cols()), report);
}

/// M^o = (M^*)^{-1} = (M^{-1})^*.
inline CMatrix circ(const CMatrix& m) {
  Eigen::PartialPivLU<CMatrix> lu(m.adjoint());
  double rc = lu.rcond();
  if (!(rc > 0.0)) throw SingularHopping("circ: singular matrix");
  CMatrix x = lu.solve(CMatrix::Identity(m.rows(), m.cols()));
  if (!x.allFinite()) throw SingularHopping("circ: singular matrix");
  return x;
}

inline EigenSystem herm_eig(const CMatrix& m) {
  require_finite(m, "herm_eig");
  double asym = max_abs(CMatrix(m - m.adjoint()));
  if (asym > 1e-10 * tol_scale(m)) throw NotHermitian("herm_eig: input not Hermitian");
  CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw Error("herm_eig: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// Trace norm (sum of singular values); the paper's norm for Green's blocks.
inline double trace_norm(const CMatrix& m) { return singular_values(m).values.sum(); }

inline double operator_norm(const CMatrix& m) {
  SingularSpectrum s = singular_values(m);
  return s.values.size() ? s.values[0] : 0.0;
}

inline double smallest_singular_value(const CMatrix& m) {
  SingularSpectrum s = singular_values(m);
  return s.values.size() ? s.values[s.values.size() - 1] : 0.0;
}

}  // namespace clab

#endif
