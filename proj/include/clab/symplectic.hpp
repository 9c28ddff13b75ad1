#ifndef CLAB_SYMPLECTIC_HPP
#define CLAB_SYMPLECTIC_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "clab/linalg.hpp"
#include "clab/types.hpp"

namespace clab {

// The Hermitian symplectic group Sp*_{2N}(C) = { M : M* J M = J } with
// J = [[0, -I],[I, 0]], together with the (D,R,S) chart on the open subset
// where the lower-right block is invertible: B = R D, C = D S,
// A = D^o (1 + B* C).

inline CMatrix symplectic_form(int n) {
  CMatrix j = CMatrix::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    j(i, n + i) = Complex(-1, 0);
    j(n + i, i) = Complex(1, 0);
  }
  return j;
}

struct MembershipReport {
  bool ok = false;
  double residual = 0.0;
};

inline MembershipReport is_symplectic(const CMatrix& m, double tol = 1e-10) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0)
    throw OddDimension("is_symplectic: matrix order must be even");
  const int n = static_cast<int>(m.rows()) / 2;
  CMatrix j = symplectic_form(n);
  double res = max_abs(CMatrix(m.adjoint() * j * m - j));
  double scale = std::max(1.0, mat_norm(m) * mat_norm(m));
  return {res <= tol * scale, res};
}

struct DRSChart {
  CMatrix D;  // invertible
  CMatrix R;  // Hermitian
  CMatrix S;  // Hermitian
  double asymmetry = 0.0;  // reported symmetrization residual
};

inline CMatrix matrix_from_chart(const DRSChart& c) {
  const Eigen::Index n = c.D.rows();
  if (smallest_singular_value(c.D) < 1e-300 * tol_scale(c.D))
    throw ChartDegenerate("matrix_from_chart: D numerically singular");
  CMatrix b = c.R * c.D;
  CMatrix s = c.D * c.S;  // the C block
  CMatrix a = circ(c.D) * (CMatrix::Identity(n, n) + b.adjoint() * s);
  CMatrix m(2 * n, 2 * n);
  m.topLeftCorner(n, n) = a;
  m.topRightCorner(n, n) = b;
  m.bottomLeftCorner(n, n) = s;
  m.bottomRightCorner(n, n) = c.D;
  return m;
}

inline DRSChart chart_from_matrix(const CMatrix& m, double reject_asymmetry_above = -1.0) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0)
    throw OddDimension("chart_from_matrix: matrix order must be even");
  const Eigen::Index n = m.rows() / 2;
  CMatrix b = m.topRightCorner(n, n);
  CMatrix cblk = m.bottomLeftCorner(n, n);
  CMatrix d = m.bottomRightCorner(n, n);
  SingularSpectrum sd = singular_values(d);
  if (sd.values[n - 1] <= 0 || sd.values[0] / sd.values[n - 1] > 1e12)
    throw DBlockSingular("chart_from_matrix: D block singular or too ill-conditioned");
  CMatrix dinv = inverse(d);
  CMatrix r_raw = b * dinv;
  CMatrix s_raw = dinv * cblk;
  double asym = std::max(max_abs(CMatrix(r_raw - r_raw.adjoint())),
                         max_abs(CMatrix(s_raw - s_raw.adjoint())));
  if (reject_asymmetry_above >= 0.0 && asym > reject_asymmetry_above)
    throw ChartDegenerate("chart_from_matrix: asymmetry above rejection threshold");
  DRSChart c;
  c.D = d;
  c.R = 0.5 * (r_raw + r_raw.adjoint());
  c.S = 0.5 * (s_raw + s_raw.adjoint());
  c.asymmetry = asym;
  return c;
}

/// Chart of A(t1,lambda) * A(t2,lambda): D = -t1^o t2, R = lambda I,
/// S = -lambda (t2* t2)^{-1}.
inline DRSChart product_chart_two(const CMatrix& t1, const CMatrix& t2, double lambda) {
  if (lambda == 0.0) throw Error("product_chart_two: lambda must be non-zero");
  const Eigen::Index n = t1.rows();
  DRSChart c;
  c.D = -circ(t1) * t2;
  c.R = lambda * CMatrix::Identity(n, n);
  c.S = -lambda * inverse(CMatrix(t2.adjoint() * t2));
  return c;
}

/// Chart of A(t,lambda) * M' for M' in the lambda-slice (R = lambda I):
/// D~ = lambda t^o D, R~ = lambda - lambda^{-1} t t*, S~ = S + lambda^{-1}(D* D)^{-1}.
inline DRSChart product_chart_three(const CMatrix& t, const DRSChart& c, double lambda) {
  if (lambda == 0.0) throw Error("product_chart_three: lambda must be non-zero");
  const Eigen::Index n = t.rows();
  DRSChart out;
  out.D = lambda * (circ(t) * c.D);
  out.R = lambda * CMatrix::Identity(n, n) - (1.0 / lambda) * (t * t.adjoint());
  out.S = c.S + (1.0 / lambda) * inverse(CMatrix(c.D.adjoint() * c.D));
  return out;
}

struct SymmetryReport {
  double eig_pair_defect = 0.0;  // max_j |r_j * r_{2N+1-j} - 1| over eigenvalue moduli
  double sv_pair_defect = 0.0;   // same for singular values
  std::vector<double> eig_moduli;      // ascending
  std::vector<double> singular_vals;   // ascending
};

/// Eigenvalues of a Hermitian symplectic matrix are symmetric about the unit
/// circle, so its singular values are symmetric about one.
inline SymmetryReport spectral_symmetry_check(const CMatrix& m) {
  SymmetryReport rep;
  const Eigen::Index dim = m.rows();
  Eigen::ComplexEigenSolver<CMatrix> es(m);
  rep.eig_moduli.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) rep.eig_moduli[i] = std::abs(es.eigenvalues()[i]);
  std::sort(rep.eig_moduli.begin(), rep.eig_moduli.end());
  SingularSpectrum sv = singular_values(m);
  rep.singular_vals.assign(sv.values.data(), sv.values.data() + sv.values.size());
  std::sort(rep.singular_vals.begin(), rep.singular_vals.end());
  for (Eigen::Index i = 0; i < dim; ++i) {
    rep.eig_pair_defect = std::max(
        rep.eig_pair_defect, std::abs(rep.eig_moduli[i] * rep.eig_moduli[dim - 1 - i] - 1.0));
    rep.sv_pair_defect = std::max(
        rep.sv_pair_defect,
        std::abs(rep.singular_vals[i] * rep.singular_vals[dim - 1 - i] - 1.0));
  }
  return rep;
}

}  // namespace clab

#endif
