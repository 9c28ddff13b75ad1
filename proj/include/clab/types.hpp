#ifndef CLAB_TYPES_HPP
#define CLAB_TYPES_HPP

#include <Eigen/Dense>
#include <complex>

#include "clab/errors.hpp"

namespace clab {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline bool all_finite(const CMatrix& m) { return m.allFinite(); }

/// Entrywise max norm.
inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Max-row-sum (operator infinity) norm; the reference norm for tolerances.
inline double mat_norm(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Relative tolerance scale with an absolute floor.
inline double tol_scale(const CMatrix& m) {
  double s = mat_norm(m);
  return s > 1e-300 ? s : 1e-300;
}

inline void require_finite(const CMatrix& m, const char* what) {
  if (!all_finite(m)) throw Error(std::string(what) + ": non-finite entries");
}

}  // namespace clab

#endif
