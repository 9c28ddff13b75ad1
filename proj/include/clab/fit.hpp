#ifndef CLAB_FIT_HPP
#define CLAB_FIT_HPP

#include <cmath>
#include <string>
#include <vector>

#include "clab/errors.hpp"

namespace clab {

struct DecayFit {
  double slope = 0.0;      // of log y vs x; decay rate = -slope
  double intercept = 0.0;
  double r_squared = 0.0;
  double x_lo = 0.0, x_hi = 0.0;  // fit window actually used
  std::string label;

  double rate() const { return -slope; }
};

/// Least squares of log y against x over [x_lo, x_hi] (whole range if the
/// window is empty, x_lo > x_hi).
inline DecayFit fit_exponential(const std::vector<double>& xs, const std::vector<double>& ys,
                                double x_lo = 1.0, double x_hi = 0.0,
                                const std::string& label = "") {
  if (xs.size() != ys.size()) throw DegenerateFit("fit_exponential: size mismatch");
  bool whole = x_lo > x_hi;
  std::vector<double> x, ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!whole && (xs[i] < x_lo || xs[i] > x_hi)) continue;
    if (!(ys[i] > 0.0) || !std::isfinite(ys[i])) continue;
    x.push_back(xs[i]);
    ly.push_back(std::log(ys[i]));
  }
  if (x.size() < 3) throw DegenerateFit("fit_exponential: fewer than 3 usable points");
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += ly[i];
    sxx += x[i] * x[i];
    sxy += x[i] * ly[i];
    syy += ly[i] * ly[i];
  }
  double denom = n * sxx - sx * sx;
  if (denom <= 0.0) throw DegenerateFit("fit_exponential: all x equal");
  DecayFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double e = ly[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
  }
  f.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
  f.x_lo = x.front();
  f.x_hi = x.back();
  f.label = label;
  return f;
}

}  // namespace clab

#endif
