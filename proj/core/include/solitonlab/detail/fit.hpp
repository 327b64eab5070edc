#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace soliton::detail {

struct AffineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least-squares line through (x_i, y_i) with the coefficient of determination.
inline AffineFit affine_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(x.size());
  const double mx = x.mean(), my = y.mean();
  const Eigen::ArrayXd dx = x.array() - mx, dy = y.array() - my;
  const double sxx = (dx * dx).sum();
  const double sxy = (dx * dy).sum();
  const double syy = (dy * dy).sum();
  AffineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = (syy > 0.0 && n > 2) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

}  // namespace soliton::detail
