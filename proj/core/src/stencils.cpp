#include "solitonlab/detail/stencils.hpp"

#include <vector>

namespace soliton::detail {

Eigen::SparseMatrix<double> u_radial_op_sparse(const RadialGrid& g, int ell, StencilOrder order) {
  const int n = g.n;
  const double h = g.h();
  const double cc = ell * (ell + 1);
  std::vector<Eigen::Triplet<double>> trip;
  if (order == StencilOrder::second) {
    trip.reserve(3 * n);
    const double d = 2.0 / (h * h);
    const double o = -1.0 / (h * h);
    for (int i = 0; i < n; ++i) {
      const double r = g.nodes(i);
      trip.emplace_back(i, i, d + cc / (r * r));
      if (i > 0) trip.emplace_back(i, i - 1, o);
      if (i + 1 < n) trip.emplace_back(i, i + 1, o);
    }
  } else {
    trip.reserve(5 * n);
    const double s = (ell % 2 == 0) ? -1.0 : 1.0;  // u(-h) = s*u(h)
    const double c2 = 1.0 / (12.0 * h * h);
    const double c1 = -16.0 / (12.0 * h * h);
    const double c0 = 30.0 / (12.0 * h * h);
    for (int i = 0; i < n; ++i) {
      const double r = g.nodes(i);
      double diag = c0 + cc / (r * r);
      if (i == 0) diag += s * c2;  // ghost at -h folded in
      trip.emplace_back(i, i, diag);
      if (i >= 1) trip.emplace_back(i, i - 1, c1);
      if (i >= 2) trip.emplace_back(i, i - 2, c2);
      if (i + 1 < n) trip.emplace_back(i, i + 1, c1);
      if (i + 2 < n) trip.emplace_back(i, i + 2, c2);
    }
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

Eigen::MatrixXd u_radial_op_dense(const RadialGrid& g, int ell, StencilOrder order) {
  return Eigen::MatrixXd(u_radial_op_sparse(g, ell, order));
}

Eigen::VectorXd u_derivative(const Eigen::VectorXd& u, double h, int ell) {
  const int n = static_cast<int>(u.size());
  const double s = (ell % 2 == 0) ? -1.0 : 1.0;
  auto at = [&](int i) -> double {
    if (i >= 0 && i < n) return u(i);
    if (i == -1) return 0.0;               // u(0)
    if (i == -2) return s * u(0);          // u(-h)
    return 0.0;                            // past r_max
  };
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) {
    d(i) = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) / (12.0 * h);
  }
  return d;
}

}  // namespace soliton::detail
