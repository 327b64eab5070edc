#pragma once

#include <Eigen/Dense>

#include <complex>

namespace soliton {

// Angular momentum sector of a radially symmetric problem.
struct SectorIndex {
  int ell = 0;
  int multiplicity = 1;  // 2*ell + 1

  SectorIndex() = default;
  explicit SectorIndex(int l);
};

// Uniform radial grid on (0, r_max) with volume quadrature weights.
// Nodes are r_i = i*h for i = 1..n with h = r_max/(n+1); both endpoints are
// excluded, matching Dirichlet truncation at r_max and regularity at 0.
struct RadialGrid {
  double r_max = 0.0;
  int n = 0;
  Eigen::VectorXd nodes;    // r_i, ascending
  Eigen::VectorXd weights;  // 4*pi*r_i^2*h

  double h() const { return r_max / (n + 1); }
};

RadialGrid make_grid(double r_max, int n);

// Volume inner products; the complex form conjugates the second argument.
double dot_w(const RadialGrid& g, const Eigen::VectorXd& f, const Eigen::VectorXd& v);
std::complex<double> dot_w(const RadialGrid& g, const Eigen::VectorXcd& f,
                           const Eigen::VectorXcd& v);
double norm_w(const RadialGrid& g, const Eigen::VectorXd& f);
double norm_w(const RadialGrid& g, const Eigen::VectorXcd& f);

}  // namespace soliton
