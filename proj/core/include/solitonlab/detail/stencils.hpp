#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "solitonlab/radial_grid.hpp"

namespace soliton::detail {

// Discretizations of -d^2/dr^2 + ell(ell+1)/r^2 acting on u(r) = r*f(r) with
// u(0) = u(r_max) = 0.  In these coordinates the operator is plainly
// symmetric and the volume inner product of f's reduces to 4*pi*h*<u, v>.
//
// The fourth-order stencil closes the origin row by parity: a regular
// sector-ell function has u ~ r^{ell+1}, so u(-h) = (-1)^{ell+1} u(h).
// Folding the ghost into the diagonal keeps the matrix symmetric.

enum class StencilOrder { second, fourth };

Eigen::SparseMatrix<double> u_radial_op_sparse(const RadialGrid& g, int ell, StencilOrder order);
Eigen::MatrixXd u_radial_op_dense(const RadialGrid& g, int ell, StencilOrder order);

// Fourth-order first derivative of a sector-ell u-line function, same
// parity closure at the origin, zero extension past r_max.
Eigen::VectorXd u_derivative(const Eigen::VectorXd& u, double h, int ell);

inline Eigen::VectorXd u_from_f(const RadialGrid& g, const Eigen::VectorXd& f) {
  return g.nodes.cwiseProduct(f);
}
inline Eigen::VectorXd f_from_u(const RadialGrid& g, const Eigen::VectorXd& u) {
  return u.cwiseQuotient(g.nodes);
}
inline Eigen::VectorXcd u_from_f(const RadialGrid& g, const Eigen::VectorXcd& f) {
  return g.nodes.cast<std::complex<double>>().cwiseProduct(f);
}
inline Eigen::VectorXcd f_from_u(const RadialGrid& g, const Eigen::VectorXcd& u) {
  return u.cwiseQuotient(g.nodes.cast<std::complex<double>>());
}

}  // namespace soliton::detail
