#pragma once

#include <Eigen/Dense>

#include <variant>

#include "solitonlab/detail/stencils.hpp"
#include "solitonlab/ground_state.hpp"
#include "solitonlab/radial_grid.hpp"

namespace soliton {

enum class OperatorKind { laplacian, L_minus, L_plus, H_matrix, H_uv };

// Dense discretization of an operator restricted to one angular sector,
// acting on physical radial samples f(r_i).  Scalar kinds are n x n and
// symmetric in the volume inner product; the two-component kinds are
// 2n x 2n acting on stacked (top, bottom) samples.
struct SectorOperator {
  SectorIndex sector;
  OperatorKind kind = OperatorKind::laplacian;
  RadialGrid grid;
  std::variant<Eigen::MatrixXd, Eigen::MatrixXcd> matrix;

  const Eigen::MatrixXd& real() const { return std::get<Eigen::MatrixXd>(matrix); }
  const Eigen::MatrixXcd& cplx() const { return std::get<Eigen::MatrixXcd>(matrix); }
};

// -d^2/dr^2 - (2/r) d/dr + ell(ell+1)/r^2 on samples, Dirichlet at r_max.
// The default stencil is the documented second-order one; assemblies that
// back eigenvalue certificates use the fourth-order variant.
SectorOperator radial_laplacian(const RadialGrid& grid, const SectorIndex& sector,
                                detail::StencilOrder order = detail::StencilOrder::second);

// L_minus = -lap + alpha^2 - phi^2      (annihilates phi in the ell = 0 sector)
// L_plus  = -lap + alpha^2 - 3 phi^2    (annihilates dphi_dr in ell = 1)
SectorOperator assemble_L_minus(const GroundState& gs, const SectorIndex& sector);
SectorOperator assemble_L_plus(const GroundState& gs, const SectorIndex& sector);

// Two-component linearization around the soliton, in (R, conj R) samples:
//   [ -lap + alpha^2 - 2 phi^2      -phi^2          ]
//   [        phi^2            lap - alpha^2 + 2 phi^2 ]
SectorOperator assemble_H(const GroundState& gs, const SectorIndex& sector);

// Similarity transform of H by [[1, i], [1, -i]], which block-antidiagonalizes
// it to [[0, i L_minus], [-i L_plus, 0]].
SectorOperator assemble_H_uv(const GroundState& gs, const SectorIndex& sector);

// Same operator in u = r*f coordinates, where the volume inner product is
// 4*pi*h times the plain dot product and scalar kinds are plainly symmetric.
Eigen::MatrixXd u_rep(const SectorOperator& op);
Eigen::MatrixXcd u_rep_cplx(const SectorOperator& op);

}  // namespace soliton
