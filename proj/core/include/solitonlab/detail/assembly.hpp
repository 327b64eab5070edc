#pragma once

#include "solitonlab/ground_state.hpp"
#include "solitonlab/radial_grid.hpp"

#include <Eigen/Dense>

namespace soliton::detail {

// f-representation of a u-coordinate matrix: M_f = D^{-1} A D, D = diag(r_i).
Eigen::MatrixXd f_rep(const RadialGrid& g, const Eigen::MatrixXd& a_u);

// u-representation symmetric matrix of -Delta_ell + alpha^2 - c phi^2 with
// the fourth-order certificate stencil.
Eigen::MatrixXd scalar_op_u(const GroundState& gs, int ell, double coupling);

}  // namespace soliton::detail
