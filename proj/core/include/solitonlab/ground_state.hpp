#pragma once

#include <Eigen/Dense>

#include "solitonlab/radial_grid.hpp"

namespace soliton {

// Positive radial ground state of -lap(phi) + alpha^2 phi = phi^3 together
// with its radial and scaling derivatives, all sampled on one grid.  The
// profile solves the fourth-order discrete equation on its grid to machine
// precision, so discretized linearized operators built from the same grid
// annihilate or map these samples exactly where the calculus says they
// should.
struct GroundState {
  double alpha = 0.0;
  RadialGrid grid;
  Eigen::VectorXd phi;
  Eigen::VectorXd dphi_dr;
  Eigen::VectorXd dphi_dalpha;
  double mass = 0.0;  // squared L2 norm of phi
  double phi0 = 0.0;  // amplitude at r = 0
};

// Shooting on the origin slope, then damped Newton on the discrete system.
// Throws std::invalid_argument for bad alpha, NoConvergenceError if the
// shooting bracket [0.1, 100]*alpha fails to straddle the separatrix.
GroundState solve_ground_state(double alpha, const RadialGrid& grid);

// d/dalpha of the profile at fixed r via the scaling family
// phi(r, alpha) = alpha*phi(alpha*r, 1); the reference profile is solved on
// the matched grid so the scaled nodes align exactly.
Eigen::VectorXd d_alpha_profile(double alpha, const RadialGrid& grid);

}  // namespace soliton
