#pragma once

#include "solitonlab/ground_state.hpp"
#include "solitonlab/radial_grid.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace soliton {

// Certified summary of the linearization's discrete spectrum.
struct SpectralReport {
  double alpha = 0.0;
  double E0 = 0.0;       // lowest eigenvalue of the ell=0 scalar-plus operator
  double lambda1 = 0.0;  // root of g in (E0, 0)
  double sigma = 0.0;    // magnitude of the imaginary eigenvalue pair
  int root_dim_geometric = 0;
  int root_dim_algebraic = 0;
  int bs_count_minus = 0;
  int bs_count_plus = 0;
  double threshold_margin = 0.0;
  bool interval_clear = false;
};

// Eigenvector pair for one member of the imaginary pair: right vector f,
// left (adjoint) vector f~ scaled so <f, f~>_w = 1. Vectors are stacked
// 2-component f-representation samples of length 2n.
struct EigenPair {
  std::complex<double> value;
  Eigen::VectorXcd right_vec;
  Eigen::VectorXcd left_vec;
  double left_norm2 = 0.0;  // recorded w-norm of f~ (not normalized to 1)
};

struct SigmaResult {
  double sigma = 0.0;
  Eigen::VectorXd v;  // f-rep; satisfies L_plus v = sigma u, <v, phi>_w = 0
  Eigen::VectorXd u;  // f-rep; satisfies L_minus u = -sigma v
};

struct RootDims {
  int geometric = 0;
  int algebraic = 0;
};

struct BsCount {
  int count = 0;
  std::vector<double> eigenvalues_above_1;
};

enum class BsKind { minus, plus };

// g(lambda) = <(L_plus - lambda)^{-1} phi, phi>_w on the ell=0 sector,
// analytic on (E0, alpha^2), strictly increasing, g(0) > 0.
double g_function(const GroundState& gs, double lambda);

// Root of g in (E0, 0); bisection to |g| <= 1e-10 with a residual
// certificate on the resolvent solve.
double find_lambda1(const GroundState& gs);

// Lowest eigenvalue -sigma^2 of the symmetrized product on the complement
// of phi, plus the witness pair (v, u).
SigmaResult compute_sigma(const GroundState& gs);

// J-invariant eigenvector for +i sigma (sign=+1) or -i sigma (sign=-1),
// with the w-adjoint eigenvector scaled to <f, f~>_w = 1.
EigenPair eigenpair_imaginary(const GroundState& gs, int sign);

// (geometric, algebraic) = (4, 8) near-zero dimension counts with angular
// multiplicity, certified by singular-value thresholds with gap checks.
RootDims root_space_report(const GroundState& gs);

// Eigenvalues above 1 of the Birman-Schwinger kernel summed over sectors
// ell <= ell_max with multiplicity 2*ell+1; counts bound states below the
// threshold alpha^2 of the corresponding scalar operator.
BsCount birman_schwinger_count(const GroundState& gs, BsKind which, int ell_max);

// min over spec(K_minus) of |mu - 1|; bounded away from 0 certifies the
// thresholds are not resonances. Stability under grid doubling is the
// caller's obligation (certify_spectrum performs it).
double threshold_margin(const GroundState& gs);

// Discrete spectrum of the matrix Hamiltonian in the vertical strip
// |Re lambda| < 0.9 alpha^2 for one sector, via the exact square-root
// unfolding of the n x n product operator.
std::vector<std::complex<double>> strip_spectrum(const GroundState& gs,
                                                 const SectorIndex& sector);

// Full certificate: all counts at resolution n and 2n, margins, sigma.
// Throws CertificationFailure / InconclusiveResult on defects.
SpectralReport certify_spectrum(const GroundState& gs, int ell_max = 3);

namespace detail {
// Margin for an arbitrary profile in place of phi (continuation testing).
double bs_margin_profile(const RadialGrid& grid, const Eigen::VectorXd& profile,
                         int ell_max);
}  // namespace detail

}  // namespace soliton
