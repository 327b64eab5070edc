#pragma once

#include "solitonlab/ground_state.hpp"
#include "solitonlab/radial_grid.hpp"
#include "solitonlab/spectral.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>

namespace soliton {

// Frozen soliton parameter point: the families are evaluated with zero
// internal phase and the center at the grid origin.
struct SolitonParams {
  double alpha = 1.0;
  double gamma = 0.0;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
};

// Two-component field over the angular sectors that carry the symmetry
// family: one ell=0 block and three ell=1 blocks, each stacked (f1, f2)
// of length 2n. Angular profiles use harmonics normalized to 4*pi so all
// sectors share the grid weights.
struct StackedField {
  Eigen::VectorXcd ell0;
  std::array<Eigen::VectorXcd, 3> ell1;

  static StackedField zero(int n);
};

std::complex<double> dot_stacked(const RadialGrid& g, const StackedField& a,
                                 const StackedField& b);
double norm_stacked(const RadialGrid& g, const StackedField& a);

// Symmetry families xi_j (adjoint side) and eta_j = diag(-i, i) xi_j
// (kernel side), j = 1..8, with the 8x8 pairing matrix G_{kj} = <eta_j, xi_k>.
struct RootFamily {
  std::array<StackedField, 8> xi;
  std::array<StackedField, 8> eta;
  Eigen::Matrix<double, 8, 8> pairing;
};

RootFamily build_root_family(const GroundState& gs, const SolitonParams& params);

// Riesz projections in factored rank-limited form. Sector-wise application:
// the ell=0 block carries the rank-2 family part plus both eigenmode
// projections; each ell=1 block carries its rank-2 family part; higher
// sectors are untouched.
class ProjectionSet {
 public:
  ProjectionSet(const GroundState& gs, const RootFamily& family,
                const EigenPair& plus, const EigenPair& minus);

  StackedField apply_root(const StackedField& z) const;
  StackedField apply_im(const StackedField& z, int sign) const;
  StackedField apply_s(const StackedField& z) const;
  StackedField apply_u_plus(const StackedField& z) const;

  // Per-sector stable projection for propagation workloads; identity for
  // ell >= 2. The vector is one stacked (f1, f2) pair.
  Eigen::VectorXcd apply_s_sector(const SectorIndex& sector,
                                  const Eigen::VectorXcd& z) const;

  // Number of singular values of the factored form above 1e-8.
  int rank_root() const;
  int rank_im(int sign) const;

  const RootFamily& family() const { return family_; }
  const EigenPair& pair(int sign) const { return sign > 0 ? plus_ : minus_; }

 private:
  RadialGrid grid_;
  RootFamily family_;
  EigenPair plus_;
  EigenPair minus_;
  Eigen::Matrix<double, 8, 8> pairing_inv_;
};

ProjectionSet build_projections(const GroundState& gs, const RootFamily& family,
                                const EigenPair& plus, const EigenPair& minus);

// Coefficients a_j solving 0 = h <f+, xi_l(ref)> + sum_j a_j <eta_j, xi_l(ref)>
// over the eight reference conditions.
std::array<double, 8> solve_aj_system(const RadialGrid& grid,
                                      const RootFamily& family,
                                      const EigenPair& f_plus, double h,
                                      const RootFamily& xi_ref);

}  // namespace soliton
