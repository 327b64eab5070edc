#include "solitonlab/projections.hpp"

#include "solitonlab/errors.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace soliton {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using std::complex;

constexpr complex<double> kI{0.0, 1.0};

VectorXcd two_component(const VectorXd& top, const VectorXd& bottom,
                        complex<double> top_phase, complex<double> bottom_phase) {
  const int n = top.size();
  VectorXcd z(2 * n);
  z.head(n) = top_phase * top.cast<complex<double>>();
  z.tail(n) = bottom_phase * bottom.cast<complex<double>>();
  return z;
}

complex<double> dot_pair(const RadialGrid& g, const VectorXcd& a, const VectorXcd& b) {
  const int n = g.n;
  return dot_w(g, VectorXcd(a.head(n)), VectorXcd(b.head(n))) +
         dot_w(g, VectorXcd(a.tail(n)), VectorXcd(b.tail(n)));
}

}  // namespace

StackedField StackedField::zero(int n) {
  StackedField z;
  z.ell0 = VectorXcd::Zero(2 * n);
  for (auto& s : z.ell1) s = VectorXcd::Zero(2 * n);
  return z;
}

complex<double> dot_stacked(const RadialGrid& g, const StackedField& a,
                            const StackedField& b) {
  complex<double> s = dot_pair(g, a.ell0, b.ell0);
  for (int m = 0; m < 3; ++m) s += dot_pair(g, a.ell1[m], b.ell1[m]);
  return s;
}

double norm_stacked(const RadialGrid& g, const StackedField& a) {
  return std::sqrt(std::abs(dot_stacked(g, a, a)));
}

RootFamily build_root_family(const GroundState& gs, const SolitonParams& params) {
  if (params.alpha != gs.alpha) {
    throw std::invalid_argument("build_root_family: parameter alpha differs from profile");
  }
  const int n = gs.grid.n;
  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  const VectorXd rphi = gs.phi.cwiseProduct(gs.grid.nodes) * inv_sqrt3;
  const VectorXd dphi = gs.dphi_dr * inv_sqrt3;

  RootFamily fam;
  for (auto& f : fam.xi) f = StackedField::zero(n);
  for (auto& f : fam.eta) f = StackedField::zero(n);

  // Scalar-sector members: phase and scale directions.
  fam.xi[0].ell0 = two_component(gs.phi, gs.phi, 1.0, 1.0);
  fam.xi[1].ell0 = two_component(gs.dphi_dalpha, gs.dphi_dalpha, kI, -kI);
  // Vector-sector members: boost and translation directions, one per
  // angular block with the shared radial profile.
  for (int m = 0; m < 3; ++m) {
    fam.xi[2 + m].ell1[m] = two_component(rphi, rphi, 1.0, 1.0);
    fam.xi[5 + m].ell1[m] = two_component(dphi, dphi, kI, -kI);
  }
  // eta_j = diag(-i, i) xi_j.
  for (int j = 0; j < 8; ++j) {
    fam.eta[j].ell0 = fam.xi[j].ell0;
    fam.eta[j].ell0.head(n) *= -kI;
    fam.eta[j].ell0.tail(n) *= kI;
    for (int m = 0; m < 3; ++m) {
      fam.eta[j].ell1[m] = fam.xi[j].ell1[m];
      fam.eta[j].ell1[m].head(n) *= -kI;
      fam.eta[j].ell1[m].tail(n) *= kI;
    }
  }

  for (int k = 0; k < 8; ++k) {
    for (int j = 0; j < 8; ++j) {
      const complex<double> p = dot_stacked(gs.grid, fam.eta[j], fam.xi[k]);
      fam.pairing(k, j) = p.real();
      if (std::abs(p.imag()) > 1e-10 * (1.0 + std::abs(p.real()))) {
        throw DegeneratePairing("build_root_family: pairing entry not real");
      }
    }
  }
  return fam;
}

ProjectionSet::ProjectionSet(const GroundState& gs, const RootFamily& family,
                             const EigenPair& plus, const EigenPair& minus)
    : grid_(gs.grid), family_(family), plus_(plus), minus_(minus) {
  const Eigen::Matrix<double, 8, 8>& g = family_.pairing;
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(g);
  if (!lu.isInvertible()) {
    throw DegeneratePairing("build_projections: pairing matrix singular");
  }
  pairing_inv_ = lu.inverse();
  const Eigen::JacobiSVD<Eigen::Matrix<double, 8, 8>> svd(g);
  if (svd.singularValues()(0) > 1e3 * svd.singularValues()(7)) {
    throw DegeneratePairing("build_projections: pairing matrix ill conditioned");
  }

  // The eigenvectors carry a residual-level family component (and the duals
  // an eigencomponent); removing both makes the stored sub-projections
  // mutually annihilating to machine precision.
  const int n = grid_.n;
  for (EigenPair* p : {&plus_, &minus_}) {
    StackedField f = StackedField::zero(n);
    f.ell0 = p->right_vec;
    p->right_vec -= apply_root(f).ell0;

    Eigen::Matrix<complex<double>, 8, 1> c;
    for (int j = 0; j < 8; ++j) {
      c(j) = dot_pair(grid_, family_.eta[j].ell0, p->left_vec);
    }
    const Eigen::Matrix<complex<double>, 8, 1> d =
        pairing_inv_.transpose().cast<complex<double>>() * c.conjugate();
    for (int j = 0; j < 8; ++j) {
      p->left_vec -= d(j) * family_.xi[j].ell0;
    }
    const complex<double> pair = dot_pair(grid_, p->right_vec, p->left_vec);
    if (std::abs(pair) < 1e-8) {
      throw DegeneratePairing("build_projections: eigenmode pairing degenerate");
    }
    p->left_vec /= std::conj(pair);
  }
}

StackedField ProjectionSet::apply_root(const StackedField& z) const {
  Eigen::Matrix<complex<double>, 8, 1> c;
  for (int k = 0; k < 8; ++k) c(k) = dot_stacked(grid_, z, family_.xi[k]);
  const Eigen::Matrix<complex<double>, 8, 1> b =
      pairing_inv_.cast<complex<double>>() * c;
  StackedField out = StackedField::zero(grid_.n);
  for (int j = 0; j < 8; ++j) {
    out.ell0 += b(j) * family_.eta[j].ell0;
    for (int m = 0; m < 3; ++m) out.ell1[m] += b(j) * family_.eta[j].ell1[m];
  }
  return out;
}

StackedField ProjectionSet::apply_im(const StackedField& z, int sign) const {
  const EigenPair& p = sign > 0 ? plus_ : minus_;
  const int n = grid_.n;
  const complex<double> c = dot_pair(grid_, z.ell0, p.left_vec);
  StackedField out = StackedField::zero(n);
  out.ell0 = c * p.right_vec;
  return out;
}

StackedField ProjectionSet::apply_s(const StackedField& z) const {
  const StackedField pr = apply_root(z);
  const StackedField pp = apply_im(z, +1);
  const StackedField pm = apply_im(z, -1);
  StackedField out = z;
  out.ell0 -= pr.ell0 + pp.ell0 + pm.ell0;
  for (int m = 0; m < 3; ++m) out.ell1[m] -= pr.ell1[m];
  return out;
}

StackedField ProjectionSet::apply_u_plus(const StackedField& z) const {
  const StackedField pr = apply_root(z);
  const StackedField pp = apply_im(z, +1);
  StackedField out = pr;
  out.ell0 += pp.ell0;
  return out;
}

Eigen::VectorXcd ProjectionSet::apply_s_sector(const SectorIndex& sector,
                                               const VectorXcd& z) const {
  if (sector.ell >= 2) return z;
  VectorXcd out = z;
  if (sector.ell == 0) {
    // Family block {1,2} plus the eigenmode pair.
    Eigen::Matrix2d g2;
    g2 << family_.pairing(0, 0), family_.pairing(0, 1),
          family_.pairing(1, 0), family_.pairing(1, 1);
    Eigen::Vector2cd c(dot_pair(grid_, z, family_.xi[0].ell0),
                       dot_pair(grid_, z, family_.xi[1].ell0));
    Eigen::Vector2cd b = g2.inverse().cast<complex<double>>() * c;
    out -= b(0) * family_.eta[0].ell0 + b(1) * family_.eta[1].ell0;
    out -= dot_pair(grid_, z, plus_.left_vec) * plus_.right_vec;
    out -= dot_pair(grid_, z, minus_.left_vec) * minus_.right_vec;
  } else {
    // Family block {3, 6} shares its radial structure across m.
    Eigen::Matrix2d g2;
    g2 << family_.pairing(2, 2), family_.pairing(2, 5),
          family_.pairing(5, 2), family_.pairing(5, 5);
    Eigen::Vector2cd c(dot_pair(grid_, z, family_.xi[2].ell1[0]),
                       dot_pair(grid_, z, family_.xi[5].ell1[0]));
    Eigen::Vector2cd b = g2.inverse().cast<complex<double>>() * c;
    out -= b(0) * family_.eta[2].ell1[0] + b(1) * family_.eta[5].ell1[0];
  }
  return out;
}

namespace {

MatrixXcd stacked_columns(const RadialGrid& g,
                          const std::array<StackedField, 8>& fields) {
  const int n = g.n;
  MatrixXcd b(8 * n, 8);
  const VectorXd sw = g.weights.cwiseSqrt();
  for (int j = 0; j < 8; ++j) {
    VectorXcd col(8 * n);
    col.segment(0 * n, n) = fields[j].ell0.head(n);
    col.segment(1 * n, n) = fields[j].ell0.tail(n);
    for (int m = 0; m < 3; ++m) {
      col.segment((2 + 2 * m) * n, n) = fields[j].ell1[m].head(n);
      col.segment((3 + 2 * m) * n, n) = fields[j].ell1[m].tail(n);
    }
    for (int blk = 0; blk < 8; ++blk) {
      col.segment(blk * n, n).array() *= sw.array().cast<complex<double>>();
    }
    b.col(j) = col;
  }
  return b;
}

}  // namespace

int ProjectionSet::rank_root() const {
  const MatrixXcd b = stacked_columns(grid_, family_.eta);
  Eigen::JacobiSVD<MatrixXcd> svd(b);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > 1e-8) ++rank;
  }
  return rank;
}

int ProjectionSet::rank_im(int sign) const {
  const EigenPair& p = sign > 0 ? plus_ : minus_;
  const int n = grid_.n;
  const VectorXd sw = grid_.weights.cwiseSqrt();
  VectorXcd col(2 * n);
  col.head(n) = p.right_vec.head(n).cwiseProduct(sw.cast<complex<double>>());
  col.tail(n) = p.right_vec.tail(n).cwiseProduct(sw.cast<complex<double>>());
  return col.norm() > 1e-8 ? 1 : 0;
}

ProjectionSet build_projections(const GroundState& gs, const RootFamily& family,
                                const EigenPair& plus, const EigenPair& minus) {
  return ProjectionSet(gs, family, plus, minus);
}

std::array<double, 8> solve_aj_system(const RadialGrid& grid,
                                      const RootFamily& family,
                                      const EigenPair& f_plus, double h,
                                      const RootFamily& xi_ref) {
  const int n = grid.n;
  StackedField f = StackedField::zero(n);
  f.ell0 = f_plus.right_vec;

  Eigen::Matrix<complex<double>, 8, 1> b;
  Eigen::Matrix<complex<double>, 8, 8> m;
  for (int l = 0; l < 8; ++l) {
    b(l) = dot_stacked(grid, f, xi_ref.xi[l]);
    for (int j = 0; j < 8; ++j) {
      m(l, j) = dot_stacked(grid, family.eta[j], xi_ref.xi[l]);
    }
  }
  Eigen::FullPivLU<Eigen::Matrix<complex<double>, 8, 8>> lu(m);
  if (!lu.isInvertible()) {
    throw DegeneratePairing("solve_aj_system: reference pairing singular");
  }
  const Eigen::Matrix<complex<double>, 8, 1> a = lu.solve(-h * b);
  const Eigen::Matrix<complex<double>, 8, 1> res = m * a + h * b;
  double scale = std::abs(h) * f_plus.right_vec.norm();
  for (int l = 0; l < 8; ++l) scale = std::max(scale, std::abs(m(l, l)));
  if (res.norm() > 1e-10 * std::max(1.0, scale)) {
    throw NoConvergenceError("solve_aj_system: conditions not satisfied");
  }
  std::array<double, 8> out;
  for (int j = 0; j < 8; ++j) out[j] = a(j).real();
  return out;
}

}  // namespace soliton
