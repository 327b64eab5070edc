#include "solitonlab/sector_operators.hpp"

#include "solitonlab/detail/assembly.hpp"

#include <complex>
#include <stdexcept>
#include <string>

namespace soliton {

namespace detail {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd f_rep(const RadialGrid& g, const MatrixXd& a_u) {
  return g.nodes.cwiseInverse().asDiagonal() * a_u * g.nodes.asDiagonal();
}

MatrixXd scalar_op_u(const GroundState& gs, int ell, double coupling) {
  MatrixXd a = detail::u_radial_op_dense(gs.grid, ell, detail::StencilOrder::fourth);
  const VectorXd pot =
      VectorXd::Constant(gs.grid.n, gs.alpha * gs.alpha) - coupling * gs.phi.cwiseAbs2();
  a += pot.asDiagonal();
  return a;
}

}  // namespace detail

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using detail::f_rep;

MatrixXd scalar_op_u(const GroundState& gs, const SectorIndex& sector, double coupling) {
  return detail::scalar_op_u(gs, sector.ell, coupling);
}

void require_same_grid(const GroundState& gs, const char* who) {
  if (gs.grid.n <= 0) {
    throw std::invalid_argument(std::string(who) + ": ground state has an empty grid");
  }
}

}  // namespace

SectorOperator radial_laplacian(const RadialGrid& grid, const SectorIndex& sector,
                                detail::StencilOrder order) {
  SectorOperator op;
  op.sector = sector;
  op.kind = OperatorKind::laplacian;
  op.grid = grid;
  op.matrix = f_rep(grid, detail::u_radial_op_dense(grid, sector.ell, order));
  return op;
}

SectorOperator assemble_L_minus(const GroundState& gs, const SectorIndex& sector) {
  require_same_grid(gs, "assemble_L_minus");
  SectorOperator op;
  op.sector = sector;
  op.kind = OperatorKind::L_minus;
  op.grid = gs.grid;
  op.matrix = f_rep(gs.grid, scalar_op_u(gs, sector, 1.0));
  return op;
}

SectorOperator assemble_L_plus(const GroundState& gs, const SectorIndex& sector) {
  require_same_grid(gs, "assemble_L_plus");
  SectorOperator op;
  op.sector = sector;
  op.kind = OperatorKind::L_plus;
  op.grid = gs.grid;
  op.matrix = f_rep(gs.grid, scalar_op_u(gs, sector, 3.0));
  return op;
}

SectorOperator assemble_H(const GroundState& gs, const SectorIndex& sector) {
  require_same_grid(gs, "assemble_H");
  const int n = gs.grid.n;
  const MatrixXd s_u = scalar_op_u(gs, sector, 2.0);
  const VectorXd b = gs.phi.cwiseAbs2();
  MatrixXd h_u = MatrixXd::Zero(2 * n, 2 * n);
  h_u.topLeftCorner(n, n) = s_u;
  h_u.bottomRightCorner(n, n) = -s_u;
  h_u.topRightCorner(n, n) = (-b).asDiagonal();
  h_u.bottomLeftCorner(n, n) = b.asDiagonal();

  // Convert each block back to physical samples.
  const auto dinv = gs.grid.nodes.cwiseInverse().asDiagonal();
  const auto d = gs.grid.nodes.asDiagonal();
  MatrixXd h_f(2 * n, 2 * n);
  h_f.topLeftCorner(n, n) = dinv * h_u.topLeftCorner(n, n) * d;
  h_f.topRightCorner(n, n) = dinv * h_u.topRightCorner(n, n) * d;
  h_f.bottomLeftCorner(n, n) = dinv * h_u.bottomLeftCorner(n, n) * d;
  h_f.bottomRightCorner(n, n) = dinv * h_u.bottomRightCorner(n, n) * d;

  SectorOperator op;
  op.sector = sector;
  op.kind = OperatorKind::H_matrix;
  op.grid = gs.grid;
  op.matrix = std::move(h_f);
  return op;
}

SectorOperator assemble_H_uv(const GroundState& gs, const SectorIndex& sector) {
  require_same_grid(gs, "assemble_H_uv");
  const int n = gs.grid.n;
  const std::complex<double> i1(0.0, 1.0);
  const MatrixXd lm = f_rep(gs.grid, scalar_op_u(gs, sector, 1.0));
  const MatrixXd lp = f_rep(gs.grid, scalar_op_u(gs, sector, 3.0));
  MatrixXcd m = MatrixXcd::Zero(2 * n, 2 * n);
  m.topRightCorner(n, n) = i1 * lm;
  m.bottomLeftCorner(n, n) = -i1 * lp;

  SectorOperator op;
  op.sector = sector;
  op.kind = OperatorKind::H_uv;
  op.grid = gs.grid;
  op.matrix = std::move(m);
  return op;
}

Eigen::MatrixXd u_rep(const SectorOperator& op) {
  const auto& m = op.real();
  const int n = op.grid.n;
  const auto d = op.grid.nodes.asDiagonal();
  const auto dinv = op.grid.nodes.cwiseInverse().asDiagonal();
  if (m.rows() == n) {
    return d * m * dinv;
  }
  MatrixXd out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = d * m.topLeftCorner(n, n) * dinv;
  out.topRightCorner(n, n) = d * m.topRightCorner(n, n) * dinv;
  out.bottomLeftCorner(n, n) = d * m.bottomLeftCorner(n, n) * dinv;
  out.bottomRightCorner(n, n) = d * m.bottomRightCorner(n, n) * dinv;
  return out;
}

Eigen::MatrixXcd u_rep_cplx(const SectorOperator& op) {
  const auto& m = op.cplx();
  const int n = op.grid.n;
  const Eigen::VectorXcd dc = op.grid.nodes.cast<std::complex<double>>();
  const auto d = dc.asDiagonal();
  const Eigen::VectorXcd dinvc = dc.cwiseInverse();
  const auto dinv = dinvc.asDiagonal();
  if (m.rows() == n) {
    return d * m * dinv;
  }
  MatrixXcd out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = d * m.topLeftCorner(n, n) * dinv;
  out.topRightCorner(n, n) = d * m.topRightCorner(n, n) * dinv;
  out.bottomLeftCorner(n, n) = d * m.bottomLeftCorner(n, n) * dinv;
  out.bottomRightCorner(n, n) = d * m.bottomRightCorner(n, n) * dinv;
  return out;
}

}  // namespace soliton
