#include "solitonlab/spectral.hpp"

#include "solitonlab/detail/assembly.hpp"
#include "solitonlab/detail/dense_eig.hpp"
#include "solitonlab/detail/stencils.hpp"
#include "solitonlab/errors.hpp"
#include "solitonlab/sector_operators.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace soliton {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using std::complex;

// u-representation of phi; the plain dot product on u equals the weighted
// product on f up to the constant 4 pi h.
VectorXd u_phi(const GroundState& gs) { return gs.phi.cwiseProduct(gs.grid.nodes); }

struct ScalarEig {
  detail::SymEig eig;       // ascending values, orthonormal u-rep vectors
  double weight = 0.0;      // 4 pi h
};

ScalarEig scalar_eig(const GroundState& gs, int ell, double coupling) {
  ScalarEig s;
  s.eig = detail::sym_eig(detail::scalar_op_u(gs, ell, coupling));
  s.weight = 4.0 * M_PI * gs.grid.h();
  return s;
}

double g_from_eig(const ScalarEig& lp, const VectorXd& uphi, double lambda) {
  const VectorXd c = lp.eig.vectors.transpose() * uphi;
  double s = 0.0;
  for (int i = 0; i < c.size(); ++i) s += c(i) * c(i) / (lp.eig.values(i) - lambda);
  return lp.weight * s;
}

// Laplace Green function of the ell sector on the u-line.
double green_u(int ell, double r, double s) {
  const double mn = std::min(r, s), mx = std::max(r, s);
  return std::pow(mn, ell + 1) * std::pow(mx, -ell) / (2.0 * ell + 1.0);
}

std::vector<double> bs_eigs(const RadialGrid& g, const VectorXd& profile, int ell) {
  const int n = g.n;
  const double h = g.h();
  MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = profile(i) * profile(j) * green_u(ell, g.nodes(i), g.nodes(j)) * h;
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  VectorXd mu = detail::sym_eigvalues(k);
  return std::vector<double>(mu.data(), mu.data() + n);
}

// Near-zero singular-value count with a mandatory spectral gap: all values
// below the threshold are counted, and the smallest value above it must
// exceed gap_factor * threshold.
int count_near_zero(std::vector<double> svals, double threshold, double gap_factor) {
  std::sort(svals.begin(), svals.end());
  int count = 0;
  for (double s : svals) {
    if (s <= threshold) ++count;
    else break;
  }
  if (count < static_cast<int>(svals.size()) &&
      svals[count] < gap_factor * threshold) {
    throw CertificationFailure(
        "near-zero count: no spectral gap above the counting threshold");
  }
  return count;
}

std::vector<double> abs_values(const VectorXd& v) {
  std::vector<double> out(v.size());
  for (int i = 0; i < v.size(); ++i) out[i] = std::abs(v(i));
  return out;
}

}  // namespace

double g_function(const GroundState& gs, double lambda) {
  const double a2 = gs.alpha * gs.alpha;
  ScalarEig lp = scalar_eig(gs, 0, 3.0);
  const double e0 = lp.eig.values(0);
  if (!(lambda > e0 && lambda < a2)) {
    throw std::invalid_argument("g_function: lambda outside (E0, alpha^2)");
  }
  for (int i = 0; i < lp.eig.values.size(); ++i) {
    if (std::abs(lp.eig.values(i) - lambda) < 1e-12 * a2) {
      throw std::invalid_argument("g_function: lambda collides with an eigenvalue");
    }
  }
  return g_from_eig(lp, u_phi(gs), lambda);
}

double find_lambda1(const GroundState& gs) {
  const double a2 = gs.alpha * gs.alpha;
  ScalarEig lp = scalar_eig(gs, 0, 3.0);
  const VectorXd uphi = u_phi(gs);
  const double e0 = lp.eig.values(0);
  if (e0 >= 0.0) {
    throw CertificationFailure("find_lambda1: no negative eigenvalue below the root");
  }
  double lo = e0 + 1e-9 * a2;
  double hi = -1e-12 * a2;
  double glo = g_from_eig(lp, uphi, lo);
  double ghi = g_from_eig(lp, uphi, hi);
  if (!(glo < 0.0 && ghi > 0.0)) {
    throw CertificationFailure("find_lambda1: no sign change of g on (E0, 0)");
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    mid = 0.5 * (lo + hi);
    const double gm = g_from_eig(lp, uphi, mid);
    if (std::abs(gm) <= 1e-10) break;
    (gm < 0.0 ? lo : hi) = mid;
  }
  // Residual certificate on the resolvent solve at the root.
  VectorXd c = lp.eig.vectors.transpose() * uphi;
  VectorXd d = c.array() / (lp.eig.values.array() - mid);
  VectorXd eta_u = lp.eig.vectors * d;
  const VectorXd res = lp.eig.vectors * (lp.eig.values.array() * d.array()).matrix() -
                       mid * eta_u - uphi;
  if (res.norm() > 1e-6 * uphi.norm()) {
    throw CertificationFailure("find_lambda1: resolvent residual too large");
  }
  if (std::abs(eta_u.dot(uphi)) > 1e-6 * eta_u.norm() * uphi.norm()) {
    throw CertificationFailure("find_lambda1: root witness not orthogonal to phi");
  }
  return mid;
}

SigmaResult compute_sigma(const GroundState& gs) {
  const int n = gs.grid.n;
  ScalarEig lm = scalar_eig(gs, 0, 1.0);
  const MatrixXd lp = detail::scalar_op_u(gs, 0, 3.0);
  const VectorXd uphi = u_phi(gs);

  // sqrt(L_minus) with the ground mode clamped to zero.
  const VectorXd sq = lm.eig.values.cwiseMax(0.0).cwiseSqrt();
  const MatrixXd s = lm.eig.vectors * sq.asDiagonal() * lm.eig.vectors.transpose();

  const VectorXd q = uphi / uphi.norm();
  MatrixXd m = s * lp * s;
  MatrixXd p = MatrixXd::Identity(n, n) - q * q.transpose();
  m = p * m * p;
  detail::SymEig em = detail::sym_eig(m);
  if (em.values(0) >= 0.0) {
    throw CertificationFailure("compute_sigma: no negative direction on the complement");
  }
  const double sigma = std::sqrt(-em.values(0));
  const VectorXd f_inf = em.vectors.col(0);

  VectorXd v_u = s * f_inf;
  v_u -= q * q.dot(v_u);  // exact orthogonality to phi
  v_u /= v_u.norm();

  // The pencil eigenvector carries a rough rounding component that the
  // product amplifies; one shifted inverse-iteration pass on the sparse
  // product lands on the discrete eigenvector to working precision.
  {
    auto sparse_op = [&](double coupling) {
      Eigen::SparseMatrix<double> a = detail::u_radial_op_sparse(
          gs.grid, 0, detail::StencilOrder::fourth);
      for (int i = 0; i < n; ++i) {
        a.coeffRef(i, i) +=
            gs.alpha * gs.alpha - coupling * gs.phi(i) * gs.phi(i);
      }
      a.makeCompressed();
      return a;
    };
    Eigen::SparseMatrix<double> prod_s = (sparse_op(1.0) * sparse_op(3.0)).eval();
    const double shift = sigma * sigma * (1.0 + 1e-6);
    for (int i = 0; i < n; ++i) prod_s.coeffRef(i, i) += shift;
    prod_s.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(prod_s);
    if (lu.info() == Eigen::Success) {
      VectorXd y = lu.solve(v_u);
      y -= q * q.dot(y);
      y /= y.norm();
      if (y.dot(v_u) < 0.0) y = -y;
      v_u = y;
    }
  }

  // L_minus u0 = -sigma v on the complement of the kernel.
  VectorXd rhs_c = lm.eig.vectors.transpose() * (-sigma * v_u);
  VectorXd u_c = VectorXd::Zero(n);
  for (int i = 1; i < n; ++i) u_c(i) = rhs_c(i) / lm.eig.values(i);
  VectorXd u0 = lm.eig.vectors * u_c;
  // Kernel coefficient minimizing the second relation's residual.
  const VectorXd t = lp * v_u - sigma * u0;
  const double c0 = t.dot(q) / (sigma * q.dot(q));
  VectorXd u_u = u0 + c0 * q;

  // Certificate: the product relation on v.
  const MatrixXd lmmat = detail::scalar_op_u(gs, 0, 1.0);
  const VectorXd prod = lmmat * (lp * v_u) + sigma * sigma * v_u;
  if (prod.norm() > 1e-5 * v_u.norm()) {
    throw CertificationFailure("compute_sigma: product relation residual too large");
  }

  SigmaResult out;
  out.sigma = sigma;
  out.v = v_u.cwiseQuotient(gs.grid.nodes);
  out.u = u_u.cwiseQuotient(gs.grid.nodes);
  return out;
}

EigenPair eigenpair_imaginary(const GroundState& gs, int sign) {
  if (sign != 1 && sign != -1) {
    throw std::invalid_argument("eigenpair_imaginary: sign must be +1 or -1");
  }
  const SigmaResult sr = compute_sigma(gs);
  const int n = gs.grid.n;
  const complex<double> i1(0.0, 1.0);

  // f(+) = (v - iu, v + iu), f(-) = (v + iu, v - iu); both J-invariant.
  auto make_f = [&](int sg) {
    VectorXcd f(2 * n);
    f.head(n) = sr.v.cast<complex<double>>() -
                static_cast<double>(sg) * i1 * sr.u.cast<complex<double>>();
    f.tail(n) = sr.v.cast<complex<double>>() +
                static_cast<double>(sg) * i1 * sr.u.cast<complex<double>>();
    return f;
  };
  VectorXcd f = make_f(sign);
  VectorXcd f_opp = make_f(-sign);

  auto dot2 = [&](const VectorXcd& a, const VectorXcd& b) {
    return dot_w(gs.grid, VectorXcd(a.head(n)), VectorXcd(b.head(n))) +
           dot_w(gs.grid, VectorXcd(a.tail(n)), VectorXcd(b.tail(n)));
  };
  f /= std::sqrt(std::abs(dot2(f, f)));

  // Adjoint eigenvector: sigma3 maps the opposite-sign right vector onto a
  // left vector for conj(value) with respect to the weighted inner product.
  VectorXcd ft(2 * n);
  ft.head(n) = f_opp.head(n);
  ft.tail(n) = -f_opp.tail(n);

  const complex<double> pair = dot2(f, ft);
  const double scale = std::sqrt(std::abs(dot2(f, f))) * std::sqrt(std::abs(dot2(ft, ft)));
  if (std::abs(pair) < 1e-8 * scale) {
    throw DegeneratePairing("eigenpair_imaginary: adjoint pairing degenerate");
  }
  ft /= std::conj(pair);

  EigenPair out;
  out.value = complex<double>(0.0, sign * sr.sigma);
  out.right_vec = f;
  out.left_vec = ft;
  out.left_norm2 = std::sqrt(std::abs(dot2(ft, ft)));
  return out;
}

RootDims root_space_report(const GroundState& gs) {
  const double a2 = gs.alpha * gs.alpha;
  const double thr = 1e-4 * a2;
  RootDims dims;
  for (int ell = 0; ell <= 1; ++ell) {
    const int mult = 2 * ell + 1;
    const MatrixXd lm = detail::scalar_op_u(gs, ell, 1.0);
    const MatrixXd lp = detail::scalar_op_u(gs, ell, 3.0);

    // Geometric: singular values of the sector Hamiltonian equal the union
    // of the scalar operators' singular values (exact unitary equivalence
    // of the off-diagonal form).
    std::vector<double> sv = abs_values(detail::sym_eigvalues(lm));
    std::vector<double> sp = abs_values(detail::sym_eigvalues(lp));
    const int geo = count_near_zero(sv, thr, 10.0) + count_near_zero(sp, thr, 10.0);

    // Algebraic: singular values of the squared Hamiltonian are the doubled
    // singular values of the scalar product operator.
    const MatrixXd prod = lm * lp;
    VectorXd psv = detail::singular_values(prod);
    const int alg = 2 * count_near_zero(
        std::vector<double>(psv.data(), psv.data() + psv.size()), thr, 10.0);

    if (ell == 0 && (geo != 1 || alg != 2)) {
      throw CertificationFailure("root_space_report: radial sector counts off");
    }
    if (ell == 1 && (geo != 1 || alg != 2)) {
      throw CertificationFailure("root_space_report: ell=1 sector counts off");
    }
    dims.geometric += mult * geo;
    dims.algebraic += mult * alg;
  }

  // Explicit chain relations pin the counts to the symmetry family.
  {
    const SectorOperator lm0 = assemble_L_minus(gs, SectorIndex(0));
    const SectorOperator lp0 = assemble_L_plus(gs, SectorIndex(0));
    const double nphi = norm_w(gs.grid, gs.phi);
    if (norm_w(gs.grid, VectorXd(lm0.real() * gs.phi)) > 1e-8 * nphi) {
      throw CertificationFailure("root_space_report: phi kernel relation fails");
    }
    const VectorXd r1 = lp0.real() * gs.dphi_dalpha + 2.0 * gs.alpha * gs.phi;
    if (norm_w(gs.grid, r1) > 1e-3 * 2.0 * gs.alpha * nphi) {
      throw CertificationFailure("root_space_report: scale chain relation fails");
    }
    const SectorOperator lp1 = assemble_L_plus(gs, SectorIndex(1));
    const SectorOperator lm1 = assemble_L_minus(gs, SectorIndex(1));
    const double ndphi = norm_w(gs.grid, gs.dphi_dr);
    if (norm_w(gs.grid, VectorXd(lp1.real() * gs.dphi_dr)) > 1e-3 * a2 * ndphi) {
      throw CertificationFailure("root_space_report: translation kernel relation fails");
    }
    const VectorXd rphi = gs.phi.cwiseProduct(gs.grid.nodes);
    const VectorXd r2 = lm1.real() * rphi + 2.0 * gs.dphi_dr;
    if (norm_w(gs.grid, r2) > 1e-3 * norm_w(gs.grid, rphi) * a2 +
                                 1e-3 * 2.0 * ndphi) {
      throw CertificationFailure("root_space_report: boost chain relation fails");
    }
  }

  if (dims.geometric != 4 || dims.algebraic != 8) {
    throw CertificationFailure("root_space_report: totals differ from (4, 8)");
  }
  return dims;
}

BsCount birman_schwinger_count(const GroundState& gs, BsKind which, int ell_max) {
  if (ell_max < 2) {
    throw std::invalid_argument("birman_schwinger_count: ell_max must be >= 2");
  }
  const double coupling = (which == BsKind::minus) ? 1.0 : 3.0;
  BsCount out;
  for (int ell = 0; ell <= ell_max; ++ell) {
    const std::vector<double> mu_raw = bs_eigs(gs.grid, gs.phi, ell);
    for (double m : mu_raw) {
      const double mu = coupling * m;
      if (mu > 1.0 + 1e-6) {
        out.count += 2 * ell + 1;
        out.eigenvalues_above_1.push_back(mu);
      } else if (which == BsKind::plus && ell >= 2 && std::abs(mu - 1.0) <= 1e-6) {
        throw InconclusiveResult("birman_schwinger_count: ambiguous eigenvalue at 1");
      }
    }
  }
  std::sort(out.eigenvalues_above_1.rbegin(), out.eigenvalues_above_1.rend());
  return out;
}

double threshold_margin(const GroundState& gs) {
  return detail::bs_margin_profile(gs.grid, gs.phi, 3);
}

namespace detail {
double bs_margin_profile(const RadialGrid& grid, const VectorXd& profile, int ell_max) {
  double margin = std::numeric_limits<double>::infinity();
  for (int ell = 0; ell <= ell_max; ++ell) {
    for (double mu : bs_eigs(grid, profile, ell)) {
      if (mu > 1e-2) margin = std::min(margin, std::abs(mu - 1.0));
    }
  }
  return margin;
}
}  // namespace detail

std::vector<complex<double>> strip_spectrum(const GroundState& gs,
                                            const SectorIndex& sector) {
  const double a2 = gs.alpha * gs.alpha;
  const MatrixXd lm = detail::scalar_op_u(gs, sector.ell, 1.0);
  const MatrixXd lp = detail::scalar_op_u(gs, sector.ell, 3.0);
  const VectorXcd z = detail::nonsym_eigvalues(lm * lp);

  // Eigenvalues of the sector Hamiltonian are the pairs +-sqrt(z); the
  // principal branch has Re >= 0, and the spectrum is negation-symmetric.
  std::vector<complex<double>> strip;
  for (int i = 0; i < z.size(); ++i) {
    const complex<double> root = std::sqrt(z(i));
    if (std::abs(root.real()) < 0.9 * a2) {
      strip.push_back(root);
      strip.push_back(-root);
    }
  }
  std::sort(strip.begin(), strip.end(), [](const complex<double>& a,
                                           const complex<double>& b) {
    if (a.imag() != b.imag()) return a.imag() < b.imag();
    return a.real() < b.real();
  });
  return strip;
}

SpectralReport certify_spectrum(const GroundState& gs, int ell_max) {
  SpectralReport rep;
  rep.alpha = gs.alpha;

  {
    ScalarEig lp = scalar_eig(gs, 0, 3.0);
    rep.E0 = lp.eig.values(0);
    int nneg = 0;
    for (int i = 0; i < lp.eig.values.size(); ++i) {
      if (lp.eig.values(i) < -1e-8 * gs.alpha * gs.alpha) ++nneg;
    }
    if (nneg != 1) {
      throw CertificationFailure("certify_spectrum: negative eigenvalue count " +
                                 std::to_string(nneg));
    }
  }
  rep.lambda1 = find_lambda1(gs);
  rep.sigma = compute_sigma(gs).sigma;
  if (!(rep.E0 < rep.lambda1 && rep.lambda1 < 0.0 && rep.sigma > 0.0)) {
    throw CertificationFailure("certify_spectrum: ordering E0 < lambda1 < 0 < sigma");
  }

  const RootDims dims = root_space_report(gs);
  rep.root_dim_geometric = dims.geometric;
  rep.root_dim_algebraic = dims.algebraic;

  const BsCount cm = birman_schwinger_count(gs, BsKind::minus, ell_max);
  const BsCount cp = birman_schwinger_count(gs, BsKind::plus, ell_max);
  rep.bs_count_minus = cm.count;
  rep.bs_count_plus = cp.count;
  // The counts match the known inventory below the threshold (the kernel of
  // one operator; the negative mode plus the translation kernel of the
  // other), so no further eigenvalues fit in (0, alpha^2).
  rep.interval_clear = (cm.count == 1 && cp.count == 4);

  rep.threshold_margin = threshold_margin(gs);

  // Doubled-grid stability of the integer certificates and the margin.
  {
    const RadialGrid g2 = make_grid(gs.grid.r_max, 2 * gs.grid.n);
    const GroundState gs2 = solve_ground_state(gs.alpha, g2);
    const BsCount cm2 = birman_schwinger_count(gs2, BsKind::minus, ell_max);
    const BsCount cp2 = birman_schwinger_count(gs2, BsKind::plus, ell_max);
    if (cm2.count != cm.count || cp2.count != cp.count) {
      throw CertificationFailure("certify_spectrum: counts changed under doubling");
    }
    const double m2 = threshold_margin(gs2);
    const double drift = std::abs(m2 - rep.threshold_margin) /
                         std::max(m2, rep.threshold_margin);
    if (drift > 0.2) {
      throw CertificationFailure("certify_spectrum: threshold margin unstable");
    }
    const double disc_err = std::abs(m2 - rep.threshold_margin);
    if (rep.threshold_margin < 2.0 * disc_err) {
      throw InconclusiveResult("certify_spectrum: margin below discretization error");
    }
  }
  return rep;
}

}  // namespace soliton
