#include "solitonlab/ground_state.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "solitonlab/detail/stencils.hpp"
#include "solitonlab/errors.hpp"

namespace soliton {

namespace {

// u'' = alpha^2 u - u^3/r^2, the ground equation in u = r*phi coordinates.
double rhs(double alpha2, double r, double u) {
  if (r == 0.0) return alpha2 * u;
  return alpha2 * u - u * u * u / (r * r);
}

enum class Shot { crossed_zero, diverged, ran_out };

// Integrate outward with RK4 from u(0) = 0, u'(0) = a, storing u at the
// interior nodes.  Classification drives the bisection: crossing zero means
// the slope was too large, diverging upward means too small.
Shot integrate(double alpha2, double a, const RadialGrid& g, Eigen::VectorXd* u_out) {
  const int n = g.n;
  const double h = g.h();
  const double cap = 1e8;
  double u = 0.0, p = a, r = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k1u = p, k1p = rhs(alpha2, r, u);
    const double k2u = p + 0.5 * h * k1p, k2p = rhs(alpha2, r + 0.5 * h, u + 0.5 * h * k1u);
    const double k3u = p + 0.5 * h * k2p, k3p = rhs(alpha2, r + 0.5 * h, u + 0.5 * h * k2u);
    const double k4u = p + h * k3p, k4p = rhs(alpha2, r + h, u + h * k3u);
    u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    r += h;
    if (u_out) (*u_out)(i) = u;
    if (u < 0.0) {
      if (u_out) {
        for (int j = i; j < n; ++j) (*u_out)(j) = u;
      }
      return Shot::crossed_zero;
    }
    if (u > cap || !std::isfinite(u)) {
      if (u_out) {
        for (int j = i; j < n; ++j) (*u_out)(j) = cap;
      }
      return Shot::diverged;
    }
  }
  return Shot::ran_out;
}

// Replace the integration tail, contaminated by the growing mode once the
// bisection gap reaches machine precision, with the pure exponential that u
// follows at large r.
void graft_exponential_tail(const RadialGrid& g, double alpha, Eigen::VectorXd* u) {
  const int n = g.n;
  // First local maximum is the profile peak; the global maximum can sit in
  // the contaminated tail when the growing mode stays below the divergence
  // cap all the way to r_max.
  int peak = 0;
  for (int i = 0; i + 1 < n; ++i) {
    if ((*u)(i) > 0.0 && (*u)(i) > (*u)(i + 1)) {
      peak = i;
      break;
    }
  }
  if (peak == 0) {
    for (int i = 1; i < n; ++i) {
      if ((*u)(i) > (*u)(peak)) peak = i;
    }
  }
  int bad = n;
  for (int i = peak + 1; i < n; ++i) {
    if ((*u)(i) <= 0.0 || (*u)(i) >= (*u)(i - 1)) {
      bad = i;
      break;
    }
  }
  // The growing mode reaches the decaying one at the turn-up and shrinks by
  // e^{-2 alpha dr} walking back; 3/alpha of headroom leaves it below 0.3%
  // at the anchor.
  const int back = static_cast<int>(std::ceil(3.0 / (alpha * g.h())));
  const int anchor = std::max(peak + 1, bad - back);
  if (anchor >= n) return;
  const double ua = (*u)(anchor), ra = g.nodes(anchor);
  for (int i = anchor + 1; i < n; ++i) {
    (*u)(i) = ua * std::exp(-alpha * (g.nodes(i) - ra));
  }
}

struct Profile {
  Eigen::VectorXd u;
  double phi0 = 0.0;
};

Profile solve_profile(double alpha, const RadialGrid& g) {
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw std::invalid_argument("solve_ground_state: alpha must be finite and positive");
  }
  const double alpha2 = alpha * alpha;
  const int n = g.n;

  double lo = 0.1 * alpha, hi = 100.0 * alpha;
  const Shot shot_lo = integrate(alpha2, lo, g, nullptr);
  const Shot shot_hi = integrate(alpha2, hi, g, nullptr);
  const bool lo_under = shot_lo != Shot::crossed_zero;
  const bool hi_over = shot_hi == Shot::crossed_zero;
  if (!lo_under || !hi_over) {
    throw NoConvergenceError("solve_ground_state: shooting bracket does not straddle");
  }
  for (int it = 0; it < 200 && (hi - lo) > 4.0 * std::numeric_limits<double>::epsilon() * hi;
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (integrate(alpha2, mid, g, nullptr) == Shot::crossed_zero) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double a_star = 0.5 * (lo + hi);
  Eigen::VectorXd u(n);
  integrate(alpha2, a_star, g, &u);
  u = u.cwiseMax(0.0).cwiseMin(2.0 * a_star * g.r_max);
  graft_exponential_tail(g, alpha, &u);

  // Newton polish on the fourth-order discrete system
  //   A u + alpha^2 u - u^3/r^2 = 0.
  const Eigen::SparseMatrix<double> A =
      detail::u_radial_op_sparse(g, 0, detail::StencilOrder::fourth);
  const Eigen::ArrayXd r2 = g.nodes.array().square();
  auto residual = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return A * v + alpha2 * v - (v.array().cube() / r2).matrix();
  };
  Eigen::VectorXd F = residual(u);
  double fnorm = F.norm();
  // The achievable residual is limited by roundoff in applying A, whose
  // entries scale like 1/h^2.
  const double op_scale = 3.0 / (g.h() * g.h()) + alpha2;
  const double floor_tol = 1e-13 * op_scale;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int it = 0; it < 50 && fnorm > floor_tol * u.norm(); ++it) {
    Eigen::SparseMatrix<double> J = A;
    const Eigen::ArrayXd dv = alpha2 - 3.0 * u.array().square() / r2;
    for (int i = 0; i < n; ++i) J.coeffRef(i, i) += dv(i);
    lu.compute(J);
    if (lu.info() != Eigen::Success) {
      throw NoConvergenceError("solve_ground_state: singular Newton system");
    }
    const Eigen::VectorXd step = lu.solve(-F);
    double lambda = 1.0;
    bool stepped = false;
    for (int k = 0; k < 40; ++k) {
      Eigen::VectorXd trial = u + lambda * step;
      Eigen::VectorXd Ft = residual(trial);
      if (Ft.norm() < fnorm) {
        u = std::move(trial);
        F = std::move(Ft);
        fnorm = F.norm();
        stepped = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!stepped) break;  // at the roundoff floor
  }
  if (fnorm > 1e4 * floor_tol * u.norm()) {
    throw NoConvergenceError("solve_ground_state: Newton did not reach tolerance");
  }

  Profile out;
  out.u = std::move(u);
  // Fourth-order one-sided slope at the origin using the odd extension.
  out.phi0 = (8.0 * out.u(0) - out.u(1)) / (6.0 * g.h());
  return out;
}

}  // namespace

namespace {

// d_alpha phi solves (-Delta + alpha^2 - 3 phi^2) d_alpha phi = -2 alpha phi
// on the discrete operator itself, which is invertible at ell = 0; this keeps
// the scale-derivative relation exact at the working resolution.
Eigen::SparseMatrix<double> linearized_sparse(double alpha, const RadialGrid& grid,
                                              const Eigen::VectorXd& phi, int ell) {
  Eigen::SparseMatrix<double> a =
      detail::u_radial_op_sparse(grid, ell, detail::StencilOrder::fourth);
  for (int i = 0; i < grid.n; ++i) {
    a.coeffRef(i, i) += alpha * alpha - 3.0 * phi(i) * phi(i);
  }
  a.makeCompressed();
  return a;
}

Eigen::VectorXd d_alpha_from_u(double alpha, const RadialGrid& grid,
                               const Eigen::VectorXd& u) {
  const Eigen::VectorXd phi = detail::f_from_u(grid, u);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(linearized_sparse(alpha, grid, phi, 0));
  if (lu.info() != Eigen::Success) {
    throw NoConvergenceError("d_alpha_profile: scale-derivative solve failed");
  }
  const Eigen::VectorXd rhs = -2.0 * alpha * u;
  const Eigen::VectorXd ud = lu.solve(rhs);
  return detail::f_from_u(grid, ud);
}

// The radial derivative spans the kernel of the vector-sector linearized
// operator. A differenced profile misses that kernel by O(h^4), which the
// operator amplifies to O(h^2); one inverse-iteration pass from the
// differenced seed lands on the discrete kernel vector instead.
Eigen::VectorXd d_r_from_u(double alpha, const RadialGrid& grid,
                           const Eigen::VectorXd& u) {
  const Eigen::VectorXd phi = detail::f_from_u(grid, u);
  const Eigen::VectorXd up = detail::u_derivative(u, grid.h(), 0);
  const Eigen::VectorXd seed = up - phi;  // r * phi'
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(linearized_sparse(alpha, grid, phi, 1));
  if (lu.info() != Eigen::Success) {
    throw NoConvergenceError("solve_ground_state: radial-derivative solve failed");
  }
  Eigen::VectorXd y = lu.solve(seed);
  y *= seed.dot(y) / y.squaredNorm();
  return detail::f_from_u(grid, y);
}

}  // namespace

Eigen::VectorXd d_alpha_profile(double alpha, const RadialGrid& grid) {
  const Profile prof = solve_profile(alpha, grid);
  return d_alpha_from_u(alpha, grid, prof.u);
}

GroundState solve_ground_state(double alpha, const RadialGrid& grid) {
  const Profile prof = solve_profile(alpha, grid);
  GroundState gs;
  gs.alpha = alpha;
  gs.grid = grid;
  gs.phi = detail::f_from_u(grid, prof.u);
  gs.dphi_dr = d_r_from_u(alpha, grid, prof.u);
  gs.dphi_dalpha = d_alpha_from_u(alpha, grid, prof.u);
  gs.mass = dot_w(grid, gs.phi, gs.phi);
  gs.phi0 = prof.phi0;
  return gs;
}

}  // namespace soliton
