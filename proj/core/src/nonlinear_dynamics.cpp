#include "solitonlab/nonlinear_dynamics.hpp"

#include <lapacke.h>

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include "solitonlab/detail/stencils.hpp"
#include "solitonlab/errors.hpp"

namespace soliton {

namespace {

using std::complex;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cd = complex<double>;

complex<double> dot_pair(const RadialGrid& g, const VectorXcd& a, const VectorXcd& b) {
  const int n = g.n;
  return dot_w(g, VectorXcd(a.head(n)), VectorXcd(b.head(n))) +
         dot_w(g, VectorXcd(a.tail(n)), VectorXcd(b.tail(n)));
}

}  // namespace

// Pentadiagonal Crank-Nicolson factors for i u_t = L u over dt/2, with L
// the fourth-order radial stencil on u = r*psi.
struct NlsStepper::Impl {
  RadialGrid grid;
  double dt = 0.0;
  static constexpr int kl = 2, ku = 2, ldab = 2 * kl + ku + 1;
  std::vector<cd> ab;             // zgbtrf factors of I + i(dt/4)L
  std::vector<lapack_int> ipiv;
  std::vector<std::array<cd, 5>> brow;  // rows of I - i(dt/4)L
  VectorXcd scratch;

  Impl(const RadialGrid& g, double step) : grid(g), dt(step) {
    const int n = g.n;
    const Eigen::SparseMatrix<double> L =
        detail::u_radial_op_sparse(g, 0, detail::StencilOrder::fourth);
    ab.assign(static_cast<size_t>(ldab) * n, cd(0.0));
    ipiv.resize(n);
    brow.assign(n, {cd(0.0), cd(0.0), cd(0.0), cd(0.0), cd(0.0)});
    for (int k = 0; k < L.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(L, k); it; ++it) {
        const int i = static_cast<int>(it.row());
        const int j = static_cast<int>(it.col());
        const cd z = cd(0.0, 0.25 * dt) * it.value();
        ab[static_cast<size_t>(j) * ldab + (kl + ku + i - j)] += z;
        brow[i][j - i + 2] -= z;
      }
    }
    for (int i = 0; i < n; ++i) {
      ab[static_cast<size_t>(i) * ldab + (kl + ku)] += cd(1.0);
      brow[i][2] += cd(1.0);
    }
    scratch.resize(n);
    const int info = LAPACKE_zgbtrf(
        LAPACK_COL_MAJOR, n, n, kl, ku,
        reinterpret_cast<lapack_complex_double*>(ab.data()), ldab, ipiv.data());
    if (info != 0) {
      throw std::runtime_error("banded factorization failed, info = " +
                               std::to_string(info));
    }
  }

  void half_step(VectorXcd& u) {
    const int n = grid.n;
    for (int i = 0; i < n; ++i) {
      cd s(0.0);
      const int lo = std::max(-2, -i), hi = std::min(2, n - 1 - i);
      for (int d = lo; d <= hi; ++d) s += brow[i][d + 2] * u(i + d);
      scratch(i) = s;
    }
    LAPACKE_zgbtrs(LAPACK_COL_MAJOR, 'N', n, kl, ku, 1,
                   reinterpret_cast<const lapack_complex_double*>(ab.data()),
                   ldab, ipiv.data(),
                   reinterpret_cast<lapack_complex_double*>(scratch.data()), n);
    u.swap(scratch);
  }
};

NlsStepper::NlsStepper(const RadialGrid& grid, double dt)
    : impl_(std::make_unique<Impl>(grid, dt)) {
  if (!(dt > 0.0)) throw std::invalid_argument("step size must be positive");
}

NlsStepper::~NlsStepper() = default;
NlsStepper::NlsStepper(NlsStepper&&) noexcept = default;
NlsStepper& NlsStepper::operator=(NlsStepper&&) noexcept = default;

double NlsStepper::step(Eigen::VectorXcd& u) {
  impl_->half_step(u);
  const int n = impl_->grid.n;
  const double dt = impl_->dt;
  double sup = 0.0;
  for (int i = 0; i < n; ++i) {
    const double amp2 = std::norm(u(i)) / (impl_->grid.nodes(i) * impl_->grid.nodes(i));
    sup = std::max(sup, amp2);
    u(i) *= std::polar(1.0, amp2 * dt);
  }
  impl_->half_step(u);
  return std::sqrt(sup);
}

const RadialGrid& NlsStepper::grid() const { return impl_->grid; }
double NlsStepper::dt() const { return impl_->dt; }

double nls_mass(const RadialGrid& grid, const Eigen::VectorXcd& psi) {
  return dot_w(grid, psi, psi).real();
}

double nls_energy(const RadialGrid& grid, const Eigen::VectorXcd& psi) {
  const Eigen::SparseMatrix<double> L =
      detail::u_radial_op_sparse(grid, 0, detail::StencilOrder::fourth);
  const VectorXcd u = detail::u_from_f(grid, psi);
  const VectorXcd Lu = L * u;
  double kin = 0.0, quart = 0.0;
  for (int i = 0; i < grid.n; ++i) {
    kin += std::real(std::conj(u(i)) * Lu(i));
    quart += std::norm(u(i)) * std::norm(u(i)) / (grid.nodes(i) * grid.nodes(i));
  }
  return 4.0 * M_PI * grid.h() * (kin - 0.5 * quart);
}

NlsEvolution evolve_nls(const Eigen::VectorXcd& psi0, double T, double dt,
                        const RadialGrid& grid, double alpha_guard,
                        double sample_interval) {
  if (psi0.size() != grid.n) throw std::invalid_argument("sample count mismatch");
  if (!psi0.allFinite()) throw std::invalid_argument("initial samples not finite");
  if (!(T >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
  if (!(dt > 0.0) || dt > 1e-3 / (alpha_guard * alpha_guard)) {
    throw std::invalid_argument("step size outside (0, 1e-3/alpha^2]");
  }
  if (sample_interval <= 0.0) sample_interval = std::max(dt, T / 256.0);
  const long long total = static_cast<long long>(std::llround(T / dt));
  const long long stride =
      std::max<long long>(1, static_cast<long long>(std::llround(sample_interval / dt)));
  const double blow_up = 50.0 * alpha_guard;

  NlsStepper stepper(grid, dt);
  NlsEvolution out;
  out.grid = grid;
  VectorXcd u = detail::u_from_f(grid, psi0);
  const double mass0 = nls_mass(grid, psi0);
  const double energy0 = nls_energy(grid, psi0);
  const double escale = std::max(std::abs(energy0), 1e-12);

  out.times.push_back(0.0);
  out.states.push_back(psi0);
  for (long long s = 1; s <= total; ++s) {
    const double sup = stepper.step(u);
    if (sup > blow_up) {
      throw BlowUpDetected("amplitude crossed the collapse proxy threshold",
                           (s - 0.5) * dt);
    }
    if (s % stride == 0 || s == total) {
      const VectorXcd psi = detail::f_from_u(grid, u);
      out.times.push_back(s * dt);
      out.states.push_back(psi);
      if (mass0 > 0.0) {
        out.mass_drift = std::max(out.mass_drift,
                                  std::abs(nls_mass(grid, psi) - mass0) / mass0);
      }
      out.energy_drift = std::max(out.energy_drift,
                                  std::abs(nls_energy(grid, psi) - energy0) / escale);
    }
  }
  return out;
}

ModulationFit modulation_decompose(const Eigen::VectorXcd& psi,
                                   const RadialGrid& grid,
                                   const SolitonParams& guess) {
  if (psi.size() != grid.n) throw std::invalid_argument("sample count mismatch");
  double gamma = guess.gamma;
  double alpha = guess.alpha > 0.0 ? guess.alpha : 1.0;

  GroundState gs = solve_ground_state(alpha, grid);
  for (int it = 1; it <= 50; ++it) {
    const cd rot = std::polar(1.0, -gamma);
    const VectorXcd W = std::polar(1.0, gamma) * gs.phi.cast<cd>();
    const VectorXcd R = psi - W;
    const cd w1 = rot * dot_w(grid, R, gs.phi.cast<cd>());
    const cd w2 = rot * dot_w(grid, R, gs.dphi_dalpha.cast<cd>());
    const double F1 = 2.0 * w1.real();
    const double F2 = 2.0 * w2.imag();
    const double tol = 1e-10 * gs.mass;
    if (std::abs(F1) <= tol && std::abs(F2) <= tol) {
      ModulationFit fit;
      fit.params = guess;
      fit.params.gamma = gamma;
      fit.params.alpha = alpha;
      fit.params.velocity.setZero();
      fit.params.center.setZero();
      fit.residual = R;
      fit.pairing_scale = std::abs(F1);
      fit.pairing_phase = std::abs(F2);
      fit.iterations = it - 1;
      return fit;
    }
    // Exact partials except the curvature term <R, d2_alpha phi>, dropped;
    // the cross pairing <phi, d_alpha phi> = mass/(2 alpha) keeps the
    // system away from singularity on the whole family.
    const double cross = dot_w(grid, gs.phi, gs.dphi_dalpha);
    const double j11 = 2.0 * w1.imag();
    const double j12 = 2.0 * w2.real() - 2.0 * cross;
    const double j21 = -2.0 * w2.real() - 2.0 * cross;
    const double j22 = 0.0;
    const double det = j11 * j22 - j12 * j21;
    if (!(std::abs(det) > 1e-14 * gs.mass * gs.mass)) {
      throw NoConvergenceError("modulation system is singular at the iterate");
    }
    const double dgamma = (j22 * F1 - j12 * F2) / det;
    double dalpha = (-j21 * F1 + j11 * F2) / det;
    const double cap = 0.25 * alpha;
    dalpha = std::clamp(dalpha, -cap, cap);
    gamma -= dgamma;
    alpha -= dalpha;
    if (!(alpha > 0.0)) {
      throw NoConvergenceError("modulation scale iterate left the family");
    }
    if (std::abs(dalpha) > 0.0) gs = solve_ground_state(alpha, grid);
  }
  throw NoConvergenceError("modulation pairings did not reach tolerance in 50 iterations");
}

std::array<double, 8> modulation_rhs(const Eigen::VectorXcd& R,
                                     const RadialGrid& grid,
                                     const SolitonParams& params,
                                     const SolitonParams& params_ref) {
  if (R.size() != grid.n) throw std::invalid_argument("sample count mismatch");
  if (!(params_ref.alpha > 0.0))
    throw std::invalid_argument("reference alpha must be positive");
  const GroundState gs = solve_ground_state(params.alpha, grid);

  // Reference-frame corrections proportional to alpha_ref^2 - alpha^2 cancel
  // between the operator and the moving roots at quadratic order; the
  // surviving rows are the cubic couplings N = phi (2|R|^2 + R^2) + |R|^2 R
  // paired against the carriers at the current alpha.  R arrives carrying the
  // fitted phase, so undress it first; |R|^2 is phase-blind but R^2 is not.
  const cd derot = std::polar(1.0, -params.gamma);
  VectorXcd N(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    const cd u = derot * R(i);
    const double m2 = std::norm(u);
    N(i) = gs.phi(i) * (2.0 * m2 + u * u) + m2 * u;
  }

  const double scale = 2.0 * params.alpha / gs.mass;
  std::array<double, 8> rows{};
  rows[0] = scale * dot_w(grid, N, gs.phi.cast<cd>()).imag();
  rows[1] = -scale * dot_w(grid, N, gs.dphi_dalpha.cast<cd>()).real();
  return rows;
}

ShootingContext make_shooting_context(double alpha, const RadialGrid& grid,
                                      double dt, double sample_interval) {
  GroundState gs = solve_ground_state(alpha, grid);
  RootFamily family = build_root_family(gs, SolitonParams{alpha});
  EigenPair f_plus = eigenpair_imaginary(gs, +1);
  EigenPair f_minus = eigenpair_imaginary(gs, -1);
  ProjectionSet projections = build_projections(gs, family, f_plus, f_minus);
  const double sigma = f_plus.value.imag();
  return ShootingContext{std::move(gs),      std::move(family),
                         std::move(f_plus),  std::move(f_minus),
                         std::move(projections), sigma, dt, sample_interval};
}

namespace {

struct TrialOutcome {
  int sign = 0;          // sign of b_plus at departure; 0 = survived to cap
  double exit_time = 0.0;
};

// Runs one trial from psi0, watching b_plus at the sample cadence.  The
// crossing time is refined with the known rate sigma, since b_plus moves
// by e^{sigma tau} between samples.
TrialOutcome run_trial(const VectorXcd& psi0, double T_cap, double threshold,
                       const ShootingContext& ctx, NlsStepper& stepper,
                       std::vector<std::pair<double, double>>* series,
                       bool stabilize, double* sup_residual) {
  const RadialGrid& grid = ctx.gs.grid;
  const int n = grid.n;
  const long long stride = std::max<long long>(
      1, static_cast<long long>(std::llround(ctx.sample_interval / ctx.dt)));
  const long long total = static_cast<long long>(std::llround(T_cap / ctx.dt));
  const double blow_up = 50.0 * ctx.gs.alpha;

  VectorXcd u = detail::u_from_f(grid, psi0);
  SolitonParams track{ctx.gs.alpha};
  double prev_b = 0.0, prev_t = 0.0;
  for (long long s = 1; s <= total; ++s) {
    const double sup = stepper.step(u);
    const double t = s * ctx.dt;
    if (sup > blow_up) return {prev_b >= 0.0 ? +1 : -1, t - 0.5 * ctx.dt};
    if (s % stride != 0 && s != total) continue;

    VectorXcd psi = detail::f_from_u(grid, u);
    ModulationFit fit;
    try {
      fit = modulation_decompose(psi, grid, track);
    } catch (const NoConvergenceError&) {
      return {prev_b >= 0.0 ? +1 : -1, t};
    }
    track = fit.params;
    // The mode coefficients live in the co-rotating frame where the
    // linearization is autonomous; strip the fitted phase before pairing.
    const cd derot = std::polar(1.0, -fit.params.gamma);
    VectorXcd Z(2 * n);
    Z.head(n) = derot * fit.residual;
    Z.tail(n) = Z.head(n).conjugate();
    const double b = dot_pair(grid, Z, ctx.f_plus.left_vec).real();
    if (series) series->emplace_back(t, b);
    if (sup_residual) *sup_residual = std::max(*sup_residual, norm_w(grid, fit.residual));
    if (std::abs(b) > threshold) {
      double t_exit = t;
      if (std::abs(prev_b) > 0.0 && std::abs(b) > std::abs(prev_b)) {
        t_exit = std::clamp(prev_t + std::log(threshold / std::abs(prev_b)) / ctx.sigma,
                            prev_t, t);
      }
      return {b >= 0.0 ? +1 : -1, t_exit};
    }
    if (stabilize) {
      // Subtract the measured unstable component, dressed back into the
      // evolving frame so the removal matches the extraction.
      const VectorXcd fp1 = ctx.f_plus.right_vec.head(n);
      psi -= (b / derot) * fp1;
      u = detail::u_from_f(grid, psi);
    }
    prev_b = b;
    prev_t = t;
  }
  return {0, T_cap};
}

}  // namespace

ShootingResult shoot_manifold(const Eigen::VectorXcd& R0_profile, double epsilon,
                              double T_run, double exit_threshold,
                              const ShootingContext& ctx) {
  const RadialGrid& grid = ctx.gs.grid;
  const int n = grid.n;
  if (R0_profile.size() != n) throw std::invalid_argument("sample count mismatch");
  if (epsilon < 0.0) throw std::invalid_argument("amplitude must be nonnegative");
  if (exit_threshold <= 0.0) exit_threshold = 0.2 * std::sqrt(ctx.gs.mass);
  if (T_run <= 0.0) {
    T_run = std::max(10.0 / ctx.sigma,
                     30.0 / (ctx.gs.alpha * ctx.gs.alpha));
  }

  ShootingResult out;
  out.epsilon = epsilon;
  out.T_run = T_run;
  if (epsilon == 0.0) return out;  // the unperturbed seed is the exact orbit

  // Seed direction: remove root-space and unstable components, keep the
  // decaying eigenmode, normalize the first component to unit L2.
  VectorXcd Z(2 * n);
  Z.head(n) = R0_profile;
  Z.tail(n) = R0_profile.conjugate();
  VectorXcd proj = ctx.projections.apply_s_sector(SectorIndex(0), Z);
  proj += dot_pair(grid, Z, ctx.f_minus.left_vec) * ctx.f_minus.right_vec;
  const double pn = norm_w(grid, VectorXcd(proj.head(n)));
  if (!(pn > 0.0)) throw std::invalid_argument("profile projects to zero");
  const VectorXcd R0 = (epsilon / pn) * proj.head(n);
  const VectorXcd fp1 = ctx.f_plus.right_vec.head(n);
  const VectorXcd base = ctx.gs.phi.cast<cd>() + R0;

  NlsStepper stepper(grid, ctx.dt);
  const double trial_cap = T_run;
  auto classify = [&](double h) {
    const VectorXcd psi0 = base + h * fp1;
    TrialOutcome o = run_trial(psi0, trial_cap, exit_threshold, ctx, stepper,
                               nullptr, false, nullptr);
    if (o.sign != 0) out.departure_time.emplace_back(h, o.exit_time);
    return o.sign;
  };

  double lo = -0.5 * epsilon, hi = 0.5 * epsilon;
  int slo = classify(lo), shi = classify(hi);
  if (slo == shi && slo != 0) {
    lo *= 2.0;
    hi *= 2.0;
    slo = classify(lo);
    shi = classify(hi);
    if (slo == shi && slo != 0) {
      throw BracketFailure("both bracket ends depart with the same sign");
    }
  }
  // A surviving end is already indistinguishable from the invariant set at
  // this resolution; bisection would not refine it.
  const double width_goal = 1e-3 * epsilon * epsilon;
  if (slo == 0 || shi == 0) {
    out.bracket_anomaly = true;
    out.h_star = slo == 0 ? lo : hi;
    out.bracket_width = hi - lo;
  } else {
    while (hi - lo > width_goal) {
      const double mid = 0.5 * (lo + hi);
      const int smid = classify(mid);
      if (smid == 0) {
        lo = mid;
        hi = mid;
        break;
      }
      if (smid == slo) {
        lo = mid;
      } else if (smid == shi) {
        hi = mid;
      } else {
        out.bracket_anomaly = true;  // sign neither end's: not monotone
        break;
      }
    }
    out.h_star = 0.5 * (lo + hi);
    out.bracket_width = hi - lo;
  }

  // Confirmation run with the unstable coefficient measured and removed at
  // every sample; the series records the measured values.
  out.sup_residual = 0.0;
  const VectorXcd psi0 = base + out.h_star * fp1;
  TrialOutcome o = run_trial(psi0, T_run, exit_threshold, ctx, stepper,
                             &out.b_plus_series, true, &out.sup_residual);
  if (o.sign != 0) out.bracket_anomaly = true;  // stabilized run still departed
  return out;
}

}  // namespace soliton
