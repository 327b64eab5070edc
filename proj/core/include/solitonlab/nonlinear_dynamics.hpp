#pragma once

#include "solitonlab/ground_state.hpp"
#include "solitonlab/projections.hpp"
#include "solitonlab/radial_grid.hpp"
#include "solitonlab/spectral.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <memory>
#include <utility>
#include <vector>

namespace soliton {

// One Strang step of the focusing cubic flow on u = r*psi samples: a
// Crank-Nicolson half step of the free radial flow, the exact pointwise
// cubic phase rotation over dt, and a second Crank-Nicolson half step.
// The banded factorization is done once per (grid, dt).  A stepper holds
// scratch state, so each concurrent worker needs its own instance.
class NlsStepper {
 public:
  NlsStepper(const RadialGrid& grid, double dt);
  ~NlsStepper();
  NlsStepper(NlsStepper&&) noexcept;
  NlsStepper& operator=(NlsStepper&&) noexcept;
  NlsStepper(const NlsStepper&) = delete;
  NlsStepper& operator=(const NlsStepper&) = delete;

  // Advances u by one dt in place; returns max_i |u_i| / r_i seen at the
  // interior stage, the amplitude the blow-up guard watches.
  double step(Eigen::VectorXcd& u);

  const RadialGrid& grid() const;
  double dt() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Mass and gradient-minus-quartic energy of physical samples psi, using
// the same stencil the stepper propagates with so conservation statements
// refer to one discrete functional.
double nls_mass(const RadialGrid& grid, const Eigen::VectorXcd& psi);
double nls_energy(const RadialGrid& grid, const Eigen::VectorXcd& psi);

struct NlsEvolution {
  RadialGrid grid;
  std::vector<double> times;
  std::vector<Eigen::VectorXcd> states;  // psi samples at times
  double mass_drift = 0.0;               // max relative drift over samples
  double energy_drift = 0.0;
};

// Evolves psi0 to time T with the split scheme above, sampling the state
// every sample_interval (0 picks max(dt, T/256)).  alpha_guard sets the
// blow-up proxy: max |psi| > 50*alpha_guard throws BlowUpDetected carrying
// the exit time.  Requires dt <= 1e-3/alpha_guard^2 and finite psi0.
NlsEvolution evolve_nls(const Eigen::VectorXcd& psi0, double T, double dt,
                        const RadialGrid& grid, double alpha_guard = 1.0,
                        double sample_interval = 0.0);

// Result of fitting psi = e^{i gamma} phi(., alpha) + R with the residual
// pairings against the moving dual family driven to zero.
struct ModulationFit {
  SolitonParams params;
  Eigen::VectorXcd residual;   // R = psi - e^{i gamma} phi(., alpha)
  double pairing_phase = 0.0;  // |<Z, dual_2>| at convergence
  double pairing_scale = 0.0;  // |<Z, dual_1>| at convergence
  int iterations = 0;
};

// Newton iteration on (gamma, alpha) enforcing
//   Re(e^{-i gamma} <psi - W, phi>_w) = 0,
//   Im(e^{-i gamma} <psi - W, d_alpha phi>_w) = 0,
// the radial-sector orthogonality of Z = (R, conj R) to the dual family at
// the fitted parameters.  The ground state is re-solved on the caller's
// grid at each alpha iterate, so family members are recovered to machine
// precision.  Converged when both pairings are <= 1e-10 * ||phi||^2;
// throws NoConvergenceError after 50 iterations (the shooting exit test).
ModulationFit modulation_decompose(const Eigen::VectorXcd& psi,
                                   const RadialGrid& grid,
                                   const SolitonParams& guess);

// Parameter-velocity rows of the modulation system, ordered
// (alpha_dot, gamma_dot, D_dot x3, v_dot x3); gamma_dot is the rate of the
// phase correction on top of the soliton rotation alpha^2.  R is the first
// component of the J-invariant residual pair in the soliton frame, as
// returned by modulation_decompose.  The frozen-reference terms driven by
// alpha_ref^2 - alpha^2 cancel between the operator and the moving roots at
// quadratic order, so only the cubic couplings against the carriers at the
// current alpha survive.  Radial inputs make the last six rows vanish; they
// are returned as exact zeros.
std::array<double, 8> modulation_rhs(const Eigen::VectorXcd& R,
                                     const RadialGrid& grid,
                                     const SolitonParams& params,
                                     const SolitonParams& params_ref);

// Reusable expensive pieces for shooting: the soliton data, root family,
// unstable/stable eigenmode pair, projections, and the trial step size.
struct ShootingContext {
  GroundState gs;
  RootFamily family;
  EigenPair f_plus;
  EigenPair f_minus;
  ProjectionSet projections;
  double sigma = 0.0;
  double dt = 1e-4;
  double sample_interval = 0.25;  // modulation / monitor cadence
};

ShootingContext make_shooting_context(double alpha, const RadialGrid& grid,
                                      double dt = 1e-4,
                                      double sample_interval = 0.25);

struct ShootingResult {
  double epsilon = 0.0;
  double h_star = 0.0;
  double bracket_width = 0.0;
  // (trial h, exit time) for every bisection trial that departed.
  std::vector<std::pair<double, double>> departure_time;
  // (t, b_plus) samples along the stabilized confirmation run at h_star.
  std::vector<std::pair<double, double>> b_plus_series;
  double sup_residual = 0.0;  // sup_t ||R(t)||_2 over that run
  double T_run = 0.0;
  bool bracket_anomaly = false;
};

// Bisection for the unstable-mode coefficient h that keeps the perturbed
// soliton on the locally invariant set.  The seed is
//   psi(0) = phi + epsilon * P (R0_profile) + h * f_plus_1,
// with P removing the root-space and unstable components (the projected
// profile is normalized to unit L2 before scaling by epsilon).  Each trial
// runs modulation_decompose along the flow and classifies departure by the
// sign of b_plus = <Z, dual of f_plus> when |b_plus| crosses
// exit_threshold (<= 0 picks 0.2*||phi||_2) or the decomposition stops
// converging or the amplitude guard trips.  The bracket +-0.5*epsilon is
// widened once if both ends agree in sign; persistent agreement throws
// BracketFailure.  Bisection stops at width <= 1e-3*epsilon^2; a
// confirmation run at h_star to T_run (<= 0 picks max(10/sigma,
// 30/alpha^2)) then measures b_plus at every sample and removes that
// component before continuing, recording the series and sup ||R||.
ShootingResult shoot_manifold(const Eigen::VectorXcd& R0_profile,
                              double epsilon, double T_run,
                              double exit_threshold,
                              const ShootingContext& ctx);

}  // namespace soliton
