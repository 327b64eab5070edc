#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "solitonlab/projections.hpp"
#include "solitonlab/radial_grid.hpp"
#include "solitonlab/sector_operators.hpp"

namespace soliton {

// One time slice of a two-component field in a single angular sector,
// stacked (U1, U2) physical samples.  A state flagged j_invariant must
// satisfy the conjugation symmetry to 1e-10 of its norm.
struct FieldState {
  double time = 0.0;
  SectorIndex sector{0};
  Eigen::VectorXcd components;
  bool j_invariant = false;
};

double state_norm(const RadialGrid& grid, const FieldState& s);

// Outcome of a local-decay measurement: volume-weighted <r>^-2 norms on the
// sample times, the log-log fitted exponent over [window_start, window_end],
// and the fitted exponential rate of the growing-mode coefficient when a
// projection set is supplied.  window_truncated marks a fit window shortened
// by reflection from the outer boundary.
struct DecayReport {
  std::vector<double> times;
  std::vector<double> weighted_norms;
  double fitted_exponent = 0.0;
  double growth_rate = 0.0;
  double fit_r2 = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  bool window_truncated = false;
};

// Solves i u' = H u + F on the sample times t_grid (strictly increasing,
// starting at or after u0.time).  Forcing, when given, holds one sample per
// t_grid entry and is treated as piecewise linear in time.
//
// Grids up to n = 800 use a cached dense eigen-decomposition of H with
// closed-form Duhamel increments; a decomposition whose eigenbasis exceeds
// condition 1e10, and every larger grid, falls back to Crank-Nicolson
// stepping (banded when the operator is, at most 5e-3 per internal step).
std::vector<FieldState> propagate_linear(
    const SectorOperator& h, const FieldState& u0,
    const std::vector<double>& t_grid,
    const std::vector<Eigen::VectorXcd>* forcing = nullptr);

// Max over probes and t in [0, T] of |e^{-itH} P_s u| / |P_s u|.  Each probe
// is projected onto the stable subspace first and re-projected after every
// step, which removes the exponential pollution the discretized commutator
// would otherwise inject; probes whose stable part is below 1e-6 of their
// norm are skipped, and all probes degenerate is an error.
double measure_stability(const SectorOperator& h, const ProjectionSet& proj,
                         const std::vector<FieldState>& probes, double T);

// Evolves the probe as given (callers project when they mean to) with an
// absorbing ramp -i s(r) on the outer 15% of the grid, s cubic with
// magnitude 5 alpha^2, and fits the weighted-norm decay over t in [1, T']
// where T' = min(T, r_max / (4 sqrt(lambda_cap)), first reflection).
// lambda_cap is the Rayleigh quotient |H z0| / |z0|.  When proj is given
// and the probe starts inside the stable subspace, the evolution is
// re-projected each step; a probe merely orthogonal to the eigenmode pair
// has that pair removed each step instead (root-space members survive
// this).  The growing-mode coefficient rate is fitted into growth_rate
// whenever that component rises above the noise floor.
DecayReport measure_local_decay(const SectorOperator& h, double alpha,
                                const FieldState& probe, double T,
                                const ProjectionSet* proj = nullptr);

// Scalar hyperbolic pair x1' = sigma x1 + f1, x2' = -sigma x2 + f2 on the
// sample times.  The returned trajectory uses the bounded representation
//   x1(t) = -integral_t^inf e^{-sigma (s - t)} f1(s) ds
// (forcing extended by zero past the last sample) and the forward formula
// for x2 from x0[1]; stability_defect is |x0[0] + integral_0^inf e^{-sigma t}
// f1(t) dt|, the distance of the given data from the stable manifold.
struct HyperbolicSolution {
  std::vector<Eigen::Vector2d> x;
  double stability_defect = 0.0;
};

HyperbolicSolution solve_hyperbolic_ode(double sigma, const Eigen::Vector2d& x0,
                                        const std::vector<Eigen::Vector2d>& f,
                                        const std::vector<double>& t_grid);

// Plain forward integration of the same pair from x0, for control
// experiments on the unstable direction.
std::vector<Eigen::Vector2d> hyperbolic_forward(
    double sigma, const Eigen::Vector2d& x0,
    const std::vector<Eigen::Vector2d>& f, const std::vector<double>& t_grid);

}  // namespace soliton
