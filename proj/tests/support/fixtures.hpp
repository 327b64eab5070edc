#pragma once

#include "solitonlab/ground_state.hpp"
#include "solitonlab/radial_grid.hpp"

// Shared ground-state solves, cached per test binary.
namespace fixtures {

inline const soliton::GroundState& ground_n3000() {
  static const soliton::GroundState gs =
      soliton::solve_ground_state(1.0, soliton::make_grid(30.0, 3000));
  return gs;
}

inline const soliton::GroundState& ground_n1200() {
  static const soliton::GroundState gs =
      soliton::solve_ground_state(1.0, soliton::make_grid(30.0, 1200));
  return gs;
}

}  // namespace fixtures
