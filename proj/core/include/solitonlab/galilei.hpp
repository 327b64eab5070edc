#pragma once

#include <Eigen/Dense>

namespace soliton {

// Symmetry frame for the free-particle group: phase, velocity, translation,
// and the asymptotic frequency that drives the modulation phase omega.
struct GalileiFrame {
  double gamma_inf = 0.0;
  Eigen::Vector3d v_inf = Eigen::Vector3d::Zero();
  Eigen::Vector3d d_inf = Eigen::Vector3d::Zero();
  double alpha_inf = 1.0;

  double omega(double t) const { return -t * alpha_inf * alpha_inf; }
  bool frozen() const { return v_inf.isZero(0.0) && d_inf.isZero(0.0); }
};

// Uniformly sampled complex line x_i = x0 + i*dx, used for the separable
// (per-axis) action of the transform.  Fields are treated as compactly
// supported inside the sampled window; the trapezoid-free L2 norm is
// sqrt(dx) * |values|.
struct LineField {
  double x0 = 0.0;
  double dx = 1.0;
  Eigen::VectorXcd values;

  double x(int i) const { return x0 + dx * i; }
  double norm() const { return std::sqrt(dx) * values.norm(); }
};

// One-axis action of the transform at time t:
//   (g f)(x) = e^{i(gamma + v x - t v^2)} f(x - 2 t v - d)
// with v = v_inf[axis], d = d_inf[axis].  The global phase gamma rides on
// axis 0 only, so applying the three axes in turn to the factors of a
// separable field realizes the full action.  The shift must land on the
// grid within 1e-9 and must not push mass past the sampled window.
LineField apply_galilei(const GalileiFrame& frame, double t, const LineField& f,
                        int axis = 0);

// Frame whose action composed with the original gives the identity at
// every time, once all three axes are applied.
GalileiFrame inverse_frame(const GalileiFrame& frame);

// Change of frame for stacked two-component radial fields (Z1, Z2):
// multiplies by diag(e^{i theta}, e^{-i theta}) with
// theta = omega(t) + gamma_inf.  Only frozen frames (v = d = 0) act on
// radial data; anything else throws invalid_argument.
Eigen::VectorXcd frame_change_Z_to_U(const Eigen::VectorXcd& z,
                                     const GalileiFrame& frame, double t);
Eigen::VectorXcd frame_change_U_to_Z(const Eigen::VectorXcd& u,
                                     const GalileiFrame& frame, double t);

}  // namespace soliton
