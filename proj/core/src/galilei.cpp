#include "solitonlab/galilei.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace soliton {

namespace {

using std::complex;

constexpr complex<double> kI{0.0, 1.0};

}  // namespace

LineField apply_galilei(const GalileiFrame& frame, double t, const LineField& f,
                        int axis) {
  if (axis < 0 || axis > 2) {
    throw std::invalid_argument("apply_galilei: axis out of range");
  }
  if (f.dx <= 0.0 || f.values.size() == 0) {
    throw std::invalid_argument("apply_galilei: empty sampling");
  }
  const double v = frame.v_inf(axis);
  const double d = frame.d_inf(axis);
  const double shift = 2.0 * t * v + d;
  const double k_real = shift / f.dx;
  const long k = std::lround(k_real);
  if (std::abs(k_real - static_cast<double>(k)) > 1e-9) {
    throw std::invalid_argument("apply_galilei: shift is not grid aligned");
  }

  const long n = f.values.size();
  // Mass shifted past either end of the window is dropped; refuse the call
  // unless that mass is negligible against the whole field.
  double dropped2 = 0.0;
  for (long j = 0; j < n; ++j) {
    const long i = j + k;
    if (i < 0 || i >= n) dropped2 += std::norm(f.values(j));
  }
  const double total2 = f.values.squaredNorm();
  if (dropped2 > 1e-24 * total2) {
    throw std::invalid_argument("apply_galilei: shift exceeds the padding");
  }

  LineField out;
  out.x0 = f.x0;
  out.dx = f.dx;
  out.values = Eigen::VectorXcd::Zero(n);
  const double gamma = axis == 0 ? frame.gamma_inf : 0.0;
  for (long i = 0; i < n; ++i) {
    const long j = i - k;
    if (j < 0 || j >= n) continue;
    const double phase = gamma + v * out.x(static_cast<int>(i)) - t * v * v;
    out.values(i) = std::exp(kI * phase) * f.values(j);
  }
  return out;
}

GalileiFrame inverse_frame(const GalileiFrame& frame) {
  GalileiFrame inv;
  inv.gamma_inf = -frame.gamma_inf - frame.v_inf.dot(frame.d_inf);
  inv.v_inf = -frame.v_inf;
  inv.d_inf = -frame.d_inf;
  inv.alpha_inf = frame.alpha_inf;
  return inv;
}

namespace {

Eigen::VectorXcd stacked_phase(const Eigen::VectorXcd& z, double theta) {
  if (z.size() % 2 != 0) {
    throw std::invalid_argument("frame_change: stacked field has odd length");
  }
  const long n = z.size() / 2;
  const complex<double> up = std::exp(kI * theta);
  Eigen::VectorXcd out(2 * n);
  out.head(n) = up * z.head(n);
  out.tail(n) = std::conj(up) * z.tail(n);
  return out;
}

}  // namespace

Eigen::VectorXcd frame_change_Z_to_U(const Eigen::VectorXcd& z,
                                     const GalileiFrame& frame, double t) {
  if (!frame.frozen()) {
    throw std::invalid_argument("frame_change: radial fields need a frozen frame");
  }
  return stacked_phase(z, frame.omega(t) + frame.gamma_inf);
}

Eigen::VectorXcd frame_change_U_to_Z(const Eigen::VectorXcd& u,
                                     const GalileiFrame& frame, double t) {
  if (!frame.frozen()) {
    throw std::invalid_argument("frame_change: radial fields need a frozen frame");
  }
  return stacked_phase(u, -frame.omega(t) - frame.gamma_inf);
}

}  // namespace soliton
