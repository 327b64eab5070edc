#include "solitonlab/radial_grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace soliton {

SectorIndex::SectorIndex(int l) {
  if (l < 0) {
    throw std::invalid_argument("SectorIndex: ell must be non-negative");
  }
  ell = l;
  multiplicity = 2 * l + 1;
}

RadialGrid make_grid(double r_max, int n) {
  if (!std::isfinite(r_max) || r_max <= 0.0) {
    throw std::invalid_argument("make_grid: r_max must be finite and positive");
  }
  if (n < 16) {
    throw std::invalid_argument("make_grid: n must be at least 16");
  }
  RadialGrid g;
  g.r_max = r_max;
  g.n = n;
  const double h = r_max / (n + 1);
  g.nodes.resize(n);
  g.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double r = (i + 1) * h;
    g.nodes(i) = r;
    g.weights(i) = 4.0 * std::numbers::pi * r * r * h;
  }
  return g;
}

double dot_w(const RadialGrid& g, const Eigen::VectorXd& f, const Eigen::VectorXd& v) {
  return (g.weights.array() * f.array() * v.array()).sum();
}

std::complex<double> dot_w(const RadialGrid& g, const Eigen::VectorXcd& f,
                           const Eigen::VectorXcd& v) {
  return (g.weights.cast<std::complex<double>>().array() * f.array() * v.array().conjugate())
      .sum();
}

double norm_w(const RadialGrid& g, const Eigen::VectorXd& f) {
  return std::sqrt((g.weights.array() * f.array().square()).sum());
}

double norm_w(const RadialGrid& g, const Eigen::VectorXcd& f) {
  return std::sqrt((g.weights.array() * f.array().abs2()).sum());
}

}  // namespace soliton
