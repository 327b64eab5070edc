#pragma once

#include <Eigen/Dense>

namespace soliton::detail {

// Thin wrappers over LAPACK driver routines for the large dense problems.
// Everything else in the library uses Eigen's own solvers.

struct SymEig {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns match values
};

SymEig sym_eig(const Eigen::MatrixXd& a);
Eigen::VectorXd sym_eigvalues(const Eigen::MatrixXd& a);

struct NonSymEig {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;
};

NonSymEig nonsym_eig(const Eigen::MatrixXd& a);
Eigen::VectorXcd nonsym_eigvalues(const Eigen::MatrixXd& a);

// Singular values, descending.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& a);

}  // namespace soliton::detail
