#include "solitonlab/detail/dense_eig.hpp"

#include <lapacke.h>

#include <complex>
#include <stdexcept>
#include <string>

namespace soliton::detail {

namespace {

void check(int info, const char* routine) {
  if (info != 0) {
    throw std::runtime_error(std::string(routine) + " failed, info = " + std::to_string(info));
  }
}

}  // namespace

SymEig sym_eig(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  SymEig out;
  out.vectors = a;
  out.values.resize(n);
  int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n,
                            out.values.data());
  check(info, "dsyevd");
  return out;
}

Eigen::VectorXd sym_eigvalues(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd work = a;
  Eigen::VectorXd values(n);
  int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, work.data(), n, values.data());
  check(info, "dsyevd");
  return values;
}

NonSymEig nonsym_eig(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd work = a;
  Eigen::VectorXd wr(n), wi(n);
  Eigen::MatrixXd vr(n, n);
  int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'V', n, work.data(), n, wr.data(), wi.data(),
                           nullptr, 1, vr.data(), n);
  check(info, "dgeev");
  NonSymEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  // dgeev packs complex-conjugate pairs into adjacent real columns.
  for (int j = 0; j < n; ++j) {
    out.values(j) = {wr(j), wi(j)};
  }
  int j = 0;
  while (j < n) {
    if (wi(j) == 0.0) {
      out.vectors.col(j) = vr.col(j).cast<std::complex<double>>();
      ++j;
    } else {
      out.vectors.col(j).real() = vr.col(j);
      out.vectors.col(j).imag() = vr.col(j + 1);
      out.vectors.col(j + 1).real() = vr.col(j);
      out.vectors.col(j + 1).imag() = -vr.col(j + 1);
      j += 2;
    }
  }
  return out;
}

Eigen::VectorXcd nonsym_eigvalues(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd work = a;
  Eigen::VectorXd wr(n), wi(n);
  int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n, wr.data(), wi.data(),
                           nullptr, 1, nullptr, 1);
  check(info, "dgeev");
  Eigen::VectorXcd values(n);
  for (int j = 0; j < n; ++j) {
    values(j) = {wr(j), wi(j)};
  }
  return values;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  Eigen::MatrixXd work = a;
  Eigen::VectorXd s(std::min(m, n));
  int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', m, n, work.data(), m, s.data(), nullptr, 1,
                            nullptr, 1);
  check(info, "dgesdd");
  return s;
}

}  // namespace soliton::detail
