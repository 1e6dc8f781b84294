#pragma once

#include <complex>

#include <Eigen/Dense>

namespace qot {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kContractTol = 1e-9;

/// Largest |U^dagger U - I| entry.
inline double unitarity_defect(const CMatrix& u) {
  const CMatrix g = u.adjoint() * u;
  return (g - CMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

inline bool is_unitary(const CMatrix& u, double tol = kContractTol) {
  return u.rows() == u.cols() && unitarity_defect(u) <= tol;
}

}  // namespace qot
