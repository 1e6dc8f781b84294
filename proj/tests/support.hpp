#pragma once

// Random instance generators shared by the test binaries. Every generator
// takes an explicit engine so each test owns its seed.

#include <cmath>
#include <random>
#include <vector>

#include "qot/linalg.hpp"
#include "qot/state_space.hpp"

namespace qot::testkit {

using Engine = std::mt19937_64;

inline Complex gaussian_complex(Engine& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

// Haar unitary: QR of a Ginibre matrix with the phases of R's diagonal divided out.
inline CMatrix haar_unitary(std::size_t d, Engine& rng) {
  CMatrix g(d, d);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = gaussian_complex(rng);
  }
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const Complex p = r(j, j) / std::abs(r(j, j));
    q.col(j) *= p;
  }
  return q;
}

inline CVector haar_state(std::size_t d, Engine& rng) {
  CVector v(d);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gaussian_complex(rng);
  return v / v.norm();
}

inline CMatrix random_complex_matrix(std::size_t rows, std::size_t cols, Engine& rng) {
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = gaussian_complex(rng);
  }
  return m;
}

inline CMatrix random_real_kernel(std::size_t d, Engine& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  CMatrix m(d, d);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = u(rng);
  }
  return m;
}

inline PureState make_state(const CVector& v) { return PureState(SiteGrid::range(v.size()), v); }

inline LinearOp make_unitary(const CMatrix& u) { return LinearOp(SiteGrid::range(u.rows()), u, OpContract::unitary); }

}  // namespace qot::testkit
