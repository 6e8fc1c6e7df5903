#pragma once

// Internal shared solver; not installed with the public headers.

#include <Eigen/Dense>

#include "pte/errors.hpp"

namespace pte::detail {

constexpr double kRankTol = 1e-10;

// Least squares for sqrt(w)-scaled systems via SVD. The caller passes the
// already-scaled design A and response b. Throws SingularDesignError when
// the smallest singular value falls below kRankTol times the largest.
inline Eigen::VectorXd solve_scaled_lsq(const Eigen::MatrixXd& A,
                                        const Eigen::VectorXd& b) {
  if (A.rows() < A.cols()) {
    throw SingularDesignError("fewer observations than regression columns");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(sv.size() - 1) < kRankTol * sv(0)) {
    throw SingularDesignError("design matrix is numerically singular");
  }
  return svd.solve(b);
}

}  // namespace pte::detail
