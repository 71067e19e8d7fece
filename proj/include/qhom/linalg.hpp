#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "errors.hpp"
#include "types.hpp"

namespace qhom {

namespace detail {

inline void check_pivots(const Eigen::PartialPivLU<Mat>& lu, ErrorKind on_singular) {
  const auto& packed = lu.matrixLU();
  double largest = 0.0;
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < packed.rows(); ++i) {
    const double d = std::abs(packed(i, i));
    largest = std::max(largest, d);
    smallest = std::min(smallest, d);
  }
  if (!(smallest > 1e-13 * largest) || !std::isfinite(largest)) {
    throw Error(on_singular, "matrix is numerically singular");
  }
}

}  // namespace detail

/// Solves A X = B by partial-pivot elimination. Intended for the n <= kMaxDim blocks of the model.
inline Mat solve_small(const Mat& A, const Mat& B, ErrorKind on_singular = ErrorKind::SingularJacobian) {
  Eigen::PartialPivLU<Mat> lu(A);
  detail::check_pivots(lu, on_singular);
  return lu.solve(B);
}

inline Vec solve_small(const Mat& A, const Vec& b, ErrorKind on_singular = ErrorKind::SingularJacobian) {
  Eigen::PartialPivLU<Mat> lu(A);
  detail::check_pivots(lu, on_singular);
  return lu.solve(b);
}

inline Mat inverse_small(const Mat& A, ErrorKind on_singular = ErrorKind::SingularJacobian) {
  return solve_small(A, identity(static_cast<int>(A.rows())), on_singular);
}

/// Smallest eigenvalue of the symmetric part of A.
inline double lambda_min_sym(const Mat& A) {
  const Mat sym = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Euclidean operator norm.
inline double spectral_norm(const Mat& A) {
  const Mat gram = A.transpose() * A;
  Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace qhom
