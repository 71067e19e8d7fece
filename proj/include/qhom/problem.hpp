#pragma once

#include <functional>
#include <optional>
#include <string>

#include "errors.hpp"
#include "types.hpp"

namespace qhom {

/// Pointwise coefficient (x, y, u, p) -> R^n. y is the fast variable; p stands for u'.
using VecField = std::function<Vec(double x, double y, const Vec& u, const Vec& p)>;
/// Pointwise Jacobian (x, y, u, p) -> R^{n x n}.
using MatField = std::function<Mat(double x, double y, const Vec& u, const Vec& p)>;

/// Data of one quasilinear problem  a(x, x/eps, u, u')' = f(x, x/eps, u, u').
///
/// `a` and `f` are 1-periodic in y. The flux a(x, y, u, .) is strongly monotone with
/// constant `m` and Lipschitz with constant `M` for every |u| <= `radius`. `da_dx` and
/// `df_dx` are present exactly when the problem is smooth in the slow variable, which is
/// what upgrades the homogenization error from o(1) to O(eps).
///
/// Evaluators must be pure; they are called concurrently.
struct ProblemSpec {
  std::string name;
  int n = 1;
  VecField a;
  VecField f;
  MatField da_du;
  MatField da_dp;
  MatField df_du;
  MatField df_dp;
  std::optional<VecField> da_dx;
  std::optional<VecField> df_dx;
  double m = 1.0;
  double M = 1.0;
  double radius = 1.0;

  bool smooth_in_x() const { return da_dx.has_value() && df_dx.has_value(); }

  void validate() const {
    if (n < 1 || n > kMaxDim) {
      throw Error(ErrorKind::DimensionError, "system dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }
    if (!(m > 0.0) || !(M >= m) || !(radius > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "need 0 < m <= M and radius > 0");
    }
    if (!a || !f || !da_du || !da_dp || !df_du || !df_dp) {
      throw Error(ErrorKind::InvalidArgument, "problem '" + name + "' has missing evaluators");
    }
  }
};

inline void require_dim(const ProblemSpec& P, const Vec& v, const char* what) {
  if (v.size() != P.n) {
    throw Error(ErrorKind::DimensionError, std::string(what) + " has dimension " + std::to_string(v.size()) +
                                               ", problem has " + std::to_string(P.n));
  }
}

inline void require_in_ball(const ProblemSpec& P, const Vec& u) {
  require_dim(P, u, "u");
  if (!(u.norm() <= P.radius)) {
    throw Error(ErrorKind::OutOfDomain, "|u| = " + std::to_string(u.norm()) + " exceeds radius " +
                                            std::to_string(P.radius));
  }
}

}  // namespace qhom
