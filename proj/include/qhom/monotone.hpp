#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "errors.hpp"
#include "linalg.hpp"
#include "problem.hpp"

namespace qhom {

struct InversionConfig {
  double tol = 1e-12;  ///< stop once |T(z) - target| <= tol
  int max_iter = 10000;

  void validate() const {
    if (!(tol > 0.0) || max_iter < 1) throw Error(ErrorKind::InvalidArgument, "inversion needs tol > 0 and max_iter >= 1");
  }
};

/// Solves T(z) = target for a strongly monotone, Lipschitz map T with constants m <= M.
///
/// Each step first tries a Newton step with backtracking on |T(z) - target|; when that fails
/// to decrease the residual it falls back to the damped step z <- z - (m/M^2)(T(z) - target),
/// which contracts the error by sqrt(1 - m^2/M^2) regardless of the starting point.
template <class Map, class Jacobian>
Vec solve_strongly_monotone(Map&& T, Jacobian&& dT, const Vec& target, Vec z, double m, double M,
                            const InversionConfig& cfg) {
  const double damping = m / (M * M);
  Vec r = T(z) - target;
  double rn = r.norm();
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (rn <= cfg.tol) return z;
    if (!std::isfinite(rn)) break;

    bool accepted = false;
    Vec step;
    try {
      step = solve_small(dT(z), r);
    } catch (const Error&) {
      step.resize(0);
    }
    if (step.size() == z.size() && step.allFinite()) {
      double t = 1.0;
      for (int ls = 0; ls < 12; ++ls, t *= 0.5) {
        Vec trial = z - t * step;
        Vec rt = T(trial) - target;
        const double rtn = rt.norm();
        if (rtn <= (1.0 - 1e-4 * t) * rn) {
          z = std::move(trial);
          r = std::move(rt);
          rn = rtn;
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      z -= damping * r;
      r = T(z) - target;
      rn = r.norm();
    }
  }
  if (rn <= cfg.tol) return z;
  throw Error(ErrorKind::NoConvergence, "monotone inversion stalled at residual " + std::to_string(rn) +
                                            " (check the declared m, M)");
}

/// b(x, y, u, v): the p with a(x, y, u, p) = v. Starts from `warm` if given, else from 0.
inline Vec invert_flux(const ProblemSpec& P, double x, double y, const Vec& u, const Vec& v,
                       const InversionConfig& cfg = {}, const std::optional<Vec>& warm = std::nullopt) {
  require_in_ball(P, u);
  require_dim(P, v, "v");
  Vec z = warm && warm->size() == P.n ? *warm : zero_vec(P.n);
  return solve_strongly_monotone([&](const Vec& p) { return P.a(x, y, u, p); },
                                 [&](const Vec& p) { return P.da_dp(x, y, u, p); }, v, std::move(z), P.m, P.M, cfg);
}

struct FluxInverseDerivatives {
  Vec p;      ///< b(x, y, u, v)
  Mat db_du;  ///< -(d_p a)^{-1} d_u a
  Mat db_dv;  ///< (d_p a)^{-1}
};

/// Implicit-function derivatives of b, evaluated at p = b(x, y, u, v).
inline FluxInverseDerivatives b_derivatives(const ProblemSpec& P, double x, double y, const Vec& u, const Vec& v,
                                            const InversionConfig& cfg = {},
                                            const std::optional<Vec>& warm = std::nullopt) {
  FluxInverseDerivatives out;
  out.p = invert_flux(P, x, y, u, v, cfg, warm);
  out.db_dv = inverse_small(P.da_dp(x, y, u, out.p), ErrorKind::SingularJacobian);
  out.db_du = -out.db_dv * P.da_du(x, y, u, out.p);
  return out;
}

}  // namespace qhom
