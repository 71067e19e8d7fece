#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "problem.hpp"

namespace qhom {

namespace registry {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline VecField zero_vec_field(int n) {
  return [n](double, double, const Vec&, const Vec&) { return zero_vec(n); };
}
inline MatField zero_mat_field(int n) {
  return [n](double, double, const Vec&, const Vec&) { return zero_mat(n); };
}

/// (u'/(2 + sin 2 pi y))' = 1, the scalar example with an explicit solution.
inline ProblemSpec linear_sin() {
  ProblemSpec P;
  P.name = "linear-sin";
  P.n = 1;
  P.a = [](double, double y, const Vec&, const Vec& p) -> Vec { return p / (2.0 + std::sin(kTwoPi * y)); };
  P.da_dp = [](double, double y, const Vec&, const Vec&) -> Mat {
    return identity(1) / (2.0 + std::sin(kTwoPi * y));
  };
  P.da_du = zero_mat_field(1);
  P.f = [](double, double, const Vec&, const Vec&) -> Vec { return make_vec({1.0}); };
  P.df_du = zero_mat_field(1);
  P.df_dp = zero_mat_field(1);
  P.da_dx = zero_vec_field(1);
  P.df_dx = zero_vec_field(1);
  P.m = 1.0 / 3.0;
  P.M = 1.0;
  P.radius = 10.0;
  return P;
}

namespace detail {

inline ProblemSpec quasilinear_flux(std::string name) {
  ProblemSpec P;
  P.name = std::move(name);
  P.n = 1;
  P.a = [](double, double y, const Vec&, const Vec& p) -> Vec {
    return make_vec({(2.0 + std::sin(kTwoPi * y)) * p(0) + 0.5 * std::tanh(p(0))});
  };
  P.da_dp = [](double, double y, const Vec&, const Vec& p) -> Mat {
    const double c = std::cosh(p(0));
    Mat J(1, 1);
    J(0, 0) = 2.0 + std::sin(kTwoPi * y) + 0.5 / (c * c);
    return J;
  };
  P.da_du = zero_mat_field(1);
  P.da_dx = zero_vec_field(1);
  P.df_dx = zero_vec_field(1);
  P.m = 1.0;
  P.M = 3.5;
  P.radius = 2.0;
  return P;
}

}  // namespace detail

/// a = (2 + sin 2 pi y) p + tanh(p)/2, f = u.
inline ProblemSpec quasilinear_demo() {
  ProblemSpec P = detail::quasilinear_flux("quasilinear-demo");
  P.f = [](double, double, const Vec& u, const Vec&) -> Vec { return u; };
  P.df_du = [](double, double, const Vec&, const Vec&) -> Mat { return identity(1); };
  P.df_dp = zero_mat_field(1);
  return P;
}

/// quasilinear-demo with f = u + 3u', so that d f0/dv is positive definite and large
/// enough for the explicit sufficient nondegeneracy test.
inline ProblemSpec quasilinear_demo_sc() {
  ProblemSpec P = detail::quasilinear_flux("quasilinear-demo-sc");
  P.f = [](double, double, const Vec& u, const Vec& p) -> Vec { return u + 3.0 * p; };
  P.df_du = [](double, double, const Vec&, const Vec&) -> Mat { return identity(1); };
  P.df_dp = [](double, double, const Vec&, const Vec&) -> Mat { return 3.0 * identity(1); };
  return P;
}

inline Mat system_2d_matrix(double y) {
  Mat A(2, 2);
  A << 2.0 + std::sin(kTwoPi * y), 0.3, 0.3, 2.0 + std::cos(kTwoPi * y);
  return A;
}

/// a = A(y) p with a symmetric 2x2 A(y), f = 0.1 p + u.
/// Eigenvalues of A(y) lie in [0.9137, 3.0863]; m and M are rounded outward.
inline ProblemSpec linear_system_2d() {
  ProblemSpec P;
  P.name = "linear-system-2d";
  P.n = 2;
  P.a = [](double, double y, const Vec&, const Vec& p) -> Vec { return system_2d_matrix(y) * p; };
  P.da_dp = [](double, double y, const Vec&, const Vec&) -> Mat { return system_2d_matrix(y); };
  P.da_du = zero_mat_field(2);
  P.f = [](double, double, const Vec& u, const Vec& p) -> Vec { return 0.1 * p + u; };
  P.df_du = [](double, double, const Vec&, const Vec&) -> Mat { return identity(2); };
  P.df_dp = [](double, double, const Vec&, const Vec&) -> Mat { return 0.1 * identity(2); };
  P.da_dx = zero_vec_field(2);
  P.df_dx = zero_vec_field(2);
  P.m = 0.9;
  P.M = 3.1;
  P.radius = 10.0;
  return P;
}

/// u'' = -pi^2 u. With u(0) = u(1) = 0 the linearization has the kernel sin(pi x).
inline ProblemSpec degenerate_fixture() {
  ProblemSpec P;
  P.name = "degenerate-fixture";
  P.n = 1;
  P.a = [](double, double, const Vec&, const Vec& p) -> Vec { return p; };
  P.da_dp = [](double, double, const Vec&, const Vec&) -> Mat { return identity(1); };
  P.da_du = zero_mat_field(1);
  P.f = [](double, double, const Vec& u, const Vec&) -> Vec { return -std::numbers::pi * std::numbers::pi * u; };
  P.df_du = [](double, double, const Vec&, const Vec&) -> Mat {
    return -std::numbers::pi * std::numbers::pi * identity(1);
  };
  P.df_dp = zero_mat_field(1);
  P.da_dx = zero_vec_field(1);
  P.df_dx = zero_vec_field(1);
  P.m = 1.0;
  P.M = 1.0;
  P.radius = 10.0;
  return P;
}

}  // namespace registry

inline std::vector<std::string> registry_names() {
  return {"linear-sin", "quasilinear-demo", "linear-system-2d", "quasilinear-demo-sc", "degenerate-fixture"};
}

inline ProblemSpec registry_get(std::string_view name) {
  if (name == "linear-sin") return registry::linear_sin();
  if (name == "quasilinear-demo") return registry::quasilinear_demo();
  if (name == "linear-system-2d") return registry::linear_system_2d();
  if (name == "quasilinear-demo-sc") return registry::quasilinear_demo_sc();
  if (name == "degenerate-fixture") return registry::degenerate_fixture();
  throw Error(ErrorKind::NotFound, "no problem named '" + std::string(name) + "'");
}

}  // namespace qhom
