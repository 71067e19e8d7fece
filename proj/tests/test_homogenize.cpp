#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace qhom;
using namespace qhom::testing;

namespace {

// 30-digit adaptive quadrature of the cell average, computed before the build.
constexpr double kQuasilinearB0 = 0.44580969216687119317836990292;
// (int_0^1 A(y)^{-1} dy)^{-1} for A = [[2+sin, 0.3], [0.3, 2+cos]], same oracle run.
constexpr double kSystemA0Diag = 1.72438513702152037292053517762;
constexpr double kSystemA0Off = 0.29673204955800592023452572407;

/// Composite Simpson on [0,1] with an even number of panels.
template <class Fn>
double simpson(Fn&& fn, int panels) {
  const double h = 1.0 / panels;
  double s = fn(0.0) + fn(1.0);
  for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * fn(k * h);
  return s * h / 3.0;
}

ProblemSpec y_independent() {
  ProblemSpec P = registry_get("quasilinear-demo");
  P.name = "y-independent";
  P.a = [](double, double, const Vec&, const Vec& p) -> Vec { return 2.0 * p + 0.5 * p.array().tanh().matrix(); };
  P.da_dp = [](double, double, const Vec&, const Vec& p) -> Mat {
    const double s = 1.0 / std::cosh(p(0));
    return Mat::Constant(1, 1, 2.0 + 0.5 * s * s);
  };
  P.m = 2.0;
  P.M = 2.5;
  return P;
}

}  // namespace

TEST(AverageB0, LinearSinIsTwiceTheFlux) {
  const ProblemSpec P = registry_get("linear-sin");
  for (double v : {-3.0, 0.5, 1.0, 7.0}) EXPECT_NEAR(average_b0(P, 0.3, make_vec({0.0}), make_vec({v}))(0), 2 * v, 1e-13);
}

TEST(AverageB0, YIndependentFluxEqualsPointwiseInverse) {
  const ProblemSpec P = y_independent();
  const Vec u = make_vec({0.2}), v = make_vec({1.3});
  EXPECT_NEAR(average_b0(P, 0.1, u, v, 16)(0), invert_flux(P, 0.1, 0.37, u, v)(0), 1e-13);
}

TEST(AverageB0, QuasilinearAgainstSimpsonOracle) {
  const ProblemSpec P = registry_get("quasilinear-demo");
  const double oracle = simpson(
      [](double y) {
        const double c = 2.0 + std::sin(2 * kPi * y);
        return bisect([c](double p) { return c * p + 0.5 * std::tanh(p) - 1.0; }, 0.0, 1.0);
      },
      10000);
  EXPECT_NEAR(oracle, kQuasilinearB0, 1e-10);
  EXPECT_NEAR(average_b0(P, 0.0, make_vec({0.0}), make_vec({1.0}))(0), oracle, 1e-8);
  EXPECT_NEAR(average_b0(P, 0.0, make_vec({0.0}), make_vec({1.0}))(0), kQuasilinearB0, 1e-12);
}

TEST(AverageB0, RejectsTooFewCellNodes) {
  EXPECT_THROW(average_b0(registry_get("linear-sin"), 0, make_vec({0.0}), make_vec({1.0}), 1), Error);
}

TEST(BuildHomogenized, LinearSinHalvesTheSlope) {
  const auto H = build_homogenized(registry_get("linear-sin"));
  for (double p : {-2.0, 0.25, 1.0, 5.0}) {
    EXPECT_NEAR(H.a0(0.5, make_vec({0.0}), make_vec({p}))(0), p / 2, 1e-10 * std::abs(p / 2));
    EXPECT_EQ(H.f0(0.5, make_vec({0.0}), make_vec({p}))(0), 1.0);
  }
  EXPECT_NEAR(H.da0_dp(0.5, make_vec({0.0}), make_vec({1.0}))(0, 0), 0.5, 1e-12);
}

TEST(BuildHomogenized, QuasilinearReactionAveragesToU) {
  const auto H = build_homogenized(registry_get("quasilinear-demo"));
  for (int s = 0; s < 10; ++s) {
    const Vec u = random_vec(1, 2), v = random_vec(1, 5);
    EXPECT_NEAR(H.f0(uniform(0, 1), u, v)(0), u(0), 1e-14);
  }
}

TEST(BuildHomogenized, LinearSystemMatchesHarmonicAverage) {
  const auto H = build_homogenized(registry_get("linear-system-2d"));
  const Vec u = make_vec({0.1, 0.2});
  const Mat A0 = central_jacobian([&](const Vec& p) { return H.a0(0.0, u, p); }, make_vec({0.3, -0.4}), 1e-4);
  EXPECT_NEAR(A0(0, 0), kSystemA0Diag, 1e-8);
  EXPECT_NEAR(A0(1, 1), kSystemA0Diag, 1e-8);
  EXPECT_NEAR(A0(0, 1), kSystemA0Off, 1e-8);
  EXPECT_NEAR(A0(1, 0), kSystemA0Off, 1e-8);
  const Mat exact = H.da0_dp(0.0, u, make_vec({0.3, -0.4}));
  EXPECT_NEAR(exact(0, 0), kSystemA0Diag, 1e-12);
  EXPECT_NEAR(exact(0, 1), kSystemA0Off, 1e-12);
}

TEST(BuildHomogenized, DerivedConstants) {
  const auto H = build_homogenized(registry_get("quasilinear-demo"));
  EXPECT_DOUBLE_EQ(H.m0(), 1.0 / 12.25);
  EXPECT_DOUBLE_EQ(H.M0(), 12.25);
}

TEST(LinearHomogenize, HarmonicMeanOfSin) {
  const auto r = linear_homogenize([](double y) { return Mat::Constant(1, 1, 2 + std::sin(2 * kPi * y)); },
                                   [](double) { return zero_vec(1); }, [](double) { return zero_mat(1); },
                                   [](double) { return zero_vec(1); });
  const double oracle = 1.0 / simpson([](double y) { return 1.0 / (2 + std::sin(2 * kPi * y)); }, 10000);
  EXPECT_NEAR(oracle, std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(r.A0(0, 0), std::sqrt(3.0), 1e-13);
}

TEST(LinearHomogenize, ConstantCoefficients) {
  Mat A(2, 2), F(2, 2);
  A << 3, 1, 1, 2;
  F << 0.5, -1, 2, 0.25;
  const Vec abar = make_vec({1.0, -1.0}), fbar = make_vec({0.3, 0.4});
  const auto r = linear_homogenize([&](double) { return A; }, [&](double) { return abar; },
                                   [&](double) { return F; }, [&](double) { return fbar; }, 8);
  EXPECT_LE((r.A0 - A).norm(), 1e-13);
  EXPECT_LE((r.abar0 - abar).norm(), 1e-13);
  EXPECT_LE((r.F0 - F * A.inverse()).norm(), 1e-13);
  EXPECT_LE((r.fbar0 - (fbar - F * A.inverse() * abar)).norm(), 1e-13);
}

TEST(LinearHomogenize, LinearSinWrittenAsSlopeCoefficient) {
  const auto r = linear_homogenize([](double y) { return Mat::Constant(1, 1, 1 / (2 + std::sin(2 * kPi * y))); },
                                   [](double) { return zero_vec(1); }, [](double) { return zero_mat(1); },
                                   [](double) { return make_vec({1.0}); });
  EXPECT_NEAR(r.A0(0, 0), 0.5, 1e-14);
  EXPECT_NEAR(r.fbar0(0), 1.0, 1e-14);
}

TEST(LinearHomogenize, SingularCoefficientReported) {
  try {
    linear_homogenize([](double y) { return Mat::Constant(1, 1, std::sin(2 * kPi * y)); },
                      [](double) { return zero_vec(1); }, [](double) { return zero_mat(1); },
                      [](double) { return zero_vec(1); }, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularCoefficient);
  }
}

TEST(LinearHomogenize, AgreesWithBuildHomogenizedOnLinearSystem) {
  const ProblemSpec P = registry_get("linear-system-2d");
  const auto r = linear_homogenize(registry::system_2d_matrix, [](double) { return zero_vec(2); },
                                   [](double) { return Mat(0.1 * identity(2)); }, [](double) { return zero_vec(2); },
                                   256);
  const auto H = build_homogenized(P, 256);
  const Vec u = make_vec({0.5, -0.5});
  for (int s = 0; s < 20; ++s) {
    const Vec p = random_vec(2, 5);
    EXPECT_LE((H.a0(0.2, u, p) - r.A0 * p).norm(), 1e-8);
    const Vec v = random_vec(2, 5);
    // f0(u, v) = int F b dy + u with b = A^{-1} v
    EXPECT_LE((H.f0(0.2, u, v) - (r.F0 * v + u)).norm(), 1e-8);
  }
}

TEST(Corrector, VanishesForYIndependentFlux) {
  const auto w = corrector_w(y_independent(), 0.2, make_vec({0.1}), make_vec({0.9}), 32);
  for (double y : {0.0, 0.1, 0.5, 0.93}) EXPECT_LE(w(y).norm(), 1e-15);
}

TEST(Corrector, LinearSinClosedForm) {
  const auto w = corrector_w(registry_get("linear-sin"), 0.0, make_vec({0.0}), make_vec({1.0}));
  for (int s = 0; s < 50; ++s) {
    const double y = uniform(0, 1);
    EXPECT_NEAR(w(y)(0), (1 - std::cos(2 * kPi * y)) / (2 * kPi) - 1 / (2 * kPi), 1e-13);
  }
  EXPECT_NEAR(w(0.3)(0), w(1.3)(0), 1e-13);
}

TEST(Corrector, MeanZeroOnRandomQuasilinearInputs) {
  const ProblemSpec P = registry_get("quasilinear-demo");
  for (int s = 0; s < 20; ++s) {
    const auto w = corrector_w(P, uniform(0, 1), random_vec(1, 2), random_vec(1, 5), 64);
    EXPECT_LE(std::abs(simpson([&](double y) { return w(y)(0); }, 2000)), 1e-10);
    for (int k = 0; k < 64; ++k) {
      const double y = k / 64.0;
      EXPECT_NEAR(w.derivative(y)(0), w.slope_samples()[static_cast<std::size_t>(k)](0) - w.b0()(0), 1e-12);
    }
  }
}

TEST(DualFormula, Examples) {
  EXPECT_NEAR(a0_dual(registry_get("linear-sin"), 0.1, make_vec({0.0}), make_vec({1.0}))(0), 1.0, 1e-12);
  EXPECT_NEAR(a0_dual(registry_get("quasilinear-demo"), 0.0, make_vec({0.0}), make_vec({0.7}))(0), 0.7, 1e-8);
  const Vec d = a0_dual(registry_get("linear-system-2d"), 0.0, make_vec({0.0, 0.0}), make_vec({1.0, 0.0}));
  EXPECT_LE((d - make_vec({1.0, 0.0})).norm(), 1e-8);
}

TEST(DualFormula, AgreesWithInverseOfAverage) {
  const ProblemSpec P = registry_get("quasilinear-demo");
  const auto H = build_homogenized(P);
  const Vec u = make_vec({0.3}), v = make_vec({1.7});
  const Vec p = H.b0(0.4, u, v);
  EXPECT_NEAR(H.a0(0.4, u, p)(0), a0_dual(P, 0.4, u, v)(0), 1e-9);
}

TEST(HomogenizedProperties, InversePairIdentity) {
  for (const ProblemSpec& P : all_problems()) {
    SCOPED_TRACE(P.name);
    const auto H = build_homogenized(P);
    for (int s = 0; s < 20; ++s) {
      const double x = uniform(0, 1);
      const Vec u = random_vec(P.n, P.radius), p = random_vec(P.n, 5);
      EXPECT_LE((H.b0(x, u, H.a0(x, u, p)) - p).norm(), 1e-8 * (1 + p.norm()));
      const Vec v = random_vec(P.n, 5);
      EXPECT_LE((H.a0(x, u, H.b0(x, u, v)) - v).norm(), 1e-8 * (1 + v.norm()));
    }
  }
}

TEST(HomogenizedProperties, A0MonotonicityAndLipschitz) {
  for (const ProblemSpec& P : all_problems()) {
    SCOPED_TRACE(P.name);
    const auto H = build_homogenized(P, 64);
    for (int s = 0; s < 30; ++s) {
      const double x = uniform(0, 1);
      const Vec u = random_vec(P.n, P.radius);
      const Vec p1 = random_vec(P.n, 10), p2 = random_vec(P.n, 10);
      const Vec da = H.a0(x, u, p1) - H.a0(x, u, p2), dp = p1 - p2;
      EXPECT_GE(da.dot(dp), H.m0() * dp.squaredNorm() * (1 - 1e-8));
      EXPECT_LE(da.norm(), H.M0() * dp.norm() * (1 + 1e-8));
    }
  }
}

TEST(HomogenizedProperties, DerivativeFormulasMatchDifferences) {
  const double h = 1e-5;
  for (const ProblemSpec& P : all_problems()) {
    SCOPED_TRACE(P.name);
    const auto H = build_homogenized(P, 64);
    for (int s = 0; s < 10; ++s) {
      const double x = uniform(0, 1);
      const Vec u = random_vec(P.n, 0.9 * P.radius), p = random_vec(P.n, 3), v = random_vec(P.n, 3);
      EXPECT_LE(rel_diff(H.da0_dp(x, u, p), central_jacobian([&](const Vec& z) { return H.a0(x, u, z); }, p, h)), 1e-4);
      EXPECT_LE(rel_diff(H.da0_du(x, u, p), central_jacobian([&](const Vec& z) { return H.a0(x, z, p); }, u, h)), 1e-4);
      EXPECT_LE(rel_diff(H.df0_dv(x, u, v), central_jacobian([&](const Vec& z) { return H.f0(x, u, z); }, v, h)), 1e-4);
      EXPECT_LE(rel_diff(H.df0_du(x, u, v), central_jacobian([&](const Vec& z) { return H.f0(x, z, v); }, u, h)), 1e-4);
    }
  }
}

TEST(HomogenizedProperties, CellQuadratureIsSpectrallyConverged) {
  for (const ProblemSpec& P : all_problems()) {
    SCOPED_TRACE(P.name);
    for (int s = 0; s < 10; ++s) {
      const Vec u = random_vec(P.n, P.radius), v = random_vec(P.n, 5);
      EXPECT_LE(cell_quadrature_drift(P, uniform(0, 1), u, v, 64), 1e-10);
    }
  }
}
