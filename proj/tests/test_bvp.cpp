#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace qhom;
using namespace qhom::testing;

namespace {

/// a = p, f = 0: every homogeneous problem has u = v = 0.
ProblemSpec zero_problem() {
  ProblemSpec P = registry_get("degenerate-fixture");
  P.name = "zero";
  P.f = [](double, double, const Vec& u, const Vec&) -> Vec { return zero_vec(static_cast<int>(u.size())); };
  P.df_du = [](double, double, const Vec& u, const Vec&) -> Mat { return zero_mat(static_cast<int>(u.size())); };
  return P;
}

SolverConfig config(int N, SolveMode mode = SolveMode::Picard) {
  SolverConfig cfg;
  cfg.N = N;
  cfg.mode = mode;
  return cfg;
}

}  // namespace

TEST(Residual, HomogenizedLinearSinExactPair) {
  const ProblemSpec P = registry_get("linear-sin");
  for (int N : {8, 32}) {
    const auto u = GridFunction::sample(N, [](double x) { return make_vec({x * (x - 2)}); });
    const auto v = GridFunction::sample(N, [](double x) { return make_vec({x - 1}); });
    const Residual r = residual_eps(P, kHomogenized, homogeneous_natural(1), u, v);
    EXPECT_LE(r.norm(), 1.0 / (N * N));
    EXPECT_FALSE(r.rw.has_value());
  }
}

TEST(Residual, ZeroProblemHasZeroResidual) {
  const auto z = GridFunction::zeros(64, 1);
  EXPECT_EQ(residual_eps(zero_problem(), 0.5, homogeneous_natural(1), z, z).norm(), 0.0);
  EXPECT_EQ(residual_eps(registry_get("quasilinear-demo"), 0.1, homogeneous_natural(1), GridFunction::zeros(160, 1),
                         GridFunction::zeros(160, 1))
                .norm(),
            0.0);
}

TEST(Residual, TwoDirichletCarriesConstraint) {
  const ProblemSpec P = registry_get("linear-sin");
  const auto u = GridFunction::sample(16, [](double x) { return make_vec({x * (x - 1)}); });
  const auto v = GridFunction::sample(16, [](double x) { return make_vec({x - 0.5}); });
  const Residual r = residual_eps(P, kHomogenized, TwoDirichlet{}, u, v, make_vec({0.5}));
  ASSERT_TRUE(r.rw.has_value());
  EXPECT_LE(r.norm(), 1e-13);
  EXPECT_THROW(residual_eps(P, kHomogenized, TwoDirichlet{}, u, v), Error);
}

TEST(Residual, Errors) {
  const ProblemSpec P = registry_get("quasilinear-demo");
  const auto big = GridFunction::sample(64, [](double) { return make_vec({2.0}); });
  try {
    residual_eps(P, 0.5, homogeneous_natural(1), big, GridFunction::zeros(64, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfDomain);
  }
  try {
    residual_eps(P, 0.1, homogeneous_natural(1), GridFunction::zeros(64, 1), GridFunction::zeros(64, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnresolvedOscillation);
  }
  EXPECT_THROW(residual_eps(P, 0.5, homogeneous_natural(1), GridFunction::zeros(64, 1), GridFunction::zeros(32, 1)),
               Error);
  EXPECT_THROW(residual_eps(P, -1.0, homogeneous_natural(1), GridFunction::zeros(64, 1), GridFunction::zeros(64, 1)),
               Error);
}

TEST(SolveEps, LinearSinBoundaryValueMatchesClosedForm) {
  const double eps = 0.02;
  const ProblemSpec P = registry_get("linear-sin");
  const SolveReport r = solve_eps(P, eps, homogeneous_natural(1), config(static_cast<int>(16 / eps)));
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.u.back()(0), linear_sin_exact(1.0, eps), 1e-6);
  // u(0) = 0 and v(1) = 0 as the boundary data demand
  EXPECT_LE(std::abs(r.u[0](0)), 1e-12);
  EXPECT_LE(std::abs(r.v.back()(0)), 1e-12);
}

TEST(SolveEps, ZeroProblemConvergesInOneIteration) {
  for (const BoundaryCondition& bc : {homogeneous_natural(1), BoundaryCondition(TwoDirichlet{})}) {
    const SolveReport r = solve_eps(zero_problem(), 0.25, bc, config(64));
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_EQ(r.u.sup_norm(), 0.0);
    EXPECT_EQ(r.v.sup_norm(), 0.0);
  }
}

TEST(SolveEps, QuasilinearAgreesWithFourTimesFinerSolve) {
  const double eps = 0.05;
  const ProblemSpec P = registry_get("quasilinear-demo");
  auto pair = [&](const BoundaryCondition& bc, int N) {
    const SolveReport r = solve_eps(P, eps, bc, config(N));
    SolverConfig fine = config(4 * N);
    fine.picard_tol = 1e-12;
    const SolveReport oracle = solve_eps(P, eps, bc, fine);
    EXPECT_TRUE(r.converged && oracle.converged);
    return std::make_pair(r.u.sup_norm(), sup_distance(r.u, oracle.u));
  };
  // homogeneous data: both solves sit at u = 0
  EXPECT_LE(pair(homogeneous_natural(1), 320).second, 1e-6);
  // flux datum 1: 16 nodes per period lands at 2.4e-6, 32 nodes per period below 1e-6
  const auto [size, d16] = pair(DirichletNatural{make_vec({1.0})}, 320);
  const auto d32 = pair(DirichletNatural{make_vec({1.0})}, 640).second;
  EXPECT_GT(size, 0.1);
  EXPECT_LE(d16, 1e-5);
  EXPECT_LE(d32, 1e-6);
  EXPECT_GT(d16 / d32, 8.0);
}

TEST(SolveEps, NeumannSubsequencesSeparate) {
  const ProblemSpec P = registry_get("linear-sin");
  const BoundaryCondition bc = NeumannAt1{make_vec({1.0})};
  for (int k : {4, 6}) {
    const double e1 = 1.0 / (k + 0.25), e2 = 1.0 / (k + 0.75);
    const double u1 = solve_eps(P, e1, bc, config(sweep_grid(e1, 16))).u.back()(0);
    const double u2 = solve_eps(P, e2, bc, config(sweep_grid(e2, 16))).u.back()(0);
    EXPECT_NEAR(u1, -1.0 + 2.0 / 3.0, 0.05);
    EXPECT_NEAR(u2, -1.0 + 2.0, 0.05);
  }
}

TEST(SolveEps, NeumannSlopeIsHonored) {
  const ProblemSpec P = registry_get("quasilinear-demo");
  const double eps = 0.25;
  const SolveReport r = solve_eps(P, eps, NeumannAt1{make_vec({0.5})}, config(256));
  ASSERT_TRUE(r.converged);
  // v(1) must be the flux of the prescribed slope
  EXPECT_NEAR(r.v.back()(0), P.a(1.0, 1.0 / eps, r.u.back(), make_vec({0.5}))(0), 1e-9);
}

TEST(SolveEps, UnresolvedGridIsRejected) {
  try {
    solve_eps(registry_get("linear-sin"), 0.5, homogeneous_natural(1), config(8));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnresolvedOscillation);
  }
}

TEST(SolveEps, LargeEpsIsSolvedDirectly) {
  const SolveReport r = solve_eps(registry_get("linear-sin"), 3.0, homogeneous_natural(1), config(8));
  EXPECT_TRUE(r.converged);
}

TEST(SolveEps, IterationBudgetExhausted) {
  SolverConfig cfg = config(320);
  cfg.max_picard = 2;
  try {
    solve_eps(registry_get("quasilinear-demo"), 0.05, DirichletNatural{make_vec({1.0})}, cfg,
              InitialGuess{GridFunction::zeros(4, 1), GridFunction::zeros(4, 1), std::nullopt});
    FAIL();
  } catch (const SolveFailure& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoConvergence);
    EXPECT_FALSE(e.report().converged);
    EXPECT_EQ(e.report().iterations, 2);
    EXPECT_EQ(e.report().u.N(), 320);
  }
}

TEST(SolveEps, IterateLeavingBallIsOutOfDomain) {
  // Flux datum 40 pushes |u| far past R = 2.
  try {
    solve_eps(registry_get("quasilinear-demo"), 0.25, DirichletNatural{make_vec({40.0})}, config(64),
              InitialGuess{GridFunction::zeros(4, 1), GridFunction::zeros(4, 1), std::nullopt});
    FAIL();
  } catch (const SolveFailure& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfDomain);
    EXPECT_GE(e.report().u.sup_norm(), 2.0);  // the offending iterate
  }
}

TEST(SolveHomogenized, LinearSinParabola) {
  const SolveReport r = solve_homogenized(registry_get("linear-sin"), homogeneous_natural(1), config(64));
  ASSERT_TRUE(r.converged);
  for (int i = 0; i <= 64; ++i) {
    const double x = r.u.node(i);
    EXPECT_NEAR(r.u[i](0), x * (x - 2), 1.0 / (64 * 64));
    EXPECT_NEAR(r.v[i](0), x - 1, 1e-12);
  }
}

TEST(SolveHomogenized, ZeroProblem) {
  const SolveReport r = solve_homogenized(zero_problem(), homogeneous_natural(1), config(16));
  EXPECT_EQ(r.u.sup_norm(), 0.0);
}

TEST(SolveHomogenized, QuasilinearGridRefinement) {
  const ProblemSpec P = registry_get("quasilinear-demo");
  const BoundaryCondition bc = DirichletNatural{make_vec({1.0})};
  const auto H = build_homogenized(P);
  const SolveReport r16 = solve_homogenized(H, bc, config(16));
  const SolveReport r32 = solve_homogenized(H, bc, config(32));
  const SolveReport r64 = solve_homogenized(H, bc, config(64));
  const double d1 = sup_distance(r16.u, r32.u), d2 = sup_distance(r32.u, r64.u);
  EXPECT_GT(d1, 0.0);
  // at least second order under refinement
  EXPECT_LE(d2, d1 / 4.0);
}

TEST(SolveTwoDirichlet, HomogenizedLinearSin) {
  const SolveReport r = solve_two_dirichlet(registry_get("linear-sin"), kHomogenized, config(64));
  ASSERT_TRUE(r.converged && r.w.has_value());
  EXPECT_NEAR((*r.w)(0), 0.5, 1e-9);
  for (int i = 0; i <= 64; ++i) {
    const double x = r.u.node(i);
    EXPECT_NEAR(r.u[i](0), x * (x - 1), 1e-9);
  }
}

TEST(SolveTwoDirichlet, ZeroProblem) {
  const SolveReport r = solve_two_dirichlet(zero_problem(), kHomogenized, config(16));
  EXPECT_EQ((*r.w)(0), 0.0);
  EXPECT_EQ(r.u.sup_norm(), 0.0);
}

TEST(SolveTwoDirichlet, LinearSinEpsProblem) {
  const ProblemSpec P = registry_get("linear-sin");
  const SolveReport h = solve_two_dirichlet(P, kHomogenized, config(800));
  const SolveReport r = solve_two_dirichlet(P, 0.02, config(800));
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.u.back().norm(), 1e-8);
  EXPECT_LE(sup_distance(r.u, h.u), 0.02);
}

TEST(SolveTwoDirichlet, FrozenModeAgrees) {
  const ProblemSpec P = registry_get("linear-system-2d");
  const SolveReport a = solve_two_dirichlet(P, 0.125, config(128));
  const SolveReport b = solve_two_dirichlet(P, 0.125, config(128, SolveMode::FrozenJacobian));
  ASSERT_TRUE(a.converged && b.converged);
  EXPECT_LE(sup_distance(a.u, b.u), 10 * 1e-10);
  EXPECT_LE((*a.w - *b.w).norm(), 10 * 1e-10);
}

TEST(SolverConfig, Validation) {
  SolverConfig cfg;
  cfg.N = 1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.picard_tol = -1;
  EXPECT_THROW(cfg.validate(), Error);
}

// Re-evaluating the residual of any converged report stays below the tolerance.
TEST(BvpProperties, ConvergedReportsSatisfyResidual) {
  struct Case {
    const char* name;
    double eps;
    BoundaryCondition bc;
  };
  const std::vector<Case> cases = {
      {"linear-sin", 0.125, homogeneous_natural(1)},
      {"quasilinear-demo", 0.1, DirichletNatural{make_vec({1.0})}},
      {"quasilinear-demo", kHomogenized, NeumannAt1{make_vec({0.3})}},
      {"linear-system-2d", 0.25, DirichletNatural{make_vec({1.0, -0.5})}},
      {"linear-system-2d", 0.25, TwoDirichlet{}},
  };
  for (const auto& c : cases) {
    SCOPED_TRACE(c.name);
    for (SolveMode mode : {SolveMode::Picard, SolveMode::FrozenJacobian}) {
      const ProblemSpec P = registry_get(c.name);
      const SolverConfig cfg = config(160, mode);
      const SolveReport r = solve_eps(P, c.eps, c.bc, cfg);
      ASSERT_TRUE(r.converged);
      EXPECT_LE(r.final_residual(), cfg.picard_tol);
      EXPECT_LE(residual_eps(P, c.eps, c.bc, r.u, r.v, r.w, cfg).norm(), cfg.picard_tol);
    }
  }
}

TEST(BvpProperties, PicardAndFrozenAgree) {
  const ProblemSpec P = registry_get("quasilinear-demo");
  const BoundaryCondition bc = DirichletNatural{make_vec({1.0})};
  const SolveReport a = solve_eps(P, 1.0 / 16, bc, config(256));
  const SolveReport b = solve_eps(P, 1.0 / 16, bc, config(256, SolveMode::FrozenJacobian));
  EXPECT_LE(sup_distance(a.u, b.u), 10 * 1e-10);
  EXPECT_LE(sup_distance(a.v, b.v), 10 * 1e-10);
  EXPECT_EQ(b.contraction.size() + 1, b.residual_history.size());
}

// Lemma-style reconstruction: u' = b(x, x/eps, u, v) and the boundary data hold.
TEST(BvpProperties, DerivativeReconstruction) {
  const ProblemSpec P = registry_get("quasilinear-demo");
  const double eps = 0.125;
  const int N = 512;
  const SolveReport r = solve_eps(P, eps, DirichletNatural{make_vec({1.0})}, config(N));
  EXPECT_LE(r.u[0].norm(), 1e-12);
  EXPECT_NEAR(r.v.back()(0), 1.0, 1e-10);
  for (int i = 1; i < N; ++i) {
    const double x = r.u.node(i);
    const double du = (r.u[i + 1](0) - r.u[i - 1](0)) * N / 2;
    EXPECT_NEAR(du, invert_flux(P, x, x / eps, r.u[i], r.v[i])(0), 5e-3);
  }
}

TEST(BvpProperties, MeshRefinementOrder) {
  const ProblemSpec P = registry_get("linear-system-2d");
  const BoundaryCondition bc = DirichletNatural{make_vec({1.0, 0.5})};
  const auto H = build_homogenized(P);
  const SolveReport a = solve_homogenized(H, bc, config(8));
  const SolveReport b = solve_homogenized(H, bc, config(16));
  const SolveReport c = solve_homogenized(H, bc, config(32));
  EXPECT_LE(sup_distance(b.u, c.u), sup_distance(a.u, b.u) / 4.0);
}
