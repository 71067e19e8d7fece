#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/SparseLU>

#include "boundary.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "homogenize.hpp"
#include "linearization.hpp"
#include "monotone.hpp"
#include "problem.hpp"
#include "quadrature.hpp"

namespace qhom {

enum class SolveMode { Picard, FrozenJacobian };

struct SolverConfig {
  int N = 256;                ///< grid subintervals
  double picard_tol = 1e-10;  ///< on the residual norm
  int max_picard = 500;
  SolveMode mode = SolveMode::Picard;
  int nodes_per_period = 16;  ///< eps-problems need N >= nodes_per_period / eps
  int cell_nodes = kDefaultCellNodes;
  InversionConfig inversion{};

  void validate() const {
    if (N < 2) throw Error(ErrorKind::InvalidArgument, "solver needs N >= 2");
    if (!(picard_tol > 0.0) || max_picard < 1 || nodes_per_period < 1) {
      throw Error(ErrorKind::InvalidArgument, "solver needs tol > 0, max_picard >= 1, nodes_per_period >= 1");
    }
    require_cell_nodes(cell_nodes);
    inversion.validate();
  }
};

/// Sentinel value of eps selecting the homogenized problem.
inline constexpr double kHomogenized = std::numeric_limits<double>::infinity();

inline bool is_homogenized(double eps) { return std::isinf(eps) && eps > 0.0; }

struct SolveReport {
  GridFunction u;
  GridFunction v;  ///< flux a(x, x/eps, u, u') along the solution
  std::optional<Vec> w;
  int iterations = 0;  ///< residual evaluations performed
  std::vector<double> residual_history;
  std::vector<double> contraction;  ///< observed ratios of successive residuals
  bool converged = false;

  double final_residual() const {
    return residual_history.empty() ? std::numeric_limits<double>::infinity() : residual_history.back();
  }
};

/// A solve that stopped early; carries the last iterate.
class SolveFailure : public Error {
 public:
  SolveFailure(ErrorKind kind, const std::string& what, SolveReport report)
      : Error(kind, what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

struct InitialGuess {
  GridFunction u;
  GridFunction v;
  std::optional<Vec> w;

  static InitialGuess from(const SolveReport& r) { return {r.u, r.v, r.w}; }
};

struct Residual {
  GridFunction ru;
  GridFunction rv;
  std::optional<Vec> rw;

  double norm() const { return ru.sup_norm() + rv.sup_norm() + (rw ? rw->norm() : 0.0); }
};

/// Coefficients of the eps-problem along x: b(x, x/eps, u, v) and f(x, x/eps, u, b).
class OscillatoryModel {
 public:
  OscillatoryModel(const ProblemSpec& P, double eps, const InversionConfig& cfg) : P_(P), eps_(eps), cfg_(cfg) {}

  int dim() const { return P_.n; }
  double radius() const { return P_.radius; }
  double b_monotonicity() const { return P_.m / (P_.M * P_.M); }
  double b_lipschitz() const { return 1.0 / P_.m; }

  void eval(double x, const Vec& u, const Vec& v, Vec& b, Vec& g, Vec& warm) const {
    const double y = x / eps_;
    warm = invert_flux(P_, x, y, u, v, cfg_, warm);
    b = warm;
    g = P_.f(x, y, u, b);
  }

  void eval_b_dv(double x, const Vec& u, const Vec& v, Vec& b, Mat& bv, Vec& warm) const {
    const double y = x / eps_;
    warm = invert_flux(P_, x, y, u, v, cfg_, warm);
    b = warm;
    bv = inverse_small(P_.da_dp(x, y, u, b));
  }

  NodeBlocks linearize(double x, const Vec& u, const Vec& v, Vec& warm) const {
    const double y = x / eps_;
    const FluxInverseDerivatives d = b_derivatives(P_, x, y, u, v, cfg_, warm);
    warm = d.p;
    const Mat Fp = P_.df_dp(x, y, u, d.p);
    return {d.db_du, d.db_dv, P_.df_du(x, y, u, d.p) + Fp * d.db_du, Fp * d.db_dv};
  }

  Vec end_flux(const Vec& u1, const Vec& slope) const { return P_.a(1.0, 1.0 / eps_, u1, slope); }
  Mat end_flux_du(const Vec& u1, const Vec& slope) const { return P_.da_du(1.0, 1.0 / eps_, u1, slope); }

 private:
  const ProblemSpec& P_;
  double eps_;
  InversionConfig cfg_;
};

/// Coefficients of the homogenized problem: b0(x, u, v) and f0(x, u, v).
class HomogenizedModel {
 public:
  explicit HomogenizedModel(const HomogenizedCoefficients& H) : H_(H) {}

  int dim() const { return H_.dim(); }
  double radius() const { return H_.problem().radius; }
  double b_monotonicity() const { return H_.problem().m / (H_.problem().M * H_.problem().M); }
  double b_lipschitz() const { return 1.0 / H_.problem().m; }

  void eval(double x, const Vec& u, const Vec& v, Vec& b, Vec& g, Vec&) const {
    auto [b0, f0] = H_.b0_f0(x, u, v);
    b = std::move(b0);
    g = std::move(f0);
  }

  void eval_b_dv(double x, const Vec& u, const Vec& v, Vec& b, Mat& bv, Vec&) const {
    const CellLinearization c = H_.linearize(x, u, v);
    b = c.b0;
    bv = c.db0_dv;
  }

  NodeBlocks linearize(double x, const Vec& u, const Vec& v, Vec&) const {
    const CellLinearization c = H_.linearize(x, u, v);
    return {c.db0_du, c.db0_dv, c.df0_du, c.df0_dv};
  }

  Vec end_flux(const Vec& u1, const Vec& slope) const { return H_.a0(1.0, u1, slope); }
  Mat end_flux_du(const Vec& u1, const Vec& slope) const { return H_.da0_du(1.0, u1, slope); }

 private:
  const HomogenizedCoefficients& H_;
};

namespace detail {

struct DiscreteState {
  std::vector<Vec> u;
  std::vector<Vec> v;
  Vec w;  ///< empty unless two-Dirichlet
};

/// One evaluation of the integral operators at a state.
struct Sweep {
  std::vector<Vec> b;
  std::vector<Vec> g;
  std::vector<Vec> ucum;  ///< int_0^{x_i} b
  std::vector<Vec> tail;  ///< int_{x_i}^1 g
  Vec datum;              ///< v(1) demanded by the boundary condition
};

inline BoundaryKind kind_of(const BoundaryCondition& bc) {
  if (std::holds_alternative<NeumannAt1>(bc)) return BoundaryKind::NeumannAt1;
  if (std::holds_alternative<TwoDirichlet>(bc)) return BoundaryKind::TwoDirichlet;
  return BoundaryKind::DirichletNatural;
}

inline double node(int i, int N) { return static_cast<double>(i) / N; }

template <class Model>
void require_in_domain(const Model& model, const std::vector<Vec>& u) {
  double s = 0.0;
  for (const auto& ui : u) s = std::max(s, ui.norm());
  if (!(s < model.radius())) {
    throw Error(ErrorKind::OutOfDomain, "sup|u| = " + std::to_string(s) + " is not below radius " +
                                            std::to_string(model.radius()));
  }
}

template <class Model>
Sweep sweep(const Model& model, const BoundaryCondition& bc, const CumulativeRule& rule, const DiscreteState& s,
            std::vector<Vec>& warm) {
  const int N = rule.N();
  const int n = model.dim();
  Sweep out;
  out.b.assign(static_cast<std::size_t>(N) + 1, zero_vec(n));
  out.g.assign(static_cast<std::size_t>(N) + 1, zero_vec(n));
  for (int i = 0; i <= N; ++i) {
    const auto k = static_cast<std::size_t>(i);
    model.eval(node(i, N), s.u[k], s.v[k], out.b[k], out.g[k], warm[k]);
  }
  out.ucum = rule.cumulative(out.b);
  const std::vector<Vec> gcum = rule.cumulative(out.g);
  out.tail.resize(gcum.size());
  for (std::size_t i = 0; i < gcum.size(); ++i) out.tail[i] = gcum.back() - gcum[i];
  if (const auto* dn = std::get_if<DirichletNatural>(&bc)) {
    out.datum = dn->flux_datum;
  } else if (const auto* ne = std::get_if<NeumannAt1>(&bc)) {
    out.datum = model.end_flux(s.u.back(), ne->slope_datum);
  } else {
    out.datum = s.w;
  }
  return out;
}

inline Residual residual_of(const Sweep& sw, const DiscreteState& s, bool two_dirichlet) {
  std::vector<Vec> ru(s.u.size());
  std::vector<Vec> rv(s.v.size());
  for (std::size_t i = 0; i < s.u.size(); ++i) {
    ru[i] = s.u[i] - sw.ucum[i];
    rv[i] = s.v[i] - sw.datum + sw.tail[i];
  }
  Residual r{GridFunction(std::move(ru)), GridFunction(std::move(rv)), std::nullopt};
  if (two_dirichlet) r.rw = sw.ucum.back();
  return r;
}

inline bool finite_state(const DiscreteState& s) {
  for (const auto& x : s.u)
    if (!x.allFinite()) return false;
  for (const auto& x : s.v)
    if (!x.allFinite()) return false;
  return s.w.allFinite();
}

inline Eigen::VectorXd stack(const Residual& r, Eigen::Index size, int n) {
  Eigen::VectorXd F(size);
  const int N = r.ru.N();
  for (int i = 0; i <= N; ++i) {
    F.segment(static_cast<Eigen::Index>(i) * n, n) = r.ru[i];
    F.segment(static_cast<Eigen::Index>(N + 1 + i) * n, n) = r.rv[i];
  }
  if (r.rw) F.segment(static_cast<Eigen::Index>(2 * (N + 1)) * n, n) = *r.rw;
  return F;
}

inline DiscreteState state_from(const InitialGuess& g, int N, bool two_dirichlet) {
  DiscreteState s;
  s.u = g.u.resample(N).values();
  s.v = g.v.resample(N).values();
  if (two_dirichlet) s.w = g.w ? *g.w : s.v.back();
  return s;
}

inline DiscreteState zero_state(int N, int n, bool two_dirichlet) {
  DiscreteState s;
  s.u.assign(static_cast<std::size_t>(N) + 1, zero_vec(n));
  s.v = s.u;
  if (two_dirichlet) s.w = zero_vec(n);
  return s;
}

inline SolveReport make_report(const DiscreteState& s, bool two_dirichlet) {
  SolveReport r;
  r.u = GridFunction(s.u);
  r.v = GridFunction(s.v);
  if (two_dirichlet) r.w = s.w;
  return r;
}

/// Solves  int_i w_i b(x_i, u_i, w + phi_i) = 0  for w; strongly monotone since the total weights are positive.
template <class Model>
Vec solve_constraint(const Model& model, const CumulativeRule& rule, const std::vector<Vec>& u,
                     const std::vector<Vec>& phi, Vec w, const std::vector<Vec>& warm_in, double tol) {
  const int N = rule.N();
  const int n = model.dim();
  const auto& totals = rule.totals();
  std::vector<Vec> warm = warm_in;
  auto total_b = [&](const Vec& z) {
    Vec sum = zero_vec(n);
    Vec b;
    Mat bv;
    for (int i = 0; i <= N; ++i) {
      const auto k = static_cast<std::size_t>(i);
      Vec g;
      model.eval(node(i, N), u[k], z + phi[k], b, g, warm[k]);
      sum += totals[k] * b;
    }
    return sum;
  };
  auto total_dv = [&](const Vec& z) {
    Mat sum = zero_mat(n);
    Vec b;
    Mat bv;
    for (int i = 0; i <= N; ++i) {
      const auto k = static_cast<std::size_t>(i);
      model.eval_b_dv(node(i, N), u[k], z + phi[k], b, bv, warm[k]);
      sum += totals[k] * bv;
    }
    return sum;
  };
  InversionConfig inner;
  inner.tol = tol;
  return solve_strongly_monotone(total_b, total_dv, zero_vec(n), std::move(w), model.b_monotonicity(),
                                 model.b_lipschitz(), inner);
}

template <class Model>
Linearization linearize_state(const Model& model, const BoundaryCondition& bc, int N, const DiscreteState& s,
                              std::vector<Vec>& warm) {
  std::vector<NodeBlocks> blocks;
  blocks.reserve(static_cast<std::size_t>(N) + 1);
  for (int i = 0; i <= N; ++i) {
    const auto k = static_cast<std::size_t>(i);
    blocks.push_back(model.linearize(node(i, N), s.u[k], s.v[k], warm[k]));
  }
  Mat end_du;
  if (const auto* ne = std::get_if<NeumannAt1>(&bc)) end_du = model.end_flux_du(s.u.back(), ne->slope_datum);
  return Linearization(model.dim(), N, kind_of(bc), std::move(blocks), std::move(end_du));
}

template <class Model>
SolveReport solve_system(const Model& model, const BoundaryCondition& bc, const SolverConfig& cfg, DiscreteState s) {
  const int N = cfg.N;
  const int n = model.dim();
  const bool dd = std::holds_alternative<TwoDirichlet>(bc);
  const CumulativeRule rule(N);
  std::vector<Vec> warm(static_cast<std::size_t>(N) + 1, zero_vec(n));

  std::vector<double> history;
  std::vector<double> ratios;
  auto fail = [&](ErrorKind kind, const std::string& what, const DiscreteState& last, int iterations) {
    SolveReport rep = make_report(last, dd);
    rep.iterations = iterations;
    rep.residual_history = history;
    rep.contraction = ratios;
    throw SolveFailure(kind, what, std::move(rep));
  };

  std::optional<Linearization> lin;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  double theta = 1.0;
  int decreases = 0;

  for (int it = 1; it <= cfg.max_picard; ++it) {
    Sweep sw;
    try {
      require_in_domain(model, s.u);
      sw = sweep(model, bc, rule, s, warm);
    } catch (const Error& e) {
      fail(e.kind(), e.what(), s, it - 1);
    }
    const Residual res = residual_of(sw, s, dd);
    const double rn = res.norm();
    if (!std::isfinite(rn)) fail(ErrorKind::NoConvergence, "residual is not finite", s, it);
    if (!history.empty()) ratios.push_back(rn / history.back());
    history.push_back(rn);
    if (rn <= cfg.picard_tol) {
      SolveReport rep = make_report(s, dd);
      rep.iterations = it;
      rep.residual_history = std::move(history);
      rep.contraction = std::move(ratios);
      rep.converged = true;
      return rep;
    }

    DiscreteState next = s;
    try {
      if (cfg.mode == SolveMode::FrozenJacobian) {
        if (!lin) {
          lin = linearize_state(model, bc, N, s, warm);
          lu.compute(lin->differenced());
          if (lu.info() != Eigen::Success) throw Error(ErrorKind::SingularJacobian, "frozen Jacobian is singular");
        }
        const Eigen::VectorXd delta = lu.solve(lin->difference_rows(stack(res, lin->size(), n)));
        for (int i = 0; i <= N; ++i) {
          const auto k = static_cast<std::size_t>(i);
          next.u[k] -= delta.segment(lin->u_index(i), n);
          next.v[k] -= delta.segment(lin->v_index(i), n);
        }
        if (dd) next.w -= delta.segment(lin->w_index(), n);
      } else {
        if (history.size() > 1) {
          if (rn > history[history.size() - 2]) {
            theta = std::max(theta / 2.0, 1.0 / 1024.0);
            decreases = 0;
          } else if (++decreases >= 3) {
            theta = 1.0;
            decreases = 0;
          }
        }
        std::vector<Vec> phi(sw.tail.size());
        for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = -sw.tail[i];
        Vec datum = sw.datum;
        if (dd) {
          datum = solve_constraint(model, rule, s.u, phi, s.w, warm, std::max(1e-2 * cfg.picard_tol, 1e-14));
          next.w = (1.0 - theta) * s.w + theta * datum;
        }
        for (std::size_t i = 0; i < phi.size(); ++i) {
          next.u[i] = (1.0 - theta) * s.u[i] + theta * sw.ucum[i];
          next.v[i] = (1.0 - theta) * s.v[i] + theta * (datum + phi[i]);
        }
      }
    } catch (const Error& e) {
      fail(e.kind(), e.what(), s, it);
    }
    if (!finite_state(next)) fail(ErrorKind::NoConvergence, "iterate is not finite", s, it);
    s = std::move(next);
  }
  fail(ErrorKind::NoConvergence, "no convergence after " + std::to_string(cfg.max_picard) + " iterations", s,
       cfg.max_picard);
  return {};
}

inline void check_eps(double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
}

inline void check_resolution(double eps, int N, const SolverConfig& cfg) {
  if (is_homogenized(eps) || eps >= 1.0) return;
  const double needed = cfg.nodes_per_period / eps;
  if (static_cast<double>(N) < needed * (1.0 - 1e-12)) {
    throw Error(ErrorKind::UnresolvedOscillation, "N = " + std::to_string(N) + " resolves fewer than " +
                                                      std::to_string(cfg.nodes_per_period) +
                                                      " nodes per period (need N >= " + std::to_string(needed) + ")");
  }
}

inline DiscreteState state_from_grids(const GridFunction& u, const GridFunction& v, const std::optional<Vec>& w,
                                      int n, bool two_dirichlet) {
  if (u.N() != v.N()) throw Error(ErrorKind::DimensionError, "u and v live on different grids");
  if (u.dim() != n || v.dim() != n) throw Error(ErrorKind::DimensionError, "u, v do not match the problem dimension");
  DiscreteState s{u.values(), v.values(), Vec()};
  if (two_dirichlet) {
    if (!w) throw Error(ErrorKind::InvalidArgument, "two-Dirichlet residual needs w");
    if (w->size() != n) throw Error(ErrorKind::DimensionError, "w does not match the problem dimension");
    s.w = *w;
  }
  return s;
}

template <class Model>
Residual residual_with(const Model& model, const BoundaryCondition& bc, const GridFunction& u, const GridFunction& v,
                       const std::optional<Vec>& w) {
  const bool dd = std::holds_alternative<TwoDirichlet>(bc);
  const DiscreteState s = state_from_grids(u, v, w, model.dim(), dd);
  require_in_domain(model, s.u);
  const CumulativeRule rule(u.N());
  std::vector<Vec> warm(s.u.size(), zero_vec(model.dim()));
  return residual_of(sweep(model, bc, rule, s, warm), s, dd);
}

}  // namespace detail

/// Residual of the integral system
///   ru(x) = u(x) - int_0^x b(y, y/eps, u, v) dy,
///   rv(x) = v(x) - datum + int_x^1 f(y, y/eps, u, b) dy,
///   rw    = int_0^1 b dx                        (two-Dirichlet),
/// on the grid of u. eps = kHomogenized uses b0 and f0 instead.
inline Residual residual_eps(const ProblemSpec& P, double eps, const BoundaryCondition& bc, const GridFunction& u,
                             const GridFunction& v, const std::optional<Vec>& w = std::nullopt,
                             const SolverConfig& cfg = {}) {
  P.validate();
  check_boundary_dim(bc, P.n);
  detail::check_eps(eps);
  if (is_homogenized(eps)) {
    const HomogenizedCoefficients H(P, cfg.cell_nodes, cfg.inversion);
    return detail::residual_with(HomogenizedModel(H), bc, u, v, w);
  }
  detail::check_resolution(eps, u.N(), cfg);
  return detail::residual_with(OscillatoryModel(P, eps, cfg.inversion), bc, u, v, w);
}

inline Residual residual_homogenized(const HomogenizedCoefficients& H, const BoundaryCondition& bc,
                                     const GridFunction& u, const GridFunction& v,
                                     const std::optional<Vec>& w = std::nullopt) {
  check_boundary_dim(bc, H.dim());
  return detail::residual_with(HomogenizedModel(H), bc, u, v, w);
}

/// Linearization of the discrete system at (u, v), on the grid of u.
inline Linearization linearize_eps(const ProblemSpec& P, double eps, const BoundaryCondition& bc,
                                   const GridFunction& u, const GridFunction& v, const SolverConfig& cfg = {}) {
  P.validate();
  check_boundary_dim(bc, P.n);
  detail::check_eps(eps);
  const detail::DiscreteState s = detail::state_from_grids(u, v, std::nullopt, P.n, false);
  std::vector<Vec> warm(s.u.size(), zero_vec(P.n));
  if (is_homogenized(eps)) {
    const HomogenizedCoefficients H(P, cfg.cell_nodes, cfg.inversion);
    return detail::linearize_state(HomogenizedModel(H), bc, u.N(), s, warm);
  }
  return detail::linearize_state(OscillatoryModel(P, eps, cfg.inversion), bc, u.N(), s, warm);
}

inline Linearization linearize_homogenized(const HomogenizedCoefficients& H, const BoundaryCondition& bc,
                                           const GridFunction& u, const GridFunction& v) {
  check_boundary_dim(bc, H.dim());
  const detail::DiscreteState s = detail::state_from_grids(u, v, std::nullopt, H.dim(), false);
  std::vector<Vec> warm(s.u.size(), zero_vec(H.dim()));
  return detail::linearize_state(HomogenizedModel(H), bc, u.N(), s, warm);
}

/// Homogenized problem  a0(x, u, u')' = f0(x, u, a0(x, u, u')) with the given boundary condition.
inline SolveReport solve_homogenized(const HomogenizedCoefficients& H, const BoundaryCondition& bc,
                                     const SolverConfig& cfg, const std::optional<InitialGuess>& initial = std::nullopt) {
  cfg.validate();
  check_boundary_dim(bc, H.dim());
  const bool dd = is_two_dirichlet(bc);
  detail::DiscreteState s =
      initial ? detail::state_from(*initial, cfg.N, dd) : detail::zero_state(cfg.N, H.dim(), dd);
  return detail::solve_system(HomogenizedModel(H), bc, cfg, std::move(s));
}

inline SolveReport solve_homogenized(const ProblemSpec& P, const BoundaryCondition& bc, const SolverConfig& cfg,
                                     const std::optional<InitialGuess>& initial = std::nullopt) {
  cfg.validate();
  const HomogenizedCoefficients H(P, cfg.cell_nodes, cfg.inversion);
  return solve_homogenized(H, bc, cfg, initial);
}

/// eps-problem via the integral system. Without an initial guess the iteration starts from the
/// homogenized solution on the same grid (zeros if that solve fails).
inline SolveReport solve_eps(const ProblemSpec& P, double eps, const BoundaryCondition& bc, const SolverConfig& cfg,
                             const std::optional<InitialGuess>& initial = std::nullopt) {
  P.validate();
  cfg.validate();
  check_boundary_dim(bc, P.n);
  detail::check_eps(eps);
  if (is_homogenized(eps)) return solve_homogenized(P, bc, cfg, initial);
  detail::check_resolution(eps, cfg.N, cfg);
  const bool dd = is_two_dirichlet(bc);
  detail::DiscreteState s;
  if (initial) {
    s = detail::state_from(*initial, cfg.N, dd);
  } else {
    try {
      s = detail::state_from(InitialGuess::from(solve_homogenized(P, bc, cfg)), cfg.N, dd);
    } catch (const Error&) {
      s = detail::zero_state(cfg.N, P.n, dd);
    }
  }
  return detail::solve_system(OscillatoryModel(P, eps, cfg.inversion), bc, cfg, std::move(s));
}

/// u(0) = u(1) = 0, solved with the extra unknown w = v(1) and the constraint int_0^1 b = 0.
inline SolveReport solve_two_dirichlet(const ProblemSpec& P, double eps_or_homogenized, const SolverConfig& cfg,
                                       const std::optional<InitialGuess>& initial = std::nullopt) {
  return solve_eps(P, eps_or_homogenized, TwoDirichlet{}, cfg, initial);
}

}  // namespace qhom
