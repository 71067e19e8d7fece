#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "analysis.hpp"
#include "bvp.hpp"
#include "grid.hpp"
#include "problem.hpp"

namespace qhom {

/// Grid for one eps: ceil(nodes_per_period / eps), rounded up to a multiple of 16.
inline int sweep_grid(double eps, int nodes_per_period) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
  const double raw = std::ceil(nodes_per_period / eps - 1e-9);
  if (raw > 1 << 24) throw Error(ErrorKind::InvalidArgument, "eps too small for a uniform grid");
  const int N = std::max(16, static_cast<int>(raw));
  return (N + 15) / 16 * 16;
}

struct SweepRow {
  double eps = 0.0;
  int N = 0;
  int iterations = 0;
  bool converged = false;
  double err_inf = 0.0;       ///< sup |u_eps - u0|
  double err_boundary = 0.0;  ///< |u_eps(1) - u0(1)|
  Vec u_end;                  ///< u_eps(1)
  std::string failure;        ///< why the solve stopped, if it did
};

struct SweepResult {
  std::vector<SweepRow> rows;  ///< in the order of the eps list
  SolveReport homogenized;
  std::optional<RateFit> fit;  ///< over converged rows with positive error
};

/// Homogenized solve once on the finest grid, then every eps-problem warm-started from it.
/// Entries run concurrently when `parallel` is set; rows come back in eps order either way.
inline SweepResult run_sweep(const ProblemSpec& P, const BoundaryCondition& bc, const std::vector<double>& eps_list,
                             const SolverConfig& base, bool parallel = true) {
  P.validate();
  base.validate();
  check_boundary_dim(bc, P.n);
  if (eps_list.empty()) throw Error(ErrorKind::InvalidArgument, "empty eps list");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0) || !std::isfinite(eps_list[i]))
      throw Error(ErrorKind::InvalidArgument, "eps values must be positive and finite");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw Error(ErrorKind::InvalidArgument, "eps list must strictly decrease");
  }

  int finest = 0;
  for (double e : eps_list) finest = std::max(finest, sweep_grid(e, base.nodes_per_period));

  const HomogenizedCoefficients H(P, base.cell_nodes, base.inversion);
  SolverConfig hcfg = base;
  hcfg.N = finest;
  SweepResult result;
  result.homogenized = solve_homogenized(H, bc, hcfg);
  const SolveReport& hom = result.homogenized;

  auto run_one = [&](double eps) {
    SweepRow row;
    row.eps = eps;
    row.N = sweep_grid(eps, base.nodes_per_period);
    SolverConfig cfg = base;
    cfg.N = row.N;
    try {
      const SolveReport r = solve_eps(P, eps, bc, cfg, InitialGuess::from(hom));
      row.iterations = r.iterations;
      row.converged = r.converged;
      row.err_inf = sup_distance(r.u, hom.u);
      row.u_end = r.u.back();
      row.err_boundary = (r.u.back() - hom.u.back()).norm();
    } catch (const SolveFailure& e) {
      row.iterations = e.report().iterations;
      row.u_end = e.report().u.back();
      row.failure = e.what();
    } catch (const Error& e) {
      row.u_end = Vec::Constant(P.n, std::nan(""));
      row.failure = e.what();
    }
    if (!row.converged) {
      row.err_inf = std::nan("");
      row.err_boundary = std::nan("");
    }
    return row;
  };

  if (parallel) {
    std::vector<std::future<SweepRow>> pending;
    pending.reserve(eps_list.size());
    for (double e : eps_list) pending.push_back(std::async(std::launch::async, run_one, e));
    for (auto& f : pending) result.rows.push_back(f.get());
  } else {
    for (double e : eps_list) result.rows.push_back(run_one(e));
  }

  std::vector<std::pair<double, double>> samples;
  for (const auto& row : result.rows)
    if (row.converged && row.err_inf > 0.0) samples.emplace_back(row.eps, row.err_inf);
  if (samples.size() >= 3) result.fit = rate_fit(samples);
  return result;
}

inline std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

/// x,u_1..u_n,v_1..v_n
inline void write_solution_csv(std::ostream& os, const SolveReport& r) {
  const int n = r.u.dim();
  os << "x";
  for (int k = 1; k <= n; ++k) os << ",u_" << k;
  for (int k = 1; k <= n; ++k) os << ",v_" << k;
  os << '\n';
  for (int i = 0; i <= r.u.N(); ++i) {
    os << format_real(r.u.node(i));
    for (int k = 0; k < n; ++k) os << ',' << format_real(r.u[i](k));
    for (int k = 0; k < n; ++k) os << ',' << format_real(r.v[i](k));
    os << '\n';
  }
}

/// Rows, then '#' trailer lines: the rate fit and, if requested, u_eps(1) - u0(1) over -eps/(2 pi).
inline void write_sweep_csv(std::ostream& os, const SweepResult& s, int n, bool boundary_ratio) {
  os << "eps,N,iterations,converged,err_inf,err_boundary";
  for (int k = 1; k <= n; ++k) os << ",u_end_" << k;
  os << '\n';
  for (const auto& row : s.rows) {
    os << format_real(row.eps) << ',' << row.N << ',' << row.iterations << ',' << (row.converged ? 1 : 0) << ','
       << format_real(row.err_inf) << ',' << format_real(row.err_boundary);
    for (int k = 0; k < n; ++k) os << ',' << format_real(row.u_end.size() == n ? row.u_end(k) : std::nan(""));
    os << '\n';
  }
  if (s.fit) {
    os << "# rate_fit p=" << format_real(s.fit->p) << " C=" << format_real(s.fit->C)
       << " r2=" << format_real(s.fit->r2) << " samples=" << s.fit->samples.size() << '\n';
  } else {
    os << "# rate_fit unavailable (fewer than 3 converged rows with positive error)\n";
  }
  if (boundary_ratio) {
    const double u0_end = s.homogenized.u.back()(0);
    for (const auto& row : s.rows) {
      if (!row.converged) continue;
      const double ratio = (row.u_end(0) - u0_end) / (-row.eps / (2.0 * std::numbers::pi));
      os << "# boundary_ratio eps=" << format_real(row.eps) << " ratio=" << format_real(ratio) << '\n';
    }
  }
}

}  // namespace qhom
