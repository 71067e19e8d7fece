#pragma once

// Command-line front end. Kept in a header so the tests can drive it in-process.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qhom/qhom.hpp"

namespace qhom::cli {

enum ExitCode : int { kOk = 0, kDegenerate = 1, kSolverFailure = 2, kBadArguments = 3 };

struct CommonOptions {
  std::optional<int> N;
  std::string mode = "picard";
  double tol = 1e-10;
  int nodes_per_period = 16;
  std::string out;
};

inline void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--N", o.N, "grid subintervals")->check(CLI::Range(2, 1 << 24));
  cmd.add_option("--mode", o.mode, "picard | frozen")->check(CLI::IsMember({"picard", "frozen"}));
  cmd.add_option("--tol", o.tol, "residual tolerance")->check(CLI::PositiveNumber);
  cmd.add_option("--nodes-per-period", o.nodes_per_period, "grid nodes per oscillation period")
      ->check(CLI::Range(1, 1 << 20));
  cmd.add_option("--out", o.out, "output path (CSV); metadata goes to <out>.json");
}

inline SolverConfig solver_config(const CommonOptions& o, int N) {
  SolverConfig cfg;
  cfg.N = N;
  cfg.picard_tol = o.tol;
  cfg.mode = o.mode == "frozen" ? SolveMode::FrozenJacobian : SolveMode::Picard;
  cfg.nodes_per_period = o.nodes_per_period;
  return cfg;
}

inline std::string mode_name(SolveMode m) { return m == SolveMode::FrozenJacobian ? "frozen" : "picard"; }

inline std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  return std::to_string(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

/// eps as a positive real or the word "homogenized".
inline double parse_eps(const std::string& text) {
  if (text == "homogenized" || text == "hom") return kHomogenized;
  std::size_t used = 0;
  double eps = 0.0;
  try {
    eps = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(eps > 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorKind::InvalidArgument, "eps must be a positive number or 'homogenized', got '" + text + "'");
  }
  return eps;
}

/// Writes `body` to path (or the stream when path is empty) and metadata next to it.
inline void emit(const std::string& path, const std::string& body, const nlohmann::json& meta, std::ostream& out) {
  if (path.empty()) {
    out << body;
    return;
  }
  std::ofstream csv(path);
  if (!csv) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  csv << body;
  std::ofstream side(path + ".json");
  if (!side) throw Error(ErrorKind::InvalidArgument, "cannot write " + path + ".json");
  side << meta.dump(2) << '\n';
}

inline int cmd_solve(const std::string& problem, const std::string& eps_text, const std::string& bc_text,
                     const CommonOptions& o, std::ostream& out, std::ostream& err) {
  ProblemSpec P;
  BoundaryCondition bc;
  double eps = 0.0;
  SolverConfig cfg;
  try {
    P = registry_get(problem);
    bc = parse_boundary(bc_text, P.n);
    eps = parse_eps(eps_text);
    int N = 512;
    if (o.N) N = *o.N;
    else if (!is_homogenized(eps)) N = sweep_grid(eps, o.nodes_per_period);
    cfg = solver_config(o, N);
    cfg.validate();
    if (!is_homogenized(eps)) detail::check_resolution(eps, cfg.N, cfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kBadArguments;
  }

  SolveReport report;
  int code = kOk;
  std::string failure;
  try {
    report = solve_eps(P, eps, bc, cfg);
  } catch (const SolveFailure& e) {
    report = e.report();
    failure = e.what();
    code = kSolverFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::UnresolvedOscillation || e.kind() == ErrorKind::InvalidArgument ? kBadArguments
                                                                                                    : kSolverFailure;
  }

  std::ostringstream csv;
  write_solution_csv(csv, report);
  nlohmann::json meta = {{"command", "solve"},
                         {"problem", problem},
                         {"eps", is_homogenized(eps) ? nlohmann::json("homogenized") : nlohmann::json(eps)},
                         {"bc", bc_text},
                         {"N", cfg.N},
                         {"mode", mode_name(cfg.mode)},
                         {"tol", cfg.picard_tol},
                         {"converged", report.converged},
                         {"iterations", report.iterations},
                         {"final_residual", report.final_residual()},
                         {"created_unix", timestamp()}};
  if (report.w) meta["w"] = std::vector<double>(report.w->data(), report.w->data() + report.w->size());
  if (!failure.empty()) meta["failure"] = failure;
  try {
    emit(o.out, csv.str(), meta, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kBadArguments;
  }
  std::ostream& log = o.out.empty() ? err : out;
  log << "converged=" << (report.converged ? "true" : "false") << " iterations=" << report.iterations
      << " residual=" << format_real(report.final_residual()) << '\n';
  if (!failure.empty()) err << "solver stopped: " << failure << '\n';
  return code;
}

inline std::vector<double> default_sweep_eps() {
  std::vector<double> eps;
  for (int k = 4; k <= 9; ++k) eps.push_back(std::ldexp(1.0, -k));
  return eps;
}

inline int cmd_sweep(const std::string& problem, const std::string& bc_text, std::vector<double> eps_list,
                     const CommonOptions& o, std::ostream& out, std::ostream& err) {
  ProblemSpec P;
  BoundaryCondition bc;
  SolverConfig cfg;
  try {
    P = registry_get(problem);
    bc = parse_boundary(bc_text, P.n);
    if (eps_list.empty()) eps_list = default_sweep_eps();
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
      if (!(eps_list[i] > 0.0) || (i > 0 && !(eps_list[i] < eps_list[i - 1])))
        throw Error(ErrorKind::InvalidArgument, "eps list must be positive and strictly decreasing");
    }
    if (o.N) throw Error(ErrorKind::InvalidArgument, "sweep chooses N per eps; use --nodes-per-period");
    cfg = solver_config(o, 2);
    cfg.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kBadArguments;
  }

  SweepResult result;
  try {
    result = run_sweep(P, bc, eps_list, cfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  std::ostringstream csv;
  const bool ratio = problem == "linear-sin" && std::holds_alternative<DirichletNatural>(bc);
  write_sweep_csv(csv, result, P.n, ratio);

  int converged = 0;
  for (const auto& row : result.rows) converged += row.converged ? 1 : 0;
  nlohmann::json meta = {{"command", "sweep"},   {"problem", problem},
                         {"bc", bc_text},        {"eps", eps_list},
                         {"mode", mode_name(cfg.mode)}, {"tol", cfg.picard_tol},
                         {"nodes_per_period", cfg.nodes_per_period},
                         {"homogenized_N", result.homogenized.u.N()},
                         {"converged_rows", converged}, {"created_unix", timestamp()}};
  if (result.fit) meta["rate_fit"] = {{"p", result.fit->p}, {"C", result.fit->C}, {"r2", result.fit->r2}};
  try {
    emit(o.out, csv.str(), meta, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kBadArguments;
  }
  if (!o.out.empty()) {
    out << "eps            N      iter  err_inf        err_boundary\n";
    for (const auto& row : result.rows) {
      char line[160];
      std::snprintf(line, sizeof line, "%-14.6g %-6d %-5d %-14.6e %-14.6e%s\n", row.eps, row.N, row.iterations,
                    row.err_inf, row.err_boundary, row.converged ? "" : "  (not converged)");
      out << line;
    }
    if (result.fit) out << "rate p=" << result.fit->p << " r2=" << result.fit->r2 << '\n';
  }
  for (const auto& row : result.rows)
    if (!row.failure.empty()) err << "eps=" << format_real(row.eps) << ": " << row.failure << '\n';
  return converged >= 3 ? kOk : kSolverFailure;
}

inline int cmd_check(const std::string& problem, const std::string& bc_text, const CommonOptions& o,
                     std::ostream& out, std::ostream& err) {
  ProblemSpec P;
  BoundaryCondition bc;
  SolverConfig cfg;
  try {
    P = registry_get(problem);
    bc = parse_boundary(bc_text, P.n);
    cfg = solver_config(o, o.N.value_or(64));
    cfg.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kBadArguments;
  }
  try {
    const HomogenizedCoefficients H(P, cfg.cell_nodes, cfg.inversion);
    const SolveReport hom = solve_homogenized(H, bc, cfg);
    const NondegeneracyResult nd = check_nondegenerate(P, H, hom.u, hom.v, bc, cfg.N);
    const bool sufficient = sufficient_condition(P, H, hom.u, hom.v, cfg.N);
    out << "problem=" << problem << " bc=" << bc_text << " N=" << cfg.N << '\n'
        << "sigma_min=" << format_real(nd.sigma_min) << " sigma_min(2N)=" << format_real(nd.sigma_refined) << '\n'
        << "nondegenerate=" << (nd.pass ? "true" : "false") << '\n'
        << "sufficient_condition=" << (sufficient ? "true" : "false") << '\n';
    if (!o.out.empty()) {
      const nlohmann::json meta = {{"command", "check"}, {"problem", problem},      {"bc", bc_text},
                                   {"N", cfg.N},         {"sigma_min", nd.sigma_min}, {"sigma_min_2N", nd.sigma_refined},
                                   {"nondegenerate", nd.pass}, {"sufficient_condition", sufficient}};
      std::ofstream f(o.out);
      f << meta.dump(2) << '\n';
    }
    return nd.pass ? kOk : kDegenerate;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
}

/// Parses argv and dispatches. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Periodic homogenization of quasilinear ODE boundary value problems"};
  app.require_subcommand(1);

  CommonOptions solve_opts, sweep_opts, check_opts;
  std::string solve_problem, solve_eps_text, solve_bc;
  auto* solve = app.add_subcommand("solve", "solve one eps-problem or the homogenized problem");
  solve->add_option("problem", solve_problem, "registry name")->required();
  solve->add_option("eps", solve_eps_text, "period, or 'homogenized'")->required();
  solve->add_option("bc", solve_bc, "dn | dn:c1,.. | neumann:c1,.. | dd")->required();
  add_common(*solve, solve_opts);

  std::string sweep_problem, sweep_bc;
  std::vector<double> sweep_eps;
  auto* sweep = app.add_subcommand("sweep", "eps-sweep against the homogenized solution");
  sweep->add_option("problem", sweep_problem, "registry name")->required();
  sweep->add_option("bc", sweep_bc, "dn | dn:c1,.. | neumann:c1,.. | dd")->required();
  sweep->add_option("--eps", sweep_eps, "strictly decreasing list (default 2^-4 .. 2^-9)")->delimiter(',');
  add_common(*sweep, sweep_opts);

  std::string check_problem, check_bc;
  auto* check = app.add_subcommand("check", "nondegeneracy of the homogenized solution");
  check->add_option("problem", check_problem, "registry name")->required();
  check->add_option("bc", check_bc, "dn | dn:c1,.. | neumann:c1,.. | dd")->required();
  add_common(*check, check_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << '\n';
    return kBadArguments;
  }

  if (*solve) return cmd_solve(solve_problem, solve_eps_text, solve_bc, solve_opts, out, err);
  if (*sweep) return cmd_sweep(sweep_problem, sweep_bc, sweep_eps, sweep_opts, out, err);
  return cmd_check(check_problem, check_bc, check_opts, out, err);
}

}  // namespace qhom::cli
