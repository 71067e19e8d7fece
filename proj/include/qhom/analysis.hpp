#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bvp.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "homogenize.hpp"
#include "linalg.hpp"
#include "linearization.hpp"

namespace qhom {

/// Smallest singular value of a dense matrix.
inline double smallest_singular_value(const Eigen::MatrixXd& J) {
  if (J.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty matrix");
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(J);
  return svd.singularValues().minCoeff();
}

/// The dense operator in grid-L2 coordinates: nodal values weighted by sqrt(1/N), the extra unknown w
/// (two-Dirichlet) unweighted. Without this the w row and column shrink with the mesh.
inline Eigen::MatrixXd l2_scaled(const Linearization& lin) {
  Eigen::MatrixXd J = lin.dense();
  if (lin.kind() != BoundaryKind::TwoDirichlet) return J;
  const double s = std::sqrt(1.0 / lin.N());
  const Eigen::Index w = lin.w_index();
  const Eigen::Index n = lin.dim();
  J.bottomLeftCorner(n, w) /= s;
  J.topRightCorner(w, n) *= s;
  return J;
}

struct NondegeneracyResult {
  double sigma_min = 0.0;      ///< on the N-grid
  double sigma_refined = 0.0;  ///< on the 2N-grid
  bool pass = false;
};

inline constexpr double kSigmaThreshold = 1e-6;
inline constexpr double kSigmaStability = 0.2;

/// Smallest singular value of the linearized homogenized integral system at (u0, v0), on N and 2N grids.
/// Passes iff it exceeds kSigmaThreshold and moves by less than 20% under refinement.
inline NondegeneracyResult check_nondegenerate(const ProblemSpec& P, const HomogenizedCoefficients& H,
                                               const GridFunction& u0, const GridFunction& v0,
                                               const BoundaryCondition& bc, int N) {
  if (H.dim() != P.n) throw Error(ErrorKind::DimensionError, "coefficients built for another dimension");
  if (N < 2) throw Error(ErrorKind::InvalidArgument, "check_nondegenerate needs N >= 2");
  auto sigma = [&](int n_grid) {
    return smallest_singular_value(
        l2_scaled(linearize_homogenized(H, bc, u0.resample(n_grid), v0.resample(n_grid))));
  };
  NondegeneracyResult r;
  r.sigma_min = sigma(N);
  r.sigma_refined = sigma(2 * N);
  const double change = std::abs(r.sigma_refined - r.sigma_min) / std::max(r.sigma_min, r.sigma_refined);
  r.pass = r.sigma_min > kSigmaThreshold && r.sigma_refined > kSigmaThreshold && change < kSigmaStability;
  return r;
}

/// Homogenized derivatives in the slope variable p = u' at (x, u, v), v = a0(x, u, p).
struct SlopeDerivatives {
  Mat da0_du;
  Mat df0_du;  ///< at fixed slope
  Mat df0_dp;
};

inline SlopeDerivatives slope_derivatives(const HomogenizedCoefficients& H, double x, const Vec& u, const Vec& v) {
  const CellLinearization c = H.linearize(x, u, v);
  const Mat da0_dp = inverse_small(c.db0_dv);
  const Mat da0_du = -da0_dp * c.db0_du;
  return {da0_du, c.df0_du + c.df0_dv * da0_du, c.df0_dv * da0_dp};
}

/// One concrete sufficient condition for nondegeneracy: at every sampled node
///   lambda_min(sym d_p f0) > |d_u a0| + |d_u f0|   (spectral norms).
inline bool sufficient_condition(const ProblemSpec& P, const HomogenizedCoefficients& H, const GridFunction& u0,
                                 const GridFunction& v0, int N_samples) {
  if (H.dim() != P.n || u0.dim() != P.n || v0.dim() != P.n) return false;
  const int S = std::max(N_samples, 1);
  for (int s = 0; s <= S; ++s) {
    const double x = static_cast<double>(s) / S;
    const SlopeDerivatives d = slope_derivatives(H, x, u0.at(x), v0.at(x));
    if (!(lambda_min_sym(d.df0_dp) > spectral_norm(d.da0_du) + spectral_norm(d.df0_du))) return false;
  }
  return true;
}

using CellField = std::function<Vec(double x, double y)>;

struct OscillationGap {
  double lhs = 0.0;
  double bound = 0.0;
  double g_sup = 0.0;      ///< sampled |g|_*
  double dgdx_sup = 0.0;   ///< sampled |d_x g|_*, 0 if not supplied
  double modulus = 0.0;    ///< sampled omega_g(eps), 0 if d_x g was supplied
};

namespace detail {

inline constexpr std::array<double, 8> kGaussNodes = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                                      -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                                      0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGaussWeights = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                                        0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                                        0.2223810344533745, 0.1012285362903763};

template <class Fn>
Vec gauss_panels(const Fn& h, double x, int panels, int n) {
  Vec sum = zero_vec(n);
  const double width = x / panels;
  for (int k = 0; k < panels; ++k) {
    const double mid = (k + 0.5) * width;
    for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
      sum += (0.5 * width * kGaussWeights[q]) * h(mid + 0.5 * width * kGaussNodes[q]);
    }
  }
  return sum;
}

}  // namespace detail

/// |int_0^x (g(y, y/eps) - int_0^1 g(y, z) dz) dy| against the oscillation-lemma bound
///   2 eps (|g|_* + |d_x g|_*)     if d_x g is supplied,
///   2 (omega_g(eps) + eps |g|_*)  otherwise,
/// with the sup-quantities estimated by sampling. K is the cell quadrature for the average in z.
inline OscillationGap oscillation_gap(const CellField& g, const std::optional<CellField>& dgdx, double eps, double x,
                                      int K = kDefaultCellNodes) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorKind::InvalidArgument, "x must lie in [0, 1]");
  require_cell_nodes(K);
  const int n = static_cast<int>(g(0.0, 0.0).size());
  OscillationGap out;

  auto average = [&](double y) {
    Vec s = zero_vec(n);
    for (int k = 0; k < K; ++k) s += g(y, static_cast<double>(k) / K);
    return Vec(s / K);
  };
  if (x > 0.0) {
    const int panels = std::max(1, static_cast<int>(std::ceil(4.0 * x / eps)));
    const Vec oscillating = detail::gauss_panels([&](double y) { return g(y, y / eps); }, x, panels, n);
    const Vec smooth = detail::gauss_panels(average, x, 16, n);
    out.lhs = (oscillating - smooth).norm();
  }

  // Sampling lattice: x-spacing fine enough to see eps, y over one period.
  const int nx = std::clamp(static_cast<int>(std::ceil(8.0 / eps)), 256, 4096);
  const int ny = 64;
  std::vector<std::vector<Vec>> values(static_cast<std::size_t>(nx) + 1);
  for (int i = 0; i <= nx; ++i) {
    auto& row = values[static_cast<std::size_t>(i)];
    row.reserve(ny);
    for (int j = 0; j < ny; ++j) {
      row.push_back(g(static_cast<double>(i) / nx, static_cast<double>(j) / ny));
      out.g_sup = std::max(out.g_sup, row.back().norm());
    }
  }
  if (dgdx) {
    for (int i = 0; i <= nx; ++i)
      for (int j = 0; j < ny; ++j)
        out.dgdx_sup = std::max(out.dgdx_sup, (*dgdx)(static_cast<double>(i) / nx, static_cast<double>(j) / ny).norm());
    out.bound = 2.0 * eps * (out.g_sup + out.dgdx_sup);
  } else {
    const int reach = std::min(nx, static_cast<int>(std::floor(eps * nx + 1e-9)));
    for (int i = 0; i <= nx; ++i)
      for (int k = 1; k <= reach && i + k <= nx; ++k)
        for (int j = 0; j < ny; ++j) {
          const auto a = static_cast<std::size_t>(i);
          const auto b = static_cast<std::size_t>(i + k);
          const auto c = static_cast<std::size_t>(j);
          out.modulus = std::max(out.modulus, (values[a][c] - values[b][c]).norm());
        }
    out.bound = 2.0 * (out.modulus + eps * out.g_sup);
  }
  return out;
}

struct RateFit {
  double p = 0.0;   ///< fitted exponent
  double C = 0.0;   ///< error ~ C eps^p
  double r2 = 0.0;  ///< on the log-log scale
  std::vector<std::pair<double, double>> samples;
};

/// Least-squares line through (log eps, log error).
inline RateFit rate_fit(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw Error(ErrorKind::InvalidSample, "rate_fit needs at least 3 samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto [eps, err] = samples[i];
    if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorKind::InvalidSample, "eps must be positive and finite");
    if (!(err > 0.0) || !std::isfinite(err)) throw Error(ErrorKind::InvalidSample, "errors must be positive and finite");
    if (i > 0 && !(eps < samples[i - 1].first)) throw Error(ErrorKind::InvalidSample, "eps must strictly decrease");
  }
  const double k = static_cast<double>(samples.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [eps, err] : samples) {
    sx += std::log(eps);
    sy += std::log(err);
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [eps, err] : samples) {
    const double dx = std::log(eps) - mx, dy = std::log(err) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  RateFit fit;
  fit.p = sxy / sxx;
  fit.C = std::exp(my - fit.p * mx);
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.samples = samples;
  return fit;
}

/// Discrete version of the frozen-Jacobian error estimate: |w_eps - w0| <= (2 / alpha) |F(w0)|,
/// alpha the smallest singular value of the assembled derivative at w0. Euclidean norms of the stacked nodes.
struct FrozenJacobianBound {
  double alpha = 0.0;
  double residual = 0.0;  ///< |F(w0)|
  double distance = 0.0;  ///< |w_eps - w0|
  double bound() const { return 2.0 / alpha * residual; }
  bool holds() const { return alpha > 0.0 && distance <= bound(); }
};

inline FrozenJacobianBound frozen_jacobian_bound(const ProblemSpec& P, double eps, const BoundaryCondition& bc,
                                                 const GridFunction& u0, const GridFunction& v0,
                                                 const GridFunction& u_eps, const GridFunction& v_eps,
                                                 const SolverConfig& cfg = {}) {
  if (is_two_dirichlet(bc)) throw Error(ErrorKind::InvalidArgument, "frozen_jacobian_bound takes u and v only");
  const int N = u_eps.N();
  const GridFunction u = u0.resample(N), v = v0.resample(N);
  const Linearization lin = linearize_eps(P, eps, bc, u, v, cfg);
  const Residual r = residual_eps(P, eps, bc, u, v, std::nullopt, cfg);
  FrozenJacobianBound out;
  out.alpha = smallest_singular_value(lin.dense());
  out.residual = detail::stack(r, lin.size(), P.n).norm();
  double d2 = 0.0;
  for (int i = 0; i <= N; ++i) d2 += (u_eps[i] - u[i]).squaredNorm() + (v_eps[i] - v[i]).squaredNorm();
  out.distance = std::sqrt(d2);
  return out;
}

}  // namespace qhom
