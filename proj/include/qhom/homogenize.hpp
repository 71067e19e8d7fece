#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "monotone.hpp"
#include "problem.hpp"

namespace qhom {

inline constexpr int kDefaultCellNodes = 128;

inline void require_cell_nodes(int K) {
  if (K < 2) throw Error(ErrorKind::InvalidArgument, "cell quadrature needs K >= 2");
}

/// b0(x, u, v) = int_0^1 b(x, y, u, v) dy by the periodic trapezoid rule on K nodes.
inline Vec average_b0(const ProblemSpec& P, double x, const Vec& u, const Vec& v, int K = kDefaultCellNodes,
                      const InversionConfig& cfg = {}) {
  require_cell_nodes(K);
  Vec sum = zero_vec(P.n);
  std::optional<Vec> warm;
  for (int k = 0; k < K; ++k) {
    warm = invert_flux(P, x, static_cast<double>(k) / K, u, v, cfg, warm);
    sum += *warm;
  }
  return sum / K;
}

/// Homogenized coefficients and their first derivatives at one (x, u, v), v being the flux argument.
struct CellLinearization {
  Vec b0;
  Vec f0;
  Mat db0_du;
  Mat db0_dv;
  Mat df0_du;
  Mat df0_dv;
};

/// Homogenized coefficients of a problem:
///   b0(x,u,v) = int b dy,   a0(x,u,.) = b0(x,u,.)^{-1},   f0(x,u,v) = int f(x,y,u,b(x,y,u,v)) dy.
///
/// Everything is evaluated on demand by cell quadrature; nothing is tabulated. The derivative
/// evaluators use the closed cell-average formulas
///   d_v b0 = int (d_p a)^{-1},            d_u b0 = -int (d_p a)^{-1} d_u a,
///   d_v f0 = int d_p f (d_p a)^{-1},      d_u f0 = int (d_u f - d_p f (d_p a)^{-1} d_u a),
///   d_p a0 = (d_v b0)^{-1},               d_u a0 = -(d_v b0)^{-1} d_u b0,
/// with every integrand taken at the cell-resolved slope p(y) = b(x, y, u, v).
class HomogenizedCoefficients {
 public:
  explicit HomogenizedCoefficients(ProblemSpec P, int K = kDefaultCellNodes, InversionConfig cfg = {})
      : problem_(std::make_shared<const ProblemSpec>(std::move(P))), K_(K), cfg_(cfg) {
    problem_->validate();
    require_cell_nodes(K_);
    cfg_.validate();
  }

  const ProblemSpec& problem() const { return *problem_; }
  int dim() const { return problem_->n; }
  int cell_nodes() const { return K_; }
  const InversionConfig& inversion() const { return cfg_; }

  /// Monotonicity and Lipschitz constants inherited by a0.
  double m0() const { return std::pow(problem_->m, 3) / (problem_->M * problem_->M); }
  double M0() const { return problem_->M * problem_->M / problem_->m; }

  Vec b0(double x, const Vec& u, const Vec& v) const { return average_b0(*problem_, x, u, v, K_, cfg_); }

  std::pair<Vec, Vec> b0_f0(double x, const Vec& u, const Vec& v) const {
    const ProblemSpec& P = *problem_;
    Vec sb = zero_vec(P.n);
    Vec sf = zero_vec(P.n);
    std::optional<Vec> warm;
    for (int k = 0; k < K_; ++k) {
      const double y = static_cast<double>(k) / K_;
      warm = invert_flux(P, x, y, u, v, cfg_, warm);
      sb += *warm;
      sf += P.f(x, y, u, *warm);
    }
    return {sb / K_, sf / K_};
  }

  Vec f0(double x, const Vec& u, const Vec& v) const { return b0_f0(x, u, v).second; }

  CellLinearization linearize(double x, const Vec& u, const Vec& v) const {
    const ProblemSpec& P = *problem_;
    const int n = P.n;
    CellLinearization out{zero_vec(n), zero_vec(n), zero_mat(n), zero_mat(n), zero_mat(n), zero_mat(n)};
    std::optional<Vec> warm;
    for (int k = 0; k < K_; ++k) {
      const double y = static_cast<double>(k) / K_;
      warm = invert_flux(P, x, y, u, v, cfg_, warm);
      const Vec& p = *warm;
      const Mat Jinv = inverse_small(P.da_dp(x, y, u, p));
      const Mat Au = P.da_du(x, y, u, p);
      const Mat Fp = P.df_dp(x, y, u, p);
      out.b0 += p;
      out.f0 += P.f(x, y, u, p);
      out.db0_dv += Jinv;
      out.db0_du -= Jinv * Au;
      out.df0_dv += Fp * Jinv;
      out.df0_du += P.df_du(x, y, u, p) - Fp * Jinv * Au;
    }
    const double w = 1.0 / K_;
    out.b0 *= w;
    out.f0 *= w;
    out.db0_du *= w;
    out.db0_dv *= w;
    out.df0_du *= w;
    out.df0_dv *= w;
    return out;
  }

  Mat db0_dv(double x, const Vec& u, const Vec& v) const {
    const ProblemSpec& P = *problem_;
    Mat sum = zero_mat(P.n);
    std::optional<Vec> warm;
    for (int k = 0; k < K_; ++k) {
      const double y = static_cast<double>(k) / K_;
      warm = invert_flux(P, x, y, u, v, cfg_, warm);
      sum += inverse_small(P.da_dp(x, y, u, *warm));
    }
    return sum / K_;
  }

  /// a0(x, u, p): inverts b0(x, u, .) with the constants m/M^2 and 1/m that b0 inherits from b.
  Vec a0(double x, const Vec& u, const Vec& p) const {
    const ProblemSpec& P = *problem_;
    require_in_ball(P, u);
    require_dim(P, p, "p");
    InversionConfig outer = cfg_;
    outer.tol = 10.0 * cfg_.tol * (1.0 + p.norm());
    return solve_strongly_monotone([&](const Vec& v) { return b0(x, u, v); },
                                   [&](const Vec& v) { return db0_dv(x, u, v); }, p, zero_vec(P.n),
                                   P.m / (P.M * P.M), 1.0 / P.m, outer);
  }

  Mat da0_dp(double x, const Vec& u, const Vec& p) const {
    return inverse_small(db0_dv(x, u, a0(x, u, p)));
  }

  Mat da0_du(double x, const Vec& u, const Vec& p) const {
    const CellLinearization c = linearize(x, u, a0(x, u, p));
    return -solve_small(c.db0_dv, c.db0_du);
  }

  Mat df0_du(double x, const Vec& u, const Vec& v) const { return linearize(x, u, v).df0_du; }
  Mat df0_dv(double x, const Vec& u, const Vec& v) const { return linearize(x, u, v).df0_dv; }

 private:
  std::shared_ptr<const ProblemSpec> problem_;
  int K_;
  InversionConfig cfg_;
};

inline HomogenizedCoefficients build_homogenized(const ProblemSpec& P, int K = kDefaultCellNodes,
                                                 const InversionConfig& cfg = {}) {
  return HomogenizedCoefficients(P, K, cfg);
}

/// |b0 at K nodes - b0 at 2K nodes|: a cheap self-check of the cell quadrature.
inline double cell_quadrature_drift(const ProblemSpec& P, double x, const Vec& u, const Vec& v,
                                    int K = kDefaultCellNodes, const InversionConfig& cfg = {}) {
  return (average_b0(P, x, u, v, K, cfg) - average_b0(P, x, u, v, 2 * K, cfg)).norm();
}

using CellMatrix = std::function<Mat(double y)>;
using CellVector = std::function<Vec(double y)>;

/// Homogenized data of an affine problem a = A p + abar, f = F p + fbar.
struct AffineHomogenized {
  Mat A0;     ///< (int A^{-1})^{-1}
  Vec abar0;  ///< A0 int A^{-1} abar
  Mat F0;     ///< int F A^{-1}
  Vec fbar0;  ///< int (fbar - F A^{-1} abar)
};

inline AffineHomogenized linear_homogenize(const CellMatrix& A, const CellVector& abar, const CellMatrix& F,
                                           const CellVector& fbar, int K = kDefaultCellNodes) {
  require_cell_nodes(K);
  const Mat A_first = A(0.0);
  const int n = static_cast<int>(A_first.rows());
  Mat sum_inv = zero_mat(n);
  Vec sum_inv_abar = zero_vec(n);
  Mat sum_F_inv = zero_mat(n);
  Vec sum_f = zero_vec(n);
  for (int k = 0; k < K; ++k) {
    const double y = static_cast<double>(k) / K;
    const Mat Ainv = inverse_small(k == 0 ? A_first : A(y), ErrorKind::SingularCoefficient);
    const Vec ab = abar(y);
    const Mat FAinv = F(y) * Ainv;
    sum_inv += Ainv;
    sum_inv_abar += Ainv * ab;
    sum_F_inv += FAinv;
    sum_f += fbar(y) - FAinv * ab;
  }
  AffineHomogenized out;
  out.A0 = inverse_small(sum_inv / K, ErrorKind::SingularCoefficient);
  out.abar0 = out.A0 * (sum_inv_abar / K);
  out.F0 = sum_F_inv / K;
  out.fbar0 = sum_f / K;
  return out;
}

/// Mean-zero, 1-periodic cell corrector w(y) with w'(y) = b(x, y, u, vbar) - b0(x, u, vbar).
///
/// The K samples of w' are expanded in their trigonometric interpolant, which is integrated
/// term by term; the result is exact at the nodes for band-limited data and spectrally
/// accurate otherwise.
class CellCorrector {
 public:
  CellCorrector(std::vector<Vec> slope_samples, Vec b0)
      : samples_(std::move(slope_samples)), b0_(std::move(b0)) {
    const int K = static_cast<int>(samples_.size());
    const int n = static_cast<int>(b0_.size());
    const int kmax = K / 2;
    cos_.assign(static_cast<std::size_t>(kmax) + 1, zero_vec(n));
    sin_.assign(static_cast<std::size_t>(kmax) + 1, zero_vec(n));
    for (int k = 1; k <= kmax; ++k) {
      const bool nyquist = (2 * k == K);
      const double scale = (nyquist ? 1.0 : 2.0) / K;
      for (int j = 0; j < K; ++j) {
        const double phase = 2.0 * std::numbers::pi * k * j / K;
        const Vec g = samples_[j] - b0_;
        cos_[k] += scale * std::cos(phase) * g;
        if (!nyquist) sin_[k] += scale * std::sin(phase) * g;
      }
    }
  }

  Vec operator()(double y) const {
    Vec w = zero_vec(static_cast<int>(b0_.size()));
    for (std::size_t k = 1; k < cos_.size(); ++k) {
      const double omega = 2.0 * std::numbers::pi * static_cast<double>(k);
      w += (cos_[k] * std::sin(omega * y) - sin_[k] * std::cos(omega * y)) / omega;
    }
    return w;
  }

  /// d w / dy; at the nodes y_j = j/K it equals the sampled b - b0.
  Vec derivative(double y) const {
    Vec g = zero_vec(static_cast<int>(b0_.size()));
    for (std::size_t k = 1; k < cos_.size(); ++k) {
      const double omega = 2.0 * std::numbers::pi * static_cast<double>(k);
      g += cos_[k] * std::cos(omega * y) + sin_[k] * std::sin(omega * y);
    }
    return g;
  }

  int cell_nodes() const { return static_cast<int>(samples_.size()); }
  const Vec& b0() const { return b0_; }
  const std::vector<Vec>& slope_samples() const { return samples_; }

 private:
  std::vector<Vec> samples_;
  Vec b0_;
  std::vector<Vec> cos_;
  std::vector<Vec> sin_;
};

inline CellCorrector corrector_w(const ProblemSpec& P, double x, const Vec& u, const Vec& vbar,
                                 int K = kDefaultCellNodes, const InversionConfig& cfg = {}) {
  require_cell_nodes(K);
  std::vector<Vec> slopes;
  slopes.reserve(static_cast<std::size_t>(K));
  Vec sum = zero_vec(P.n);
  std::optional<Vec> warm;
  for (int k = 0; k < K; ++k) {
    warm = invert_flux(P, x, static_cast<double>(k) / K, u, vbar, cfg, warm);
    slopes.push_back(*warm);
    sum += *warm;
  }
  return CellCorrector(std::move(slopes), sum / K);
}

/// a0 at p = b0(x, u, v_target) through the cell-problem route
///   a0(x, u, p) = int a(x, y, u, p + w'(y)) dy,
/// which must reproduce v_target.
inline Vec a0_dual(const ProblemSpec& P, double x, const Vec& u, const Vec& v_target, int K = kDefaultCellNodes,
                   const InversionConfig& cfg = {}) {
  const CellCorrector w = corrector_w(P, x, u, v_target, K, cfg);
  Vec sum = zero_vec(P.n);
  for (int k = 0; k < K; ++k) {
    const double y = static_cast<double>(k) / K;
    sum += P.a(x, y, u, w.b0() + w.derivative(y));
  }
  return sum / K;
}

}  // namespace qhom
