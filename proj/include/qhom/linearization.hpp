#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "errors.hpp"
#include "quadrature.hpp"
#include "types.hpp"

namespace qhom {

/// Pointwise derivatives at one grid node of
///   b(u, v)          (flux inverse) and
///   g(u, v) = f(u, b(u, v))  (reaction along the solution),
/// i.e. bu = d_u b, bv = d_v b, gu = d_u f + d_p f d_u b, gv = d_p f d_v b.
struct NodeBlocks {
  Mat bu;
  Mat bv;
  Mat gu;
  Mat gv;
};

enum class BoundaryKind { DirichletNatural, NeumannAt1, TwoDirichlet };

/// Derivative of the discrete integral system
///   U(u, v)(x_i)    = u_i - int_0^{x_i} b
///   V(u, v, w)(x_i) = v_i - datum + int_{x_i}^1 g
///   W(u, v)         = int_0^1 b                (two-Dirichlet only)
/// where datum is a constant (natural), a(1, ., u_N, slope) (Neumann) or the unknown w.
/// Unknowns are stacked as [u_0..u_N, v_0..v_N, w].
class Linearization {
 public:
  Linearization(int n, int N, BoundaryKind kind, std::vector<NodeBlocks> blocks, Mat end_du = {})
      : n_(n), N_(N), kind_(kind), blocks_(std::move(blocks)), end_du_(std::move(end_du)), rule_(N) {
    if (blocks_.size() != static_cast<std::size_t>(N) + 1) {
      throw Error(ErrorKind::DimensionError, "need one derivative block per node");
    }
    if (kind_ == BoundaryKind::NeumannAt1 && end_du_.rows() != n_) end_du_ = zero_mat(n_);
  }

  int dim() const { return n_; }
  int N() const { return N_; }
  BoundaryKind kind() const { return kind_; }
  Eigen::Index size() const { return 2 * n_ * (N_ + 1) + (kind_ == BoundaryKind::TwoDirichlet ? n_ : 0); }
  Eigen::Index u_index(int i) const { return static_cast<Eigen::Index>(i) * n_; }
  Eigen::Index v_index(int i) const { return static_cast<Eigen::Index>(N_ + 1 + i) * n_; }
  Eigen::Index w_index() const { return static_cast<Eigen::Index>(2 * (N_ + 1)) * n_; }

  /// The operator itself, I + (integral operator). Dense; meant for moderate N.
  Eigen::MatrixXd dense() const {
    const Eigen::Index S = size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(S, S);
    const auto& totals = rule_.totals();
    std::vector<double> cum(static_cast<std::size_t>(N_) + 1, 0.0);
    for (int i = 0; i <= N_; ++i) {
      if (i > 0) add_interval(cum, i - 1);
      for (int j = 0; j <= N_; ++j) {
        const auto& B = blocks_[static_cast<std::size_t>(j)];
        const double wu = cum[static_cast<std::size_t>(j)];
        const double wv = totals[static_cast<std::size_t>(j)] - wu;
        if (wu != 0.0) {
          J.block(u_index(i), u_index(j), n_, n_) -= wu * B.bu;
          J.block(u_index(i), v_index(j), n_, n_) -= wu * B.bv;
        }
        if (wv != 0.0) {
          J.block(v_index(i), u_index(j), n_, n_) += wv * B.gu;
          J.block(v_index(i), v_index(j), n_, n_) += wv * B.gv;
        }
      }
      add_datum_columns(J, i);
    }
    if (kind_ == BoundaryKind::TwoDirichlet) {
      J.block(w_index(), w_index(), n_, n_).setZero();
      for (int j = 0; j <= N_; ++j) {
        const auto& B = blocks_[static_cast<std::size_t>(j)];
        J.block(w_index(), u_index(j), n_, n_) = totals[static_cast<std::size_t>(j)] * B.bu;
        J.block(w_index(), v_index(j), n_, n_) = totals[static_cast<std::size_t>(j)] * B.bv;
      }
    }
    return J;
  }

  /// Same operator after differencing consecutive rows of U (forward) and V (backward),
  /// which turns the cumulative integrals into local interval rules. Banded apart from the
  /// W row and the w columns.
  Eigen::SparseMatrix<double> differenced() const {
    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(N_ + 1) * static_cast<std::size_t>(n_ * n_) * 20);
    auto add_block = [&](Eigen::Index r, Eigen::Index c, const Mat& B, double s) {
      for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b)
          if (B(a, b) != 0.0) t.emplace_back(r + a, c + b, s * B(a, b));
    };
    auto add_identity = [&](Eigen::Index r, Eigen::Index c, double s) {
      for (int a = 0; a < n_; ++a) t.emplace_back(r + a, c + a, s);
    };

    // U rows: row 0 is u_0; row i is (u_i - u_{i-1}) - int over [x_{i-1}, x_i].
    add_identity(u_index(0), u_index(0), 1.0);
    for (int i = 1; i <= N_; ++i) {
      add_identity(u_index(i), u_index(i), 1.0);
      add_identity(u_index(i), u_index(i - 1), -1.0);
      const IntervalRule& r = rule_.interval(i - 1);
      for (int l = 0; l < r.count; ++l) {
        const int j = r.first + l;
        const auto& B = blocks_[static_cast<std::size_t>(j)];
        add_block(u_index(i), u_index(j), B.bu, -r.w[l]);
        add_block(u_index(i), v_index(j), B.bv, -r.w[l]);
      }
    }
    // V rows: row N carries the boundary datum; row i < N is (v_i - v_{i+1}) + int over [x_i, x_{i+1}].
    add_identity(v_index(N_), v_index(N_), 1.0);
    if (kind_ == BoundaryKind::NeumannAt1) add_block(v_index(N_), u_index(N_), end_du_, -1.0);
    if (kind_ == BoundaryKind::TwoDirichlet) add_identity(v_index(N_), w_index(), -1.0);
    for (int i = 0; i < N_; ++i) {
      add_identity(v_index(i), v_index(i), 1.0);
      add_identity(v_index(i), v_index(i + 1), -1.0);
      const IntervalRule& r = rule_.interval(i);
      for (int l = 0; l < r.count; ++l) {
        const int j = r.first + l;
        const auto& B = blocks_[static_cast<std::size_t>(j)];
        add_block(v_index(i), u_index(j), B.gu, r.w[l]);
        add_block(v_index(i), v_index(j), B.gv, r.w[l]);
      }
    }
    if (kind_ == BoundaryKind::TwoDirichlet) {
      const auto& totals = rule_.totals();
      for (int j = 0; j <= N_; ++j) {
        const auto& B = blocks_[static_cast<std::size_t>(j)];
        add_block(w_index(), u_index(j), B.bu, totals[static_cast<std::size_t>(j)]);
        add_block(w_index(), v_index(j), B.bv, totals[static_cast<std::size_t>(j)]);
      }
    }
    Eigen::SparseMatrix<double> A(size(), size());
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
  }

  /// Applies the row differencing of differenced() to a stacked residual vector.
  Eigen::VectorXd difference_rows(const Eigen::VectorXd& F) const {
    Eigen::VectorXd out = F;
    for (int i = 1; i <= N_; ++i) out.segment(u_index(i), n_) = F.segment(u_index(i), n_) - F.segment(u_index(i - 1), n_);
    for (int i = 0; i < N_; ++i) out.segment(v_index(i), n_) = F.segment(v_index(i), n_) - F.segment(v_index(i + 1), n_);
    return out;
  }

 private:
  void add_interval(std::vector<double>& cum, int k) const {
    const IntervalRule& r = rule_.interval(k);
    for (int l = 0; l < r.count; ++l) cum[static_cast<std::size_t>(r.first + l)] += r.w[l];
  }

  void add_datum_columns(Eigen::MatrixXd& J, int i) const {
    if (kind_ == BoundaryKind::NeumannAt1) J.block(v_index(i), u_index(N_), n_, n_) -= end_du_;
    if (kind_ == BoundaryKind::TwoDirichlet) J.block(v_index(i), w_index(), n_, n_) -= Mat::Identity(n_, n_);
  }

  int n_;
  int N_;
  BoundaryKind kind_;
  std::vector<NodeBlocks> blocks_;
  Mat end_du_;
  CumulativeRule rule_;
};

}  // namespace qhom
