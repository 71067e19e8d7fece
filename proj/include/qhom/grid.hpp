#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace qhom {

/// R^n-valued function sampled at the nodes x_i = i/N of a uniform grid on [0, 1].
class GridFunction {
 public:
  GridFunction() = default;

  explicit GridFunction(std::vector<Vec> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw Error(ErrorKind::InvalidArgument, "grid function needs at least two nodes");
    const auto n = values_.front().size();
    for (const auto& v : values_) {
      if (v.size() != n) throw Error(ErrorKind::DimensionError, "grid function values differ in dimension");
      if (!v.allFinite()) throw Error(ErrorKind::InvalidArgument, "grid function has non-finite values");
    }
  }

  template <class Fn>
  static GridFunction sample(int N, Fn&& fn) {
    std::vector<Vec> values;
    values.reserve(static_cast<std::size_t>(N) + 1);
    for (int i = 0; i <= N; ++i) values.push_back(fn(static_cast<double>(i) / N));
    return GridFunction(std::move(values));
  }

  static GridFunction zeros(int N, int n) { return GridFunction(std::vector<Vec>(N + 1, zero_vec(n))); }

  int N() const { return static_cast<int>(values_.size()) - 1; }
  int dim() const { return values_.empty() ? 0 : static_cast<int>(values_.front().size()); }
  double node(int i) const { return static_cast<double>(i) / N(); }
  const Vec& operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
  const std::vector<Vec>& values() const { return values_; }
  const Vec& back() const { return values_.back(); }

  double sup_norm() const {
    double s = 0.0;
    for (const auto& v : values_) s = std::max(s, v.norm());
    return s;
  }

  /// Local cubic Lagrange interpolation through the four nearest nodes (linear when N < 3).
  Vec at(double x) const {
    const int N_ = N();
    x = std::clamp(x, 0.0, 1.0);
    const double t = x * N_;
    int k = std::min(static_cast<int>(std::floor(t)), N_ - 1);
    if (N_ < 3) {
      const double s = t - k;
      return (1.0 - s) * values_[k] + s * values_[k + 1];
    }
    // stencil k-1 .. k+2, shifted at the ends
    const int first = std::clamp(k - 1, 0, N_ - 3);
    Vec out = zero_vec(dim());
    for (int j = 0; j < 4; ++j) {
      double w = 1.0;
      for (int l = 0; l < 4; ++l) {
        if (l != j) w *= (t - (first + l)) / static_cast<double>(j - l);
      }
      out += w * values_[first + j];
    }
    return out;
  }

  GridFunction resample(int N_new) const {
    if (N_new == N()) return *this;
    if (N_new > 0 && N() % N_new == 0) {
      const int stride = N() / N_new;
      std::vector<Vec> values;
      values.reserve(static_cast<std::size_t>(N_new) + 1);
      for (int i = 0; i <= N_new; ++i) values.push_back(values_[static_cast<std::size_t>(i * stride)]);
      return GridFunction(std::move(values));
    }
    return sample(N_new, [this](double x) { return at(x); });
  }

 private:
  std::vector<Vec> values_;
};

/// Discrete max-norm distance. Grids of different size are compared on the coarser grid,
/// using the nodal restriction of the finer function (interpolation if the grids are not nested).
inline double sup_distance(const GridFunction& g, const GridFunction& h) {
  if (g.dim() != h.dim()) throw Error(ErrorKind::DimensionError, "sup_distance of functions with different dimension");
  const GridFunction& coarse = g.N() <= h.N() ? g : h;
  const GridFunction fine = (g.N() <= h.N() ? h : g).resample(coarse.N());
  double d = 0.0;
  for (int i = 0; i <= coarse.N(); ++i) d = std::max(d, (coarse[i] - fine[i]).norm());
  return d;
}

}  // namespace qhom
