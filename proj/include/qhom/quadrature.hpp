#pragma once

#include <array>
#include <vector>

#include "errors.hpp"

namespace qhom {

/// Weights of one grid interval [x_k, x_{k+1}] over the nodes first .. first+count-1.
struct IntervalRule {
  int first = 0;
  int count = 0;
  std::array<double, 4> w{};
};

/// Cumulative quadrature on the uniform grid x_i = i/N, fourth order.
///
/// Each interval integrates the cubic through the four nearest nodes:
/// h/24 (-1, 13, 13, -1) inside, h/24 (9, 19, -5, 1) and its mirror on the first and last
/// interval. Grids with N < 3 fall back to the trapezoid rule.
class CumulativeRule {
 public:
  explicit CumulativeRule(int N) : N_(N) {
    if (N < 1) throw Error(ErrorKind::InvalidArgument, "grid needs N >= 1");
    const double h = 1.0 / N;
    intervals_.resize(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
      IntervalRule& r = intervals_[static_cast<std::size_t>(k)];
      if (N < 3) {
        r = {k, 2, {h / 2, h / 2, 0.0, 0.0}};
      } else if (k == 0) {
        r = {0, 4, {9 * h / 24, 19 * h / 24, -5 * h / 24, h / 24}};
      } else if (k == N - 1) {
        r = {N - 3, 4, {h / 24, -5 * h / 24, 19 * h / 24, 9 * h / 24}};
      } else {
        r = {k - 1, 4, {-h / 24, 13 * h / 24, 13 * h / 24, -h / 24}};
      }
    }
    totals_.assign(static_cast<std::size_t>(N) + 1, 0.0);
    for (const auto& r : intervals_) {
      for (int j = 0; j < r.count; ++j) totals_[static_cast<std::size_t>(r.first + j)] += r.w[j];
    }
  }

  int N() const { return N_; }
  const IntervalRule& interval(int k) const { return intervals_[static_cast<std::size_t>(k)]; }
  /// Node weights of the full integral over [0, 1].
  const std::vector<double>& totals() const { return totals_; }

  /// Values of int_0^{x_i} g for i = 0..N.
  template <class T>
  std::vector<T> cumulative(const std::vector<T>& g) const {
    if (g.size() != static_cast<std::size_t>(N_) + 1) throw Error(ErrorKind::DimensionError, "samples do not match the grid");
    std::vector<T> out(g.size(), g.front() * 0.0);
    for (int k = 0; k < N_; ++k) {
      const IntervalRule& r = intervals_[static_cast<std::size_t>(k)];
      T piece = g.front() * 0.0;
      for (int j = 0; j < r.count; ++j) piece += r.w[j] * g[static_cast<std::size_t>(r.first + j)];
      out[static_cast<std::size_t>(k) + 1] = out[static_cast<std::size_t>(k)] + piece;
    }
    return out;
  }

  template <class T>
  T integral(const std::vector<T>& g) const {
    T sum = g.front() * 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) sum += totals_[i] * g[i];
    return sum;
  }

 private:
  int N_;
  std::vector<IntervalRule> intervals_;
  std::vector<double> totals_;
};

}  // namespace qhom
