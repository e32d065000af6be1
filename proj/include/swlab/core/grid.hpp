#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>

#include "swlab/core/errors.hpp"

namespace swlab {

template <std::size_t D>
using Point = std::array<double, D>;

template <std::size_t D>
using Index = std::array<std::size_t, D>;

template <std::size_t D>
double norm(const Point<D>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

template <std::size_t D>
double distance(const Point<D>& a, const Point<D>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < D; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Volume of the unit ball in R^d.
inline double unit_ball_volume(std::size_t d) {
  const double half = 0.5 * static_cast<double>(d);
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

/// Cell-centered tensor grid on a box. Point i along an axis sits at
/// lo + (i + 1/2) h, so n cells tile [lo, hi] exactly. Flat indices are
/// row-major with axis 0 slowest.
template <std::size_t D>
class Grid {
  static_assert(D >= 1 && D <= 3, "grids support dimensions 1 to 3");

 public:
  static constexpr std::size_t dim = D;

  Grid() = default;

  Grid(const Point<D>& lo, const Point<D>& hi, const Index<D>& n) : lo_(lo), hi_(hi), n_(n) {
    for (std::size_t a = 0; a < D; ++a) {
      if (!(hi_[a] > lo_[a])) throw ConfigurationError("grid axis " + std::to_string(a) + " has empty extent");
      if (n_[a] == 0) throw ConfigurationError("grid axis " + std::to_string(a) + " has zero cells");
      h_[a] = (hi_[a] - lo_[a]) / static_cast<double>(n_[a]);
    }
    size_ = 1;
    for (std::size_t a = D; a-- > 0;) {
      stride_[a] = size_;
      size_ *= n_[a];
    }
  }

  // Cell count per axis is round((hi - lo) / h); the stored spacing is then
  // (hi - lo) / n, which may differ from h by less than half a cell.
  static Grid with_spacing(const Point<D>& lo, const Point<D>& hi, const Point<D>& h) {
    Index<D> n{};
    for (std::size_t a = 0; a < D; ++a) {
      if (!(h[a] > 0.0)) throw ConfigurationError("grid spacing must be positive");
      const double cells = (hi[a] - lo[a]) / h[a];
      n[a] = static_cast<std::size_t>(std::max(1.0, std::round(cells)));
    }
    return Grid(lo, hi, n);
  }

  static Grid cube(double lo, double hi, std::size_t n) {
    Point<D> l{}, u{};
    Index<D> c{};
    l.fill(lo);
    u.fill(hi);
    c.fill(n);
    return Grid(l, u, c);
  }

  const Point<D>& lo() const noexcept { return lo_; }
  const Point<D>& hi() const noexcept { return hi_; }
  const Point<D>& spacing() const noexcept { return h_; }
  const Index<D>& counts() const noexcept { return n_; }
  double spacing(std::size_t a) const noexcept { return h_[a]; }
  std::size_t count(std::size_t a) const noexcept { return n_[a]; }
  std::size_t size() const noexcept { return size_; }
  std::size_t stride(std::size_t a) const noexcept { return stride_[a]; }

  double cell_volume() const noexcept {
    double v = 1.0;
    for (double h : h_) v *= h;
    return v;
  }
  double min_spacing() const noexcept { return *std::min_element(h_.begin(), h_.end()); }
  double max_spacing() const noexcept { return *std::max_element(h_.begin(), h_.end()); }
  double min_side() const noexcept {
    double s = hi_[0] - lo_[0];
    for (std::size_t a = 1; a < D; ++a) s = std::min(s, hi_[a] - lo_[a]);
    return s;
  }
  double diameter() const noexcept { return distance<D>(lo_, hi_); }
  // Length of a cell diagonal.
  double cell_diagonal() const noexcept {
    double s = 0.0;
    for (double h : h_) s += h * h;
    return std::sqrt(s);
  }

  Index<D> unravel(std::size_t flat) const noexcept {
    Index<D> idx{};
    for (std::size_t a = 0; a < D; ++a) {
      idx[a] = flat / stride_[a];
      flat -= idx[a] * stride_[a];
    }
    return idx;
  }

  std::size_t ravel(const Index<D>& idx) const noexcept {
    std::size_t f = 0;
    for (std::size_t a = 0; a < D; ++a) f += idx[a] * stride_[a];
    return f;
  }

  double coordinate(std::size_t a, std::size_t i) const noexcept {
    return lo_[a] + (static_cast<double>(i) + 0.5) * h_[a];
  }

  Point<D> point(const Index<D>& idx) const noexcept {
    Point<D> p{};
    for (std::size_t a = 0; a < D; ++a) p[a] = coordinate(a, idx[a]);
    return p;
  }

  Point<D> point(std::size_t flat) const noexcept { return point(unravel(flat)); }

  bool contains(const Point<D>& x) const noexcept {
    for (std::size_t a = 0; a < D; ++a)
      if (x[a] < lo_[a] || x[a] > hi_[a]) return false;
    return true;
  }

  // Distance from x to the box boundary (negative outside).
  double depth(const Point<D>& x) const noexcept {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < D; ++a) d = std::min({d, x[a] - lo_[a], hi_[a] - x[a]});
    return d;
  }

  // Index of the cell containing x, clamped to the grid.
  Index<D> locate(const Point<D>& x) const noexcept {
    Index<D> idx{};
    for (std::size_t a = 0; a < D; ++a) {
      const double s = std::floor((x[a] - lo_[a]) / h_[a]);
      idx[a] = static_cast<std::size_t>(std::clamp(s, 0.0, static_cast<double>(n_[a] - 1)));
    }
    return idx;
  }

  std::size_t nearest(const Point<D>& x) const noexcept { return ravel(locate(x)); }

  bool on_boundary_layer(const Index<D>& idx) const noexcept {
    for (std::size_t a = 0; a < D; ++a)
      if (idx[a] == 0 || idx[a] + 1 == n_[a]) return true;
    return false;
  }

  // Same box with every axis refined by an integer factor.
  Grid refined(std::size_t factor) const {
    Index<D> n = n_;
    for (auto& v : n) v *= factor;
    return Grid(lo_, hi_, n);
  }

  bool operator==(const Grid& o) const noexcept { return lo_ == o.lo_ && hi_ == o.hi_ && n_ == o.n_; }

 private:
  Point<D> lo_{};
  Point<D> hi_{};
  Point<D> h_{};
  Index<D> n_{};
  Index<D> stride_{};
  std::size_t size_ = 0;
};

// Visits every cell whose center lies in the box [lo, hi].
// fn receives (flat index, Index).
template <std::size_t D, class Fn>
void for_each_cell_in_box(const Grid<D>& g, const Point<D>& lo, const Point<D>& hi, Fn&& fn) {
  Index<D> a{}, b{};
  for (std::size_t ax = 0; ax < D; ++ax) {
    const double h = g.spacing(ax);
    const double s0 = std::ceil((lo[ax] - g.lo()[ax]) / h - 0.5);
    const double s1 = std::floor((hi[ax] - g.lo()[ax]) / h - 0.5);
    if (s1 < 0.0 || s0 > static_cast<double>(g.count(ax) - 1) || s1 < s0) return;
    a[ax] = static_cast<std::size_t>(std::max(0.0, s0));
    b[ax] = static_cast<std::size_t>(std::min(static_cast<double>(g.count(ax) - 1), s1));
  }
  Index<D> idx = a;
  while (true) {
    fn(g.ravel(idx), idx);
    std::size_t ax = D;
    while (ax-- > 0) {
      if (idx[ax] < b[ax]) {
        ++idx[ax];
        break;
      }
      idx[ax] = a[ax];
      if (ax == 0) return;
    }
  }
}

}  // namespace swlab
