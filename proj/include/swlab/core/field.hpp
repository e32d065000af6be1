#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "swlab/core/errors.hpp"
#include "swlab/core/grid.hpp"
#include "swlab/core/parallel.hpp"

namespace swlab {

/// Scalar values at the cell centers of a grid.
template <std::size_t D>
class Field {
 public:
  Field() = default;
  explicit Field(Grid<D> g, double fill = 0.0) : grid_(std::move(g)), v_(grid_.size(), fill) {}
  Field(Grid<D> g, std::vector<double> values) : grid_(std::move(g)), v_(std::move(values)) {
    if (v_.size() != grid_.size()) throw ConfigurationError("field size does not match grid");
  }

  template <class Fn>
  static Field sample(const Grid<D>& g, Fn&& fn) {
    Field f(g);
    parallel_for(g.size(), [&](std::size_t i) { f.v_[i] = fn(g.point(i)); });
    return f;
  }

  const Grid<D>& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return v_.size(); }
  double operator[](std::size_t i) const noexcept { return v_[i]; }
  double& operator[](std::size_t i) noexcept { return v_[i]; }
  const std::vector<double>& values() const noexcept { return v_; }
  std::vector<double>& values() noexcept { return v_; }

  double min() const { return *std::min_element(v_.begin(), v_.end()); }
  double max() const { return *std::max_element(v_.begin(), v_.end()); }

  // Multilinear interpolation between cell centers; constant extrapolation
  // outside the outermost centers.
  double interpolate(const Point<D>& x) const noexcept {
    std::array<std::size_t, D> i0{};
    std::array<double, D> t{};
    for (std::size_t a = 0; a < D; ++a) {
      const double s = (x[a] - grid_.lo()[a]) / grid_.spacing(a) - 0.5;
      const double top = static_cast<double>(grid_.count(a) - 1);
      const double c = std::clamp(s, 0.0, top);
      double f = std::floor(c);
      if (f >= top) f = std::max(0.0, top - 1.0);
      i0[a] = static_cast<std::size_t>(f);
      t[a] = grid_.count(a) > 1 ? c - f : 0.0;
    }
    double acc = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << D); ++corner) {
      double w = 1.0;
      std::size_t flat = 0;
      bool valid = true;
      for (std::size_t a = 0; a < D; ++a) {
        const bool up = (corner >> a) & 1U;
        const std::size_t idx = i0[a] + (up ? 1 : 0);
        w *= up ? t[a] : 1.0 - t[a];
        // A single-cell axis has t = 0, so its upper corner carries no weight.
        if (idx >= grid_.count(a)) {
          valid = false;
          break;
        }
        flat += idx * grid_.stride(a);
      }
      if (valid && w != 0.0) acc += w * v_[flat];
    }
    return acc;
  }

 private:
  Grid<D> grid_{};
  std::vector<double> v_{};
};

// Writes "x1,...,xd,<name>" rows in flat order.
template <std::size_t D>
void write_field_csv(const Field<D>& f, const std::string& path, const std::string& name) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot open output file " + path);
  for (std::size_t a = 0; a < D; ++a) out << 'x' << (a + 1) << ',';
  out << name << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto p = f.grid().point(i);
    for (std::size_t a = 0; a < D; ++a) out << p[a] << ',';
    out << f[i] << '\n';
  }
}

// Reads a field written by write_field_csv. Rows may be in any order; the
// grid is reconstructed from the distinct coordinates, which must form a
// uniform cell-centered lattice.
template <std::size_t D>
Field<D> read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("tab", "cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<std::array<double, D + 1>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, D + 1> r{};
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t k = 0; k <= D; ++k) {
      if (!std::getline(ss, cell, ',')) throw ParseError("tab", "row with fewer than " + std::to_string(D + 1) + " columns");
      try {
        r[k] = std::stod(cell);
      } catch (const std::exception&) {
        throw ParseError("tab", "non-numeric entry '" + cell + "'");
      }
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw ParseError("tab", "no data rows in " + path);
  Point<D> lo{}, hi{};
  Index<D> n{};
  std::array<std::vector<double>, D> axes;
  for (std::size_t a = 0; a < D; ++a) {
    for (const auto& r : rows) axes[a].push_back(r[a]);
    std::sort(axes[a].begin(), axes[a].end());
    axes[a].erase(std::unique(axes[a].begin(), axes[a].end(),
                              [](double x, double y) { return std::abs(x - y) <= 1e-9 * (1.0 + std::abs(x)); }),
                  axes[a].end());
    n[a] = axes[a].size();
    const double h = n[a] > 1 ? (axes[a].back() - axes[a].front()) / static_cast<double>(n[a] - 1) : 1.0;
    lo[a] = axes[a].front() - 0.5 * h;
    hi[a] = axes[a].back() + 0.5 * h;
  }
  Grid<D> g(lo, hi, n);
  if (g.size() != rows.size()) throw ParseError("tab", "rows do not form a complete lattice");
  Field<D> f(g, std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : rows) {
    Point<D> p{};
    for (std::size_t a = 0; a < D; ++a) p[a] = r[a];
    f[g.nearest(p)] = r[D];
  }
  for (std::size_t i = 0; i < f.size(); ++i)
    if (std::isnan(f[i])) throw ParseError("tab", "lattice has missing cells");
  return f;
}

}  // namespace swlab
