#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "swlab/core/errors.hpp"
#include "swlab/core/field.hpp"
#include "swlab/core/grid.hpp"
#include "swlab/core/parallel.hpp"
#include "swlab/core/rng.hpp"

namespace swlab {

enum class AgmonMethod { fast_marching, dijkstra };
enum class Stencil { axis, full };
enum class EdgeMean { harmonic, arithmetic };

struct AgmonOptions {
  AgmonMethod method = AgmonMethod::fast_marching;
  Stencil stencil = Stencil::full;
  EdgeMean mean = EdgeMean::harmonic;
  // Fast marching seeds every cell within this physical distance of the
  // source with the straight-segment length. Negative selects the default:
  // max(10% of the shortest side, two cell diagonals).
  double init_radius = -1.0;
  // Upwind difference order of fast marching (1 or 2). Second order uses the
  // next cell along an axis when it is known and not larger.
  int order = 2;
};

inline const char* to_string(AgmonMethod m) { return m == AgmonMethod::fast_marching ? "fast-marching" : "dijkstra"; }

// Worst-case ratio of grid-path length to Euclidean length for a Dijkstra
// stencil in a constant metric.
inline double metrication_bound(std::size_t d, Stencil s) {
  if (s == Stencil::axis) return std::sqrt(static_cast<double>(d));
  if (d == 1) return 1.0;
  if (d == 2) return 1.0 / std::cos(std::numbers::pi / 8.0);
  return 1.128;
}

/// Single-source distance field in the metric rho^{-1}|dx|.
template <std::size_t D>
struct AgmonField {
  Point<D> source{};
  std::size_t source_index = 0;
  Field<D> u;
  std::string solver;
  std::shared_ptr<const Field<D>> rho;
  std::size_t unreachable = 0;

  const Grid<D>& grid() const noexcept { return u.grid(); }
  double operator[](std::size_t i) const noexcept { return u[i]; }
};

/// Owns the rho field and solves single-source problems on its grid.
template <std::size_t D>
class AgmonSolver {
 public:
  AgmonSolver(Field<D> rho, AgmonOptions opt = {}) : rho_(std::make_shared<const Field<D>>(std::move(rho))), opt_(opt) {
    for (std::size_t i = 0; i < rho_->size(); ++i) {
      const double v = (*rho_)[i];
      if (!(v > 0.0) || !std::isfinite(v)) {
        std::string at;
        for (double c : grid().point(i)) at += (at.empty() ? "" : ",") + std::to_string(c);
        throw MetricError("rho must be positive and finite; bad value at (" + at + ")");
      }
    }
    inv_.resize(rho_->size());
    for (std::size_t i = 0; i < inv_.size(); ++i) inv_[i] = 1.0 / (*rho_)[i];
  }

  const Grid<D>& grid() const noexcept { return rho_->grid(); }
  const Field<D>& rho() const noexcept { return *rho_; }
  const AgmonOptions& options() const noexcept { return opt_; }

  double init_radius() const {
    if (opt_.init_radius >= 0.0) return opt_.init_radius;
    return std::max(0.1 * grid().min_side(), 2.0 * grid().cell_diagonal());
  }

  AgmonField<D> solve(const Point<D>& source) const {
    if (!grid().contains(source)) throw PreconditionError("Agmon source lies outside the grid");
    AgmonField<D> f;
    f.source_index = grid().nearest(source);
    f.source = grid().point(f.source_index);
    f.u = Field<D>(grid(), std::numeric_limits<double>::infinity());
    f.rho = rho_;
    if (opt_.method == AgmonMethod::fast_marching) {
      f.solver = "fast-marching";
      fast_marching(f);
    } else {
      f.solver = std::string("dijkstra-") + (opt_.stencil == Stencil::axis ? "axis" : "full") + "-" +
                 (opt_.mean == EdgeMean::harmonic ? "harmonic" : "arithmetic");
      dijkstra(f);
    }
    for (double v : f.u.values()) f.unreachable += !std::isfinite(v);
    return f;
  }

  AgmonField<D> solve(std::size_t source_index) const { return solve(grid().point(source_index)); }

  // Length of the straight segment a -> b in the metric, Simpson on 16 panels.
  double segment_length(const Point<D>& a, const Point<D>& b) const {
    const double len = distance<D>(a, b);
    if (len == 0.0) return 0.0;
    constexpr int m = 16;
    double s = 0.0;
    for (int k = 0; k <= m; ++k) {
      const double t = static_cast<double>(k) / m;
      Point<D> p{};
      for (std::size_t q = 0; q < D; ++q) p[q] = a[q] + t * (b[q] - a[q]);
      const double w = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      s += w / rho_->interpolate(p);
    }
    return len * s / (3.0 * m);
  }

 private:
  using Item = std::pair<double, std::size_t>;
  using Heap = std::priority_queue<Item, std::vector<Item>, std::greater<>>;

  template <class Fn>
  void for_axis_neighbors(std::size_t i, Fn&& fn) const {
    const auto idx = grid().unravel(i);
    for (std::size_t a = 0; a < D; ++a) {
      if (idx[a] > 0) fn(i - grid().stride(a), a);
      if (idx[a] + 1 < grid().count(a)) fn(i + grid().stride(a), a);
    }
  }

  double eikonal_update(const Field<D>& u, const std::vector<char>& known, std::size_t i) const {
    std::array<std::pair<double, double>, D> terms{};  // (neighbor value, spacing)
    std::size_t k = 0;
    const auto idx = grid().unravel(i);
    for (std::size_t a = 0; a < D; ++a) {
      const std::size_t s = grid().stride(a);
      double u1 = std::numeric_limits<double>::infinity(), best = u1, h = grid().spacing(a);
      auto side = [&](bool ok, std::size_t j1, bool ok2, std::size_t j2) {
        if (!ok || !known[j1] || u[j1] >= u1) return;
        u1 = best = u[j1];
        h = grid().spacing(a);
        if (opt_.order >= 2 && ok2 && known[j2] && u[j2] <= u[j1]) {
          // (3u - 4u1 + u2) / 2h written as (u - T) / h' with T = (4u1 - u2)/3, h' = 2h/3.
          best = (4.0 * u[j1] - u[j2]) / 3.0;
          h = 2.0 * grid().spacing(a) / 3.0;
        }
      };
      side(idx[a] > 0, i - s, idx[a] > 1, i - 2 * s);
      side(idx[a] + 1 < grid().count(a), i + s, idx[a] + 2 < grid().count(a), i + 2 * s);
      if (std::isfinite(best)) terms[k++] = {best, h};
    }
    std::sort(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(k));
    const double f = inv_[i];
    double sol = terms[0].first + terms[0].second * f;
    double A = 0.0, B = 0.0, C = -f * f;
    for (std::size_t j = 0; j < k; ++j) {
      const double w = 1.0 / (terms[j].second * terms[j].second);
      A += w;
      B -= 2.0 * w * terms[j].first;
      C += w * terms[j].first * terms[j].first;
      const double disc = B * B - 4.0 * A * C;
      if (disc < 0.0) break;
      const double cand = (-B + std::sqrt(disc)) / (2.0 * A);
      if (cand < terms[j].first) break;
      sol = cand;
      if (j + 1 < k && cand <= terms[j + 1].first) break;
    }
    return sol;
  }

  void fast_marching(AgmonField<D>& f) const {
    const auto& g = grid();
    std::vector<char> known(g.size(), 0);
    Heap heap;
    const double R = init_radius();
    Point<D> lo{}, hi{};
    for (std::size_t a = 0; a < D; ++a) {
      lo[a] = f.source[a] - R;
      hi[a] = f.source[a] + R;
    }
    std::vector<std::size_t> seeded;
    for_each_cell_in_box(g, lo, hi, [&](std::size_t i, const Index<D>&) {
      if (distance<D>(g.point(i), f.source) <= R) seeded.push_back(i);
    });
    if (seeded.empty()) seeded.push_back(f.source_index);
    for (std::size_t i : seeded) {
      f.u[i] = segment_length(f.source, g.point(i));
      known[i] = 1;
    }
    for (std::size_t i : seeded)
      for_axis_neighbors(i, [&](std::size_t j, std::size_t) {
        if (known[j]) return;
        const double v = eikonal_update(f.u, known, j);
        if (v < f.u[j]) {
          f.u[j] = v;
          heap.push({v, j});
        }
      });
    while (!heap.empty()) {
      const auto [v, i] = heap.top();
      heap.pop();
      if (known[i] || v > f.u[i]) continue;
      known[i] = 1;
      for_axis_neighbors(i, [&](std::size_t j, std::size_t) {
        if (known[j]) return;
        const double w = eikonal_update(f.u, known, j);
        if (w < f.u[j]) {
          f.u[j] = w;
          heap.push({w, j});
        }
      });
    }
  }

  void dijkstra(AgmonField<D>& f) const {
    const auto& g = grid();
    // Neighbor offsets with their Euclidean lengths.
    std::vector<std::pair<std::array<int, D>, double>> offs;
    std::array<int, D> o{};
    o.fill(-1);
    while (true) {
      int nz = 0;
      double len2 = 0.0;
      for (std::size_t a = 0; a < D; ++a) {
        nz += o[a] != 0;
        len2 += o[a] * o[a] * g.spacing(a) * g.spacing(a);
      }
      if (nz > 0 && (opt_.stencil == Stencil::full || nz == 1)) offs.push_back({o, std::sqrt(len2)});
      std::size_t a = 0;
      while (a < D && ++o[a] > 1) o[a++] = -1;
      if (a == D) break;
    }
    std::vector<char> done(g.size(), 0);
    Heap heap;
    f.u[f.source_index] = 0.0;
    heap.push({0.0, f.source_index});
    while (!heap.empty()) {
      const auto [v, i] = heap.top();
      heap.pop();
      if (done[i]) continue;
      done[i] = 1;
      const auto idx = g.unravel(i);
      for (const auto& [off, len] : offs) {
        std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i);
        bool inside = true;
        for (std::size_t a = 0; a < D; ++a) {
          const auto c = static_cast<std::ptrdiff_t>(idx[a]) + off[a];
          if (c < 0 || c >= static_cast<std::ptrdiff_t>(g.count(a))) {
            inside = false;
            break;
          }
          j += off[a] * static_cast<std::ptrdiff_t>(g.stride(a));
        }
        if (!inside) continue;
        const auto ju = static_cast<std::size_t>(j);
        if (done[ju]) continue;
        const double m = opt_.mean == EdgeMean::harmonic ? 2.0 / ((*rho_)[i] + (*rho_)[ju]) : 0.5 * (inv_[i] + inv_[ju]);
        const double w = v + len * m;
        if (w < f.u[ju]) {
          f.u[ju] = w;
          heap.push({w, ju});
        }
      }
    }
  }

  std::shared_ptr<const Field<D>> rho_;
  std::vector<double> inv_;
  AgmonOptions opt_;
};

/// Neighbor-bound check |u(a) - u(b)| <= |a - b| max(rho^{-1}(a), rho^{-1}(b)) (1 + slack)
/// over axis neighbors; returns the number of violating edges.
template <std::size_t D>
std::size_t lipschitz_violations(const AgmonField<D>& f, double slack = 0.05) {
  const auto& g = f.grid();
  std::size_t bad = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unravel(i);
    for (std::size_t a = 0; a < D; ++a) {
      if (idx[a] + 1 >= g.count(a)) continue;
      const std::size_t j = i + g.stride(a);
      const double bound = g.spacing(a) * std::max(1.0 / (*f.rho)[i], 1.0 / (*f.rho)[j]);
      bad += std::abs(f.u[i] - f.u[j]) > bound * (1.0 + slack);
    }
  }
  return bad;
}

template <std::size_t D>
struct MetricBall {
  Point<D> source{};
  double radius = 0.0;
  std::size_t count = 0;
  double volume = 0.0;
  bool clipped = false;  // some member cell lies on the domain boundary layer
};

template <std::size_t D>
MetricBall<D> metric_ball(const AgmonField<D>& f, double r) {
  if (!(r > 0.0)) throw PreconditionError("metric ball radius must be positive");
  MetricBall<D> b{f.source, r, 0, 0.0, false};
  const auto& g = f.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f.u[i] < r) {
      ++b.count;
      b.clipped = b.clipped || g.on_boundary_layer(g.unravel(i));
    }
  }
  b.volume = static_cast<double>(b.count) * g.cell_volume();
  return b;
}

/// Cells sorted by distance from the source. Ball counts and sums of any
/// cell field over B_rho(x, r) become a binary search plus a prefix lookup.
template <std::size_t D>
class MetricBallIndex {
 public:
  explicit MetricBallIndex(const AgmonField<D>& f) : cell_volume_(f.grid().cell_volume()) {
    const auto& g = f.grid();
    order_.resize(g.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return f.u[a] < f.u[b]; });
    sorted_.resize(g.size());
    clip_radius_ = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < order_.size(); ++k) {
      sorted_[k] = f.u[order_[k]];
      if (g.on_boundary_layer(g.unravel(order_[k]))) clip_radius_ = std::min(clip_radius_, sorted_[k]);
    }
  }

  // Number of cells with u < r.
  std::size_t count(double r) const {
    return static_cast<std::size_t>(std::lower_bound(sorted_.begin(), sorted_.end(), r) - sorted_.begin());
  }
  double volume(double r) const { return static_cast<double>(count(r)) * cell_volume_; }

  // Balls with radius above this touch the boundary layer.
  double clip_radius() const noexcept { return clip_radius_; }

  // Prefix sums of values (indexed by cell) in distance order, with a leading zero.
  std::vector<double> prefix(const std::vector<double>& values) const {
    std::vector<double> p(order_.size() + 1, 0.0);
    for (std::size_t k = 0; k < order_.size(); ++k) p[k + 1] = p[k] + values[order_[k]];
    return p;
  }
  // Sum of values over B_rho(x, r) times the cell volume.
  double integral(const std::vector<double>& prefix_sums, double r) const { return prefix_sums[count(r)] * cell_volume_; }

  const std::vector<std::size_t>& order() const noexcept { return order_; }
  const std::vector<double>& sorted_distances() const noexcept { return sorted_; }

 private:
  std::vector<std::size_t> order_;
  std::vector<double> sorted_;
  double cell_volume_;
  double clip_radius_;
};

// ---------------------------------------------------------------------------
// Geometry property suites.

struct PropertyReport {
  std::string property;
  std::size_t samples = 0;
  std::size_t violations = 0;
  std::map<std::string, double> constants;
  std::vector<std::string> notes;
};

struct SamplePair {
  std::size_t x = 0, y = 0;
};

// Grid cells whose centers lie at least `margin` inside the box.
template <std::size_t D>
std::vector<std::size_t> interior_cells(const Grid<D>& g, double margin) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.depth(g.point(i)) >= margin) out.push_back(i);
  if (out.empty()) throw ConfigurationError("interior margin leaves no grid cells");
  return out;
}

/// `sources` interior points, each paired with `per_source` targets. Local
/// pairs satisfy |x - y| <= 2 rho(x); otherwise targets are uniform over the
/// interior.
template <std::size_t D>
std::vector<SamplePair> sample_pairs(const Field<D>& rho, std::size_t sources, std::size_t per_source, std::uint64_t seed,
                                     double margin, bool local) {
  const auto& g = rho.grid();
  const auto pool = interior_cells(g, margin);
  std::vector<SamplePair> out;
  for (std::size_t s = 0; s < sources; ++s) {
    CounterRng rng(seed, s);
    const std::size_t x = pool[static_cast<std::size_t>(rng.uniform() * static_cast<double>(pool.size())) % pool.size()];
    const auto px = g.point(x);
    std::size_t made = 0;
    for (std::size_t attempt = 0; made < per_source && attempt < 100 * per_source; ++attempt) {
      std::size_t y;
      if (local) {
        Point<D> u{};
        double n2 = 0.0;
        for (auto& c : u) {
          c = rng.normal();
          n2 += c * c;
        }
        const double r = 2.0 * rho[x] * std::pow(rng.uniform(), 1.0 / static_cast<double>(D));
        Point<D> py{};
        for (std::size_t a = 0; a < D; ++a) py[a] = px[a] + r * u[a] / std::sqrt(n2);
        if (!g.contains(py)) continue;
        y = g.nearest(py);
        if (y == x || distance<D>(g.point(y), px) > 2.0 * rho[x] || g.depth(g.point(y)) < margin) continue;
      } else {
        y = pool[static_cast<std::size_t>(rng.uniform() * static_cast<double>(pool.size())) % pool.size()];
        if (y == x) continue;
      }
      out.push_back({x, y});
      ++made;
    }
  }
  return out;
}

namespace detail {
// Solves once per distinct source and calls fn(field, pairs of that source).
template <std::size_t D, class Fn>
void for_each_source(const AgmonSolver<D>& solver, const std::vector<SamplePair>& pairs, Fn&& fn) {
  std::map<std::size_t, std::vector<std::size_t>> by;
  for (const auto& p : pairs) by[p.x].push_back(p.y);
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> groups(by.begin(), by.end());
  parallel_for(groups.size(), [&](std::size_t k) {
    const auto field = solver.solve(groups[k].first);
    fn(k, field, groups[k].second);
  });
}
}  // namespace detail

/// Smallest D0 with D0^{-1} |x-y|/rho(x) <= d(x,y) <= D0 |x-y|/rho(x) on the
/// sample. Pairs with |x - y| > 2 rho(x) are rejected.
template <std::size_t D>
PropertyReport check_local_comparability(const AgmonSolver<D>& solver, const std::vector<SamplePair>& pairs, double cap = 16.0) {
  const auto& g = solver.grid();
  const auto& rho = solver.rho();
  for (const auto& p : pairs)
    if (distance<D>(g.point(p.x), g.point(p.y)) > 2.0 * rho[p.x] * (1.0 + 1e-12))
      throw PreconditionError("local comparability pair with |x - y| > 2 rho(x)");
  std::vector<double> need(pairs.size(), 1.0);
  std::map<std::size_t, std::vector<std::size_t>> slot;
  for (std::size_t k = 0; k < pairs.size(); ++k) slot[pairs[k].x].push_back(k);
  std::vector<std::vector<std::size_t>> slots;
  for (auto& [x, v] : slot) slots.push_back(v);
  detail::for_each_source(solver, pairs, [&](std::size_t k, const AgmonField<D>& f, const std::vector<std::size_t>& ys) {
    for (std::size_t m = 0; m < ys.size(); ++m) {
      const double e = distance<D>(g.point(f.source_index), g.point(ys[m])) / rho[f.source_index];
      const double q = f.u[ys[m]] / e;
      need[slots[k][m]] = std::max(q, 1.0 / q);
    }
  });
  PropertyReport rep{"local", pairs.size(), 0, {}, {}};
  double D0 = 1.0;
  for (double v : need) {
    D0 = std::max(D0, v);
    rep.violations += v > cap;
  }
  rep.constants["D0"] = D0;
  rep.constants["cap"] = cap;
  return rep;
}

/// D1 in d <= D1 (1 + s)^{k0+1} (all pairs) and d >= D1^{-1} (1 + s)^{1/(k0+1)}
/// (pairs with s >= 1), s = |x - y| / rho(x).
template <std::size_t D>
PropertyReport check_global_bounds(const AgmonSolver<D>& solver, const std::vector<SamplePair>& pairs, double k0, double cap = 64.0) {
  const auto& g = solver.grid();
  const auto& rho = solver.rho();
  std::map<std::size_t, std::vector<std::size_t>> slot;
  for (std::size_t k = 0; k < pairs.size(); ++k) slot[pairs[k].x].push_back(k);
  std::vector<std::vector<std::size_t>> slots;
  for (auto& [x, v] : slot) slots.push_back(v);
  std::vector<double> upper(pairs.size(), 0.0), lower(pairs.size(), 0.0);
  std::vector<char> lower_used(pairs.size(), 0);
  detail::for_each_source(solver, pairs, [&](std::size_t k, const AgmonField<D>& f, const std::vector<std::size_t>& ys) {
    for (std::size_t m = 0; m < ys.size(); ++m) {
      const std::size_t slotk = slots[k][m];
      const double s = distance<D>(g.point(f.source_index), g.point(ys[m])) / rho[f.source_index];
      const double d = f.u[ys[m]];
      upper[slotk] = d / std::pow(1.0 + s, k0 + 1.0);
      if (s >= 1.0) {
        lower_used[slotk] = 1;
        lower[slotk] = std::pow(1.0 + s, 1.0 / (k0 + 1.0)) / d;
      }
    }
  });
  PropertyReport rep{"global", pairs.size(), 0, {}, {}};
  double D1 = 1.0;
  std::size_t skipped = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double need = std::max(upper[k], lower_used[k] ? lower[k] : 0.0);
    skipped += !lower_used[k];
    D1 = std::max(D1, need);
    rep.violations += need > cap;
  }
  rep.constants["D1"] = D1;
  rep.constants["k0"] = k0;
  rep.constants["cap"] = cap;
  rep.notes.push_back(std::to_string(skipped) + " pairs with |x - y| < rho(x) skipped for the lower bound");
  return rep;
}

/// Cell-by-cell containment checks between Euclidean and metric balls:
///   r <= 2:    B(x, r rho(x)) in B_rho(x, beta r)
///   r > 2:     B(x, r rho(x)) in B_rho(x, beta (1 + r)^{k0+1})
///   r <= beta: B_rho(x, r) in B(x, A0 r rho(x))
///   r > beta:  B_rho(x, r) in B(x, ((r beta)^{k0+1} - 1) rho(x))
/// A cell within one cell diagonal of the bounding sphere never counts.
template <std::size_t D>
PropertyReport check_ball_inclusions(const AgmonSolver<D>& solver, const std::vector<std::size_t>& sources,
                                     const std::vector<double>& radii, double beta, double A0, double k0) {
  const auto& g = solver.grid();
  const auto& rho = solver.rho();
  const double diag = g.cell_diagonal();
  std::vector<std::size_t> bad(sources.size(), 0), checked(sources.size(), 0);
  parallel_for(sources.size(), [&](std::size_t k) {
    const auto f = solver.solve(sources[k]);
    const auto x = g.point(sources[k]);
    const double rx = rho[sources[k]];
    // Metric distance scale for the one-layer tolerance on the metric side.
    const double du = diag / rx;
    for (double r : radii) {
      const double euclid = r * rx;
      const double metric = r <= 2.0 ? beta * r : beta * std::pow(1.0 + r, k0 + 1.0);
      const double metric_r = r;
      const double euclid_out = r <= beta ? A0 * r * rx : (std::pow(r * beta, k0 + 1.0) - 1.0) * rx;
      ++checked[k];
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double e = distance<D>(g.point(i), x);
        // Euclidean ball inside the metric ball.
        if (e < euclid - diag && !(f.u[i] < metric + du)) ++bad[k];
        // Metric ball inside the Euclidean ball.
        if (f.u[i] < metric_r && !(e < euclid_out + diag)) ++bad[k];
      }
    }
  });
  PropertyReport rep{"balls", 0, 0, {}, {}};
  for (std::size_t k = 0; k < sources.size(); ++k) {
    rep.samples += checked[k];
    rep.violations += bad[k];
  }
  rep.constants["beta"] = beta;
  rep.constants["A0"] = A0;
  rep.constants["k0"] = k0;
  return rep;
}

struct DoublingRow {
  double r = 0.0;
  double ratio = 0.0;       // |B(x, 2r)| / |B(x, r)|
  double bound = 0.0;       // (1 + r)^{(k0+1) d}
  double normalized = 0.0;  // ratio / bound
  bool clipped = false;
  bool resolved = true;  // B(x, r) holds more than the source cell
  bool flagged = false;
};

struct DoublingReport {
  std::vector<DoublingRow> rows;
  double fitted = 0.0;  // max normalized ratio
  std::size_t violations = 0;
};

/// Flags a radius when its normalized ratio exceeds the running maximum of
/// the previous radii by more than 10x. A ball made of the source cell alone
/// is unresolved: its ratio only counts neighbouring cells, so it is neither
/// flagged nor used as a reference.
template <std::size_t D>
DoublingReport doubling_report(const AgmonField<D>& f, const std::vector<double>& radii, double k0) {
  DoublingReport rep;
  MetricBallIndex<D> index(f);
  double running = 0.0;
  for (double r : radii) {
    if (!(r > 0.0)) throw PreconditionError("doubling radii must be positive");
    DoublingRow row;
    row.r = r;
    const double v1 = index.volume(r), v2 = index.volume(2.0 * r);
    row.ratio = v2 / v1;  // v1 >= one cell since u(source) = 0
    row.bound = std::pow(1.0 + r, (k0 + 1.0) * static_cast<double>(D));
    row.normalized = row.ratio / row.bound;
    row.clipped = 2.0 * r > index.clip_radius();
    row.resolved = index.count(r) > 1;
    if (!row.resolved) {
      rep.rows.push_back(row);
      continue;
    }
    row.flagged = running > 0.0 && row.normalized > 10.0 * running;
    running = std::max(running, row.normalized);
    rep.violations += row.flagged;
    rep.rows.push_back(row);
  }
  rep.fitted = running;
  return rep;
}

struct CoverReport {
  std::vector<std::size_t> centers;
  std::vector<double> sigmas;
  std::vector<std::vector<std::uint32_t>> overlap;  // per sigma, per cell
  std::vector<double> max_overlap;
  std::vector<double> slopes;  // log2 growth per sigma doubling
  double N1 = 0.0;
  double C = 0.0;
  std::size_t uncovered = 0;
  std::size_t violations = 0;
};

/// Greedy cover by critical balls B(x_j, rho(x_j)): scan cells in order and
/// open a ball at each uncovered cell. Overlap counts of the sigma-dilated
/// balls are fitted by C sigma^{N1} (least squares in log-log for N1, C the
/// smallest constant that bounds every sample). A violation is an uncovered
/// cell, a non-finite fit, or a doubling slope above 2 N1 + 1.
template <std::size_t D>
CoverReport critical_cover(const Field<D>& rho, const std::vector<double>& sigmas = {1, 2, 4, 8}) {
  const auto& g = rho.grid();
  CoverReport rep;
  rep.sigmas = sigmas;
  std::vector<char> covered(g.size(), 0);
  auto visit = [&](std::size_t c, double R, auto&& fn) {
    const auto x = g.point(c);
    Point<D> lo{}, hi{};
    for (std::size_t a = 0; a < D; ++a) {
      lo[a] = x[a] - R;
      hi[a] = x[a] + R;
    }
    for_each_cell_in_box(g, lo, hi, [&](std::size_t i, const Index<D>&) {
      if (distance<D>(g.point(i), x) < R) fn(i);
    });
  };
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (covered[i]) continue;
    rep.centers.push_back(i);
    covered[i] = 1;
    visit(i, rho[i], [&](std::size_t j) { covered[j] = 1; });
  }
  for (char c : covered) rep.uncovered += !c;
  for (double s : sigmas) {
    std::vector<std::uint32_t> count(g.size(), 0);
    for (std::size_t c : rep.centers) visit(c, s * rho[c], [&](std::size_t j) { ++count[j]; });
    rep.max_overlap.push_back(static_cast<double>(*std::max_element(count.begin(), count.end())));
    rep.overlap.push_back(std::move(count));
  }
  const std::size_t n = sigmas.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double lx = std::log(sigmas[k]), ly = std::log(rep.max_overlap[k]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  const double den = static_cast<double>(n) * sxx - sx * sx;
  rep.N1 = n >= 2 && den > 0.0 ? std::max(0.0, (static_cast<double>(n) * sxy - sx * sy) / den) : 0.0;
  for (std::size_t k = 0; k < n; ++k) rep.C = std::max(rep.C, rep.max_overlap[k] / std::pow(sigmas[k], rep.N1));
  for (std::size_t k = 1; k < n; ++k)
    rep.slopes.push_back(std::log(rep.max_overlap[k] / rep.max_overlap[k - 1]) / std::log(sigmas[k] / sigmas[k - 1]));
  rep.violations = rep.uncovered + (std::isfinite(rep.N1) && std::isfinite(rep.C) ? 0 : 1);
  for (double s : rep.slopes) rep.violations += s > 2.0 * rep.N1 + 1.0;
  return rep;
}

}  // namespace swlab
