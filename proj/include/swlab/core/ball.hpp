#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "swlab/core/errors.hpp"
#include "swlab/core/field.hpp"
#include "swlab/core/grid.hpp"
#include "swlab/core/quadrature.hpp"
#include "swlab/core/rng.hpp"

namespace swlab {

template <std::size_t D>
struct Ball {
  Point<D> center{};
  double radius = 0.0;
};

enum class BallMethod { cell_sum, monte_carlo, spherical };

/// Quadrature choice for integrals over Euclidean balls.
///
/// cell_sum counts a cell when its center lies in the ball (O(h) boundary
/// error); with `fractional` set, cells straddling the sphere are weighted
/// by their covered fraction (see visit_ball_cells). monte_carlo draws
/// `samples` uniform points from the counter stream (seed, key).
/// spherical is a tensor Gauss rule in polar coordinates, for smooth
/// evaluators.
struct BallQuadrature {
  BallMethod method = BallMethod::cell_sum;
  bool fractional = false;
  int subsamples = 4;
  std::size_t samples = 20000;
  std::uint64_t seed = 0;
  std::uint64_t key = 0;
  int radial = 8;
  int polar = 8;
  int azimuth = 16;
};

struct BallIntegral {
  double value = 0.0;
  double clipped_fraction = 0.0;
  std::size_t samples = 0;
};

template <std::size_t D>
bool ball_meets_box(const Grid<D>& g, const Point<D>& c, double r) {
  double s = 0.0;
  for (std::size_t a = 0; a < D; ++a) {
    const double d = std::max({g.lo()[a] - c[a], 0.0, c[a] - g.hi()[a]});
    s += d * d;
  }
  return s < r * r;
}

// Fraction of the ball volume outside the grid box, from a midpoint
// lattice of 24^d subcubes.
template <std::size_t D>
double clipped_fraction(const Grid<D>& g, const Point<D>& c, double r) {
  bool inside = true;
  for (std::size_t a = 0; a < D; ++a)
    if (c[a] - r < g.lo()[a] || c[a] + r > g.hi()[a]) inside = false;
  if (inside) return 0.0;
  constexpr int m = 24;
  std::size_t total = 0, out = 0;
  std::array<int, D> k{};
  while (true) {
    Point<D> p{};
    double s = 0.0;
    for (std::size_t a = 0; a < D; ++a) {
      const double u = -1.0 + (2.0 * k[a] + 1.0) / m;
      s += u * u;
      p[a] = c[a] + r * u;
    }
    if (s <= 1.0) {
      ++total;
      if (!g.contains(p)) ++out;
    }
    std::size_t a = 0;
    while (a < D && ++k[a] == m) k[a++] = 0;
    if (a == D) break;
  }
  return total ? static_cast<double>(out) / static_cast<double>(total) : 0.0;
}

namespace detail {

// P(sum of independent U[0, w_a] <= t), the covered fraction of a box cut
// by a plane; axes of negligible width are dropped.
template <std::size_t D>
double box_plane_fraction(double t, const std::array<double, D>& w, double scale) {
  std::array<double, D> ws{};
  std::size_t k = 0;
  for (double v : w)
    if (v > 1e-9 * scale) ws[k++] = v;
  if (k == 0) return t >= 0.0 ? 1.0 : 0.0;
  double total = 0.0, prod = 1.0, fact = 1.0;
  for (std::size_t a = 0; a < k; ++a) {
    total += ws[a];
    prod *= ws[a];
    fact *= static_cast<double>(a + 1);
  }
  if (t <= 0.0) return 0.0;
  if (t >= total) return 1.0;
  double s = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    double u = t;
    int sign = 1;
    for (std::size_t a = 0; a < k; ++a)
      if (mask >> a & 1U) {
        u -= ws[a];
        sign = -sign;
      }
    if (u > 0.0) s += sign * std::pow(u, static_cast<double>(k));
  }
  return std::clamp(s / (fact * prod), 0.0, 1.0);
}

}  // namespace detail

// Calls fn(flat, weight) for every cell of the ball's cell-sum stencil.
// Without `fractional` the weight is 1 for cells whose center is inside.
// With it, cells straddling the sphere get the covered fraction of the
// tangent-plane cut (second order in h); for balls smaller than two cell
// diagonals a subsamples^d lattice is used instead.
template <std::size_t D, class Fn>
void visit_ball_cells(const Grid<D>& g, const Point<D>& c, double r, bool fractional, int subsamples, Fn&& fn) {
  Point<D> lo{}, hi{};
  const double halfdiag = 0.5 * g.cell_diagonal();
  const double pad = fractional ? halfdiag : 0.0;
  for (std::size_t a = 0; a < D; ++a) {
    lo[a] = c[a] - r - pad;
    hi[a] = c[a] + r + pad;
  }
  const double r2 = r * r;
  const bool planar = r >= 4.0 * halfdiag;
  for_each_cell_in_box(g, lo, hi, [&](std::size_t flat, const Index<D>& idx) {
    const Point<D> p = g.point(idx);
    double d2 = 0.0;
    for (std::size_t a = 0; a < D; ++a) d2 += (p[a] - c[a]) * (p[a] - c[a]);
    if (!fractional) {
      if (d2 <= r2) fn(flat, 1.0);
      return;
    }
    const double d = std::sqrt(d2);
    if (d + halfdiag <= r) {
      fn(flat, 1.0);
      return;
    }
    if (d - halfdiag >= r) return;
    if (planar) {
      std::array<double, D> w{};
      double total = 0.0;
      for (std::size_t a = 0; a < D; ++a) {
        w[a] = std::abs(p[a] - c[a]) / d * g.spacing(a);
        total += w[a];
      }
      const double f = detail::box_plane_fraction<D>(r - d + 0.5 * total, w, g.max_spacing());
      if (f > 0.0) fn(flat, f);
      return;
    }
    const int s = std::max(1, subsamples);
    std::size_t in = 0, count = 0;
    std::array<int, D> k{};
    while (true) {
      double q2 = 0.0;
      for (std::size_t a = 0; a < D; ++a) {
        const double u = p[a] + g.spacing(a) * ((k[a] + 0.5) / s - 0.5) - c[a];
        q2 += u * u;
      }
      ++count;
      if (q2 <= r2) ++in;
      std::size_t a = 0;
      while (a < D && ++k[a] == s) k[a++] = 0;
      if (a == D) break;
    }
    if (in > 0) fn(flat, static_cast<double>(in) / static_cast<double>(count));
  });
}

namespace detail {

inline void check_finite(double v) {
  if (!std::isfinite(v)) throw EvaluationError("non-finite integrand sample in ball integral");
}

template <std::size_t D, class F>
BallIntegral monte_carlo_ball(const Grid<D>& g, F& f, const Point<D>& c, double r, const BallQuadrature& q) {
  CounterRng rng(q.seed, q.key);
  double sum = 0.0;
  std::size_t out = 0;
  for (std::size_t n = 0; n < q.samples;) {
    Point<D> u{};
    double s = 0.0;
    for (std::size_t a = 0; a < D; ++a) {
      u[a] = rng.uniform(-1.0, 1.0);
      s += u[a] * u[a];
    }
    if (s > 1.0) continue;
    ++n;
    Point<D> p{};
    for (std::size_t a = 0; a < D; ++a) p[a] = c[a] + r * u[a];
    if (!g.contains(p)) {
      ++out;
      continue;
    }
    const double v = f(p);
    check_finite(v);
    sum += v;
  }
  const double vol = unit_ball_volume(D) * std::pow(r, static_cast<double>(D));
  const double n = static_cast<double>(q.samples);
  return {vol * sum / n, static_cast<double>(out) / n, q.samples};
}

template <std::size_t D, class F>
BallIntegral spherical_ball(const Grid<D>& g, F& f, const Point<D>& c, double r, const BallQuadrature& q) {
  const auto rad = quad::gauss_legendre(static_cast<std::size_t>(q.radial));
  double sum = 0.0;
  double wout = 0.0, wtot = 0.0;
  std::size_t count = 0;
  auto add = [&](const Point<D>& p, double w) {
    ++count;
    wtot += w;
    if (!g.contains(p)) {
      wout += w;
      return;
    }
    const double v = f(p);
    check_finite(v);
    sum += w * v;
  };
  if constexpr (D == 1) {
    for (std::size_t i = 0; i < rad.nodes.size(); ++i) add({c[0] + r * rad.nodes[i]}, r * rad.weights[i]);
  } else {
    // Radial nodes on [0, r] with Jacobian t^{d-1}.
    const auto ang = quad::gauss_legendre(static_cast<std::size_t>(q.polar));
    const int nphi = q.azimuth;
    for (std::size_t i = 0; i < rad.nodes.size(); ++i) {
      const double t = 0.5 * r * (rad.nodes[i] + 1.0);
      const double wr = 0.5 * r * rad.weights[i] * std::pow(t, static_cast<double>(D - 1));
      if constexpr (D == 2) {
        for (int k = 0; k < nphi; ++k) {
          const double phi = 2.0 * std::numbers::pi * (k + 0.5) / nphi;
          add({c[0] + t * std::cos(phi), c[1] + t * std::sin(phi)}, wr * 2.0 * std::numbers::pi / nphi);
        }
      } else {
        for (std::size_t j = 0; j < ang.nodes.size(); ++j) {
          const double ct = ang.nodes[j];
          const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
          for (int k = 0; k < nphi; ++k) {
            const double phi = 2.0 * std::numbers::pi * (k + 0.5) / nphi;
            add({c[0] + t * st * std::cos(phi), c[1] + t * st * std::sin(phi), c[2] + t * ct},
                wr * ang.weights[j] * 2.0 * std::numbers::pi / nphi);
          }
        }
      }
    }
  }
  return {sum, wtot > 0.0 ? wout / wtot : 0.0, count};
}

}  // namespace detail

/// Integral of an evaluator over B(c, r) intersected with the grid box.
template <std::size_t D, class F>
BallIntegral integrate_ball(const Grid<D>& g, F&& f, const Point<D>& c, double r, const BallQuadrature& q = {}) {
  if (!(r > 0.0)) throw ConfigurationError("ball radius must be positive");
  if (!ball_meets_box(g, c, r)) throw DomainCoverageError("ball lies entirely outside the domain");
  switch (q.method) {
    case BallMethod::monte_carlo:
      return detail::monte_carlo_ball(g, f, c, r, q);
    case BallMethod::spherical:
      return detail::spherical_ball(g, f, c, r, q);
    case BallMethod::cell_sum:
      break;
  }
  BallIntegral out;
  const double vol = g.cell_volume();
  visit_ball_cells(g, c, r, q.fractional, q.subsamples, [&](std::size_t flat, double w) {
    const double v = f(g.point(flat));
    detail::check_finite(v);
    out.value += w * v * vol;
    ++out.samples;
  });
  out.clipped_fraction = clipped_fraction(g, c, r);
  return out;
}

/// Integral of a grid field over a ball; cell-sum uses the stored values,
/// the other methods interpolate.
template <std::size_t D>
BallIntegral integrate_ball(const Field<D>& f, const Point<D>& c, double r, const BallQuadrature& q = {}) {
  const auto& g = f.grid();
  if (q.method != BallMethod::cell_sum)
    return integrate_ball(g, [&](const Point<D>& p) { return f.interpolate(p); }, c, r, q);
  if (!(r > 0.0)) throw ConfigurationError("ball radius must be positive");
  if (!ball_meets_box(g, c, r)) throw DomainCoverageError("ball lies entirely outside the domain");
  BallIntegral out;
  const double vol = g.cell_volume();
  visit_ball_cells(g, c, r, q.fractional, q.subsamples, [&](std::size_t flat, double w) {
    detail::check_finite(f[flat]);
    out.value += w * f[flat] * vol;
    ++out.samples;
  });
  out.clipped_fraction = clipped_fraction(g, c, r);
  return out;
}

struct RadiusLaw {
  enum class Kind { fixed, uniform, log_uniform };
  Kind kind = Kind::log_uniform;
  double lo = 0.1;
  double hi = 1.0;

  double draw(CounterRng& rng) const {
    switch (kind) {
      case Kind::fixed:
        return lo;
      case Kind::uniform:
        return rng.uniform(lo, hi);
      case Kind::log_uniform:
        return std::exp(rng.uniform(std::log(lo), std::log(hi)));
    }
    return lo;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::fixed:
        return "fixed:" + std::to_string(lo);
      case Kind::uniform:
        return "uniform:" + std::to_string(lo) + "," + std::to_string(hi);
      case Kind::log_uniform:
        return "log:" + std::to_string(lo) + "," + std::to_string(hi);
    }
    return {};
  }
};

template <std::size_t D>
struct BallFamily {
  std::vector<Ball<D>> balls;
  std::uint64_t seed = 0;
  RadiusLaw law{};
  double margin = 0.0;
};

/// Balls with centers uniform over the grid box shrunk by `margin` on every
/// side. Ball i depends only on (seed, i).
template <std::size_t D>
BallFamily<D> sample_ball_family(const Grid<D>& g, std::size_t count, const RadiusLaw& law, std::uint64_t seed,
                                 double margin = 0.0) {
  if (count == 0) throw ConfigurationError("ball family must contain at least one ball");
  if (!(law.lo > 0.0) || law.hi < law.lo) throw ConfigurationError("radius law needs 0 < lo <= hi");
  for (std::size_t a = 0; a < D; ++a)
    if (g.hi()[a] - g.lo()[a] <= 2.0 * margin)
      throw ConfigurationError("interior margin leaves no admissible centers");
  BallFamily<D> fam;
  fam.seed = seed;
  fam.law = law;
  fam.margin = margin;
  fam.balls.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng(seed, i);
    Ball<D> b;
    for (std::size_t a = 0; a < D; ++a) b.center[a] = rng.uniform(g.lo()[a] + margin, g.hi()[a] - margin);
    b.radius = law.draw(rng);
    fam.balls[i] = b;
  }
  return fam;
}

}  // namespace swlab
