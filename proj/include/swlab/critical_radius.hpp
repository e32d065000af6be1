#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "swlab/core/ball.hpp"
#include "swlab/core/errors.hpp"
#include "swlab/core/field.hpp"
#include "swlab/core/parallel.hpp"
#include "swlab/core/rng.hpp"
#include "swlab/potentials.hpp"

namespace swlab {

struct RhoBracket {
  double r_min = 0.0;
  double r_max = 0.0;
};

struct RhoOptions {
  double tol = 1e-3;
  RhoBracket bracket{};  // zero entries select the grid default
  // Gauss rule for the ball integrals (radial x polar x azimuthal nodes).
  int radial = 8, polar = 8, azimuth = 16;
  // Radial potentials are solved on a fine 1-D profile and interpolated.
  bool radial_profile = true;
  double scan_factor = 1.3;
};

namespace detail {

template <std::size_t D>
const Grid<D>& whole_space() {
  static const Grid<D> g = [] {
    Point<D> lo{}, hi{};
    Index<D> n{};
    lo.fill(-std::numeric_limits<double>::max());
    hi.fill(std::numeric_limits<double>::max());
    n.fill(1);
    return Grid<D>(lo, hi, n);
  }();
  return g;
}

template <std::size_t D>
double critical_functional(const Potential<D>& V, const Point<D>& x, double r, const RhoOptions& opt) {
  BallQuadrature q;
  q.method = BallMethod::spherical;
  q.radial = opt.radial;
  q.polar = opt.polar;
  q.azimuth = opt.azimuth;
  const auto I = integrate_ball(whole_space<D>(), [&](const Point<D>& y) { return V(y); }, x, r, q);
  return std::pow(r, 2.0 - static_cast<double>(D)) * I.value;
}

}  // namespace detail

/// rho_V(x) = sup{ r > 0 : r^{2-d} int_{B(x,r)} V <= 1 }.
///
/// A geometric scan downward from r_max finds the last crossing of F = 1,
/// then bisection keeps F(lo) <= 1 < F(hi) until the bracket is relatively
/// narrower than tol and F(lo) >= 1 - tol. Returns lo.
template <std::size_t D>
double rho_at(const Potential<D>& V, const Point<D>& x, const RhoOptions& opt) {
  static_assert(D >= 3, "the critical radius of a potential needs d >= 3");
  if (!(opt.tol > 0.0)) throw ConfigurationError("tolerance must be positive");
  const double rmin = opt.bracket.r_min, rmax = opt.bracket.r_max;
  if (!(rmin > 0.0) || !(rmax > rmin)) throw ConfigurationError("bracket needs 0 < r_min < r_max");
  auto F = [&](double r) { return detail::critical_functional(V, x, r, opt); };
  if (F(rmax) <= 1.0) throw BracketError("F(r_max) <= 1: the critical radius exceeds the bracket (r_max = " + std::to_string(rmax) + ")");
  double hi = rmax;
  double lo = hi / opt.scan_factor;
  while (F(lo) > 1.0) {
    hi = lo;
    if (lo <= rmin) throw BracketError("F(r_min) > 1: the critical radius lies below the bracket (r_min = " + std::to_string(rmin) + ")");
    lo = std::max(rmin, lo / opt.scan_factor);
  }
  double flo = F(lo);
  for (int it = 0; it < 200 && ((hi - lo) > opt.tol * lo || flo < 1.0 - opt.tol); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = F(mid);
    if (fm <= 1.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return lo;
}

template <std::size_t D>
struct CriticalRadiusField {
  Field<D> rho;
  std::string source;
  double tol = 0.0;
  RhoBracket bracket{};
};

template <std::size_t D>
RhoBracket default_bracket(const Grid<D>& g) {
  return {1e-3 * g.min_spacing(), g.diameter()};
}

/// rho_at at every grid point.
template <std::size_t D>
CriticalRadiusField<D> rho_field(const Potential<D>& V, const Grid<D>& g, RhoOptions opt = {}) {
  if (opt.bracket.r_max <= 0.0) opt.bracket = default_bracket(g);
  CriticalRadiusField<D> out{Field<D>(g), V.describe(), opt.tol, opt.bracket};
  std::vector<std::string> failures(g.size());

  if (opt.radial_profile && V.is_radial()) {
    // Profile on [0, R] with spacing h/16; linear interpolation in |x|.
    double R = 0.0;
    for (std::size_t c = 0; c < (std::size_t{1} << D); ++c) {
      Point<D> corner{};
      for (std::size_t a = 0; a < D; ++a) corner[a] = (c >> a & 1U) ? g.hi()[a] : g.lo()[a];
      R = std::max(R, norm<D>(corner));
    }
    const double dr = g.min_spacing() / 16.0;
    const auto m = static_cast<std::size_t>(std::ceil(R / dr)) + 2;
    std::vector<double> prof(m);
    parallel_for(m, [&](std::size_t k) {
      Point<D> p{};
      p[0] = dr * static_cast<double>(k);
      prof[k] = rho_at(V, p, opt);
    });
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = norm<D>(g.point(i)) / dr;
      const auto k = std::min(static_cast<std::size_t>(s), m - 2);
      const double t = s - static_cast<double>(k);
      out.rho[i] = (1.0 - t) * prof[k] + t * prof[k + 1];
    }
    return out;
  }

  parallel_for(g.size(), [&](std::size_t i) {
    try {
      out.rho[i] = rho_at(V, g.point(i), opt);
    } catch (const BracketError& e) {
      failures[i] = e.what();
    }
  });
  std::string msg;
  std::size_t bad = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (failures[i].empty()) continue;
    if (++bad <= 5) {
      std::string at;
      for (double c : g.point(i)) at += (at.empty() ? "" : ",") + std::to_string(c);
      msg += " (" + at + ")";
    }
  }
  if (bad) throw BracketError(std::to_string(bad) + " grid points have no critical radius inside the bracket, e.g." + msg);
  return out;
}

/// Reciprocal of sum over |alpha| <= deg P of |d^alpha P(x)|^{1/(|alpha|+2)}.
template <std::size_t D>
double polynomial_rho_proxy(const Polynomial<D>& P, const Point<D>& x) {
  const int deg = P.degree();
  double sum = 0.0;
  std::array<int, D> alpha{};
  while (true) {
    int order = 0;
    for (int v : alpha) order += v;
    if (order <= deg) {
      const double v = std::abs(P.derivative(alpha)(x));
      if (v > 0.0) sum += std::pow(v, 1.0 / (order + 2.0));
    }
    std::size_t a = 0;
    while (a < D && ++alpha[a] > deg) alpha[a++] = 0;
    if (a == D) break;
  }
  if (!(sum > 0.0)) throw DegeneratePotentialError("polynomial vanishes with all derivatives; proxy undefined");
  return 1.0 / sum;
}

struct ShenParameters {
  double B0 = 0.0;
  double k0 = 0.0;
  double beta = 2.0;
  double A0 = 0.0;
  double A0_empirical = 0.0;
  double D0 = 1.0;
  double D1 = 1.0;
  std::size_t samples = 0;
  std::size_t violations = 0;
  // Worst pair at the selected k0: flat indices of x and y.
  std::size_t worst_x = 0, worst_y = 0;
  double worst_required_B0 = 0.0;
};

struct ShenFitOptions {
  double B0_cap = 8.0;
  // k0 lattice 2^{j/4}, j in [j_min, j_max]; B0 lattice 2^{i/8}.
  int k0_j_min = -12, k0_j_max = 16;
  double near_fraction = 0.5;
  double near_scale = 4.0;  // near pairs lie within near_scale * rho(x)
  double margin = 0.0;
};

// Smallest A0 > 1 with A0 >= 2 beta (1 + A0 beta)^{k0/(k0+1)}.
inline double proof_A0(double beta, double k0) {
  const double e = k0 / (k0 + 1.0);
  auto g = [&](double A) { return A - 2.0 * beta * std::pow(1.0 + A * beta, e); };
  double lo = 1.0, hi = 2.0;
  while (g(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) >= 0.0 ? hi : lo) = mid;
  }
  return hi;
}

// beta = max(B0, D0, D1, 2) and the matching proof value of A0.
inline void consolidate(ShenParameters& p) {
  p.beta = std::max({p.B0, p.D0, p.D1, 2.0});
  p.A0 = proof_A0(p.beta, p.k0);
}

namespace detail {
inline double lattice_ceil(double v, double base_log) {
  return std::exp(std::ceil(std::log(v) / base_log - 1e-12) * base_log);
}
}  // namespace detail

/// Fits B0 and k0 in
///   B0^{-1} rho(x) (1 + |x-y|/rho(x))^{-k0} <= rho(y) <= B0 rho(x) (1 + |x-y|/rho(x))^{k0/(k0+1)}
/// over sampled pairs (half near, half uniform). k0 is the smallest lattice
/// value for which the required B0 stays within the cap; B0 is then the
/// smallest lattice value above the requirement.
template <std::size_t D>
ShenParameters fit_shen_parameters(const Field<D>& rho, std::size_t pair_count, std::uint64_t seed, ShenFitOptions opt = {}) {
  if (pair_count < 100) throw ConfigurationError("Shen fit needs at least 100 pairs");
  const auto& g = rho.grid();
  for (double v : rho.values())
    if (!(v > 0.0) || !std::isfinite(v)) throw MetricError("critical radius field must be positive and finite");
  std::vector<std::size_t> xs(pair_count), ys(pair_count);
  Point<D> lo{}, hi{};
  for (std::size_t a = 0; a < D; ++a) {
    lo[a] = g.lo()[a] + opt.margin;
    hi[a] = g.hi()[a] - opt.margin;
    if (!(hi[a] > lo[a])) throw ConfigurationError("margin leaves no admissible points");
  }
  const auto near_count = static_cast<std::size_t>(opt.near_fraction * static_cast<double>(pair_count));
  for (std::size_t k = 0; k < pair_count; ++k) {
    CounterRng rng(seed, k);
    Point<D> x{};
    for (std::size_t a = 0; a < D; ++a) x[a] = rng.uniform(lo[a], hi[a]);
    const std::size_t ix = g.nearest(x);
    x = g.point(ix);
    Point<D> y{};
    if (k < near_count) {
      const double r = rho[ix] * opt.near_scale * rng.uniform();
      double s = 0.0;
      Point<D> u{};
      for (std::size_t a = 0; a < D; ++a) {
        u[a] = rng.normal();
        s += u[a] * u[a];
      }
      s = std::sqrt(s);
      for (std::size_t a = 0; a < D; ++a) y[a] = std::clamp(x[a] + r * u[a] / s, lo[a], hi[a]);
    } else {
      for (std::size_t a = 0; a < D; ++a) y[a] = rng.uniform(lo[a], hi[a]);
    }
    xs[k] = ix;
    ys[k] = g.nearest(y);
  }

  // Required B0 for a given k0 over both orientations of every pair.
  auto required = [&](double k0, std::size_t& wx, std::size_t& wy) {
    double need = 1.0;
    for (std::size_t k = 0; k < pair_count; ++k) {
      for (int o = 0; o < 2; ++o) {
        const std::size_t i = o ? ys[k] : xs[k], j = o ? xs[k] : ys[k];
        const double s = distance<D>(g.point(i), g.point(j)) / rho[i];
        const double q = rho[j] / rho[i];
        const double b = std::max(std::pow(1.0 + s, -k0) / q, q / std::pow(1.0 + s, k0 / (k0 + 1.0)));
        if (b > need) {
          need = b;
          wx = i;
          wy = j;
        }
      }
    }
    return need;
  };

  ShenParameters p;
  p.samples = pair_count;
  for (int j = opt.k0_j_min; j <= opt.k0_j_max; ++j) {
    const double k0 = std::pow(2.0, j / 4.0);
    std::size_t wx = 0, wy = 0;
    const double need = required(k0, wx, wy);
    if (need <= opt.B0_cap) {
      p.k0 = k0;
      p.B0 = std::max(std::pow(2.0, 1.0 / 8.0), detail::lattice_ceil(need, std::log(2.0) / 8.0));
      p.worst_x = wx;
      p.worst_y = wy;
      p.worst_required_B0 = need;
      p.violations = 0;
      consolidate(p);
      return p;
    }
    if (j == opt.k0_j_max) {
      p.k0 = k0;
      p.worst_x = wx;
      p.worst_y = wy;
      p.worst_required_B0 = need;
    }
  }
  std::string at;
  for (double c : g.point(p.worst_x)) at += (at.empty() ? "" : ",") + std::to_string(c);
  at += ") and (";
  for (double c : g.point(p.worst_y)) at += std::string(at.back() == '(' ? "" : ",") + std::to_string(c);
  throw FitFailure("no (B0, k0) on the search lattice satisfies every pair; worst pair (" + at + ") needs B0 = " +
                   std::to_string(p.worst_required_B0) + " at k0 = " + std::to_string(p.k0));
}

}  // namespace swlab
