#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "swlab/agmon.hpp"
#include "swlab/core/ball.hpp"
#include "swlab/core/errors.hpp"
#include "swlab/core/field.hpp"
#include "swlab/core/parallel.hpp"
#include "swlab/core/rng.hpp"
#include "swlab/kernels.hpp"
#include "swlab/weights.hpp"

namespace swlab {

// ---------------------------------------------------------------------------
// Ball averages over distance fields.

/// Distance from a source point to every cell; defines the balls
/// {y : u(y) < t} a maximal operator averages over.
template <std::size_t D>
using DistanceProvider = std::function<Field<D>(const Point<D>&)>;

template <std::size_t D>
DistanceProvider<D> agmon_distances(const AgmonSolver<D>& solver) {
  return [&solver](const Point<D>& x) { return solver.solve(x).u; };
}

// |x - y| / scale from the cell center nearest x.
template <std::size_t D>
DistanceProvider<D> euclidean_distances(const Grid<D>& g, double scale = 1.0) {
  return [g, scale](const Point<D>& x) {
    const auto s = g.point(g.nearest(x));
    Field<D> u(g, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) u[i] = distance<D>(g.point(i), s) / scale;
    return u;
  };
}

// n points per decade from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t per_decade = 40) {
  if (!(lo > 0.0) || !(hi > lo)) throw ConfigurationError("search grid needs 0 < lo < hi");
  const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(std::log10(hi / lo) * static_cast<double>(per_decade))) + 1);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = lo * std::pow(hi / lo, static_cast<double>(k) / static_cast<double>(n - 1));
  return out;
}

// Default metric radius grid: [h / max rho, diameter / min rho].
template <std::size_t D>
std::vector<double> default_metric_radii(const Field<D>& rho, std::size_t per_decade = 40) {
  const auto& g = rho.grid();
  return log_grid(g.min_spacing() / rho.max(), g.diameter() / rho.min(), per_decade);
}

inline void check_search_grid(const std::vector<double>& ts, const char* what) {
  if (ts.empty()) throw ConfigurationError(std::string(what) + " grid is empty");
  for (std::size_t k = 0; k < ts.size(); ++k)
    if (!(ts[k] > 0.0) || (k > 0 && !(ts[k] > ts[k - 1])))
      throw ConfigurationError(std::string(what) + " grid must be positive and strictly increasing");
}

enum class MaximalMode { centered, uncentered };

inline const char* to_string(MaximalMode m) { return m == MaximalMode::centered ? "centered" : "uncentered"; }

/// Values of a maximal operator at a list of evaluation cells.
struct MaximalResult {
  std::vector<std::size_t> points;
  std::vector<double> values;
  std::vector<double> argmax;  // attaining radius or time, NaN when nothing was evaluated
  std::size_t skipped = 0;     // clipped (center, radius) pairs
  std::vector<std::string> warnings;
};

namespace detail {

inline void require_nonnegative(const std::vector<double>& f) {
  for (double v : f)
    if (!(v >= 0.0)) throw PreconditionError("maximal operators need a nonnegative finite input");
}

inline void endpoint_warning(MaximalResult& r, const std::vector<double>& grid, const char* what) {
  std::size_t lo = 0, hi = 0;
  for (double a : r.argmax) {
    if (a == grid.front()) ++lo;
    if (a == grid.back()) ++hi;
  }
  const double n = static_cast<double>(r.argmax.size());
  if (grid.size() > 1 && (lo > 0.1 * n || hi > 0.1 * n))
    r.warnings.push_back(std::string("sup attained at an endpoint of the ") + what + " grid for " + std::to_string(lo + hi) +
                         " of " + std::to_string(r.argmax.size()) + " points; refine or extend it");
}

// Damped ball averages e^{-damp(center, t)} |B|^{-1} int_B f for every
// radius; -1 marks a clipped or empty ball.
template <std::size_t D, class Damp>
std::vector<double> damped_averages(const MetricBallIndex<D>& index, const std::vector<double>& prefix, std::size_t center,
                                    const std::vector<double>& radii, Damp& damp, std::size_t& clipped) {
  std::vector<double> out(radii.size(), -1.0);
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (radii[k] > index.clip_radius()) {
      ++clipped;
      continue;
    }
    const std::size_t n = index.count(radii[k]);
    if (n == 0) continue;
    out[k] = index.integral(prefix, radii[k]) / index.volume(radii[k]) * std::exp(-damp(center, radii[k]));
  }
  return out;
}

}  // namespace detail

/// sup_t e^{-damp(center, t)} avg_{u_center < t} f over balls from `provider`.
/// Centered mode uses the evaluation point as center; uncentered mode also
/// scans every ball centered at a panel cell that contains the point.
/// Balls past the boundary layer are skipped and counted.
template <std::size_t D, class Damp>
MaximalResult ball_maximal(const Field<D>& f, const DistanceProvider<D>& provider, Damp damp, const std::vector<double>& radii,
                           const std::vector<std::size_t>& eval, MaximalMode mode, const std::vector<std::size_t>& panel = {}) {
  check_search_grid(radii, "radius");
  detail::require_nonnegative(f.values());
  const auto& g = f.grid();
  MaximalResult res;
  res.points = eval;
  res.values.assign(eval.size(), 0.0);
  res.argmax.assign(eval.size(), std::numeric_limits<double>::quiet_NaN());

  std::vector<std::size_t> centers = eval;
  if (mode == MaximalMode::uncentered) {
    centers.insert(centers.end(), panel.begin(), panel.end());
    std::sort(centers.begin(), centers.end());
    centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
  }
  // Candidate (value, radius) per eval point; merged in center order below.
  std::vector<std::vector<std::pair<double, double>>> best(centers.size());
  std::vector<std::size_t> clipped(centers.size(), 0);
  parallel_for(centers.size(), [&](std::size_t ci) {
    const std::size_t c = centers[ci];
    AgmonField<D> field;
    field.u = provider(g.point(c));
    const MetricBallIndex<D> index(field);
    const auto prefix = index.prefix(f.values());
    auto avg = detail::damped_averages(index, prefix, c, radii, damp, clipped[ci]);
    auto& out = best[ci];
    if (mode == MaximalMode::centered) {
      out.assign(1, {0.0, std::numeric_limits<double>::quiet_NaN()});
      for (std::size_t k = 0; k < radii.size(); ++k)
        if (avg[k] > out[0].first || (std::isnan(out[0].second) && avg[k] >= 0.0)) out[0] = {avg[k], radii[k]};
      return;
    }
    // Suffix maxima: the best ball of radius > t around this center.
    std::vector<std::pair<double, double>> suffix(radii.size() + 1, {-1.0, std::numeric_limits<double>::quiet_NaN()});
    for (std::size_t k = radii.size(); k-- > 0;)
      suffix[k] = avg[k] > suffix[k + 1].first ? std::make_pair(avg[k], radii[k]) : suffix[k + 1];
    out.resize(eval.size());
    for (std::size_t e = 0; e < eval.size(); ++e) {
      const double ux = field.u[eval[e]];
      const auto k = static_cast<std::size_t>(std::upper_bound(radii.begin(), radii.end(), ux) - radii.begin());
      out[e] = suffix[k];
    }
  });
  for (std::size_t ci = 0; ci < centers.size(); ++ci) res.skipped += clipped[ci];
  if (mode == MaximalMode::centered) {
    for (std::size_t e = 0; e < eval.size(); ++e) {
      res.values[e] = best[e][0].first;
      res.argmax[e] = best[e][0].second;
    }
  } else {
    for (std::size_t ci = 0; ci < centers.size(); ++ci)
      for (std::size_t e = 0; e < eval.size(); ++e)
        if (best[ci][e].first > res.values[e] || (std::isnan(res.argmax[e]) && best[ci][e].first >= 0.0)) {
          res.values[e] = std::max(0.0, best[ci][e].first);
          res.argmax[e] = best[ci][e].second;
        }
  }
  if (res.skipped) res.warnings.push_back(std::to_string(res.skipped) + " clipped balls skipped");
  detail::endpoint_warning(res, radii, "radius");
  return res;
}

/// Damped averages over Agmon balls, e^{-ct} |B_rho(x,t)|^{-1} int f.
template <std::size_t D>
MaximalResult maximal_adapted(const Field<D>& f, const DistanceProvider<D>& balls, double c, MaximalMode mode, const std::vector<double>& radii,
                              const std::vector<std::size_t>& eval, const std::vector<std::size_t>& panel = {}) {
  if (!(c >= 0.0)) throw ConfigurationError("damping rate must be nonnegative");
  return ball_maximal<D>(f, balls, [c](std::size_t, double t) { return c * t; }, radii, eval, mode, panel);
}

/// Euclidean averages damped by Phi(x, t) = exp(c (1 + t/rho(x))^m), x the center.
template <std::size_t D>
MaximalResult maximal_phi(const Field<D>& f, const Field<D>& rho, double c, double m, const std::vector<double>& radii,
                          const std::vector<std::size_t>& eval, MaximalMode mode = MaximalMode::centered,
                          const std::vector<std::size_t>& panel = {}) {
  if (!(c >= 0.0) || !(m > 0.0)) throw ConfigurationError("Phi damping needs c >= 0 and m > 0");
  if (!(rho.grid() == f.grid())) throw ConfigurationError("rho and f live on different grids");
  return ball_maximal<D>(
      f, euclidean_distances(f.grid()), [&rho, c, m](std::size_t x, double t) { return c * std::pow(1.0 + t / rho[x], m); }, radii, eval,
      mode, panel);
}

inline std::vector<std::size_t> all_cells(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// ---------------------------------------------------------------------------
// Heat maximal functions.

/// Kernel k_t(x, y) of a semigroup, indexed by a family parameter t.
/// `cell`, when set, returns the exact integral of k_t(x, .) over the box
/// [lo, hi]; point sampling fails once t drops below the squared spacing.
template <std::size_t D>
struct KernelFamily {
  std::string name;
  std::function<double(double, const Point<D>&, const Point<D>&)> kernel;
  std::function<double(double, const Point<D>&, const Point<D>&, const Point<D>&)> cell;
};

namespace detail {

// int_lo^hi exp(-b (y - mu)^2) dy, with erfc on the tails to avoid cancellation.
inline double gaussian_interval(double b, double mu, double lo, double hi) {
  const double s = std::sqrt(b), a = s * (lo - mu), c = s * (hi - mu);
  double d;
  if (a >= 0.0) d = std::erfc(a) - std::erfc(c);
  else if (c <= 0.0) d = std::erfc(-c) - std::erfc(-a);
  else d = std::erf(c) - std::erf(a);
  return 0.5 * std::sqrt(std::numbers::pi / b) * d;
}

// prefactor * int_box exp(-b |y - mu|^2) dy.
template <std::size_t D>
double gaussian_box(double prefactor, double b, const Point<D>& mu, const Point<D>& lo, const Point<D>& hi) {
  double m = prefactor;
  for (std::size_t a = 0; a < D && m > 0.0; ++a) m *= gaussian_interval(b, mu[a], lo[a], hi[a]);
  return m;
}

}  // namespace detail

// Mehler family in the parameter t = sinh(2s). In y the kernel is a
// Gaussian exp(-b |y - x / (2bt)|^2) with b = 1/(2t) + alpha(t).
template <std::size_t D>
KernelFamily<D> mehler_family() {
  return {"mehler", [](double t, const Point<D>& x, const Point<D>& y) { return kernels::mehler_kernel<D>(t, x, y); },
          [](double t, const Point<D>& x, const Point<D>& lo, const Point<D>& hi) {
            const double al = kernels::mehler_alpha(t), b = 1.0 / (2.0 * t) + al;
            double nx = 0.0;
            Point<D> mu{};
            for (std::size_t a = 0; a < D; ++a) {
              nx += x[a] * x[a];
              mu[a] = x[a] / (2.0 * b * t);
            }
            const double expo = nx * (1.0 / (4.0 * b * t * t) - 1.0 / (2.0 * t) - al);
            return detail::gaussian_box<D>(std::pow(2.0 * std::numbers::pi * t, -0.5 * D) * std::exp(expo), b, mu, lo, hi);
          }};
}

template <std::size_t D>
KernelFamily<D> heat_constant_family(double N) {
  return {"heat-constant", [N](double t, const Point<D>& x, const Point<D>& y) { return kernels::heat_kernel_constant<D>(N, t, x, y); },
          [N](double t, const Point<D>& x, const Point<D>& lo, const Point<D>& hi) {
            if (!(t > 0.0)) throw DomainError("heat kernel requires t > 0");
            return detail::gaussian_box<D>(std::exp(-N * t) * std::pow(4.0 * std::numbers::pi * t, -0.5 * D), 1.0 / (4.0 * t), x, lo, hi);
          }};
}

/// sup over the t grid of int k_t(x, y) |f(y)| dy, f constant on cells.
template <std::size_t D>
MaximalResult heat_maximal(const Field<D>& f, const KernelFamily<D>& family, const std::vector<double>& ts, const std::vector<std::size_t>& eval) {
  check_search_grid(ts, "time");
  const auto& g = f.grid();
  const double cv = g.cell_volume();
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (f[i] != 0.0) support.push_back(i);
  MaximalResult res;
  res.points = eval;
  res.values.assign(eval.size(), 0.0);
  res.argmax.assign(eval.size(), ts.front());
  parallel_for(eval.size(), [&](std::size_t e) {
    const auto x = g.point(eval[e]);
    for (double t : ts) {
      double s = 0.0;
      if (family.cell) {
        for (std::size_t i : support) {
          Point<D> lo = g.point(i), hi = lo;
          for (std::size_t a = 0; a < D; ++a) {
            lo[a] -= 0.5 * g.spacing(a);
            hi[a] += 0.5 * g.spacing(a);
          }
          s += family.cell(t, x, lo, hi) * std::abs(f[i]);
        }
      } else {
        for (std::size_t i : support) s += family.kernel(t, x, g.point(i)) * std::abs(f[i]);
        s *= cv;
      }
      if (s > res.values[e]) {
        res.values[e] = s;
        res.argmax[e] = t;
      }
    }
  });
  detail::endpoint_warning(res, ts, "time");
  return res;
}

/// One-dimensional variant for a discrete semigroup: every grid point.
inline MaximalResult heat_maximal(const kernels::DiscreteSemigroup& sg, const std::vector<double>& f, const std::vector<double>& ts) {
  check_search_grid(ts, "time");
  const std::size_t n = sg.grid().size();
  if (f.size() != n) throw ConfigurationError("field does not match the semigroup grid");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = std::abs(f[i]);
  MaximalResult res;
  res.points = all_cells(n);
  res.values.assign(n, 0.0);
  res.argmax.assign(n, ts.front());
  for (double t : ts) {
    const Eigen::VectorXd u = sg.apply(t, v);
    for (std::size_t i = 0; i < n; ++i)
      if (u[static_cast<Eigen::Index>(i)] > res.values[i]) {
        res.values[i] = u[static_cast<Eigen::Index>(i)];
        res.argmax[i] = t;
      }
  }
  detail::endpoint_warning(res, ts, "time");
  return res;
}

// ---------------------------------------------------------------------------
// Riesz transform of -Delta + N.

/// Discrete R_N^{(j)} on a uniform grid: a convolution with the kernel
/// tabulated on lattice offsets. The self-cell is excluded; offsets within
/// two cells use the mean of the kernel over a 2^d sub-cell lattice of the
/// source cell.
template <std::size_t D>
class RieszConstant {
 public:
  RieszConstant(const Grid<D>& g, double N, std::size_t j, double cutoff = std::numeric_limits<double>::infinity())
      : grid_(g), N_(N), j_(j) {
    if (!(N > 0.0)) throw DomainError("Riesz transform needs N > 0");
    if (j >= D) throw DomainError("Riesz component index out of range");
    const kernels::SFunctionTable s(D);
    const double sq = std::sqrt(N);
    auto K = [&](const Point<D>& z) {
      const double r = norm<D>(z);
      if (r > cutoff) return 0.0;
      const double a = sq * r;
      return -z[j] / r * std::exp(-a) * s(a);
    };
    std::size_t total = 1;
    for (std::size_t a = 0; a < D; ++a) {
      span_[a] = 2 * g.counts()[a] - 1;
      stride_[a] = total;
      total *= span_[a];
    }
    table_.assign(total, 0.0);
    const double ring = 2.0 * g.max_spacing() * (1.0 + 1e-12);
    parallel_for(total, [&](std::size_t flat) {
      Point<D> z{};
      bool self = true;
      std::size_t rest = flat;
      for (std::size_t a = 0; a < D; ++a) {
        const auto o = static_cast<long>(rest % span_[a]) - static_cast<long>(g.counts()[a] - 1);
        rest /= span_[a];
        z[a] = static_cast<double>(o) * g.spacing()[a];
        self = self && o == 0;
      }
      if (self) return;
      if (norm<D>(z) > ring) {
        table_[flat] = K(z);
        return;
      }
      double acc = 0.0;
      for (std::size_t mask = 0; mask < (std::size_t{1} << D); ++mask) {
        Point<D> zs = z;
        for (std::size_t a = 0; a < D; ++a) zs[a] += (mask >> a & 1U ? 0.25 : -0.25) * g.spacing()[a];
        acc += K(zs);
      }
      table_[flat] = acc / static_cast<double>(std::size_t{1} << D);
    });
  }

  const Grid<D>& grid() const noexcept { return grid_; }
  double N() const noexcept { return N_; }
  std::size_t component() const noexcept { return j_; }

  std::vector<double> apply(const std::vector<double>& f) const {
    return apply(f, all_cells(grid_.size()));
  }

  // Rf at the listed cells; zero entries of f are skipped.
  std::vector<double> apply(const std::vector<double>& f, const std::vector<std::size_t>& eval) const {
    if (f.size() != grid_.size()) throw ConfigurationError("field does not match the Riesz grid");
    std::vector<std::pair<std::size_t, double>> src;  // (table base offset, f * cell volume)
    const double cv = grid_.cell_volume();
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f[i] != 0.0) {
        if (!std::isfinite(f[i])) throw PreconditionError("Riesz input must be finite");
        const auto idx = grid_.unravel(i);
        std::size_t base = 0;
        for (std::size_t a = 0; a < D; ++a) base += (grid_.counts()[a] - 1 - idx[a]) * stride_[a];
        src.emplace_back(base, f[i] * cv);
      }
    std::vector<double> out(eval.size(), 0.0);
    parallel_for(eval.size(), [&](std::size_t e) {
      const auto idx = grid_.unravel(eval[e]);
      std::size_t shift = 0;
      for (std::size_t a = 0; a < D; ++a) shift += idx[a] * stride_[a];
      double acc = 0.0;
      for (const auto& [base, v] : src) acc += table_[base + shift] * v;
      out[e] = acc;
    });
    return out;
  }

 private:
  Grid<D> grid_;
  double N_;
  std::size_t j_;
  std::array<std::size_t, D> span_{}, stride_{};
  std::vector<double> table_;
};

template <std::size_t D>
Field<D> riesz_apply_constant(const Field<D>& f, double N, std::size_t j) {
  const RieszConstant<D> R(f.grid(), N, j);
  return Field<D>(f.grid(), R.apply(f.values()));
}

// ---------------------------------------------------------------------------
// Weighted norm lower bounds.

/// An operator on grid fields together with its tag and parameters.
struct DiscreteOperator {
  std::string tag;
  std::map<std::string, double> params;
  std::function<std::vector<double>(const std::vector<double>&)> apply;
};

inline DiscreteOperator identity_operator() {
  return {"identity", {}, [](const std::vector<double>& f) { return f; }};
}

template <std::size_t D>
DiscreteOperator riesz_operator(std::shared_ptr<const RieszConstant<D>> R) {
  return {"riesz-constant", {{"N", R->N()}, {"j", static_cast<double>(R->component() + 1)}},
          [R](const std::vector<double>& f) { return R->apply(f); }};
}

// Centered damped Agmon maximal function on every cell; one solve per cell.
template <std::size_t D>
DiscreteOperator maximal_adapted_operator(const Grid<D>& g, DistanceProvider<D> balls, double c, std::vector<double> radii) {
  return {"maximal-adapted", {{"c", c}}, [g, balls = std::move(balls), c, radii = std::move(radii)](const std::vector<double>& f) {
            std::vector<double> a(f.size());
            for (std::size_t i = 0; i < f.size(); ++i) a[i] = std::abs(f[i]);
            return maximal_adapted<D>(Field<D>(g, std::move(a)), balls, c, MaximalMode::centered, radii, all_cells(g.size())).values;
          }};
}

struct Candidate {
  std::string name;
  std::vector<double> f;
};

// Cells whose centers lie in the open ball.
template <std::size_t D>
std::vector<std::size_t> ball_cells(const Grid<D>& g, const Ball<D>& b) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (distance<D>(g.point(i), b.center) < b.radius) out.push_back(i);
  return out;
}

inline std::string ball_name(const char* kind, const double* c, std::size_t d, double r) {
  std::string s = std::string(kind) + "(";
  for (std::size_t a = 0; a < d; ++a) s += (a ? "," : "") + std::to_string(c[a]);
  return s + ";" + std::to_string(r) + ")";
}

/// f = (w + eps)^{-1/(p-1)} 1_B for every ball of the panel, with eps
/// relative to the largest weight in B so that scaling w only rescales f.
template <std::size_t D>
std::vector<Candidate> adversarial_candidates(const WeightSamples<D>& ws, const std::vector<Ball<D>>& panel, double eps_rel = 1e-12) {
  std::vector<Candidate> out;
  for (const auto& b : panel) {
    const auto cells = ball_cells(ws.grid, b);
    if (cells.empty()) continue;
    double wmax = 0.0;
    for (std::size_t i : cells) wmax = std::max(wmax, ws.w[i]);
    Candidate c{ball_name("dual", b.center.data(), D, b.radius), std::vector<double>(ws.grid.size(), 0.0)};
    for (std::size_t i : cells) {
      c.f[i] = std::pow(ws.w[i] + eps_rel * wmax, -1.0 / (ws.p - 1.0));
      if (!std::isfinite(c.f[i]) || !(c.f[i] > 0.0)) throw WeightValidityError("adversarial candidate overflows");
    }
    out.push_back(std::move(c));
  }
  return out;
}

template <std::size_t D>
std::vector<Candidate> indicator_candidates(const Grid<D>& g, const std::vector<Ball<D>>& panel) {
  std::vector<Candidate> out;
  for (const auto& b : panel) {
    const auto cells = ball_cells(g, b);
    if (cells.empty()) continue;
    Candidate c{ball_name("indicator", b.center.data(), D, b.radius), std::vector<double>(g.size(), 0.0)};
    for (std::size_t i : cells) c.f[i] = 1.0;
    out.push_back(std::move(c));
  }
  return out;
}

// Independent uniform [0,1) cell values; candidate k uses stream (seed, k).
template <std::size_t D>
std::vector<Candidate> random_candidates(const Grid<D>& g, std::size_t count, std::uint64_t seed) {
  std::vector<Candidate> out;
  for (std::size_t k = 0; k < count; ++k) {
    CounterRng rng(seed, k);
    Candidate c{"random(" + std::to_string(seed) + "," + std::to_string(k) + ")", std::vector<double>(g.size())};
    for (double& v : c.f) v = rng.uniform();
    out.push_back(std::move(c));
  }
  return out;
}

template <std::size_t D>
double weighted_norm(const std::vector<double>& f, const WeightSamples<D>& ws) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::pow(std::abs(f[i]), ws.p) * ws.w[i];
  return std::pow(s * ws.grid.cell_volume(), 1.0 / ws.p);
}

struct NormBound {
  double bound = 0.0;
  std::size_t index = 0;
  std::string attaining;
  std::vector<double> ratios;
};

/// max over candidates of ||Tf||_{L^p(w)} / ||f||_{L^p(w)}; a lower bound for
/// the operator norm, never an estimate of it. Ties go to the lowest index.
template <std::size_t D>
NormBound weighted_norm_lower_bound(const DiscreteOperator& T, const WeightSamples<D>& ws, const std::vector<Candidate>& candidates) {
  if (candidates.empty()) throw ConfigurationError("norm bound needs at least one candidate");
  NormBound nb;
  nb.ratios.resize(candidates.size(), 0.0);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double den = weighted_norm(candidates[k].f, ws);
    if (!(den > 0.0)) continue;
    nb.ratios[k] = weighted_norm(T.apply(candidates[k].f), ws) / den;
    if (nb.ratios[k] > nb.bound) {
      nb.bound = nb.ratios[k];
      nb.index = k;
    }
  }
  nb.attaining = candidates[nb.index].name;
  return nb;
}

}  // namespace swlab
