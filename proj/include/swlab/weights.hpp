#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "swlab/agmon.hpp"
#include "swlab/core/ball.hpp"
#include "swlab/core/errors.hpp"
#include "swlab/core/estimate.hpp"
#include "swlab/core/field.hpp"
#include "swlab/core/parallel.hpp"
#include "swlab/core/spec.hpp"

namespace swlab {

/// Positive weight on R^d, evaluated in the log domain.
template <std::size_t D>
class Weight {
 public:
  enum class Kind { power, exp_linear, exp_agmon, gaussian, tabulated };

  static Weight one() { return power(0.0); }
  static Weight power(double a) {
    Weight w(Kind::power);
    w.a_ = a;
    return w;
  }
  static Weight exp_linear(double b, std::size_t axis = 0) {
    if (axis >= D) throw ConfigurationError("exp-linear direction beyond the dimension");
    Weight w(Kind::exp_linear);
    w.a_ = b;
    w.axis_ = axis;
    return w;
  }
  // e^{eps u(x)} with u the distance field of an origin-rooted solve.
  static Weight exp_agmon(double eps, AgmonField<D> origin) {
    Weight w(Kind::exp_agmon);
    w.a_ = eps;
    w.agmon_ = std::make_shared<const AgmonField<D>>(std::move(origin));
    return w;
  }
  static Weight gaussian(double a) {
    Weight w(Kind::gaussian);
    w.a_ = a;
    return w;
  }
  static Weight tabulated(Field<D> f, std::string source = "field") {
    for (double v : f.values())
      if (!(v > 0.0) || !std::isfinite(v)) throw WeightValidityError("tabulated weight must be positive and finite");
    Weight w(Kind::tabulated);
    w.table_ = std::make_shared<const Field<D>>(std::move(f));
    w.source_ = std::move(source);
    return w;
  }

  Kind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return a_; }

  double log_value(const Point<D>& x) const {
    switch (kind_) {
      case Kind::power:
        return a_ == 0.0 ? 0.0 : a_ * std::log(norm<D>(x));
      case Kind::exp_linear:
        return a_ * x[axis_];
      case Kind::exp_agmon:
        return a_ * agmon_->u.interpolate(x);
      case Kind::gaussian: {
        double s = 0.0;
        for (double v : x) s += v * v;
        return a_ * s;
      }
      case Kind::tabulated:
        return std::log(table_->interpolate(x));
    }
    return 0.0;
  }
  double operator()(const Point<D>& x) const { return std::exp(log_value(x)); }

  std::string describe() const {
    switch (kind_) {
      case Kind::power:
        return a_ == 0.0 ? "one" : "power:" + format_number(a_);
      case Kind::exp_linear:
        return "exp-linear:" + format_number(a_) + "," + std::to_string(axis_ + 1);
      case Kind::exp_agmon:
        return "exp-agmon:" + format_number(a_);
      case Kind::gaussian:
        return "gaussian:" + format_number(a_);
      case Kind::tabulated:
        return "tab:" + source_;
    }
    return {};
  }

 private:
  explicit Weight(Kind k) : kind_(k) {}
  static std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
  }

  Kind kind_;
  double a_ = 0.0;
  std::size_t axis_ = 0;
  std::shared_ptr<const AgmonField<D>> agmon_;
  std::shared_ptr<const Field<D>> table_;
  std::string source_;
};

/// Grammar: "one", "power:a", "exp-linear:b[,axis]" (axis 1-based),
/// "exp-agmon:eps", "gaussian:a", "tab:<csv path>". exp-agmon solves from
/// the origin with `solver`, which must then be non-null.
template <std::size_t D>
Weight<D> parse_weight(const std::string& text, const AgmonSolver<D>* solver = nullptr) {
  const auto colon = text.find(':');
  const std::string kind(trim(colon == std::string::npos ? text : text.substr(0, colon)));
  const std::string rest = colon == std::string::npos ? std::string() : text.substr(colon + 1);
  if (kind == "one") return Weight<D>::one();
  if (kind == "power") return Weight<D>::power(parse_number(rest, "weight"));
  if (kind == "gaussian") return Weight<D>::gaussian(parse_number(rest, "weight"));
  if (kind == "exp-linear") {
    const auto v = parse_numbers(rest, "weight");
    if (v.empty() || v.size() > 2) throw ParseError("weight", "exp-linear expects b[,axis]");
    const double axis = v.size() == 2 ? v[1] : 1.0;
    if (axis < 1 || axis > static_cast<double>(D) || axis != std::floor(axis)) throw ParseError("weight", "exp-linear axis out of range");
    return Weight<D>::exp_linear(v[0], static_cast<std::size_t>(axis) - 1);
  }
  if (kind == "exp-agmon") {
    if (!solver) throw ConfigurationError("exp-agmon weight needs an Agmon solver");
    Point<D> origin{};
    return Weight<D>::exp_agmon(parse_number(rest, "weight"), solver->solve(origin));
  }
  if (kind == "tab") return Weight<D>::tabulated(read_field_csv<D>(rest), rest);
  throw ParseError("weight", "unknown weight kind '" + kind + "'");
}

/// w and its dual sigma = w^{-1/(p-1)} at every cell of a grid.
///
/// Balls of radius below `evaluator_below` are integrated with a spherical
/// Gauss rule on the weight function itself (w^{log_scale} and its dual
/// power) instead of cell values; 0 disables this.
template <std::size_t D>
struct WeightSamples {
  Grid<D> grid;
  double p = 2.0;
  std::vector<double> w, sigma;
  std::string source;
  std::shared_ptr<const Weight<D>> evaluator;
  double log_scale = 1.0;
  double evaluator_below = 0.0;
};

template <std::size_t D>
WeightSamples<D> sample_weight(const Weight<D>& w, const Grid<D>& g, double p) {
  if (!(p > 1.0)) throw ConfigurationError("weight exponent p must exceed 1");
  WeightSamples<D> s{g, p, std::vector<double>(g.size()), std::vector<double>(g.size()), w.describe(), std::make_shared<const Weight<D>>(w)};
  std::vector<char> bad(g.size(), 0);
  parallel_for(g.size(), [&](std::size_t i) {
    const double lw = w.log_value(g.point(i));
    s.w[i] = std::exp(lw);
    s.sigma[i] = std::exp(-lw / (p - 1.0));
    bad[i] = !(s.w[i] > 0.0) || !std::isfinite(s.w[i]) || !(s.sigma[i] > 0.0) || !std::isfinite(s.sigma[i]);
  });
  for (std::size_t i = 0; i < g.size(); ++i)
    if (bad[i]) {
      std::string at;
      for (double c : g.point(i)) at += (at.empty() ? "" : ",") + std::to_string(c);
      throw WeightValidityError("weight or its dual power is zero or overflows at (" + at + ")");
    }
  return s;
}

// Swaps the roles of w and sigma: the samples of w^{-1/(p-1)} at exponent p'.
template <std::size_t D>
WeightSamples<D> dual(const WeightSamples<D>& s) {
  return {s.grid, s.p / (s.p - 1.0), s.sigma, s.w, "dual(" + s.source + ")", s.evaluator, -s.log_scale / (s.p - 1.0), s.evaluator_below};
}

/// Integrals of w and sigma over a ball, and its measured volume.
struct BallSums {
  double w = 0.0, sigma = 0.0, volume = 0.0;
};

// log of (int w)^{1/p} (int sigma)^{(p-1)/p} / |B|, the undamped product.
// Jensen makes it >= 0 whenever the sums come from one positive measure.
inline double log_product(const BallSums& s, double p) {
  return std::log(s.w) / p + (p - 1.0) / p * std::log(s.sigma) - std::log(s.volume);
}

template <std::size_t D>
BallSums euclidean_sums(const WeightSamples<D>& ws, const Ball<D>& b) {
  BallSums s;
  if (ws.evaluator && b.radius < ws.evaluator_below) {
    const BallQuadrature q{.method = BallMethod::spherical};
    const double a = ws.log_scale, e = -ws.log_scale / (ws.p - 1.0);
    s.w = integrate_ball(ws.grid, [&](const Point<D>& x) { return std::exp(a * ws.evaluator->log_value(x)); }, b.center, b.radius, q).value;
    s.sigma = integrate_ball(ws.grid, [&](const Point<D>& x) { return std::exp(e * ws.evaluator->log_value(x)); }, b.center, b.radius, q).value;
    s.volume = integrate_ball(ws.grid, [](const Point<D>&) { return 1.0; }, b.center, b.radius, q).value;
    return s;
  }
  const double cv = ws.grid.cell_volume();
  visit_ball_cells(ws.grid, b.center, b.radius, true, 4, [&](std::size_t i, double frac) {
    s.w += frac * ws.w[i] * cv;
    s.sigma += frac * ws.sigma[i] * cv;
    s.volume += frac * cv;
  });
  return s;
}

namespace detail {

// Shared driver for the Euclidean-ball classes. log_damping(ball) returns
// NaN to filter a ball out of the family.
template <std::size_t D, class Damp>
ClassConstantEstimate euclidean_class(std::string tag, const WeightSamples<D>& ws, const BallFamily<D>& family, Damp&& log_damping,
                                      double clip_threshold) {
  if (family.balls.empty()) throw ConfigurationError("ball family is empty");
  ClassConstantEstimate est;
  est.tag = std::move(tag);
  est.params["p"] = ws.p;
  const std::size_t n = family.balls.size();
  est.per_ball.assign(n, -std::numeric_limits<double>::infinity());
  std::vector<int> status(n, 0);  // 0 ok, 1 filtered, 2 clipped, 3 empty
  parallel_for(n, [&](std::size_t i) {
    const auto& b = family.balls[i];
    const double ld = log_damping(b);
    if (std::isnan(ld)) {
      status[i] = 1;
      return;
    }
    if (clipped_fraction(ws.grid, b.center, b.radius) > clip_threshold) {
      status[i] = 2;
      return;
    }
    const auto s = euclidean_sums(ws, b);
    if (!(s.volume > 0.0)) {
      status[i] = 3;
      return;
    }
    est.per_ball[i] = log_product(s, ws.p) - ld;
  });
  const auto count = [&](int v) { return static_cast<std::size_t>(std::count(status.begin(), status.end(), v)); };
  est.skipped = n - count(0);
  if (count(1)) {
    est.params["filtered"] = static_cast<double>(count(1));
    est.warnings.push_back(std::to_string(count(1)) + " balls filtered out of the family");
  }
  if (count(2)) est.warnings.push_back(std::to_string(count(2)) + " balls clipped by the domain, skipped");
  if (count(3)) est.warnings.push_back(std::to_string(count(3)) + " balls contain no grid cell, skipped");
  finalize_estimate(est, family.balls);
  return est;
}

template <std::size_t D>
double rho_at_center(const Field<D>& rho, const Point<D>& x) {
  return rho.interpolate(x);
}

}  // namespace detail

/// Damping Phi = exp(c (1 + r/rho(x))^m) over Euclidean balls.
template <std::size_t D>
ClassConstantEstimate h_class_constant(const WeightSamples<D>& ws, double c, double m, const Field<D>& rho, const BallFamily<D>& family,
                                       double clip_threshold = 0.01) {
  if (!(c > 0.0) || !(m > 0.0)) throw ConfigurationError("H class needs c > 0 and m > 0");
  auto est = detail::euclidean_class<D>(
      "H", ws, family,
      [&](const Ball<D>& b) { return c * std::pow(1.0 + b.radius / detail::rho_at_center(rho, b.center), m); }, clip_threshold);
  est.params["c"] = c;
  est.params["m"] = m;
  return est;
}

/// Damping (1 + r/rho(x))^theta over Euclidean balls.
template <std::size_t D>
ClassConstantEstimate ap_theta_constant(const WeightSamples<D>& ws, double theta, const Field<D>& rho, const BallFamily<D>& family,
                                        double clip_threshold = 0.01) {
  if (!(theta >= 0.0)) throw ConfigurationError("A_p theta must be nonnegative");
  auto est = detail::euclidean_class<D>(
      "Atheta", ws, family,
      [&](const Ball<D>& b) { return theta * std::log1p(b.radius / detail::rho_at_center(rho, b.center)); }, clip_threshold);
  est.params["theta"] = theta;
  return est;
}

/// Undamped product over the balls with r <= rho(center); larger balls are
/// filtered and counted.
template <std::size_t D>
ClassConstantEstimate ap_loc_constant(const WeightSamples<D>& ws, const Field<D>& rho, const BallFamily<D>& family,
                                      double clip_threshold = 0.01) {
  auto est = detail::euclidean_class<D>(
      "Aloc", ws, family,
      [&](const Ball<D>& b) {
        return b.radius <= detail::rho_at_center(rho, b.center) ? 0.0 : std::numeric_limits<double>::quiet_NaN();
      },
      clip_threshold);
  if (!est.params.count("filtered")) est.params["filtered"] = 0.0;
  return est;
}

/// S-class constants for several damping rates c at once, over metric balls
/// B_rho(x, r) for every (center, radius). Entries are ordered by radius, then
/// by distance of the center from the origin. Balls reaching the boundary
/// layer are skipped.
template <std::size_t D>
std::vector<ClassConstantEstimate> s_class_constants(const WeightSamples<D>& ws, const std::vector<double>& cs, const AgmonSolver<D>& solver,
                                                     const std::vector<Point<D>>& centers, std::vector<double> radii) {
  if (centers.empty() || radii.empty()) throw ConfigurationError("S class needs centers and radii");
  if (!(solver.grid() == ws.grid)) throw ConfigurationError("weight samples and Agmon solver live on different grids");
  for (double c : cs)
    if (!(c > 0.0)) throw ConfigurationError("S class needs c > 0");
  std::sort(radii.begin(), radii.end());
  std::vector<std::size_t> corder(centers.size());
  std::iota(corder.begin(), corder.end(), std::size_t{0});
  std::stable_sort(corder.begin(), corder.end(), [&](std::size_t a, std::size_t b) { return norm<D>(centers[a]) < norm<D>(centers[b]); });
  const std::size_t nc = centers.size(), nr = radii.size();
  // log_product per (radius j, center rank k); NaN when clipped.
  std::vector<double> lp(nc * nr, std::numeric_limits<double>::quiet_NaN());
  parallel_for(nc, [&](std::size_t k) {
    const auto f = solver.solve(centers[corder[k]]);
    const MetricBallIndex<D> index(f);
    const auto pw = index.prefix(ws.w), ps = index.prefix(ws.sigma);
    for (std::size_t j = 0; j < nr; ++j) {
      if (radii[j] > index.clip_radius()) continue;
      const BallSums s{index.integral(pw, radii[j]), index.integral(ps, radii[j]), index.volume(radii[j])};
      lp[j * nc + k] = log_product(s, ws.p);
    }
  });
  std::vector<Ball<D>> balls;
  for (std::size_t j = 0; j < nr; ++j)
    for (std::size_t k = 0; k < nc; ++k) balls.push_back({solver.grid().point(solver.grid().nearest(centers[corder[k]])), radii[j]});
  std::vector<ClassConstantEstimate> out;
  for (double c : cs) {
    ClassConstantEstimate est;
    est.tag = "S";
    est.params["p"] = ws.p;
    est.params["c"] = c;
    est.per_ball.assign(lp.size(), -std::numeric_limits<double>::infinity());
    std::size_t clipped = 0;
    for (std::size_t e = 0; e < lp.size(); ++e) {
      if (std::isnan(lp[e])) {
        ++clipped;
        continue;
      }
      est.per_ball[e] = lp[e] - c * balls[e].radius;
    }
    est.skipped = clipped;
    if (clipped) est.warnings.push_back(std::to_string(clipped) + " metric balls reach the domain boundary, skipped");
    finalize_estimate(est, balls);
    out.push_back(std::move(est));
  }
  return out;
}

template <std::size_t D>
ClassConstantEstimate s_class_constant(const WeightSamples<D>& ws, double c, const AgmonSolver<D>& solver, const std::vector<Point<D>>& centers,
                                       const std::vector<double>& radii) {
  return s_class_constants(ws, {c}, solver, centers, radii).front();
}

/// Centers for S-class families: critical-cover points inside the interior
/// margin, thinned evenly to at most `max_count`.
template <std::size_t D>
std::vector<Point<D>> cover_centers(const Field<D>& rho, double margin, std::size_t max_count) {
  const auto cover = critical_cover(rho, {1.0});
  std::vector<Point<D>> pts;
  for (std::size_t c : cover.centers) {
    const auto x = rho.grid().point(c);
    if (rho.grid().depth(x) >= margin) pts.push_back(x);
  }
  if (pts.size() <= max_count) return pts;
  std::vector<Point<D>> out;
  for (std::size_t k = 0; k < max_count; ++k) out.push_back(pts[k * pts.size() / max_count]);
  return out;
}

/// Balls with centers uniform in the box shrunk by `margin` and radius
/// rho(center) times a uniform factor in [lo, 1]; all admissible for Aloc.
template <std::size_t D>
BallFamily<D> local_ball_family(const Field<D>& rho, std::size_t count, double lo, std::uint64_t seed, double margin) {
  if (!(lo > 0.0) || lo > 1.0) throw ConfigurationError("local radius factor must lie in (0, 1]");
  auto fam = sample_ball_family(rho.grid(), count, {RadiusLaw::Kind::uniform, lo, 1.0}, seed, margin);
  for (auto& b : fam.balls) b.radius *= rho.interpolate(b.center);
  return fam;
}

// Geometric radius ladder r0, r0 q, ..., up to r1.
inline std::vector<double> radius_ladder(double r0, double r1, std::size_t count) {
  std::vector<double> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(count == 1 ? r0 : r0 * std::pow(r1 / r0, static_cast<double>(k) / static_cast<double>(count - 1)));
  return out;
}

struct InclusionParams {
  double p = 2.0;
  std::vector<double> thetas{0.0, 2.0, 5.0, 10.0};
  double k0 = 1.0;
  double c_h1 = 1.0, c_s = 1.0, c_h2 = 1.0;
  // m1 = m1_factor / (k0 + 1) and m2 = m2_factor (k0 + 1).
  double m1_factor = 0.5, m2_factor = 1.5;
};

struct InclusionRow {
  std::string cls;
  std::map<std::string, double> params;
  Verdict verdict = Verdict::undetermined;
  double log_value = 0.0;
  std::vector<TracePoint> trace;
};

struct InclusionReport {
  std::string weight;
  std::vector<InclusionRow> rows;
  bool pass = true;
  std::vector<std::string> failures;
};

/// Chain A_p^{rho,theta} (any theta) -> H^{m1} -> S -> H^{m2}, and S -> Aloc:
/// a plateau in an inner class must be matched by a plateau in the outer one.
/// `local` feeds the Aloc estimate; when empty, `family` is used and filtered.
template <std::size_t D>
InclusionReport inclusion_experiment(const WeightSamples<D>& ws, const InclusionParams& prm, const Field<D>& rho, BallFamily<D> family,
                                     const AgmonSolver<D>& solver, const std::vector<Point<D>>& centers, const std::vector<double>& radii,
                                     BallFamily<D> local = {}) {
  order_by_reach(family.balls);
  if (local.balls.empty()) local = family;
  order_by_reach(local.balls);
  InclusionReport rep;
  rep.weight = ws.source;
  auto add = [&](const ClassConstantEstimate& e) {
    rep.rows.push_back({e.tag, e.params, e.verdict, e.log_value, e.trace});
    return e.verdict == Verdict::plateau;
  };
  bool theta_plateau = false;
  for (double th : prm.thetas) theta_plateau = add(ap_theta_constant(ws, th, rho, family)) || theta_plateau;
  const double m1 = prm.m1_factor / (prm.k0 + 1.0), m2 = prm.m2_factor * (prm.k0 + 1.0);
  const bool h1 = add(h_class_constant(ws, prm.c_h1, m1, rho, family));
  const bool s = add(s_class_constant(ws, prm.c_s, solver, centers, radii));
  const bool h2 = add(h_class_constant(ws, prm.c_h2, m2, rho, family));
  const bool loc = add(ap_loc_constant(ws, rho, local));
  auto implies = [&](bool inner, bool outer, const char* what) {
    if (inner && !outer) {
      rep.pass = false;
      rep.failures.push_back(what);
    }
  };
  implies(theta_plateau, h1, "A_theta plateau but H(m1) does not");
  implies(h1, s, "H(m1) plateau but S does not");
  implies(s, h2, "S plateau but H(m2) does not");
  implies(s, loc, "S plateau but Aloc does not");
  return rep;
}

}  // namespace swlab
