#include <gtest/gtest.h>

#include <array>
#include <chrono>
#include <cmath>
#include <numbers>

#include "swlab/operators.hpp"

using namespace swlab;

namespace {

std::vector<std::size_t> probe_cells(const Grid<2>& g, std::size_t count, std::uint64_t seed, double margin) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < count; ++k) {
    CounterRng rng(seed, k);
    Point<2> x{rng.uniform(g.lo()[0] + margin, g.hi()[0] - margin), rng.uniform(g.lo()[1] + margin, g.hi()[1] - margin)};
    out.push_back(g.nearest(x));
  }
  return out;
}

Field<2> random_field(const Grid<2>& g, std::uint64_t seed) {
  Field<2> f(g);
  CounterRng rng(seed, 0);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = rng.uniform() < 0.3 ? rng.uniform() : 0.0;
  return f;
}

// Damped averages over {y : |y - z| / rho0 < t}, by direct loops.
double brute_centered(const Field<2>& f, std::size_t x, double rho0, double c, const std::vector<double>& radii) {
  const auto& g = f.grid();
  double best = 0.0;
  for (double t : radii) {
    double s = 0.0;
    std::size_t n = 0;
    bool clipped = false;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (distance<2>(g.point(i), g.point(x)) / rho0 < t) {
        s += f[i];
        ++n;
        if (g.on_boundary_layer(g.unravel(i))) clipped = true;
      }
    // Balls holding a boundary-layer cell are skipped, as in the engine.
    if (clipped || n == 0) continue;
    best = std::max(best, s / static_cast<double>(n) * std::exp(-c * t));
  }
  return best;
}

double brute_uncentered(const Field<2>& f, std::size_t x, const std::vector<std::size_t>& centers, double rho0, double c,
                        const std::vector<double>& radii) {
  const auto& g = f.grid();
  double best = 0.0;
  for (std::size_t z : centers)
    for (double t : radii) {
      if (!(distance<2>(g.point(x), g.point(z)) / rho0 < t)) continue;
      double s = 0.0;
      std::size_t n = 0;
      bool clipped = false;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (distance<2>(g.point(i), g.point(z)) / rho0 < t) {
          s += f[i];
          ++n;
          if (g.on_boundary_layer(g.unravel(i))) clipped = true;
        }
      if (clipped || n == 0) continue;
      best = std::max(best, s / static_cast<double>(n) * std::exp(-c * t));
    }
  return best;
}

}  // namespace

TEST(MaximalAdapted, UnitInputGivesSmallestRadiusDamping) {
  const auto g = Grid<2>::cube(-2, 2, 32);
  const auto rho = Field<2>::sample(g, [](const Point<2>& x) { return 1.0 / (1.0 + norm<2>(x)); });
  const AgmonSolver<2> solver(rho);
  const auto radii = default_metric_radii(rho, 20);
  const auto eval = probe_cells(g, 10, 1, 0.5);
  const auto r = maximal_adapted(Field<2>(g, 1.0), agmon_distances(solver), 0.7, MaximalMode::centered, radii, eval);
  for (double v : r.values) EXPECT_NEAR(v, std::exp(-0.7 * radii.front()), 1e-14);
  const auto u = maximal_adapted(Field<2>(g, 1.0), agmon_distances(solver), 0.7, MaximalMode::uncentered, radii, eval, eval);
  for (double v : u.values) EXPECT_NEAR(v, std::exp(-0.7 * radii.front()), 1e-14);
  EXPECT_FALSE(r.warnings.empty());  // sup sits at the first radius
}

TEST(MaximalAdapted, ConstantRhoMatchesDirectEuclideanImplementation) {
  const double rho0 = 0.5, c = 0.3;
  const auto g = Grid<2>::cube(-2, 2, 24);
  const auto f = random_field(g, 4);
  const auto radii = log_grid(0.1, 6.0, 12);
  const auto eval = probe_cells(g, 12, 2, 0.4);
  const auto panel = probe_cells(g, 20, 3, 0.2);
  const auto balls = euclidean_distances(g, rho0);
  const auto cen = maximal_adapted(f, balls, c, MaximalMode::centered, radii, eval);
  const auto unc = maximal_adapted(f, balls, c, MaximalMode::uncentered, radii, eval, panel);
  auto centers = panel;
  centers.insert(centers.end(), eval.begin(), eval.end());
  for (std::size_t e = 0; e < eval.size(); ++e) {
    EXPECT_NEAR(cen.values[e], brute_centered(f, eval[e], rho0, c, radii), 1e-12);
    EXPECT_NEAR(unc.values[e], brute_uncentered(f, eval[e], centers, rho0, c, radii), 1e-12);
    EXPECT_GE(unc.values[e], cen.values[e]);
  }
}

TEST(MaximalAdapted, SingleCellIndicatorDecaysWithVolumeAndDamping) {
  const auto g = Grid<2>::cube(-2, 2, 32);
  const auto rho = Field<2>::sample(g, [](const Point<2>& x) { return 1.0 / (1.0 + norm<2>(x)); });
  const AgmonSolver<2> solver(rho);
  const std::size_t cell = g.nearest({0.1, 0.1});
  Field<2> f(g, 0.0);
  f[cell] = 1.0;
  const double c = 0.5;
  const auto radii = log_grid(0.05, 10.0, 30);
  std::vector<std::size_t> probes;
  for (const Point<2> x : {Point<2>{0.5, 0.1}, {-0.6, 0.2}, {0.1, -0.9}, {0.8, 0.8}, {-1.0, -0.5}}) probes.push_back(g.nearest(x));
  const auto r = maximal_adapted(f, agmon_distances(solver), c, MaximalMode::centered, radii, probes);
  for (std::size_t e = 0; e < probes.size(); ++e) {
    const auto field = solver.solve(g.point(probes[e]));
    const MetricBallIndex<2> index(field);
    const double t = r.argmax[e];
    ASSERT_TRUE(std::isfinite(t));
    EXPECT_GT(t, field.u[cell]);
    EXPECT_NEAR(r.values[e], 1.0 / (index.count(t) * std::exp(c * t)), 1e-14);
    // Smallest admissible radius on the grid that reaches the cell.
    const auto k = std::upper_bound(radii.begin(), radii.end(), field.u[cell]) - radii.begin();
    EXPECT_GE(r.values[e], 1.0 / (index.count(radii[k]) * std::exp(c * radii[k])) * (1 - 1e-14));
  }
}

TEST(MaximalPhi, UnitInputAndSmallExponentLimit) {
  const auto g = Grid<2>::cube(-2, 2, 24);
  const auto rho = Field<2>::sample(g, [](const Point<2>& x) { return 1.0 / (1.0 + norm<2>(x)); });
  const auto radii = log_grid(g.min_spacing(), 4.0, 20);
  const auto eval = probe_cells(g, 10, 5, 0.5);
  const auto one = maximal_phi(Field<2>(g, 1.0), rho, 1.0, 2.0, radii, eval);
  for (std::size_t e = 0; e < eval.size(); ++e)
    EXPECT_NEAR(one.values[e], std::exp(-std::pow(1.0 + radii.front() / rho[eval[e]], 2.0)), 1e-14);

  // m -> 0: Phi -> e^c, leaving the undamped Euclidean maximal function.
  const auto f = random_field(g, 6);
  const double c = 0.8, m = 1e-3;
  const auto lim = maximal_phi(f, rho, c, m, radii, eval);
  for (std::size_t e = 0; e < eval.size(); ++e) {
    const double classical = brute_centered(f, eval[e], 1.0, 0.0, radii);
    const double slack = c * m * std::log1p(radii.back() / rho.min()) + 1e-12;
    EXPECT_NEAR(lim.values[e] / (std::exp(-c) * classical), 1.0, slack);
  }
}

TEST(MaximalOperators, SublinearHomogeneousMonotone) {
  const auto g = Grid<2>::cube(-2, 2, 24);
  const auto rho = Field<2>::sample(g, [](const Point<2>& x) { return 0.6 / (1.0 + 0.5 * norm<2>(x)); });
  const AgmonSolver<2> solver(rho);
  const auto radii = default_metric_radii(rho, 15);
  const auto eval = probe_cells(g, 15, 7, 0.3);
  const auto f = random_field(g, 8), h = random_field(g, 9);
  Field<2> sum(g), scaled(g), bigger(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    sum[i] = f[i] + h[i];
    scaled[i] = 3.5 * f[i];
    bigger[i] = std::max(f[i], h[i]);
  }
  const auto balls = agmon_distances(solver);
  for (auto mode : {MaximalMode::centered, MaximalMode::uncentered}) {
    auto M = [&](const Field<2>& x) { return maximal_adapted(x, balls, 0.4, mode, radii, eval, eval).values; };
    auto P = [&](const Field<2>& x) { return maximal_phi(x, rho, 0.4, 1.5, radii, eval, mode, eval).values; };
    for (auto op : {std::function<std::vector<double>(const Field<2>&)>(M), std::function<std::vector<double>(const Field<2>&)>(P)}) {
      const auto a = op(f), b = op(h), s = op(sum), l = op(scaled), big = op(bigger);
      for (std::size_t e = 0; e < eval.size(); ++e) {
        EXPECT_LE(s[e], (a[e] + b[e]) * (1 + 1e-12));
        EXPECT_NEAR(l[e], 3.5 * a[e], 1e-12 * l[e]);
        EXPECT_GE(big[e], a[e] * (1 - 1e-12));
      }
    }
  }
}

TEST(HeatMaximal, ConstantUnitInputAttainedAtFirstTime) {
  const auto g = Grid<2>::cube(-3, 3, 30);
  const auto ts = log_grid(0.01, 1.0, 10);
  const std::vector<std::size_t> eval{g.nearest({0, 0}), g.nearest({1, -1})};
  const auto r = heat_maximal(Field<2>(g, 1.0), heat_constant_family<2>(2.0), ts, eval);
  for (std::size_t e = 0; e < eval.size(); ++e) {
    EXPECT_EQ(r.argmax[e], ts.front());
    // Mass of the Gaussian at t_min is 1 up to the cell-sum error.
    EXPECT_NEAR(r.values[e], std::exp(-2.0 * ts.front()), 1e-3);
  }
}

TEST(HeatMaximal, HarmonicIntervalAgainstClosedForm) {
  // int_{-1}^{1} k_t(0, y) dy = (2 pi t)^{-1/2} sqrt(pi / b) erf(sqrt(b)), b = 1/(2t) + alpha(t).
  const auto ts = log_grid(0.05, 5.0, 20);
  double oracle = 0.0;
  for (double t : ts) {
    const double b = 1.0 / (2 * t) + kernels::mehler_alpha(t);
    oracle = std::max(oracle, std::pow(2 * std::numbers::pi * t, -0.5) * std::sqrt(std::numbers::pi / b) * std::erf(std::sqrt(b)));
  }
  const auto g = Grid<1>::cube(-4, 4, 4000);
  const auto f = Field<1>::sample(g, [](const Point<1>& x) { return std::abs(x[0]) < 1.0 ? 1.0 : 0.0; });
  const auto r = heat_maximal(f, mehler_family<1>(), ts, {g.nearest({0.0})});
  EXPECT_NEAR(r.values[0], oracle, 2e-3);
  EXPECT_NEAR(oracle, 0.999368335813556, 1e-12);
}

TEST(HeatMaximal, CellIntegralsHoldBelowTheSpacing) {
  // Near x = 0 the whole-space Mehler mass is about (1 + 2 alpha t)^{-d/2}; point
  // sampling at t = 1e-3 on h = 0.5 would give (2 pi t)^{-3/2} h^3 = 5.6.
  const auto g = Grid<3>::cube(-4, 4, 16);
  const std::vector<std::size_t> eval{g.nearest({0.25, 0.25, 0.25})};
  const Point<3> x = g.point(eval[0]);
  for (double t : {1e-3, 0.1, 2.0}) {
    const auto r = heat_maximal(Field<3>(g, 1.0), mehler_family<3>(), {t}, eval);
    const double al = kernels::mehler_alpha(t), b = 1.0 / (2 * t) + al;
    const double nx = 3 * 0.25 * 0.25;
    // Sum of the cell integrals is the integral over the box [-4, 4]^3.
    const double mu = 0.25 / (2 * b * t), sb = std::sqrt(b);
    const double box = std::pow(0.5 * (std::erf(sb * (4 - mu)) + std::erf(sb * (4 + mu))), 3);
    const double whole = box * std::pow(2 * t * b, -1.5) * std::exp(nx * (1.0 / (4 * b * t * t) - 1.0 / (2 * t) - al));
    EXPECT_NEAR(r.values[0], whole, 1e-6 * whole) << t;
    EXPECT_LE(r.values[0], 1.0);
  }
  const auto c = heat_maximal(Field<3>(g, 1.0), heat_constant_family<3>(0.5), {1e-4}, eval);
  EXPECT_NEAR(c.values[0], std::exp(-0.5e-4), 1e-12);
}

TEST(HeatMaximal, GaussianIntervalTails) {
  // Far tails go through erfc; compare with Simpson on the interval.
  for (auto [b, mu, lo, hi] : {std::array{2.0, 0.0, 3.0, 3.5}, std::array{2.0, 0.0, -3.5, -3.0}, std::array{0.3, 1.0, -1.0, 2.0}}) {
    double s = 0.0;
    const int n = 2000;
    const double h = (hi - lo) / n;
    for (int i = 0; i <= n; ++i) {
      const double y = lo + i * h;
      s += (i == 0 || i == n ? 1 : i % 2 ? 4 : 2) * std::exp(-b * (y - mu) * (y - mu));
    }
    s *= h / 3;
    EXPECT_NEAR(detail::gaussian_interval(b, mu, lo, hi) / s, 1.0, 1e-10);
  }
}

TEST(HeatMaximal, HarmonicDominatedByFree) {
  // k^Mehler_t <= free heat kernel at time t/2, pointwise.
  const auto g = Grid<2>::cube(-3, 3, 24);
  const auto f = random_field(Grid<2>::cube(-3, 3, 24), 10);
  const auto ts = log_grid(0.02, 4.0, 10);
  std::vector<double> half(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) half[k] = ts[k] / 2;
  const auto eval = probe_cells(g, 10, 11, 0.5);
  const auto v = heat_maximal(f, mehler_family<2>(), ts, eval);
  const auto w = heat_maximal(f, heat_constant_family<2>(0.0), half, eval);
  for (std::size_t e = 0; e < eval.size(); ++e) EXPECT_LE(v.values[e], w.values[e] * (1 + 1e-12));
}

TEST(HeatMaximal, DiscreteSemigroupMatchesApply) {
  const auto g = Grid<1>::cube(-10, 10, 400);
  std::vector<double> V(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) V[i] = 2.0 + std::sin(g.point(i)[0]);
  const kernels::DiscreteSemigroup sg(g, V);
  std::vector<double> f(g.size(), 0.0);
  for (std::size_t i = 180; i < 220; ++i) f[i] = 1.0;
  const auto ts = log_grid(0.01, 2.0, 10);
  const auto r = heat_maximal(sg, f, ts);
  Eigen::VectorXd fv = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  for (std::size_t i : {50u, 200u, 300u}) {
    double best = 0.0;
    for (double t : ts) best = std::max(best, sg.apply(t, fv)[static_cast<Eigen::Index>(i)]);
    EXPECT_DOUBLE_EQ(r.values[i], best);
  }
}

TEST(Riesz, LinearOddAndTranslationEquivariant) {
  const auto g = Grid<3>::cube(-2, 2, 16);
  const RieszConstant<3> R(g, 1.0, 0);
  auto bump = [&](Point<3> c, double s) {
    return Field<3>::sample(g, [=](const Point<3>& x) {
      const double r2 = (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]) + (x[2] - c[2]) * (x[2] - c[2]);
      return r2 < 1.0 ? std::exp(-r2 / s) : 0.0;
    });
  };
  const auto f = bump({0.125, 0.125, 0.125}, 0.2), h = bump({-0.375, 0.125, 0.625}, 0.1);
  std::vector<double> comb(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) comb[i] = 2.0 * f[i] - 0.7 * h[i];
  const auto a = R.apply(f.values()), b = R.apply(h.values()), c = R.apply(comb);
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(c[i], 2.0 * a[i] - 0.7 * b[i], 1e-12 * scale);

  // f is even about its center in x1, so Rf vanishes there.
  EXPECT_NEAR(a[g.nearest({0.125, 0.125, 0.125})], 0.0, 1e-12 * scale);

  // Shift by two cells along x2.
  const auto fs = bump({0.125, 0.625, 0.125}, 0.2);
  const auto as = R.apply(fs.values());
  for (const Point<3> x : {Point<3>{0.375, -0.125, 0.125}, {-0.625, 0.125, -0.375}, {0.875, 0.375, 0.625}}) {
    Point<3> y = x;
    y[1] += 0.5;
    EXPECT_NEAR(as[g.nearest(y)], a[g.nearest(x)], 1e-12 * scale);
  }
}

TEST(Riesz, FarFieldDecayRate) {
  const double N = 1.0;
  const auto g = Grid<3>::cube(-6, 6, 48);
  const auto f = Field<3>::sample(g, [](const Point<3>& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    return r2 < 0.25 ? std::exp(-r2 / 0.05) : 0.0;
  });
  const RieszConstant<3> R(g, N, 0);
  std::vector<std::size_t> ray;
  std::vector<double> rs;
  for (double r = 1.625; r < 5.0; r += 0.25) {
    ray.push_back(g.nearest({r, 0.125, 0.125}));
    rs.push_back(norm<3>(g.point(ray.back())));
  }
  const auto v = R.apply(f.values(), ray);
  // Least-squares slope of log(|Rf| / s(sqrt(N) r)) against r.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < rs.size(); ++k) {
    const double y = std::log(std::abs(v[k]) / kernels::s_function(std::sqrt(N) * rs[k], 3));
    sx += rs[k];
    sy += y;
    sxx += rs[k] * rs[k];
    sxy += rs[k] * y;
  }
  const double n = static_cast<double>(rs.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, -std::sqrt(N), 0.05 * std::sqrt(N));
}

TEST(NormBound, IdentityAndScalingInvariance) {
  const auto g = Grid<3>::cube(-2, 2, 12);
  const auto ws = sample_weight(Weight<3>::exp_linear(1.5), g, 2.0);
  std::vector<Ball<3>> panel{{{0, 0, 0}, 0.8}, {{-1, 0.3, 0}, 0.5}, {{1, -0.5, 0.5}, 0.6}};
  auto cands = adversarial_candidates(ws, panel);
  const auto more = random_candidates(g, 3, 1);
  cands.insert(cands.end(), more.begin(), more.end());
  const auto id = weighted_norm_lower_bound(identity_operator(), ws, cands);
  for (double r : id.ratios) EXPECT_EQ(r, 1.0);

  auto R = std::make_shared<const RieszConstant<3>>(g, 1.0, 0);
  const auto T = riesz_operator<3>(R);
  const auto a = weighted_norm_lower_bound(T, ws, adversarial_candidates(ws, panel));
  auto scaled = ws;
  for (auto& v : scaled.w) v *= 17.0;
  for (auto& v : scaled.sigma) v /= 17.0;
  const auto b = weighted_norm_lower_bound(T, scaled, adversarial_candidates(scaled, panel));
  ASSERT_EQ(a.ratios.size(), b.ratios.size());
  for (std::size_t k = 0; k < a.ratios.size(); ++k) EXPECT_NEAR(a.ratios[k], b.ratios[k], 1e-12 * a.ratios[k]);
  EXPECT_EQ(a.index, b.index);
}

TEST(NormBound, DampedMaximalBelowUndampedCeiling) {
  const auto g = Grid<2>::cube(-1, 1, 12);
  const auto ws = sample_weight(Weight<2>::one(), g, 2.0);
  const auto radii = log_grid(0.1, 4.0, 10);
  const auto balls = euclidean_distances(g, 0.5);
  std::vector<Ball<2>> panel{{{0, 0}, 0.3}, {{0.4, -0.2}, 0.2}};
  auto cands = indicator_candidates(g, panel);
  const auto more = random_candidates(g, 2, 3);
  cands.insert(cands.end(), more.begin(), more.end());
  const auto damped = weighted_norm_lower_bound(maximal_adapted_operator(g, balls, 5.0, radii), ws, cands);
  const auto plain = weighted_norm_lower_bound(maximal_adapted_operator(g, balls, 0.0, radii), ws, cands);
  for (std::size_t k = 0; k < cands.size(); ++k) EXPECT_LE(damped.ratios[k], std::exp(-5.0 * radii.front()) * plain.ratios[k] * (1 + 1e-12));
  EXPECT_GE(plain.bound, 1.0);
}
