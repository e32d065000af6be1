#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "swlab/core/ball.hpp"
#include "swlab/core/field.hpp"
#include "swlab/core/parallel.hpp"
#include "swlab/core/spec.hpp"

using namespace swlab;

namespace {

// Composite Simpson on [a, b] with n (even) panels.
template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(Grid, CountsAndPoints) {
  auto g = Grid<3>::with_spacing({-4, -4, -4}, {4, 4, 4}, {0.25, 0.25, 0.5});
  EXPECT_EQ(g.count(0), 32u);
  EXPECT_EQ(g.count(2), 16u);
  EXPECT_EQ(g.size(), 32u * 32u * 16u);
  EXPECT_DOUBLE_EQ(g.point(std::size_t{0})[0], -4 + 0.125);
  for (std::size_t i : {0ul, 77ul, g.size() - 1}) EXPECT_EQ(g.ravel(g.unravel(i)), i);
  EXPECT_EQ(g.nearest(g.point(std::size_t{1234})), 1234u);
}

TEST(Grid, SpecParsing) {
  const auto spec = parse_grid_spec("dim:2;lo:-1,-2;hi:1,2;h:0.5");
  const auto g = spec.make<2>();
  EXPECT_EQ(g.count(0), 4u);
  EXPECT_EQ(g.count(1), 8u);
  EXPECT_THROW(parse_grid_spec("dim:2;lo:-1;hi:1"), ParseError);
  EXPECT_THROW(parse_grid_spec("dim:4;lo:-1;hi:1;h:1"), ParseError);
  try {
    parse_grid_spec("dim:3;lo:a;hi:1;h:1");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "lo");
  }
  EXPECT_THROW(spec.make<3>(), ParseError);
}

TEST(BallIntegral, UnitBallVolume) {
  const auto g = Grid<3>::cube(-2, 2, 64);
  BallQuadrature q;
  q.fractional = true;
  const auto r = integrate_ball(g, [](const Point<3>&) { return 1.0; }, {0.013, -0.021, 0.007}, 1.0, q);
  EXPECT_NEAR(r.value, 4.0 * std::numbers::pi / 3.0, 1e-2);
  EXPECT_EQ(r.clipped_fraction, 0.0);
}

TEST(BallIntegral, ConstantIntegrandIsExactForSphericalRule) {
  const auto g = Grid<3>::cube(-4, 4, 8);
  BallQuadrature q;
  q.method = BallMethod::spherical;
  const double r = 1.7, N = 3.0;
  const auto v = integrate_ball(g, [&](const Point<3>&) { return N; }, {0.5, 0.1, -0.2}, r, q);
  EXPECT_NEAR(v.value, N * unit_ball_volume(3) * r * r * r, 1e-12 * v.value);
}

TEST(BallIntegral, SquaredNormAgainstRadialOracle) {
  const double oracle = simpson([](double r) { return 4.0 * std::numbers::pi * std::pow(r, 4); }, 0.0, 1.0, 2000);
  const auto g = Grid<3>::cube(-2, 2, 80);
  auto f = [](const Point<3>& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; };
  BallQuadrature sph;
  sph.method = BallMethod::spherical;
  EXPECT_NEAR(integrate_ball(g, f, {0, 0, 0}, 1.0, sph).value, oracle, 1e-10);
  BallQuadrature cell;
  cell.fractional = true;
  EXPECT_NEAR(integrate_ball(g, f, {0, 0, 0}, 1.0, cell).value, oracle, 2e-2);
}

TEST(BallIntegral, MonteCarloAndCellSumAgree) {
  const auto g = Grid<3>::cube(-3, 3, 96);
  auto f = [](const Point<3>& x) { return std::exp(-x[0] * x[0]) * (2.0 + std::sin(x[1])); };
  BallQuadrature cell;
  cell.fractional = true;
  BallQuadrature mc;
  mc.method = BallMethod::monte_carlo;
  mc.samples = 400000;
  mc.seed = 11;
  const auto a = integrate_ball(g, f, {0.3, -0.2, 0.1}, 1.2, cell).value;
  const auto b = integrate_ball(g, f, {0.3, -0.2, 0.1}, 1.2, mc).value;
  // Cell-sum tolerance ~ O(h) boundary layer; Monte-Carlo ~ 4 standard errors.
  EXPECT_NEAR(a, b, std::max(0.02 * a, 4.0 * 1.2 * std::sqrt(1.0 / 400000.0) * a));
}

TEST(BallIntegral, Additivity) {
  const auto g = Grid<3>::cube(-3, 3, 40);
  auto f = [](const Point<3>& x) { return 1.0 + x[0] * x[0]; };
  auto h = [](const Point<3>& x) { return std::cos(x[2]) + 2.0; };
  for (auto m : {BallMethod::cell_sum, BallMethod::monte_carlo, BallMethod::spherical}) {
    BallQuadrature q;
    q.method = m;
    q.seed = 5;
    const Point<3> c{0.2, 0.1, -0.4};
    const double a = integrate_ball(g, f, c, 1.1, q).value;
    const double b = integrate_ball(g, h, c, 1.1, q).value;
    const double s = integrate_ball(g, [&](const Point<3>& x) { return f(x) + h(x); }, c, 1.1, q).value;
    EXPECT_NEAR(s, a + b, 1e-12 * std::abs(s));
  }
}

TEST(BallIntegral, VolumeErrorDecreasesUnderRefinement) {
  const double exact = 4.0 * std::numbers::pi / 3.0;
  BallQuadrature q;
  q.fractional = true;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n : {16, 32, 64, 128}) {
    const auto g = Grid<3>::cube(-1.5, 1.5, n);
    const double err = std::abs(integrate_ball(g, [](const Point<3>&) { return 1.0; }, {0.0123, 0.0456, -0.0789}, 1.0, q).value - exact);
    EXPECT_LT(err, prev) << "n = " << n;
    prev = err;
  }
}

TEST(BallIntegral, ClippingAndCoverage) {
  const auto g = Grid<3>::cube(0, 4, 16);
  const auto r = integrate_ball(g, [](const Point<3>&) { return 1.0; }, {0.0, 2.0, 2.0}, 1.0);
  EXPECT_NEAR(r.clipped_fraction, 0.5, 0.02);
  EXPECT_THROW(integrate_ball(g, [](const Point<3>&) { return 1.0; }, {-5.0, 2.0, 2.0}, 1.0), DomainCoverageError);
  EXPECT_THROW(integrate_ball(g, [](const Point<3>&) { return NAN; }, {2.0, 2.0, 2.0}, 1.0), EvaluationError);
}

TEST(BallFamily, GenerationContract) {
  const auto g = Grid<3>::cube(-4, 4, 32);
  RadiusLaw law{RadiusLaw::Kind::log_uniform, 0.05, 2.0};
  EXPECT_THROW(sample_ball_family(g, 0, law, 7), ConfigurationError);
  EXPECT_THROW(sample_ball_family(g, 10, law, 7, 4.0), ConfigurationError);
  const auto a = sample_ball_family(g, 200, law, 7);
  const auto b = sample_ball_family(g, 200, law, 7);
  ASSERT_EQ(a.balls.size(), 200u);
  for (std::size_t i = 0; i < 200; ++i) {
    EXPECT_EQ(a.balls[i].center, b.balls[i].center);
    EXPECT_EQ(a.balls[i].radius, b.balls[i].radius);
    EXPECT_TRUE(g.contains(a.balls[i].center));
    EXPECT_GE(a.balls[i].radius, 0.05);
    EXPECT_LE(a.balls[i].radius, 2.0);
  }
  const auto c = sample_ball_family(g, 200, law, 8);
  EXPECT_NE(a.balls[0].center, c.balls[0].center);
}

TEST(Field, InterpolationReproducesLinearFunctions) {
  const auto g = Grid<2>::cube(-1, 1, 9);
  const auto f = Field<2>::sample(g, [](const Point<2>& x) { return 2.0 * x[0] - x[1] + 0.5; });
  EXPECT_NEAR(f.interpolate({0.1234, -0.377}), 2.0 * 0.1234 + 0.377 + 0.5, 1e-12);
}

TEST(Parallel, ResultsIndependentOfWorkerCount) {
  std::vector<double> a(1000), b(1000);
  set_worker_count(1);
  parallel_for(a.size(), [&](std::size_t i) { a[i] = std::sin(static_cast<double>(i)); });
  set_worker_count(7);
  parallel_for(b.size(), [&](std::size_t i) { b[i] = std::sin(static_cast<double>(i)); });
  set_worker_count(0);
  EXPECT_EQ(a, b);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 3) throw std::runtime_error("x"); }), std::runtime_error);
}
