#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "swlab/critical_radius.hpp"
#include "swlab/weights.hpp"

using namespace swlab;

namespace {

BallFamily<3> family3(const Grid<3>& g, std::size_t n, double rlo, double rhi, std::uint64_t seed) {
  auto f = sample_ball_family(g, n, {RadiusLaw::Kind::log_uniform, rlo, rhi}, seed, rhi);
  order_by_reach(f.balls);
  return f;
}

double min_over(const std::vector<double>& v) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : v)
    if (std::isfinite(x)) m = std::min(m, x);
  return m;
}

}  // namespace

TEST(Weight, ParseAndEvaluate) {
  const Point<3> x{1.0, 2.0, 2.0};
  EXPECT_DOUBLE_EQ(parse_weight<3>("one")(x), 1.0);
  EXPECT_NEAR(parse_weight<3>("power:-2")(x), 1.0 / 9.0, 1e-15);
  EXPECT_NEAR(parse_weight<3>("exp-linear:0.5,2")(x), std::exp(1.0), 1e-14);
  EXPECT_NEAR(parse_weight<3>("exp-linear:0.5")(x), std::exp(0.5), 1e-14);
  EXPECT_NEAR(parse_weight<3>("gaussian:-0.1")(x), std::exp(-0.9), 1e-14);
  EXPECT_EQ(parse_weight<3>("power:1.5").describe(), "power:1.5");
  EXPECT_THROW(parse_weight<3>("exp-linear:1,4"), ParseError);
  EXPECT_THROW(parse_weight<3>("cosh:1"), ParseError);
  EXPECT_THROW(parse_weight<3>("power:x"), ParseError);
  EXPECT_THROW(parse_weight<3>("exp-agmon:0.5"), ConfigurationError);
}

TEST(Weight, TabulatedRoundTrip) {
  const auto g = Grid<2>::cube(-1, 1, 8);
  const auto f = Field<2>::sample(g, [](const Point<2>& x) { return 1.0 + x[0] * x[0]; });
  const auto path = (std::filesystem::temp_directory_path() / "swlab_tab_weight.csv").string();
  write_field_csv(f, path, "w");
  const auto w = parse_weight<2>("tab:" + path);
  for (std::size_t i = 0; i < g.size(); i += 5) EXPECT_NEAR(w(g.point(i)), f[i], 1e-12);
  std::filesystem::remove(path);
  EXPECT_THROW(Weight<2>::tabulated(Field<2>(g, 0.0)), WeightValidityError);
}

TEST(Weight, InvalidSamplesNameThePoint) {
  // Odd cell count puts a cell center on the origin.
  const auto g = Grid<3>::cube(-1, 1, 5);
  try {
    sample_weight(Weight<3>::power(-1.0), g, 2.0);
    FAIL();
  } catch (const WeightValidityError& e) {
    EXPECT_NE(std::string(e.what()).find("(0.000000,0.000000,0.000000)"), std::string::npos);
  }
  EXPECT_THROW(sample_weight(Weight<3>::gaussian(1000.0), g, 2.0), WeightValidityError);
  EXPECT_THROW(sample_weight(Weight<3>::one(), g, 1.0), ConfigurationError);
}

TEST(Weight, ExpAgmonFollowsTheDistanceField) {
  const auto g = Grid<2>::cube(-2, 2, 32);
  const AgmonSolver<2> solver(Field<2>(g, 0.5));
  const auto w = parse_weight<2>("exp-agmon:0.25", &solver);
  // u(x) ~ |x - s| / 0.5 for constant rho, s the cell center nearest the origin.
  const auto s = g.point(g.nearest({0.0, 0.0}));
  const double u = std::hypot(1.0 - s[0], s[1]) / 0.5;
  EXPECT_NEAR(w.log_value({1.0, 0.0}), 0.25 * u, 0.25 * u * 0.05);
}

TEST(ClassConstants, UnitWeight) {
  const auto g = Grid<3>::cube(-4, 4, 16);
  const Field<3> rho(g, 0.5);
  const auto ws = sample_weight(Weight<3>::one(), g, 2.0);
  const auto fam = family3(g, 64, 0.2, 1.5, 3);

  const auto th = ap_theta_constant(ws, 0.0, rho, fam);
  EXPECT_NEAR(th.log_value, 0.0, 1e-12);
  const auto loc = ap_loc_constant(ws, rho, fam);
  EXPECT_NEAR(loc.log_value, 0.0, 1e-12);

  // H: 1 / Phi, largest on the smallest r / rho.
  double rmin = std::numeric_limits<double>::infinity();
  for (const auto& b : fam.balls) rmin = std::min(rmin, b.radius);
  const auto h = h_class_constant(ws, 0.7, 1.3, rho, fam);
  EXPECT_NEAR(h.log_value, -0.7 * std::pow(1.0 + rmin / 0.5, 1.3), 1e-12);

  // S: e^{-c r_min}.
  const AgmonSolver<3> solver(rho);
  const std::vector<Point<3>> centers{{0, 0, 0}, {1, -1, 0.5}};
  const auto s = s_class_constant(ws, 0.8, solver, centers, {0.5, 1.0, 2.0});
  EXPECT_NEAR(s.log_value, -0.8 * 0.5, 1e-12);
  EXPECT_EQ(s.per_ball.size(), 6u);
}

TEST(ClassConstants, ExpLinearClosedFormInOneDimension) {
  // Constant rho0: B_rho(x, R) is the interval of half-width R rho0, and the
  // product for e^{bx}, p = 2, is sinh(b R rho0) / (b R rho0) e^{-cR}.
  const double rho0 = 0.5, b = 0.8, c = 0.3;
  const auto g = Grid<1>::cube(-10, 10, 4000);
  const double h = g.spacing()[0];
  const AgmonSolver<1> solver(Field<1>(g, rho0));
  const auto ws = sample_weight(Weight<1>::exp_linear(b), g, 2.0);
  const Point<1> x0{g.point(g.nearest({0.3}))[0]};
  for (int K : {10, 200, 1000}) {
    const double R = (K + 0.5) * h / rho0;  // interval edge at a cell face
    const auto e = s_class_constant(ws, c, solver, {x0}, {R});
    const double a = b * R * rho0;
    const double exact = std::sinh(a) / a * std::exp(-c * R);
    EXPECT_NEAR(e.value() / exact, 1.0, 1e-4) << "K=" << K;
  }
}

TEST(ClassConstants, PowerWeightPlateaus) {
  // |x|^{-d + 1/2} is an A_2 weight in R^3.
  const auto g = Grid<3>::cube(-4, 4, 24);
  const auto ws = sample_weight(Weight<3>::power(-2.5), g, 2.0);
  const auto rho = Field<3>::sample(g, [](const Point<3>& x) { return 1.0 / (1.0 + norm<3>(x)); });
  const auto fam = family3(g, 512, 0.05, 1.5, 11);
  const auto e = ap_theta_constant(ws, 0.0, rho, fam);
  EXPECT_EQ(e.verdict, Verdict::plateau);
  EXPECT_LT(e.value(), 10.0);
}

TEST(ClassConstants, GaussianDivergesInLocalClassOnlyWithoutDamping) {
  // e^{|x|^2} against rho = 1 / (1 + |x|): the Aloc product stays bounded.
  const auto g = Grid<3>::cube(-4, 4, 24);
  const auto ws = sample_weight(Weight<3>::gaussian(1.0), g, 2.0);
  const auto rho = Field<3>::sample(g, [](const Point<3>& x) { return 1.0 / (1.0 + norm<3>(x)); });
  const auto fam = family3(g, 512, 0.05, 1.5, 12);
  const auto loc = ap_loc_constant(ws, rho, fam);
  EXPECT_EQ(loc.verdict, Verdict::plateau);
  EXPECT_GT(loc.params.at("filtered"), 0.0);
  std::size_t filtered = 0;
  for (const auto& b : fam.balls)
    if (b.radius > rho.interpolate(b.center)) ++filtered;
  EXPECT_EQ(static_cast<std::size_t>(loc.params.at("filtered")), filtered);
}

TEST(ClassInvariants, DualityIsExact) {
  const auto g = Grid<3>::cube(-3, 3, 16);
  const auto rho = Field<3>::sample(g, [](const Point<3>& x) { return 1.0 / (1.0 + norm<3>(x)); });
  const auto fam = family3(g, 64, 0.1, 1.0, 5);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto ws = sample_weight(parse_weight<3>("exp-linear:0.7,2"), g, p);
    const auto a = h_class_constant(ws, 1.0, 0.5, rho, fam);
    const auto b = h_class_constant(dual(ws), 1.0, 0.5, rho, fam);
    for (std::size_t i = 0; i < fam.balls.size(); ++i) EXPECT_NEAR(a.per_ball[i], b.per_ball[i], 1e-11) << p;
  }
}

TEST(ClassInvariants, ScalingMonotonicityAndJensenFloor) {
  const auto g = Grid<3>::cube(-3, 3, 16);
  const auto rho = Field<3>::sample(g, [](const Point<3>& x) { return 1.0 / (1.0 + norm<3>(x)); });
  const auto fam = family3(g, 96, 0.1, 1.0, 6);
  const auto ws = sample_weight(Weight<3>::gaussian(0.3), g, 2.5);
  auto scaled = ws;
  for (auto& v : scaled.w) v *= 42.0;
  for (auto& v : scaled.sigma) v *= std::pow(42.0, -1.0 / 1.5);
  const auto a = ap_theta_constant(ws, 0.0, rho, fam), b = ap_theta_constant(scaled, 0.0, rho, fam);
  for (std::size_t i = 0; i < fam.balls.size(); ++i) EXPECT_NEAR(a.per_ball[i], b.per_ball[i], 1e-11);
  EXPECT_GE(min_over(a.per_ball), -1e-12);

  const auto h1 = h_class_constant(ws, 0.5, 1.0, rho, fam), h2 = h_class_constant(ws, 1.0, 1.0, rho, fam),
             h3 = h_class_constant(ws, 1.0, 2.0, rho, fam);
  const auto t1 = ap_theta_constant(ws, 1.0, rho, fam), t2 = ap_theta_constant(ws, 3.0, rho, fam);
  for (std::size_t i = 0; i < fam.balls.size(); ++i) {
    EXPECT_GE(h1.per_ball[i], h2.per_ball[i]);
    EXPECT_GE(h2.per_ball[i], h3.per_ball[i]);
    EXPECT_GE(t1.per_ball[i], t2.per_ball[i]);
  }

  const AgmonSolver<3> solver(rho);
  const auto s = s_class_constants(ws, {0.25, 0.5, 1.0}, solver, {{0, 0, 0}, {0.5, 0.5, 0}}, {0.5, 1.0, 2.0});
  for (std::size_t i = 0; i < s[0].per_ball.size(); ++i) {
    EXPECT_GE(s[0].per_ball[i], s[1].per_ball[i]);
    EXPECT_GE(s[1].per_ball[i], s[2].per_ball[i]);
  }
}

TEST(ClassInvariants, ClippedMetricBallsAreSkipped) {
  const auto g = Grid<2>::cube(-1, 1, 32);
  const AgmonSolver<2> solver(Field<2>(g, 0.25));
  const auto ws = sample_weight(Weight<2>::one(), g, 2.0);
  const auto e = s_class_constant(ws, 1.0, solver, {{0, 0}}, {1.0, 2.0, 100.0});
  EXPECT_EQ(e.skipped, 1u);
  EXPECT_FALSE(e.warnings.empty());
}

TEST(Inclusion, PowerWeightPassesEverywhere) {
  const auto g = Grid<3>::cube(-4, 4, 24);
  const auto rho = Field<3>::sample(g, [](const Point<3>& x) { return 1.0 / (1.0 + norm<3>(x)); });
  const auto ws = sample_weight(Weight<3>::power(-1.0), g, 2.0);
  const AgmonSolver<3> solver(rho);
  InclusionParams prm;
  const auto fam = sample_ball_family(g, 256, {RadiusLaw::Kind::log_uniform, 0.05, 1.5}, 8, 1.5);
  const auto rep = inclusion_experiment(ws, prm, rho, fam, solver, cover_centers(rho, 2.0, 8), radius_ladder(0.25, 4.0, 6));
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.rows.size(), prm.thetas.size() + 4);
  for (const auto& r : rep.rows)
    if (r.cls == "Aloc") EXPECT_EQ(r.verdict, Verdict::plateau);
}

TEST(BallSums, SubCellBallsUseTheWeightFunction) {
  // Average of e^{b x1} over B(c, r) in three dimensions:
  // e^{b c1} 3 (a cosh a - sinh a) / a^3 with a = b r.
  const auto g = Grid<3>::cube(-2, 2, 8);
  const double b = 3.0, r = 0.1;
  auto ws = sample_weight(Weight<3>::exp_linear(b, 0), g, 2.0);
  ws.evaluator_below = g.cell_diagonal();
  const Point<3> c{0.31, -0.2, 0.05};
  const auto s = euclidean_sums(ws, Ball<3>{c, r});
  const double a = b * r, shape = 3.0 * (a * std::cosh(a) - std::sinh(a)) / (a * a * a);
  const double vol = 4.0 * std::numbers::pi / 3.0 * r * r * r;
  EXPECT_NEAR(s.volume / vol, 1.0, 1e-12);
  EXPECT_NEAR(s.w / s.volume, std::exp(b * c[0]) * shape, 1e-10 * std::exp(b * c[0]));
  EXPECT_NEAR(s.sigma / s.volume, std::exp(-b * c[0]) * shape, 1e-10 * std::exp(-b * c[0]));
}
