#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "swlab/potentials.hpp"

using namespace swlab;

namespace {

template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

BallFamily<3> single(const Point<3>& c, double r) {
  BallFamily<3> f;
  f.balls.push_back({c, r});
  return f;
}

}  // namespace

TEST(Potential, EvaluateExamples) {
  EXPECT_EQ(Potential<3>::constant(4.0)({1.5, -2.0, 7.0}), 4.0);
  EXPECT_EQ(Potential<3>::harmonic()({1, 2, 2}), 9.0);
  const auto P = parse_potential<3>("poly:1,2,2,0");
  EXPECT_EQ(P({2, 3, 0}), 36.0);
  EXPECT_EQ(parse_potential<3>("expr:x1^2*x2^2")({2, 3, 0}), 36.0);
  EXPECT_EQ(parse_potential<2>("const:2.5")({0, 0}), 2.5);
  EXPECT_TRUE(parse_potential<3>("harmonic").is_radial());
  EXPECT_TRUE(parse_potential<3>("expr:r^2+1").is_radial());
  EXPECT_FALSE(P.is_radial());
}

TEST(Potential, ValidityAndParseErrors) {
  EXPECT_THROW(Potential<3>::constant(-1.0), PotentialValidityError);
  const auto neg = parse_potential<3>("poly:1,1,0,0");
  EXPECT_THROW(neg({-1.0, 0.0, 0.0}), PotentialValidityError);
  EXPECT_THROW(neg.validate_on(Grid<3>::cube(-1, 1, 4)), PotentialValidityError);
  EXPECT_NO_THROW(Potential<3>::harmonic().validate_on(Grid<3>::cube(-1, 1, 4)));
  EXPECT_THROW(parse_potential<3>("poly:1,2"), ParseError);
  EXPECT_THROW(parse_potential<3>("poly:1,-2,0,0"), ParseError);
  EXPECT_THROW(parse_potential<3>("cubic"), ParseError);
  EXPECT_THROW(parse_potential<2>("expr:x3"), ParseError);
  try {
    parse_potential<3>("const:abc");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "potential");
  }
}

TEST(Potential, PolynomialDerivatives) {
  // P = 3 x1^2 x2 + x3^4
  const Polynomial<3> P({{3.0, {2, 1, 0}}, {1.0, {0, 0, 4}}});
  EXPECT_EQ(P.degree(), 4);
  const Point<3> x{1.5, -2.0, 0.5};
  EXPECT_DOUBLE_EQ(P.derivative({1, 0, 0})(x), 6.0 * 1.5 * -2.0);
  EXPECT_DOUBLE_EQ(P.derivative({2, 1, 0})(x), 6.0);
  EXPECT_DOUBLE_EQ(P.derivative({0, 0, 3})(x), 24.0 * 0.5);
  EXPECT_TRUE(P.derivative({3, 0, 0}).terms().empty());
}

TEST(Potential, TabulatedRoundTrip) {
  const auto g = Grid<3>::cube(-1, 1, 6);
  const auto f = Field<3>::sample(g, [](const Point<3>& x) { return 1.0 + x[0] * x[0] + 0.5 * x[2]; });
  const auto path = (std::filesystem::temp_directory_path() / "swlab_tab_potential.csv").string();
  write_field_csv(f, path, "V");
  const auto V = parse_potential<3>("tab:" + path);
  for (std::size_t i = 0; i < g.size(); i += 7) EXPECT_NEAR(V(g.point(i)), f[i], 1e-12);
  std::filesystem::remove(path);
}

TEST(ReverseHolder, ConstantPotentialGivesOne) {
  const auto g = Grid<3>::cube(-4, 4, 16);
  const auto fam = sample_ball_family(g, 64, {RadiusLaw::Kind::log_uniform, 0.1, 1.5}, 3, 1.5);
  const auto e = rh_constant(Potential<3>::constant(2.0), 2.5, g, fam);
  EXPECT_NEAR(e.value(), 1.0, 1e-12);
  EXPECT_EQ(e.skipped, 0u);
}

TEST(ReverseHolder, HarmonicUnitBallAgainstRadialOracle) {
  // avg |x|^3 and avg |x|^2 over the unit ball by 1-D radial quadrature.
  const double vol = 4.0 * std::numbers::pi / 3.0;
  const double a3 = simpson([](double r) { return 4 * std::numbers::pi * std::pow(r, 5); }, 0, 1, 2000) / vol;
  const double a2 = simpson([](double r) { return 4 * std::numbers::pi * std::pow(r, 4); }, 0, 1, 2000) / vol;
  const double oracle = std::pow(a3, 2.0 / 3.0) / a2;
  const auto e = rh_constant(Potential<3>::harmonic(), 1.5, Grid<3>::cube(-2, 2, 8), single({0, 0, 0}, 1.0));
  EXPECT_NEAR(e.value(), oracle, 1e-10);
}

TEST(ReverseHolder, ScaleInvariance) {
  const auto g = Grid<3>::cube(-3, 3, 12);
  const auto fam = sample_ball_family(g, 40, {RadiusLaw::Kind::uniform, 0.2, 1.0}, 9, 1.0);
  const auto a = rh_constant(parse_potential<3>("expr:1+x1^2+sin(x2)"), 2.0, g, fam);
  const auto b = rh_constant(parse_potential<3>("expr:7.5*(1+x1^2+sin(x2))"), 2.0, g, fam);
  for (std::size_t i = 0; i < fam.balls.size(); ++i) EXPECT_NEAR(a.per_ball[i], b.per_ball[i], 1e-12);
}

TEST(ReverseHolder, MonotoneInFamily) {
  const auto g = Grid<3>::cube(-3, 3, 12);
  const auto fam = sample_ball_family(g, 128, {RadiusLaw::Kind::log_uniform, 0.05, 1.5}, 4, 1.5);
  const auto V = Potential<3>::harmonic();
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t n : {8, 16, 32, 64, 128}) {
    BallFamily<3> sub = fam;
    sub.balls.resize(n);
    const double v = rh_constant(V, 2.0, g, sub).log_value;
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(ReverseHolder, SmallPowerPlateaus) {
  const auto g = Grid<3>::cube(-4, 4, 16);
  const auto fam = sample_ball_family(g, 512, {RadiusLaw::Kind::log_uniform, 0.01, 2.0}, 21, 2.0);
  const auto e = rh_constant(parse_potential<3>("expr:r^0.5"), 2.0, g, fam);
  ASSERT_GE(e.trace.size(), 4u);
  EXPECT_EQ(e.verdict, Verdict::plateau);
  EXPECT_TRUE(std::isfinite(e.log_value));
}

TEST(ReverseHolder, ZeroAverageBallsAreSkipped) {
  const auto g = Grid<3>::cube(-4, 4, 16);
  BallFamily<3> fam;
  fam.balls = {{{-2, 0, 0}, 0.5}, {{1, 0, 0}, 0.5}, {{2, 1, 0}, 0.7}};
  const auto V = parse_potential<3>("expr:max(0,x1)");
  const auto e = rh_constant(V, 2.0, g, fam);
  EXPECT_EQ(e.skipped, 1u);
  ASSERT_FALSE(e.warnings.empty());
  EXPECT_NE(e.warnings[0].find("ball 0"), std::string::npos);
  BallFamily<3> dead;
  dead.balls = {{{-2, 0, 0}, 0.5}, {{-1.5, 1, 0}, 0.4}};
  EXPECT_THROW(rh_constant(V, 2.0, g, dead), DegeneratePotentialError);
}
