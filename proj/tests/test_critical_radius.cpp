#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "swlab/critical_radius.hpp"

using namespace swlab;

namespace {

RhoOptions opts(double tol = 1e-3, double rmax = 20.0) {
  RhoOptions o;
  o.tol = tol;
  o.bracket = {1e-4, rmax};
  return o;
}

// max(max ratio, 1 / min ratio) of rho_at / proxy over a grid.
double proxy_constant(const Potential<3>& V, const Grid<3>& g) {
  const auto rho = rho_field(V, g, opts());
  const auto P = V.as_polynomial();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = rho.rho[i] / polynomial_rho_proxy(P, g.point(i));
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return std::max(hi, 1.0 / lo);
}

}  // namespace

TEST(RhoAt, ConstantPotentialClosedForm) {
  const auto t0 = std::chrono::steady_clock::now();
  const double rho = rho_at(Potential<3>::constant(1.0), Point<3>{0.3, -1.0, 2.0}, opts());
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double exact = 1.0 / std::sqrt(4.0 * std::numbers::pi / 3.0);
  EXPECT_NEAR(rho, exact, 1e-3 * exact);
  EXPECT_NEAR(rho, 0.48860, 0.01 * 0.48860);
  EXPECT_LT(dt, 1.0);
}

TEST(RhoAt, HarmonicAtOrigin) {
  // F(r) = (4 pi / 5) r^4 at the origin.
  const double exact = std::pow(5.0 / (4.0 * std::numbers::pi), 0.25);
  const double rho = rho_at(Potential<3>::harmonic(), Point<3>{0, 0, 0}, opts());
  EXPECT_NEAR(rho, exact, 1e-3 * exact);
  EXPECT_NEAR(rho, 0.7942, 0.02 * 0.7942);
}

TEST(RhoAt, BracketErrors) {
  EXPECT_THROW(rho_at(Potential<3>::constant(1e-6), Point<3>{}, opts(1e-3, 5.0)), BracketError);
  RhoOptions o = opts();
  o.bracket = {1.0, 20.0};
  EXPECT_THROW(rho_at(Potential<3>::constant(100.0), Point<3>{}, o), BracketError);
  EXPECT_THROW(rho_at(Potential<3>::constant(0.0), Point<3>{}, opts()), BracketError);
}

TEST(RhoAt, RemarkAtFoundRadius) {
  // F(rho(x)) in [1 - 5 tol, 1] at every grid point, non-radial potential.
  const double tol = 1e-3;
  const auto V = parse_potential<3>("expr:1+x1^2+0.5*sin(3*x2)");
  const auto g = Grid<3>::cube(-2, 2, 5);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto o = opts(tol);
    const double r = rho_at(V, g.point(i), o);
    const double F = detail::critical_functional(V, g.point(i), r, o);
    EXPECT_LE(F, 1.0);
    EXPECT_GE(F, 1.0 - 5 * tol);
  }
}

TEST(RhoAt, ScalingLaw) {
  // V_l(x) = l^2 V(l x) gives rho_{V_l}(x) = rho_V(l x) / l.
  const double l = 2.0, tol = 1e-3;
  const Point<3> x{0.4, -0.3, 0.7};
  const Point<3> lx{l * x[0], l * x[1], l * x[2]};
  const auto c = rho_at(Potential<3>::constant(3.0), lx, opts()) / l;
  EXPECT_NEAR(rho_at(Potential<3>::constant(3.0 * l * l), x, opts()), c, 2 * tol * c);
  const auto h = rho_at(Potential<3>::harmonic(), lx, opts()) / l;
  EXPECT_NEAR(rho_at(parse_potential<3>("expr:16*r^2"), x, opts()), h, 2 * tol * h);
}

TEST(RhoField, ConstantIsFlat) {
  const auto g = Grid<3>::cube(-2, 2, 6);
  auto o = opts();
  o.radial_profile = false;
  const auto f = rho_field(Potential<3>::constant(2.0), g, o);
  EXPECT_LE(f.rho.max() / f.rho.min(), 1.0 + 2e-3);
}

TEST(RhoField, HarmonicDecreasesAlongRaysAndIsComparable) {
  auto C_at = [](std::size_t n) {
    const auto g = Grid<3>::cube(-4, 4, n);
    const auto f = rho_field(Potential<3>::harmonic(), g, opts());
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = f.rho[i] * (1.0 + norm<3>(g.point(i)));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return std::max(hi, 1.0 / lo);
  };
  const double c1 = C_at(8), c2 = C_at(16);
  EXPECT_LT(c1, 10.0);
  EXPECT_NEAR(c2 / c1, 1.0, 0.1);
  for (double t = 0.0; t < 3.5; t += 0.25) {
    const Point<3> a{t, 0.5 * t, 0.1 * t}, b{t + 0.25, 0.5 * (t + 0.25), 0.1 * (t + 0.25)};
    EXPECT_GT(rho_at(Potential<3>::harmonic(), a, opts()), rho_at(Potential<3>::harmonic(), b, opts()));
  }
}

TEST(RhoField, RadialProfileMatchesPointwise) {
  const auto g = Grid<3>::cube(-3, 3, 6);
  auto o = opts();
  const auto fast = rho_field(Potential<3>::harmonic(), g, o);
  o.radial_profile = false;
  const auto slow = rho_field(Potential<3>::harmonic(), g, o);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(fast.rho[i] / slow.rho[i], 1.0, 3e-3);
}

TEST(RhoField, ZeroRegionNamesOffendingPoints) {
  const auto g = Grid<3>::cube(-2, 2, 8);
  const auto V = Potential<3>::tabulated(Field<3>::sample(g, [](const Point<3>& x) { return x[0] > 1.5 ? 0.01 : 0.0; }));
  try {
    rho_field(V, g);
    FAIL();
  } catch (const BracketError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("grid points"), std::string::npos);
    EXPECT_NE(msg.find("(-1.75"), std::string::npos);
  }
}

TEST(PolynomialProxy, ClosedForms) {
  EXPECT_NEAR(polynomial_rho_proxy(Potential<3>::constant(4.0).as_polynomial(), {1, 2, 3}), 0.5, 1e-15);
  const Polynomial<3> x1sq(std::vector<Monomial<3>>{{1.0, {2, 0, 0}}});
  EXPECT_NEAR(polynomial_rho_proxy(x1sq, {1, 0, 0}), 1.0 / (1.0 + std::cbrt(2.0) + std::pow(2.0, 0.25)), 1e-15);
  EXPECT_NEAR(polynomial_rho_proxy(x1sq, {1, 0, 0}), 0.2899, 1e-4);
  EXPECT_NEAR(polynomial_rho_proxy(Potential<3>::harmonic().as_polynomial(), {0, 0, 0}), 1.0 / (3 * std::pow(2.0, 0.25)), 1e-15);
  EXPECT_THROW(polynomial_rho_proxy(Polynomial<3>(std::vector<Monomial<3>>{{0.0, {1, 0, 0}}}), {1, 1, 1}), DegeneratePotentialError);
}

TEST(PolynomialProxy, ComparableToCriticalRadiusUnderRefinement) {
  for (const char* spec : {"harmonic", "poly:1,2,0,0|0.5,0,0,0"}) {
    const auto V = parse_potential<3>(spec);
    const double c1 = proxy_constant(V, Grid<3>::cube(-2, 2, 6));
    const double c2 = proxy_constant(V, Grid<3>::cube(-2, 2, 12));
    EXPECT_TRUE(std::isfinite(c1)) << spec;
    EXPECT_LT(c1, 10.0) << spec;
    EXPECT_NEAR(c2 / c1, 1.0, 0.15) << spec;
  }
}

TEST(ShenFit, ConstantField) {
  const auto g = Grid<3>::cube(-2, 2, 8);
  const auto p = fit_shen_parameters(Field<3>(g, 0.7), 200, 1);
  EXPECT_NEAR(p.B0, std::pow(2.0, 1.0 / 8.0), 1e-12);
  EXPECT_EQ(p.violations, 0u);
  EXPECT_GE(p.beta, 2.0);
  EXPECT_GT(p.A0, 1.0);
}

TEST(ShenFit, InverseLinearField) {
  const auto g = Grid<3>::cube(-4, 4, 16);
  const auto rho = Field<3>::sample(g, [](const Point<3>& x) { return 1.0 / (1.0 + norm<3>(x)); });
  const auto p = fit_shen_parameters(rho, 1000, 2);
  EXPECT_EQ(p.violations, 0u);
  EXPECT_TRUE(std::isfinite(p.B0));
  EXPECT_GT(p.B0, 1.0);
  EXPECT_GT(p.k0, 0.0);
}

TEST(ShenFit, CriticalRadiusOfConstantAndHarmonic) {
  const auto g = Grid<3>::cube(-3, 3, 12);
  for (const char* spec : {"const:2", "harmonic"}) {
    const auto f = rho_field(parse_potential<3>(spec), g, opts());
    const auto p = fit_shen_parameters(f.rho, 600, 3);
    EXPECT_EQ(p.violations, 0u) << spec;
  }
}

TEST(ShenFit, JumpIsRejected) {
  const auto g = Grid<3>::cube(-2, 2, 20);
  const auto rho = Field<3>::sample(g, [](const Point<3>& x) { return x[0] < 0 ? 1.0 : 1e-8; });
  try {
    fit_shen_parameters(rho, 400, 4);
    FAIL();
  } catch (const FitFailure& e) {
    EXPECT_NE(std::string(e.what()).find("worst pair"), std::string::npos);
  }
  EXPECT_THROW(fit_shen_parameters(rho, 50, 4), ConfigurationError);
}

TEST(ShenFit, ProofConstantIsTight) {
  for (double beta : {2.0, 3.5, 10.0})
    for (double k0 : {0.5, 1.0, 4.0}) {
      const double A = proof_A0(beta, k0);
      const double need = 2 * beta * std::pow(1 + A * beta, k0 / (k0 + 1));
      EXPECT_GE(A, need * (1 - 1e-12));
      EXPECT_NEAR(A / need, 1.0, 1e-9);
    }
}
