#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "swlab/core/ball.hpp"
#include "swlab/core/errors.hpp"
#include "swlab/core/estimate.hpp"
#include "swlab/core/expression.hpp"
#include "swlab/core/field.hpp"
#include "swlab/core/parallel.hpp"
#include "swlab/core/spec.hpp"

namespace swlab {

template <std::size_t D>
struct Monomial {
  double coeff = 0.0;
  std::array<int, D> exps{};
};

/// Polynomial as a list of monomials, with exact partial derivatives.
template <std::size_t D>
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Monomial<D>> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_)
      for (int e : t.exps)
        if (e < 0) throw ConfigurationError("polynomial exponents must be nonnegative");
  }

  const std::vector<Monomial<D>>& terms() const noexcept { return terms_; }

  int degree() const noexcept {
    int deg = 0;
    for (const auto& t : terms_) {
      if (t.coeff == 0.0) continue;
      int s = 0;
      for (int e : t.exps) s += e;
      deg = std::max(deg, s);
    }
    return deg;
  }

  double operator()(const Point<D>& x) const noexcept {
    double sum = 0.0;
    for (const auto& t : terms_) {
      double m = t.coeff;
      for (std::size_t a = 0; a < D; ++a)
        for (int k = 0; k < t.exps[a]; ++k) m *= x[a];
      sum += m;
    }
    return sum;
  }

  Polynomial derivative(const std::array<int, D>& alpha) const {
    std::vector<Monomial<D>> out;
    for (const auto& t : terms_) {
      Monomial<D> m = t;
      bool zero = false;
      for (std::size_t a = 0; a < D && !zero; ++a) {
        for (int k = 0; k < alpha[a]; ++k) {
          if (m.exps[a] == 0) {
            zero = true;
            break;
          }
          m.coeff *= m.exps[a];
          --m.exps[a];
        }
      }
      if (!zero && m.coeff != 0.0) out.push_back(m);
    }
    return Polynomial(std::move(out));
  }

 private:
  std::vector<Monomial<D>> terms_;
};

/// Nonnegative potential V on R^d. Kinds: constant N, harmonic |x|^2,
/// polynomial, tabulated grid field (multilinear interpolation), or an
/// arithmetic expression.
template <std::size_t D>
class Potential {
 public:
  enum class Kind { constant, harmonic, polynomial, tabulated, expression };

  static Potential constant(double N) {
    if (!(N >= 0.0) || !std::isfinite(N)) throw PotentialValidityError("constant potential must be finite and >= 0");
    Potential p(Kind::constant);
    p.N_ = N;
    return p;
  }
  static Potential harmonic() { return Potential(Kind::harmonic); }
  static Potential polynomial(Polynomial<D> P) {
    Potential p(Kind::polynomial);
    p.poly_ = std::move(P);
    return p;
  }
  static Potential tabulated(Field<D> f, std::string source = "field") {
    for (double v : f.values())
      if (!(v >= 0.0) || !std::isfinite(v)) throw PotentialValidityError("tabulated potential has a negative or non-finite sample");
    Potential p(Kind::tabulated);
    p.table_ = std::make_shared<const Field<D>>(std::move(f));
    p.source_ = std::move(source);
    return p;
  }
  static Potential expression(Expression e) {
    if (e.max_variable() > static_cast<int>(D)) throw ParseError("expr", "expression uses a coordinate beyond the dimension");
    Potential p(Kind::expression);
    p.expr_ = std::make_shared<const Expression>(std::move(e));
    return p;
  }

  Kind kind() const noexcept { return kind_; }
  double constant_value() const noexcept { return N_; }
  const Polynomial<D>& poly() const noexcept { return poly_; }

  // True when V depends on |x| only.
  bool is_radial() const noexcept {
    return kind_ == Kind::constant || kind_ == Kind::harmonic || (kind_ == Kind::expression && expr_->uses_only_radius());
  }

  // Raw value without the sign check.
  double raw(const Point<D>& x) const {
    switch (kind_) {
      case Kind::constant:
        return N_;
      case Kind::harmonic: {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
      }
      case Kind::polynomial:
        return poly_(x);
      case Kind::tabulated:
        return table_->interpolate(x);
      case Kind::expression:
        return (*expr_)(x.data(), D);
    }
    return 0.0;
  }

  double operator()(const Point<D>& x) const {
    const double v = raw(x);
    if (!(v >= 0.0) || !std::isfinite(v)) throw PotentialValidityError("potential is negative or non-finite at a sample point");
    return v;
  }

  // Constant, harmonic and polynomial kinds as polynomials.
  Polynomial<D> as_polynomial() const {
    if (kind_ == Kind::polynomial) return poly_;
    if (kind_ == Kind::constant) return Polynomial<D>({Monomial<D>{N_, {}}});
    if (kind_ == Kind::harmonic) {
      std::vector<Monomial<D>> t;
      for (std::size_t a = 0; a < D; ++a) {
        Monomial<D> m{1.0, {}};
        m.exps[a] = 2;
        t.push_back(m);
      }
      return Polynomial<D>(t);
    }
    throw ConfigurationError("potential is not polynomial");
  }

  // Grid scan of the sign condition.
  void validate_on(const Grid<D>& g) const {
    std::vector<char> bad(g.size(), 0);
    parallel_for(g.size(), [&](std::size_t i) {
      const double v = raw(g.point(i));
      bad[i] = !(v >= 0.0) || !std::isfinite(v);
    });
    for (std::size_t i = 0; i < g.size(); ++i)
      if (bad[i]) {
        const auto p = g.point(i);
        std::string at;
        for (double c : p) at += (at.empty() ? "" : ",") + std::to_string(c);
        throw PotentialValidityError("potential is negative or non-finite at grid point (" + at + ")");
      }
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::constant:
        return "const:" + std::to_string(N_);
      case Kind::harmonic:
        return "harmonic";
      case Kind::polynomial: {
        std::string s = "poly:";
        bool first = true;
        for (const auto& t : poly_.terms()) {
          if (!first) s += '|';
          first = false;
          s += std::to_string(t.coeff);
          for (int e : t.exps) s += "," + std::to_string(e);
        }
        return s;
      }
      case Kind::tabulated:
        return "tab:" + source_;
      case Kind::expression:
        return "expr:" + expr_->text();
    }
    return {};
  }

 private:
  explicit Potential(Kind k) : kind_(k) {}

  Kind kind_;
  double N_ = 0.0;
  Polynomial<D> poly_{};
  std::shared_ptr<const Field<D>> table_;
  std::shared_ptr<const Expression> expr_;
  std::string source_;
};

/// Spec grammar: "const:N", "harmonic", "poly:c,e1,..,ed|c,e1,..,ed|...",
/// "tab:<csv path>", "expr:<expression>".
template <std::size_t D>
Potential<D> parse_potential(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = colon == std::string::npos ? text : text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? std::string() : text.substr(colon + 1);
  if (kind == "harmonic") return Potential<D>::harmonic();
  if (kind == "const") return Potential<D>::constant(parse_number(rest, "potential"));
  if (kind == "poly") {
    std::vector<Monomial<D>> terms;
    for (const auto& part : split(rest, '|')) {
      const auto v = parse_numbers(part, "potential");
      if (v.size() != D + 1) throw ParseError("potential", "polynomial term needs a coefficient and " + std::to_string(D) + " exponents");
      Monomial<D> m{v[0], {}};
      for (std::size_t a = 0; a < D; ++a) {
        if (v[a + 1] < 0 || v[a + 1] != std::floor(v[a + 1])) throw ParseError("potential", "exponents must be nonnegative integers");
        m.exps[a] = static_cast<int>(v[a + 1]);
      }
      terms.push_back(m);
    }
    return Potential<D>::polynomial(Polynomial<D>(terms));
  }
  if (kind == "tab") return Potential<D>::tabulated(read_field_csv<D>(rest), rest);
  if (kind == "expr") return Potential<D>::expression(Expression(rest));
  throw ParseError("potential", "unknown potential kind '" + kind + "'");
}

/// Lower bound for the reverse Holder constant of V over a ball family:
/// sup over balls of (avg V^q)^{1/q} / avg V. Balls clipped beyond
/// `clip_threshold` and balls with avg V = 0 are skipped with a warning.
template <std::size_t D>
ClassConstantEstimate rh_constant(const Potential<D>& V, double q, const Grid<D>& domain, const BallFamily<D>& family,
                                  BallQuadrature quadrature = {BallMethod::spherical, false, 4, 20000, 0, 0, 12, 12, 24},
                                  double clip_threshold = 0.01) {
  if (!(q > 1.0)) throw ConfigurationError("reverse Holder exponent must exceed 1");
  if (family.balls.empty()) throw ConfigurationError("ball family is empty");
  ClassConstantEstimate est;
  est.tag = "RH";
  est.params["q"] = q;
  const std::size_t n = family.balls.size();
  est.per_ball.assign(n, -std::numeric_limits<double>::infinity());
  std::vector<int> status(n, 0);  // 0 ok, 1 clipped, 2 zero average
  parallel_for(n, [&](std::size_t i) {
    const auto& b = family.balls[i];
    auto qd = quadrature;
    qd.key = i;
    const auto m1 = integrate_ball(domain, [&](const Point<D>& x) { return V(x); }, b.center, b.radius, qd);
    if (m1.clipped_fraction > clip_threshold) {
      status[i] = 1;
      return;
    }
    const auto mq = integrate_ball(domain, [&](const Point<D>& x) { return std::pow(V(x), q); }, b.center, b.radius, qd);
    if (!(m1.value > 0.0)) {
      status[i] = 2;
      return;
    }
    // The volume factor cancels: (|B|^{-1} int V^q)^{1/q} / (|B|^{-1} int V).
    const double vol = unit_ball_volume(D) * std::pow(b.radius, static_cast<double>(D));
    est.per_ball[i] = std::log(mq.value / vol) / q - std::log(m1.value / vol);
  });
  std::size_t ok = 0, zero = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (status[i] == 0) ++ok;
    if (status[i] != 0) ++est.skipped;
    if (status[i] == 2) {
      ++zero;
      est.warnings.push_back("ball " + std::to_string(i) + ": average of V vanishes, skipped");
    }
  }
  if (ok == 0 && zero > 0) throw DegeneratePotentialError("V vanishes on every ball of the family");
  const auto clipped = static_cast<std::size_t>(std::count(status.begin(), status.end(), 1));
  if (clipped) est.warnings.push_back(std::to_string(clipped) + " balls clipped by the domain, skipped");
  finalize_estimate(est, family.balls);
  return est;
}

}  // namespace swlab
