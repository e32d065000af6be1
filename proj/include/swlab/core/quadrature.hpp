#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <vector>

#include "swlab/core/errors.hpp"

namespace swlab::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline Rule gauss_legendre(std::size_t n) {
  if (n == 0) throw ConfigurationError("Gauss-Legendre rule needs at least one node");
  Rule r{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    if (n == 1) {
      x = 0.0;
      dp = 1.0;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n == 1) r.weights[0] = 2.0;
  return r;
}

// Generalized Gauss-Laguerre rule for weight u^gamma e^{-u} on [0, inf),
// from the eigen-decomposition of the Jacobi matrix.
inline Rule gauss_laguerre(std::size_t n, double gamma) {
  if (n == 0 || !(gamma > -1.0)) throw ConfigurationError("invalid Gauss-Laguerre parameters");
  Eigen::VectorXd diag(n), sub(n > 1 ? n - 1 : 1);
  for (std::size_t k = 0; k < n; ++k) diag[k] = 2.0 * static_cast<double>(k) + gamma + 1.0;
  for (std::size_t k = 1; k < n; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k) * (static_cast<double>(k) + gamma));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("Gauss-Laguerre eigen-decomposition failed");
  Rule r{std::vector<double>(n), std::vector<double>(n)};
  const double mu0 = std::tgamma(gamma + 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    r.nodes[k] = es.eigenvalues()[k];
    const double v = es.eigenvectors()(0, static_cast<Eigen::Index>(k));
    r.weights[k] = mu0 * v * v;
  }
  return r;
}

struct Result {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  std::size_t evaluations = 0;
};

namespace detail {
template <class F>
double simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol, int depth,
                   Result& res) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  res.evaluations += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) {
    res.converged = false;
    res.error += std::abs(delta);
    return left + right + delta / 15.0;
  }
  if (std::abs(delta) <= 15.0 * tol) {
    res.error += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, res) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, res);
}
}  // namespace detail

// Adaptive Simpson with Richardson correction; tol is absolute.
template <class F>
Result adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 50) {
  Result res;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  res.evaluations = 3;
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  res.value = detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth, res);
  return res;
}

namespace detail {
inline constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double rk = kWgk[7] * fc, rg = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double s = f(c - x) + f(c + x);
    rk += kWgk[j] * s;
    if (j % 2 == 1) rg += kWg[j / 2] * s;
  }
  return {a, b, rk * h, std::abs((rk - rg) * h)};
}
}  // namespace detail

// Globally adaptive Gauss-Kronrod (7/15). Converged when the summed error
// estimate is below max(abs_tol, rel_tol * |value|).
template <class F>
Result gauss_kronrod(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0, std::size_t max_segments = 2000) {
  std::priority_queue<detail::Segment> q;
  auto first = detail::gk15(f, a, b);
  q.push(first);
  double value = first.value, error = first.error;
  Result res;
  res.evaluations = 15;
  while (error > std::max(abs_tol, rel_tol * std::abs(value))) {
    if (q.size() >= max_segments) {
      res.converged = false;
      break;
    }
    const auto s = q.top();
    q.pop();
    const double m = 0.5 * (s.a + s.b);
    const auto l = detail::gk15(f, s.a, m);
    const auto r = detail::gk15(f, m, s.b);
    res.evaluations += 30;
    value += l.value + r.value - s.value;
    error += l.error + r.error - s.error;
    q.push(l);
    q.push(r);
  }
  // Re-sum to shed the drift of the running updates.
  value = 0.0;
  error = 0.0;
  while (!q.empty()) {
    value += q.top().value;
    error += q.top().error;
    q.pop();
  }
  res.value = value;
  res.error = error;
  return res;
}

// Integral over [a, inf) through the map x = a + s / (1 - s).
template <class F>
Result gauss_kronrod_tail(F&& f, double a, double rel_tol, double abs_tol = 0.0) {
  auto g = [&](double s) {
    if (s >= 1.0) return 0.0;
    const double one = 1.0 - s;
    const double v = f(a + s / one);
    return v == 0.0 ? 0.0 : v / (one * one);
  };
  return gauss_kronrod(g, 0.0, 1.0, rel_tol, abs_tol);
}

}  // namespace swlab::quad
