#pragma once

#include <lapacke.h>

#include <Eigen/Dense>
#include <cmath>
#include <mutex>
#include <numbers>
#include <vector>

#include "swlab/core/errors.hpp"
#include "swlab/core/grid.hpp"
#include "swlab/core/quadrature.hpp"

namespace swlab::kernels {

enum class SRule { laguerre, simpson };

namespace detail {

inline double s_integrand(double t, double a, double gamma) {
  return std::exp(-a * t) * std::pow(t + 0.5 * t * t, gamma) * (1.0 + t);
}

inline const quad::Rule& laguerre_rule(std::size_t d) {
  static std::mutex m;
  static std::vector<quad::Rule> cache(8);
  std::lock_guard lock(m);
  if (cache[d].nodes.empty()) cache[d] = quad::gauss_laguerre(256, 0.5 * (static_cast<double>(d) - 2.0));
  return cache[d];
}

// Scaled variable u = a t against the weight u^gamma e^{-u}:
// s(a) = a^{-gamma-1} int e^{-u} u^gamma (1 + u/(2a))^gamma (1 + u/a) du.
inline double s_laguerre(double a, std::size_t d) {
  const double gamma = 0.5 * (static_cast<double>(d) - 2.0);
  const auto& r = laguerre_rule(d);
  double sum = 0.0;
  for (std::size_t k = 0; k < r.nodes.size(); ++k) {
    const double u = r.nodes[k];
    sum += r.weights[k] * std::pow(1.0 + u / (2.0 * a), gamma) * (1.0 + u / a);
  }
  return std::pow(a, -gamma - 1.0) * sum;
}

// Map t = (v / (1 - v))^2 / a onto v in [0, 1), then adaptive Simpson.
inline double s_simpson(double a, std::size_t d) {
  const double gamma = 0.5 * (static_cast<double>(d) - 2.0);
  auto g = [&](double v) {
    if (v >= 1.0) return 0.0;
    const double q = v / (1.0 - v);
    const double t = q * q / a;
    const double jac = 2.0 * v / (a * std::pow(1.0 - v, 3));
    const double val = s_integrand(t, a, gamma) * jac;
    return std::isfinite(val) ? val : 0.0;
  };
  double crude = 0.0;
  constexpr int panels = 256;
  for (int i = 0; i < panels; ++i) {
    const double x0 = static_cast<double>(i) / panels, x1 = static_cast<double>(i + 1) / panels;
    crude += (x1 - x0) / 6.0 * (g(x0) + 4.0 * g(0.5 * (x0 + x1)) + g(x1));
  }
  const auto res = quad::adaptive_simpson(g, 0.0, 1.0, 1e-11 * crude, 60);
  if (!res.converged) throw ToleranceError("mapped Simpson rule for s(a) did not converge");
  return res.value;
}

}  // namespace detail

/// The Bessel-type factor of the constant-potential Riesz kernel,
/// s(a) = int_0^inf e^{-at} (t + t^2/2)^{(d-2)/2} (1 + t) dt.
inline double s_function(double a, std::size_t d, SRule rule = SRule::laguerre) {
  if (!(a > 0.0)) throw DomainError("s(a) requires a > 0");
  if (d < 1 || d > 7) throw DomainError("s(a) supports dimensions 1 to 7");
  return rule == SRule::laguerre ? detail::s_laguerre(a, d) : detail::s_simpson(a, d);
}

/// Tabulated s(a) on a logarithmic lattice with four-point Lagrange
/// interpolation of log s against log a; values outside the table fall
/// back to the quadrature. Used by grid operators that need millions of
/// kernel evaluations.
class SFunctionTable {
 public:
  explicit SFunctionTable(std::size_t d, double a_min = 1e-4, double a_max = 1e3, std::size_t n = 3000)
      : d_(d), lmin_(std::log(a_min)), lmax_(std::log(a_max)), step_((lmax_ - lmin_) / static_cast<double>(n - 1)) {
    logs_.resize(n);
    for (std::size_t i = 0; i < n; ++i) logs_[i] = std::log(s_function(std::exp(lmin_ + step_ * static_cast<double>(i)), d));
  }

  double operator()(double a) const {
    const double la = std::log(a);
    const double s = (la - lmin_) / step_;
    if (s < 1.0 || s > static_cast<double>(logs_.size()) - 3.0) return s_function(a, d_);
    const auto i = static_cast<std::size_t>(s) - 1;
    const double x = s - static_cast<double>(i);
    // Nodes at x = 0, 1, 2, 3.
    const double l0 = -(x - 1) * (x - 2) * (x - 3) / 6.0;
    const double l1 = x * (x - 2) * (x - 3) / 2.0;
    const double l2 = -x * (x - 1) * (x - 3) / 2.0;
    const double l3 = x * (x - 1) * (x - 2) / 6.0;
    return std::exp(l0 * logs_[i] + l1 * logs_[i + 1] + l2 * logs_[i + 2] + l3 * logs_[i + 3]);
  }

  std::size_t dimension() const noexcept { return d_; }

 private:
  std::size_t d_;
  double lmin_, lmax_, step_;
  std::vector<double> logs_;
};

/// Singular kernel of the j-th Riesz transform of -Delta + N, with the
/// normalizing constant set to 1:
/// K(x, y) = -(x_j - y_j)/|x - y| e^{-sqrt(N)|x - y|} s(sqrt(N)|x - y|).
template <std::size_t D>
double riesz_kernel_constant(double N, std::size_t j, const Point<D>& x, const Point<D>& y) {
  if (!(N > 0.0)) throw DomainError("Riesz kernel requires N > 0");
  if (j >= D) throw DomainError("Riesz component index out of range");
  const double r = distance<D>(x, y);
  if (r == 0.0) throw SingularityError("Riesz kernel is singular on the diagonal");
  const double a = std::sqrt(N) * r;
  return -(x[j] - y[j]) / r * std::exp(-a) * s_function(a, D);
}

// Exponent of the Mehler kernel: alpha(t) = (sqrt(1 + t^2) - 1) / (2t),
// written without cancellation.
inline double mehler_alpha(double t) {
  if (!(t > 0.0)) throw DomainError("Mehler kernel requires t > 0");
  return t / (2.0 * (std::sqrt(1.0 + t * t) + 1.0));
}

/// Kernel of exp(-s(-Delta + |x|^2)) in the parameter t = sinh(2s):
/// (2 pi t)^{-d/2} exp(-|x - y|^2 / 2t) exp(-alpha(t)(|x|^2 + |y|^2)).
template <std::size_t D>
double mehler_kernel(double t, const Point<D>& x, const Point<D>& y) {
  const double al = mehler_alpha(t);
  double dxy = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t a = 0; a < D; ++a) {
    dxy += (x[a] - y[a]) * (x[a] - y[a]);
    nx += x[a] * x[a];
    ny += y[a] * y[a];
  }
  return std::pow(2.0 * std::numbers::pi * t, -0.5 * D) * std::exp(-dxy / (2.0 * t) - al * (nx + ny));
}

inline double mehler_time_from_physical(double s) { return std::sinh(2.0 * s); }
inline double mehler_physical_from_time(double t) { return 0.5 * std::asinh(t); }

// Parameter of the composed kernel: sinh(2(s1 + s2)) in terms of t_i = sinh(2 s_i).
inline double mehler_compose(double t1, double t2) {
  return t1 * std::sqrt(1.0 + t2 * t2) + t2 * std::sqrt(1.0 + t1 * t1);
}

/// e^{-Nt} (4 pi t)^{-d/2} e^{-|x - y|^2 / 4t}.
template <std::size_t D>
double heat_kernel_constant(double N, double t, const Point<D>& x, const Point<D>& y) {
  if (!(t > 0.0)) throw DomainError("heat kernel requires t > 0");
  if (N < 0.0) throw DomainError("heat kernel requires N >= 0");
  const double r = distance<D>(x, y);
  return std::exp(-N * t - r * r / (4.0 * t)) * std::pow(4.0 * std::numbers::pi * t, -0.5 * D);
}

// Fundamental solution of -Delta + N in three dimensions as a function of r.
inline double fundamental_solution_constant_3d(double N, double r) {
  if (r == 0.0) throw SingularityError("fundamental solution is singular at the pole");
  if (N < 0.0) throw DomainError("fundamental solution requires N >= 0");
  return std::exp(-std::sqrt(N) * r) / (4.0 * std::numbers::pi * r);
}

inline double fundamental_solution_constant_3d(double N, const Point<3>& x, const Point<3>& y) {
  return fundamental_solution_constant_3d(N, distance<3>(x, y));
}

/// Kernel of (-Delta + N)^{-alpha/2} in three dimensions,
/// (1/pi) sin(pi alpha / 2) int_0^inf lambda^{-alpha/2} Gamma_{N + lambda}(r) d lambda.
/// On [0, 1] the substitution lambda = v^{1/(1 - alpha/2)} removes the
/// endpoint singularity.
inline double fractional_kernel_constant(double N, double alpha, double r, double rel_tol = 1e-10) {
  if (!(alpha > 0.0) || alpha > 2.0) throw DomainError("fractional order must lie in (0, 2]");
  if (r == 0.0) throw SingularityError("fractional kernel is singular at the pole");
  if (N < 0.0) throw DomainError("fractional kernel requires N >= 0");
  if (alpha == 2.0) return fundamental_solution_constant_3d(N, r);
  const double g = 1.0 / (1.0 - 0.5 * alpha);
  auto near = [&](double v) {
    const double lambda = std::pow(v, g);
    return g * fundamental_solution_constant_3d(N + lambda, r);
  };
  auto far = [&](double lambda) { return std::pow(lambda, -0.5 * alpha) * fundamental_solution_constant_3d(N + lambda, r); };
  const auto a = quad::gauss_kronrod(near, 0.0, 1.0, rel_tol, 0.0, 4000);
  const auto b = quad::gauss_kronrod_tail(far, 1.0, rel_tol, 1e-300);
  if (!a.converged || !b.converged) throw ToleranceError("fractional kernel quadrature did not converge");
  return std::sin(0.5 * std::numbers::pi * alpha) / std::numbers::pi * (a.value + b.value);
}

/// e^{-t L_h} for L_h = -D2 + V on a one-dimensional cell-centered grid,
/// with homogeneous Dirichlet data half a cell beyond each end. The
/// eigen-decomposition is computed once; kernels for any t reuse it.
class DiscreteSemigroup {
 public:
  DiscreteSemigroup(const Grid<1>& grid, const std::vector<double>& potential) : grid_(grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (potential.size() != grid.size()) throw ConfigurationError("potential samples do not match the grid");
    const double h = grid.spacing(0);
    Eigen::VectorXd diag(n), sub(n > 1 ? n - 1 : 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = potential[static_cast<std::size_t>(i)];
      if (!std::isfinite(v)) throw PotentialValidityError("non-finite potential sample");
      diag[i] = 2.0 / (h * h) + v;
    }
    for (Eigen::Index i = 0; i + 1 < n; ++i) sub[i] = -1.0 / (h * h);
    // Divide and conquer (dstevd); Eigen's implicit QR is far slower at n ~ 10^3.
    U_.resize(n, n);
    const lapack_int info =
        LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', static_cast<lapack_int>(n), diag.data(), sub.data(), U_.data(), static_cast<lapack_int>(n));
    if (info != 0) throw NumericalError("tridiagonal eigen-decomposition failed");
    lambda_ = diag;
  }

  const Grid<1>& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return lambda_; }

  // k_h(x_i, y_j) = (U e^{-t Lambda} U^T)_{ij} / h, a density in y.
  Eigen::MatrixXd kernel(double t) const {
    if (!(t > 0.0)) throw DomainError("semigroup time must be positive");
    const Eigen::Index m = active_modes(t);
    const Eigen::VectorXd e = (-t * lambda_.head(m).array()).exp();
    const Eigen::MatrixXd Ue = U_.leftCols(m) * e.asDiagonal();
    Eigen::MatrixXd K = Ue * U_.leftCols(m).transpose();
    K /= grid_.spacing(0);
    return K;
  }

  // (e^{-t L_h} f)(x_i) = sum_j k_h(x_i, y_j) f_j h.
  Eigen::VectorXd apply(double t, const Eigen::VectorXd& f) const {
    const Eigen::Index m = active_modes(t);
    const Eigen::VectorXd e = (-t * lambda_.head(m).array()).exp();
    return U_.leftCols(m) * (e.asDiagonal() * (U_.leftCols(m).transpose() * f));
  }

 private:
  // Eigenvalues ascend; modes with e^{-t(lambda - lambda_0)} < 1e-18 are dropped.
  // Keeping them only produces subnormal products.
  Eigen::Index active_modes(double t) const {
    const Eigen::Index n = lambda_.size();
    Eigen::Index m = 0;
    while (m < n && t * (lambda_[m] - lambda_[0]) < 41.5) ++m;
    return std::max<Eigen::Index>(m, 1);
  }

  Grid<1> grid_;
  Eigen::MatrixXd U_;
  Eigen::VectorXd lambda_;
};

}  // namespace swlab::kernels
