#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "swlab/core/ball.hpp"

namespace swlab {

enum class Verdict { plateau, divergence, undetermined };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::plateau:
      return "plateau";
    case Verdict::divergence:
      return "divergence";
    case Verdict::undetermined:
      return "undetermined";
  }
  return "undetermined";
}

struct TracePoint {
  std::size_t n = 0;    // family prefix size
  double log_value = 0; // log of the running supremum over that prefix
};

/// Empirical supremum over a finite family. Values are kept in the log
/// domain because damping factors routinely leave double range; `value()`
/// may under- or overflow where `log_value` does not. The estimate is a
/// lower bound for the supremum over all balls.
struct ClassConstantEstimate {
  std::string tag;
  std::map<std::string, double> params;
  double log_value = -std::numeric_limits<double>::infinity();
  std::size_t best_index = 0;
  std::vector<double> best_ball;  // center coordinates followed by radius
  std::vector<TracePoint> trace;
  Verdict verdict = Verdict::undetermined;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
  std::vector<double> per_ball;  // log value per family entry, -inf when skipped

  double value() const { return std::exp(log_value); }
};

// Prefix sizes n, n/2, n/4, ... (at most `levels` of them, each >= 1),
// returned in increasing order.
inline std::vector<std::size_t> doubling_checkpoints(std::size_t n, std::size_t levels = 6) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < levels && n >> k >= 1; ++k) out.push_back(n >> k);
  std::reverse(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<TracePoint> running_sup_trace(const std::vector<double>& per_ball, std::size_t levels = 6) {
  std::vector<TracePoint> trace;
  const auto cps = doubling_checkpoints(per_ball.size(), levels);
  double best = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  for (std::size_t cp : cps) {
    for (; i < cp; ++i) best = std::max(best, per_ball[i]);
    trace.push_back({cp, best});
  }
  return trace;
}

/// Divergence when the running supremum grows by more than `factor` across
/// each of the last `steps` doublings of the family; plateau otherwise.
inline Verdict classify_trace(const std::vector<TracePoint>& trace, double factor = 1.5, std::size_t steps = 3) {
  if (trace.size() < steps + 1) return Verdict::undetermined;
  const double lf = std::log(factor);
  for (std::size_t k = trace.size() - steps; k < trace.size(); ++k) {
    const double a = trace[k - 1].log_value, b = trace[k].log_value;
    if (!std::isfinite(a) || !std::isfinite(b)) return Verdict::undetermined;
    if (!(b - a > lf)) return Verdict::plateau;
  }
  return Verdict::divergence;
}

// Fills value, attaining ball, trace and verdict from per-ball logs.
template <std::size_t D>
void finalize_estimate(ClassConstantEstimate& est, const std::vector<Ball<D>>& balls) {
  est.evaluated = 0;
  for (std::size_t i = 0; i < est.per_ball.size(); ++i) {
    if (!std::isfinite(est.per_ball[i])) continue;
    ++est.evaluated;
    if (est.per_ball[i] > est.log_value) {
      est.log_value = est.per_ball[i];
      est.best_index = i;
    }
  }
  est.best_ball.clear();
  if (est.evaluated > 0) {
    for (double c : balls[est.best_index].center) est.best_ball.push_back(c);
    est.best_ball.push_back(balls[est.best_index].radius);
  }
  est.trace = running_sup_trace(est.per_ball);
  est.verdict = classify_trace(est.trace);
}

// Distance of the farthest ball point from the origin.
template <std::size_t D>
double reach(const Ball<D>& b) {
  return norm<D>(b.center) + b.radius;
}

template <std::size_t D>
void order_by_reach(std::vector<Ball<D>>& balls) {
  std::stable_sort(balls.begin(), balls.end(), [](const Ball<D>& a, const Ball<D>& b) { return reach<D>(a) < reach<D>(b); });
}

}  // namespace swlab
