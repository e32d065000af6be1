#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "swlab/core/ball.hpp"
#include "swlab/core/errors.hpp"
#include "swlab/core/grid.hpp"

namespace swlab {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_number(std::string_view s, const std::string& field) {
  s = trim(s);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc{} || r.ptr != end) throw ParseError(field, "expected a number, got '" + std::string(s) + "'");
  return v;
}

inline std::vector<double> parse_numbers(std::string_view s, const std::string& field) {
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(parse_number(part, field));
  return out;
}

/// Dimension-erased grid description, as read from "dim:d;lo:...;hi:...;h:..."
/// (or n:... in place of h). A single number broadcasts to every axis.
struct GridSpec {
  std::size_t dim = 3;
  std::vector<double> lo{-4.0};
  std::vector<double> hi{4.0};
  std::vector<double> h{};
  std::vector<double> n{};

  template <std::size_t D>
  Grid<D> make() const {
    if (dim != D) throw ParseError("dim", "grid dimension " + std::to_string(dim) + " where " + std::to_string(D) + " is required");
    auto axis = [&](const std::vector<double>& v, std::size_t a, const char* name) {
      if (v.size() == 1) return v[0];
      if (v.size() != D) throw ParseError(name, "expected 1 or " + std::to_string(D) + " values");
      return v[a];
    };
    Point<D> l{}, u{};
    for (std::size_t a = 0; a < D; ++a) {
      l[a] = axis(lo, a, "lo");
      u[a] = axis(hi, a, "hi");
      if (!(u[a] > l[a])) throw ParseError("hi", "upper bound must exceed lower bound");
    }
    if (!n.empty()) {
      Index<D> c{};
      for (std::size_t a = 0; a < D; ++a) {
        const double v = axis(n, a, "n");
        if (!(v >= 1.0) || v != std::floor(v)) throw ParseError("n", "cell counts must be positive integers");
        c[a] = static_cast<std::size_t>(v);
      }
      return Grid<D>(l, u, c);
    }
    if (h.empty()) throw ParseError("h", "grid spec needs h or n");
    Point<D> s{};
    for (std::size_t a = 0; a < D; ++a) {
      s[a] = axis(h, a, "h");
      if (!(s[a] > 0.0)) throw ParseError("h", "spacing must be positive");
    }
    return Grid<D>::with_spacing(l, u, s);
  }

  std::string describe() const {
    auto join = [](const std::vector<double>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        char buf[32];
        auto r = std::to_chars(buf, buf + sizeof buf, v[i]);
        s.append(buf, r.ptr);
      }
      return s;
    };
    std::string s = "dim:" + std::to_string(dim) + ";lo:" + join(lo) + ";hi:" + join(hi);
    if (!n.empty()) return s + ";n:" + join(n);
    return s + ";h:" + join(h);
  }
};

inline GridSpec parse_grid_spec(std::string_view text) {
  GridSpec g;
  g.h.clear();
  bool have_dim = false;
  for (const auto& item : split(text, ';')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ParseError("grid", "entry '" + item + "' lacks ':'");
    const std::string key(trim(std::string_view(item).substr(0, colon)));
    const std::string_view val = std::string_view(item).substr(colon + 1);
    if (key == "dim") {
      const double d = parse_number(val, "dim");
      if (d != 1.0 && d != 2.0 && d != 3.0) throw ParseError("dim", "dimension must be 1, 2 or 3");
      g.dim = static_cast<std::size_t>(d);
      have_dim = true;
    } else if (key == "lo") {
      g.lo = parse_numbers(val, "lo");
    } else if (key == "hi") {
      g.hi = parse_numbers(val, "hi");
    } else if (key == "h") {
      g.h = parse_numbers(val, "h");
    } else if (key == "n") {
      g.n = parse_numbers(val, "n");
    } else {
      throw ParseError(key, "unknown grid field");
    }
  }
  if (!have_dim) throw ParseError("dim", "grid spec must declare dim");
  if (g.h.empty() && g.n.empty()) throw ParseError("h", "grid spec needs h or n");
  return g;
}

// "fixed:r", "uniform:a,b" or "log:a,b".
inline RadiusLaw parse_radius_law(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ParseError("radius-law", "expected kind:params");
  const std::string kind(trim(text.substr(0, colon)));
  const auto v = parse_numbers(text.substr(colon + 1), "radius-law");
  RadiusLaw law;
  if (kind == "fixed" && v.size() == 1) {
    law.kind = RadiusLaw::Kind::fixed;
    law.lo = law.hi = v[0];
  } else if ((kind == "uniform" || kind == "log") && v.size() == 2) {
    law.kind = kind == "log" ? RadiusLaw::Kind::log_uniform : RadiusLaw::Kind::uniform;
    law.lo = v[0];
    law.hi = v[1];
  } else {
    throw ParseError("radius-law", "unknown law '" + std::string(text) + "'");
  }
  if (!(law.lo > 0.0) || law.hi < law.lo) throw ParseError("radius-law", "need 0 < lo <= hi");
  return law;
}

template <std::size_t D>
Point<D> parse_point(std::string_view text, const std::string& field) {
  const auto v = parse_numbers(text, field);
  if (v.size() != D) throw ParseError(field, "expected " + std::to_string(D) + " coordinates");
  Point<D> p{};
  for (std::size_t a = 0; a < D; ++a) p[a] = v[a];
  return p;
}

}  // namespace swlab
