#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "swlab/core/errors.hpp"

namespace swlab {

/// Compiled arithmetic expression in the variables x1, x2, x3 and r = |x|.
/// Grammar: sums and products of numbers, variables, parenthesized terms,
/// unary minus, right-associative '^', and the functions sin cos exp log
/// sqrt abs (one argument) and min max (two arguments).
class Expression {
 public:
  Expression() = default;

  explicit Expression(std::string text) : text_(std::move(text)) {
    pos_ = 0;
    root_ = parse_sum();
    skip();
    if (pos_ != text_.size()) fail("unexpected '" + text_.substr(pos_, 1) + "'");
  }

  const std::string& text() const noexcept { return text_; }

  // Largest variable index referenced (1-based); 0 if none.
  int max_variable() const noexcept { return max_var_; }
  bool uses_only_radius() const noexcept { return max_var_ == 0; }

  double operator()(const double* x, std::size_t d) const {
    double r2 = 0.0;
    for (std::size_t a = 0; a < d; ++a) r2 += x[a] * x[a];
    return eval(root_, x, d, std::sqrt(r2));
  }

 private:
  enum class Op { num, var, rad, neg, add, sub, mul, div, pow, call1, call2 };
  struct Node {
    Op op;
    double value = 0.0;
    int index = 0;
    std::string fn;
    std::shared_ptr<Node> a, b;
  };
  using Ptr = std::shared_ptr<Node>;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError("expr", msg + " in '" + text_ + "'"); }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static Ptr make(Op op, Ptr a = nullptr, Ptr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  Ptr parse_sum() {
    Ptr lhs = parse_product();
    while (true) {
      if (accept('+'))
        lhs = make(Op::add, lhs, parse_product());
      else if (accept('-'))
        lhs = make(Op::sub, lhs, parse_product());
      else
        return lhs;
    }
  }

  Ptr parse_product() {
    Ptr lhs = parse_unary();
    while (true) {
      if (accept('*'))
        lhs = make(Op::mul, lhs, parse_unary());
      else if (accept('/'))
        lhs = make(Op::div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  Ptr parse_unary() {
    if (accept('-')) return make(Op::neg, parse_unary());
    if (accept('+')) return parse_unary();
    Ptr base = parse_atom();
    if (accept('^')) return make(Op::pow, base, parse_unary());
    return base;
  }

  Ptr parse_atom() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end");
    const char c = text_[pos_];
    if (accept('(')) {
      Ptr e = parse_sum();
      if (!accept(')')) fail("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(text_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      auto n = make(Op::num);
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string name = text_.substr(start, pos_ - start);
      if (name == "r") return make(Op::rad);
      if (name == "pi") {
        auto n = make(Op::num);
        n->value = 3.14159265358979323846;
        return n;
      }
      if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '3') {
        auto n = make(Op::var);
        n->index = name[1] - '1';
        max_var_ = std::max(max_var_, n->index + 1);
        return n;
      }
      static const char* unary[] = {"sin", "cos", "exp", "log", "sqrt", "abs"};
      for (const char* f : unary) {
        if (name == f) {
          if (!accept('(')) fail("expected '(' after " + name);
          auto n = make(Op::call1, parse_sum());
          n->fn = name;
          if (!accept(')')) fail("missing ')'");
          return n;
        }
      }
      if (name == "min" || name == "max") {
        if (!accept('(')) fail("expected '(' after " + name);
        Ptr a = parse_sum();
        if (!accept(',')) fail("expected ',' in " + name);
        Ptr b = parse_sum();
        if (!accept(')')) fail("missing ')'");
        auto n = make(Op::call2, a, b);
        n->fn = name;
        return n;
      }
      fail("unknown identifier '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  static double eval(const Ptr& n, const double* x, std::size_t d, double r) {
    switch (n->op) {
      case Op::num:
        return n->value;
      case Op::var:
        if (static_cast<std::size_t>(n->index) >= d) throw EvaluationError("expression variable exceeds dimension");
        return x[n->index];
      case Op::rad:
        return r;
      case Op::neg:
        return -eval(n->a, x, d, r);
      case Op::add:
        return eval(n->a, x, d, r) + eval(n->b, x, d, r);
      case Op::sub:
        return eval(n->a, x, d, r) - eval(n->b, x, d, r);
      case Op::mul:
        return eval(n->a, x, d, r) * eval(n->b, x, d, r);
      case Op::div:
        return eval(n->a, x, d, r) / eval(n->b, x, d, r);
      case Op::pow:
        return std::pow(eval(n->a, x, d, r), eval(n->b, x, d, r));
      case Op::call1: {
        const double v = eval(n->a, x, d, r);
        if (n->fn == "sin") return std::sin(v);
        if (n->fn == "cos") return std::cos(v);
        if (n->fn == "exp") return std::exp(v);
        if (n->fn == "log") return std::log(v);
        if (n->fn == "sqrt") return std::sqrt(v);
        return std::abs(v);
      }
      case Op::call2: {
        const double u = eval(n->a, x, d, r), v = eval(n->b, x, d, r);
        return n->fn == "min" ? std::min(u, v) : std::max(u, v);
      }
    }
    return 0.0;
  }

  std::string text_;
  std::size_t pos_ = 0;
  int max_var_ = 0;
  Ptr root_;
};

}  // namespace swlab
