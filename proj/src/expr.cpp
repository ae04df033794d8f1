#include "koszul/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "koszul/error.hpp"

namespace koszul {

Expr::Expr() : Expr(0.0) {}

Expr::Expr(double c) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = c;
  node_ = std::move(n);
}

Expr Expr::constant(double c) { return Expr(c); }

Expr Expr::coord(int index) {
  if (index < 0) throw DimensionMismatch("negative coordinate index");
  auto n = std::make_shared<Node>();
  n->op = Op::Coord;
  n->index = index;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::make(Op op, std::vector<Expr> args, int index) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->index = index;
  n->args = std::move(args);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

// Only identity-element folding; no algebraic rewriting.
Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() + b.constant_value());
  return Expr::make(Op::Add, {a, b});
}

Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_zero()) return a;
  if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() - b.constant_value());
  return Expr::make(Op::Sub, {a, b});
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr(0.0);
  if (a.is_constant() && a.constant_value() == 1.0) return b;
  if (b.is_constant() && b.constant_value() == 1.0) return a;
  if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() * b.constant_value());
  return Expr::make(Op::Mul, {a, b});
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_constant() && b.constant_value() == 1.0) return a;
  return Expr::make(Op::Div, {a, b});
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr(-a.constant_value());
  return Expr::make(Op::Sub, {Expr(0.0), a});
}

Expr pow(const Expr& base, int exponent) {
  if (exponent == 0) return Expr(1.0);
  if (exponent == 1) return base;
  return Expr::make(Op::Pow, {base}, exponent);
}

Expr sin(const Expr& a) { return Expr::make(Op::Sin, {a}); }
Expr cos(const Expr& a) { return Expr::make(Op::Cos, {a}); }
Expr exp(const Expr& a) { return Expr::make(Op::Exp, {a}); }
Expr log(const Expr& a) { return Expr::make(Op::Log, {a}); }
Expr sqrt(const Expr& a) { return Expr::make(Op::Sqrt, {a}); }

int Expr::max_coord() const {
  if (op() == Op::Coord) return index();
  int m = -1;
  for (const auto& a : args()) m = std::max(m, a.max_coord());
  return m;
}

Expr Expr::shifted(int offset) const {
  switch (op()) {
    case Op::Coord:
      return coord(index() + offset);
    case Op::Const:
      return *this;
    default: {
      std::vector<Expr> moved;
      moved.reserve(args().size());
      for (const auto& a : args()) moved.push_back(a.shifted(offset));
      return make(op(), std::move(moved), node_->index);
    }
  }
}

namespace {

const char* op_name(Op op) {
  switch (op) {
    case Op::Coord: return "coord";
    case Op::Const: return "const";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Pow: return "pow";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
  }
  return "?";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

void print(const Expr& e, std::ostringstream& out) {
  switch (e.op()) {
    case Op::Coord:
      out << "(coord " << e.index() << ')';
      return;
    case Op::Const:
      out << "(const " << format_double(e.constant_value()) << ')';
      return;
    case Op::Pow:
      out << "(pow ";
      print(e.lhs(), out);
      out << ' ' << e.exponent() << ')';
      return;
    default:
      out << '(' << op_name(e.op());
      for (const auto& a : e.args()) {
        out << ' ';
        print(a, out);
      }
      out << ')';
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse_all() {
    Expr e = parse_expr();
    skip_space();
    if (pos_ != text_.size()) fail("trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("expr: " + msg + " at offset " + std::to_string(pos_) + " in '" + std::string(text_) + "'");
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view atom() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
           text_[pos_] != ')') {
      ++pos_;
    }
    if (start == pos_) fail("expected atom");
    return text_.substr(start, pos_ - start);
  }

  double number(std::string_view tok) const {
    std::string s(tok);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) fail("bad number '" + s + "'");
    return v;
  }

  int integer(std::string_view tok) const {
    int v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) fail("expected integer, got '" + std::string(tok) + "'");
    return v;
  }

  Expr parse_expr() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end");
    if (text_[pos_] != '(') return Expr(number(atom()));
    ++pos_;
    const std::string_view head = atom();
    Expr result;
    if (head == "coord") {
      const int i = integer(atom());
      if (i < 0) fail("negative coordinate index");
      result = Expr::coord(i);
    } else if (head == "const") {
      result = Expr(number(atom()));
    } else if (head == "pow") {
      Expr base = parse_expr();
      result = pow(base, integer(atom()));
    } else {
      std::vector<Expr> args;
      while (true) {
        skip_space();
        if (pos_ >= text_.size()) fail("unterminated list");
        if (text_[pos_] == ')') break;
        args.push_back(parse_expr());
      }
      result = apply(head, args);
    }
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
    ++pos_;
    return result;
  }

  Expr apply(std::string_view head, const std::vector<Expr>& args) const {
    auto need = [&](std::size_t lo, std::size_t hi) {
      if (args.size() < lo || args.size() > hi) fail("wrong operand count for '" + std::string(head) + "'");
    };
    if (head == "add" || head == "mul") {
      need(2, 1000);
      Expr acc = args[0];
      for (std::size_t i = 1; i < args.size(); ++i) acc = head == "add" ? acc + args[i] : acc * args[i];
      return acc;
    }
    if (head == "sub") {
      need(1, 2);
      return args.size() == 1 ? -args[0] : args[0] - args[1];
    }
    if (head == "div") {
      need(2, 2);
      return args[0] / args[1];
    }
    need(1, 1);
    if (head == "sin") return sin(args[0]);
    if (head == "cos") return cos(args[0]);
    if (head == "exp") return exp(args[0]);
    if (head == "log") return log(args[0]);
    if (head == "sqrt") return sqrt(args[0]);
    fail("unknown operator '" + std::string(head) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string Expr::to_string() const {
  std::ostringstream out;
  print(*this, out);
  return out.str();
}

Expr Expr::parse(std::string_view text) { return Parser(text).parse_all(); }

namespace {

Jet2 eval(const Expr& e, std::span<const double> p) {
  const int n = static_cast<int>(p.size());
  switch (e.op()) {
    case Op::Coord:
      if (e.index() >= n) {
        throw DimensionMismatch("coordinate " + std::to_string(e.index()) + " outside chart of dimension " +
                                std::to_string(n));
      }
      return Jet2::variable(n, e.index(), p[e.index()]);
    case Op::Const:
      return Jet2::constant(n, e.constant_value());
    case Op::Add:
      return eval(e.lhs(), p) + eval(e.rhs(), p);
    case Op::Sub:
      return eval(e.lhs(), p) - eval(e.rhs(), p);
    case Op::Mul:
      return eval(e.lhs(), p) * eval(e.rhs(), p);
    case Op::Div: {
      const Jet2 den = eval(e.rhs(), p);
      if (den.value() == 0.0) throw DomainError("division by zero in " + e.to_string());
      return eval(e.lhs(), p) / den;
    }
    case Op::Pow: {
      const Jet2 a = eval(e.lhs(), p);
      const int k = e.exponent();
      const double x = a.value();
      if (k < 0 && x == 0.0) throw DomainError("negative power of zero in " + e.to_string());
      const double xk2 = std::pow(x, k - 2);
      // x^(k-2) first so that x = 0 gives exact zeros for k >= 2.
      const double xk1 = k >= 2 ? xk2 * x : std::pow(x, k - 1);
      const double xk = k >= 2 ? xk1 * x : std::pow(x, k);
      return a.compose(xk, k * xk1, k >= 2 || k < 0 ? k * (k - 1) * xk2 : 0.0);
    }
    case Op::Sin: {
      const Jet2 a = eval(e.lhs(), p);
      const double s = std::sin(a.value()), c = std::cos(a.value());
      return a.compose(s, c, -s);
    }
    case Op::Cos: {
      const Jet2 a = eval(e.lhs(), p);
      const double s = std::sin(a.value()), c = std::cos(a.value());
      return a.compose(c, -s, -c);
    }
    case Op::Exp: {
      const Jet2 a = eval(e.lhs(), p);
      const double v = std::exp(a.value());
      return a.compose(v, v, v);
    }
    case Op::Log: {
      const Jet2 a = eval(e.lhs(), p);
      const double x = a.value();
      if (!(x > 0.0)) throw DomainError("log of non-positive value in " + e.to_string());
      return a.compose(std::log(x), 1.0 / x, -1.0 / (x * x));
    }
    case Op::Sqrt: {
      const Jet2 a = eval(e.lhs(), p);
      const double x = a.value();
      if (!(x > 0.0)) throw DomainError("sqrt of non-positive value in " + e.to_string());
      const double r = std::sqrt(x);
      return a.compose(r, 0.5 / r, -0.25 / (r * x));
    }
  }
  throw DomainError("unknown expression node");
}

// Same domain rules as eval, without derivatives.
double value(const Expr& e, std::span<const double> p) {
  switch (e.op()) {
    case Op::Coord:
      if (e.index() >= static_cast<int>(p.size())) {
        throw DimensionMismatch("coordinate " + std::to_string(e.index()) + " outside chart of dimension " +
                                std::to_string(p.size()));
      }
      return p[e.index()];
    case Op::Const:
      return e.constant_value();
    case Op::Add:
      return value(e.lhs(), p) + value(e.rhs(), p);
    case Op::Sub:
      return value(e.lhs(), p) - value(e.rhs(), p);
    case Op::Mul:
      return value(e.lhs(), p) * value(e.rhs(), p);
    case Op::Div: {
      const double den = value(e.rhs(), p);
      if (den == 0.0) throw DomainError("division by zero in " + e.to_string());
      return value(e.lhs(), p) / den;
    }
    case Op::Pow: {
      const double x = value(e.lhs(), p);
      const int k = e.exponent();
      if (k < 0 && x == 0.0) throw DomainError("negative power of zero in " + e.to_string());
      return k >= 2 ? std::pow(x, k - 2) * x * x : std::pow(x, k);
    }
    case Op::Sin:
      return std::sin(value(e.lhs(), p));
    case Op::Cos:
      return std::cos(value(e.lhs(), p));
    case Op::Exp:
      return std::exp(value(e.lhs(), p));
    case Op::Log: {
      const double x = value(e.lhs(), p);
      if (!(x > 0.0)) throw DomainError("log of non-positive value in " + e.to_string());
      return std::log(x);
    }
    case Op::Sqrt: {
      const double x = value(e.lhs(), p);
      if (!(x > 0.0)) throw DomainError("sqrt of non-positive value in " + e.to_string());
      return std::sqrt(x);
    }
  }
  throw DomainError("unknown expression node");
}

}  // namespace

Jet2 eval_jet2(const Expr& e, std::span<const double> p) {
  if (p.empty() || static_cast<int>(p.size()) > kMaxDim) {
    throw DimensionMismatch("chart dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
  return eval(e, p);
}

double eval_value(const Expr& e, std::span<const double> p) {
  if (p.empty() || static_cast<int>(p.size()) > kMaxDim) {
    throw DimensionMismatch("chart dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
  return value(e, p);
}

double directional_derivative(const Expr& e, std::span<const double> v, std::span<const double> p) {
  if (v.size() != p.size()) throw DimensionMismatch("direction and point dimensions differ");
  const Jet2 j = eval_jet2(e, p);
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += j.gradient(static_cast<int>(i)) * v[i];
  return s;
}

}  // namespace koszul
