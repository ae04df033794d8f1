#pragma once

// Scalar expressions over chart coordinates and their second-order jets.
//
// Text form is a prefix s-expression:
//   (mul (coord 0) (sin (coord 1)))   (pow (coord 0) 2)   (const -1.5)   3
// `add` and `mul` accept two or more operands, `sub` with one operand negates.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "koszul/jet.hpp"

namespace koszul {

enum class Op : std::uint8_t { Coord, Const, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Log, Sqrt };

class Expr {
 public:
  Expr();  // constant 0
  Expr(double c);  // NOLINT: numeric literals read naturally in fixture code

  static Expr coord(int index);
  static Expr constant(double c);
  static Expr parse(std::string_view text);

  Op op() const { return node_->op; }
  int index() const { return node_->index; }
  int exponent() const { return node_->index; }
  double constant_value() const { return node_->value; }
  const Expr& lhs() const { return node_->args[0]; }
  const Expr& rhs() const { return node_->args[1]; }
  const std::vector<Expr>& args() const { return node_->args; }

  bool is_constant() const { return op() == Op::Const; }
  bool is_zero() const { return is_constant() && constant_value() == 0.0; }
  // Node identity: equal ids mean the same shared expression.
  const void* id() const { return node_.get(); }

  // Largest coordinate index referenced, or -1 for a closed expression.
  int max_coord() const;
  // Same expression with every coordinate index i replaced by i + offset.
  Expr shifted(int offset) const;
  std::string to_string() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& base, int exponent);
  friend Expr sin(const Expr& a);
  friend Expr cos(const Expr& a);
  friend Expr exp(const Expr& a);
  friend Expr log(const Expr& a);
  friend Expr sqrt(const Expr& a);

 private:
  struct Node {
    Op op = Op::Const;
    int index = 0;  // coordinate index, or the exponent of Pow
    double value = 0.0;
    std::vector<Expr> args;
  };

  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Expr make(Op op, std::vector<Expr> args, int index = 0);

  std::shared_ptr<const Node> node_;
};

// Value, gradient and Hessian of e at p. Throws DomainError for singular
// elementary functions at p and DimensionMismatch when e references a
// coordinate outside p.
Jet2 eval_jet2(const Expr& e, std::span<const double> p);

double eval_value(const Expr& e, std::span<const double> p);

// gradient(e, p) . v
double directional_derivative(const Expr& e, std::span<const double> v, std::span<const double> p);

}  // namespace koszul
