#pragma once

// Charts and fields as arrays of expressions, plus the pointwise differential
// primitives that need no connection: flat map, Lie bracket, Lie derivative of
// the metric, and the Hessian of a scalar on a nondegenerate metric.

#include <span>
#include <string>
#include <vector>

#include "koszul/expr.hpp"
#include "koszul/jet.hpp"

namespace koszul {

using Point = std::vector<double>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

class ChartDomain {
 public:
  ChartDomain() = default;
  explicit ChartDomain(std::vector<Interval> bounds);
  // Unit box [-1, 1]^dim.
  static ChartDomain box(int dim, double lo = -1.0, double hi = 1.0);

  int dim() const { return static_cast<int>(bounds_.size()); }
  const std::vector<Interval>& bounds() const { return bounds_; }
  bool contains(std::span<const double> p) const;
  void require_point(std::span<const double> p) const;  // DimensionMismatch on wrong length

 private:
  std::vector<Interval> bounds_;
};

struct ScalarField {
  ChartDomain chart;
  Expr expr;

  ScalarField() = default;
  ScalarField(ChartDomain c, Expr e);
  Jet2 jet(std::span<const double> p) const;
};

class VectorField {
 public:
  VectorField() = default;
  VectorField(ChartDomain chart, std::vector<Expr> components);

  static VectorField zero(const ChartDomain& chart);
  static VectorField coordinate(const ChartDomain& chart, int i);

  const ChartDomain& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  const std::vector<Expr>& components() const { return components_; }
  const Expr& operator[](int i) const { return components_[i]; }

  SmallVec value(std::span<const double> p) const;
  std::vector<Jet2> jets(std::span<const double> p) const;

  friend VectorField operator+(const VectorField& a, const VectorField& b);
  friend VectorField operator-(const VectorField& a, const VectorField& b);
  friend VectorField operator*(const Expr& f, const VectorField& a);
  friend VectorField operator*(double s, const VectorField& a);

 private:
  ChartDomain chart_;
  std::vector<Expr> components_;
};

struct CovectorValue {
  Point point;
  SmallVec components;
};

class CovectorField {
 public:
  CovectorField() = default;
  CovectorField(ChartDomain chart, std::vector<Expr> components);

  const ChartDomain& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  const std::vector<Expr>& components() const { return components_; }
  SmallVec value(std::span<const double> p) const;
  std::vector<Jet2> jets(std::span<const double> p) const;

 private:
  ChartDomain chart_;
  std::vector<Expr> components_;
};

// Symmetric matrix of expressions; only the upper triangle is stored.
class MetricField {
 public:
  MetricField() = default;
  // Reads the upper triangle of `rows`; the lower triangle is ignored.
  MetricField(ChartDomain chart, const std::vector<std::vector<Expr>>& rows);
  static MetricField diagonal(ChartDomain chart, const std::vector<Expr>& diag);
  static MetricField identity(ChartDomain chart);

  const ChartDomain& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  const Expr& entry(int i, int j) const { return upper_[packed_index(dim(), i, j)]; }
  const std::vector<Expr>& packed() const { return upper_; }
  std::vector<Jet2> jets(std::span<const double> p) const;

 private:
  ChartDomain chart_;
  std::vector<Expr> upper_;
};

SmallMat metric_at(const MetricField& g, std::span<const double> p);

CovectorValue flat(const MetricField& g, const VectorField& x, std::span<const double> p);

SmallVec lie_bracket(const VectorField& x, const VectorField& y, std::span<const double> p);

// (L_Y g)(Z, X) at p.
double lie_derivative_metric(const VectorField& y, const MetricField& g, const VectorField& z, const VectorField& x,
                             std::span<const double> p);

// H^f(X, T) with the Levi-Civita connection of a nondegenerate metric. Throws
// SingularBaseMetric when g(p) is singular at the default rank tolerance.
double hessian_scalar(const MetricField& g, const ScalarField& f, const VectorField& x, const VectorField& t,
                      std::span<const double> p);

// Shared chart check; throws DimensionMismatch.
void require_same_dim(int a, int b, const char* what);

}  // namespace koszul
