#include "koszul/fields.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>

#include "koszul/degenerate_linalg.hpp"
#include "koszul/detail/local.hpp"
#include "koszul/error.hpp"

namespace koszul {

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": dimensions " + std::to_string(a) + " and " + std::to_string(b) +
                            " differ");
  }
}

ChartDomain::ChartDomain(std::vector<Interval> bounds) : bounds_(std::move(bounds)) {
  if (bounds_.empty() || static_cast<int>(bounds_.size()) > kMaxDim) {
    throw DimensionMismatch("chart dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
  for (const auto& b : bounds_) {
    if (!(b.lo <= b.hi)) throw DimensionMismatch("empty chart interval");
  }
}

ChartDomain ChartDomain::box(int dim, double lo, double hi) {
  return ChartDomain(std::vector<Interval>(static_cast<std::size_t>(dim), Interval{lo, hi}));
}

bool ChartDomain::contains(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (p[i] < bounds_[i].lo || p[i] > bounds_[i].hi) return false;
  }
  return true;
}

void ChartDomain::require_point(std::span<const double> p) const {
  require_same_dim(static_cast<int>(p.size()), dim(), "point");
}

namespace {

void check_exprs(const ChartDomain& chart, const std::vector<Expr>& exprs, const char* what) {
  for (const auto& e : exprs) {
    if (e.max_coord() >= chart.dim()) {
      throw DimensionMismatch(std::string(what) + " references coordinate " + std::to_string(e.max_coord()) +
                              " on a chart of dimension " + std::to_string(chart.dim()));
    }
  }
}

std::vector<Jet2> eval_all(const std::vector<Expr>& exprs, std::span<const double> p) {
  std::vector<Jet2> out;
  out.reserve(exprs.size());
  for (const auto& e : exprs) out.push_back(eval_jet2(e, p));
  return out;
}

}  // namespace

ScalarField::ScalarField(ChartDomain c, Expr e) : chart(std::move(c)), expr(std::move(e)) {
  check_exprs(chart, {expr}, "scalar field");
}

Jet2 ScalarField::jet(std::span<const double> p) const {
  chart.require_point(p);
  return eval_jet2(expr, p);
}

VectorField::VectorField(ChartDomain chart, std::vector<Expr> components)
    : chart_(std::move(chart)), components_(std::move(components)) {
  require_same_dim(static_cast<int>(components_.size()), chart_.dim(), "vector field");
  check_exprs(chart_, components_, "vector field");
}

VectorField VectorField::zero(const ChartDomain& chart) {
  return VectorField(chart, std::vector<Expr>(static_cast<std::size_t>(chart.dim())));
}

VectorField VectorField::coordinate(const ChartDomain& chart, int i) {
  std::vector<Expr> c(static_cast<std::size_t>(chart.dim()));
  if (i < 0 || i >= chart.dim()) throw DimensionMismatch("coordinate field index out of range");
  c[i] = Expr(1.0);
  return VectorField(chart, std::move(c));
}

SmallVec VectorField::value(std::span<const double> p) const {
  chart_.require_point(p);
  SmallVec v(dim());
  for (int i = 0; i < dim(); ++i) v[i] = eval_value(components_[i], p);
  return v;
}

std::vector<Jet2> VectorField::jets(std::span<const double> p) const {
  chart_.require_point(p);
  return eval_all(components_, p);
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  require_same_dim(a.dim(), b.dim(), "field sum");
  std::vector<Expr> c;
  for (int i = 0; i < a.dim(); ++i) c.push_back(a[i] + b[i]);
  return VectorField(a.chart(), std::move(c));
}

VectorField operator-(const VectorField& a, const VectorField& b) {
  require_same_dim(a.dim(), b.dim(), "field difference");
  std::vector<Expr> c;
  for (int i = 0; i < a.dim(); ++i) c.push_back(a[i] - b[i]);
  return VectorField(a.chart(), std::move(c));
}

VectorField operator*(const Expr& f, const VectorField& a) {
  std::vector<Expr> c;
  for (int i = 0; i < a.dim(); ++i) c.push_back(f * a[i]);
  return VectorField(a.chart(), std::move(c));
}

VectorField operator*(double s, const VectorField& a) { return Expr(s) * a; }

CovectorField::CovectorField(ChartDomain chart, std::vector<Expr> components)
    : chart_(std::move(chart)), components_(std::move(components)) {
  require_same_dim(static_cast<int>(components_.size()), chart_.dim(), "covector field");
  check_exprs(chart_, components_, "covector field");
}

SmallVec CovectorField::value(std::span<const double> p) const {
  chart_.require_point(p);
  SmallVec v(static_cast<int>(components_.size()));
  for (std::size_t i = 0; i < components_.size(); ++i) v[static_cast<int>(i)] = eval_value(components_[i], p);
  return v;
}

std::vector<Jet2> CovectorField::jets(std::span<const double> p) const {
  chart_.require_point(p);
  return eval_all(components_, p);
}

MetricField::MetricField(ChartDomain chart, const std::vector<std::vector<Expr>>& rows) : chart_(std::move(chart)) {
  const int n = dim();
  require_same_dim(static_cast<int>(rows.size()), n, "metric rows");
  upper_.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
  for (int i = 0; i < n; ++i) {
    require_same_dim(static_cast<int>(rows[i].size()), n, "metric row");
    for (int j = i; j < n; ++j) upper_.push_back(rows[i][j]);
  }
  check_exprs(chart_, upper_, "metric");
}

MetricField MetricField::diagonal(ChartDomain chart, const std::vector<Expr>& diag) {
  const int n = chart.dim();
  require_same_dim(static_cast<int>(diag.size()), n, "metric diagonal");
  std::vector<std::vector<Expr>> rows(n, std::vector<Expr>(n));
  for (int i = 0; i < n; ++i) rows[i][i] = diag[i];
  return MetricField(std::move(chart), rows);
}

MetricField MetricField::identity(ChartDomain chart) {
  return diagonal(chart, std::vector<Expr>(static_cast<std::size_t>(chart.dim()), Expr(1.0)));
}

std::vector<Jet2> MetricField::jets(std::span<const double> p) const {
  chart_.require_point(p);
  return eval_all(upper_, p);
}

SmallMat metric_at(const MetricField& g, std::span<const double> p) {
  g.chart().require_point(p);
  const int n = g.dim();
  SmallMat m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) m(i, j) = m(j, i) = eval_value(g.entry(i, j), p);
  }
  return m;
}

CovectorValue flat(const MetricField& g, const VectorField& x, std::span<const double> p) {
  require_same_dim(g.dim(), x.dim(), "flat");
  return {Point(p.begin(), p.end()), metric_at(g, p) * x.value(p)};
}

SmallVec lie_bracket(const VectorField& x, const VectorField& y, std::span<const double> p) {
  require_same_dim(x.dim(), y.dim(), "lie_bracket");
  const auto lx = detail::local_vector<double>(x, p);
  const auto ly = detail::local_vector<double>(y, p);
  return detail::values(detail::bracket(lx, ly), x.dim());
}

double lie_derivative_metric(const VectorField& y, const MetricField& g, const VectorField& z, const VectorField& x,
                             std::span<const double> p) {
  require_same_dim(y.dim(), g.dim(), "lie_derivative_metric");
  require_same_dim(z.dim(), g.dim(), "lie_derivative_metric");
  require_same_dim(x.dim(), g.dim(), "lie_derivative_metric");
  const auto lg = detail::local_metric<double>(g, p);
  const auto ly = detail::local_vector<double>(y, p);
  const auto lz = detail::local_vector<double>(z, p);
  const auto lx = detail::local_vector<double>(x, p);
  return detail::derive_inner(ly, lg, lz, lx) - detail::inner_values(lg, detail::bracket(ly, lz), lx) -
         detail::inner_values(lg, detail::bracket(ly, lx), lz);
}

double hessian_scalar(const MetricField& g, const ScalarField& f, const VectorField& x, const VectorField& t,
                      std::span<const double> p) {
  const int n = g.dim();
  require_same_dim(f.chart.dim(), n, "hessian_scalar");
  require_same_dim(x.dim(), n, "hessian_scalar");
  require_same_dim(t.dim(), n, "hessian_scalar");
  const auto lg = detail::local_metric<double>(g, p);
  SmallMat gm(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) gm(a, b) = lg.m[a][b];
  }
  require_nondegenerate(gm, kDefaultRankTol);
  const SmallMat ginv = gm.inverse();

  const Jet2 fj = f.jet(p);
  const auto lx = detail::local_vector<double>(x, p);
  const auto lt = detail::local_vector<double>(t, p);

  // X(T f) = X^c (d_c T^a d_a f + T^a d_c d_a f)
  double xtf = 0.0;
  for (int c = 0; c < n; ++c) {
    for (int a = 0; a < n; ++a) xtf += lx.v[c] * (lt.d[c][a] * fj.gradient(a) + lt.v[a] * fj.hessian(c, a));
  }
  // (nabla_X T)^k = X^c d_c T^k + Gamma^k_ij X^i T^j
  double nabla_f = 0.0;
  for (int k = 0; k < n; ++k) {
    double comp = 0.0;
    for (int c = 0; c < n; ++c) comp += lx.v[c] * lt.d[c][k];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double gamma = 0.0;
        for (int l = 0; l < n; ++l) {
          gamma += 0.5 * ginv(k, l) * (lg.dm[i][j][l] + lg.dm[j][i][l] - lg.dm[l][i][j]);
        }
        comp += gamma * lx.v[i] * lt.v[j];
      }
    }
    nabla_f += comp * fj.gradient(k);
  }
  return xtf - nabla_f;
}

}  // namespace koszul
