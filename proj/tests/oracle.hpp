#pragma once

// Reference computations that share no code path with the library kernels:
// central finite differences on plain values, and Christoffel symbols from
// finite-differenced metrics.

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <vector>

#include "koszul/expr.hpp"
#include "koszul/fields.hpp"

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using koszul::Point;

inline Point shift(const Point& p, const Vec& dir, double h) {
  Point q = p;
  for (std::size_t i = 0; i < q.size(); ++i) q[i] += h * dir[static_cast<int>(i)];
  return q;
}

// d/ds f(p + s v) at s = 0, fourth-order central stencil.
inline double directional(const std::function<double(const Point&)>& f, const Point& p, const Vec& v,
                          double h = 1e-3) {
  return (-f(shift(p, v, 2 * h)) + 8 * f(shift(p, v, h)) - 8 * f(shift(p, v, -h)) + f(shift(p, v, -2 * h))) /
         (12 * h);
}

inline Vec unit(int n, int i) { return Vec::Unit(n, i); }

inline Vec field_at(const koszul::VectorField& x, const Point& p) {
  Vec v(x.dim());
  for (int i = 0; i < x.dim(); ++i) v[i] = koszul::eval_value(x[i], p);
  return v;
}

inline Mat metric_at(const koszul::MetricField& g, const Point& p) {
  const int n = g.dim();
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = koszul::eval_value(i <= j ? g.entry(i, j) : g.entry(j, i), p);
  }
  return m;
}

inline double inner(const koszul::MetricField& g, const koszul::VectorField& x, const koszul::VectorField& y,
                    const Point& p) {
  return field_at(x, p).dot(metric_at(g, p) * field_at(y, p));
}

// [X, Y]^k = X(Y^k) - Y(X^k) by finite differences.
inline Vec bracket(const koszul::VectorField& x, const koszul::VectorField& y, const Point& p) {
  const int n = x.dim();
  Vec out(n);
  const Vec xv = field_at(x, p);
  const Vec yv = field_at(y, p);
  for (int k = 0; k < n; ++k) {
    auto yk = [&](const Point& q) { return koszul::eval_value(y[k], q); };
    auto xk = [&](const Point& q) { return koszul::eval_value(x[k], q); };
    out[k] = directional(yk, p, xv) - directional(xk, p, yv);
  }
  return out;
}

// Koszul formula with every derivative taken by finite differences.
inline double koszul(const koszul::MetricField& g, const koszul::VectorField& x, const koszul::VectorField& y,
                     const koszul::VectorField& z, const Point& p) {
  auto d = [&](const koszul::VectorField& w, const koszul::VectorField& a, const koszul::VectorField& b) {
    return directional([&](const Point& q) { return inner(g, a, b, q); }, p, field_at(w, p));
  };
  const Mat m = metric_at(g, p);
  const Vec xv = field_at(x, p), yv = field_at(y, p), zv = field_at(z, p);
  const double s = d(x, y, z) + d(y, z, x) - d(z, x, y) - xv.dot(m * bracket(y, z, p)) +
                   yv.dot(m * bracket(z, x, p)) + zv.dot(m * bracket(x, y, p));
  return 0.5 * s;
}

// Christoffel symbols Gamma^k_ij of a nondegenerate metric, metric derivatives
// by finite differences.
inline std::vector<Mat> christoffel(const koszul::MetricField& g, const Point& p) {
  const int n = g.dim();
  std::vector<Mat> dg(n);
  for (int c = 0; c < n; ++c) {
    dg[c] = Mat(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        dg[c](a, b) = directional([&](const Point& q) { return metric_at(g, q)(a, b); }, p, unit(n, c));
      }
    }
  }
  const Mat ginv = metric_at(g, p).inverse();
  std::vector<Mat> gamma(n, Mat::Zero(n, n));
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int l = 0; l < n; ++l) s += 0.5 * ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        gamma[k](i, j) = s;
      }
    }
  }
  return gamma;
}

// nabla_X Y at p on a nondegenerate metric.
inline Vec levi_civita(const koszul::MetricField& g, const koszul::VectorField& x, const koszul::VectorField& y,
                       const Point& p) {
  const int n = g.dim();
  const auto gamma = christoffel(g, p);
  const Vec xv = field_at(x, p), yv = field_at(y, p);
  Vec out(n);
  for (int k = 0; k < n; ++k) {
    out[k] = directional([&](const Point& q) { return koszul::eval_value(y[k], q); }, p, xv) +
             xv.dot(gamma[k] * yv);
  }
  return out;
}

// Random polynomial vector field of degree <= 2.
inline koszul::VectorField random_field(const koszul::ChartDomain& chart, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const int n = chart.dim();
  std::vector<koszul::Expr> comps;
  for (int a = 0; a < n; ++a) {
    koszul::Expr e(u(rng));
    for (int i = 0; i < n; ++i) {
      e = e + u(rng) * koszul::Expr::coord(i);
      for (int j = i; j < n; ++j) e = e + u(rng) * koszul::Expr::coord(i) * koszul::Expr::coord(j);
    }
    comps.push_back(e);
  }
  return koszul::VectorField(chart, comps);
}

}  // namespace oracle
