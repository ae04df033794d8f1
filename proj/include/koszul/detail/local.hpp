#pragma once

// Pointwise first-order data of fields, templated on the scalar type.
//
// With S = double a LocalVector holds X^a(p) and d_c X^a(p). With S = Jet1 each
// of those entries additionally carries its own gradient, so any expression
// assembled from them (a Koszul form, an inner product) comes out with its
// exact first derivative at p.

#include <array>
#include <span>
#include <vector>

#include "koszul/fields.hpp"
#include "koszul/jet.hpp"

namespace koszul::detail {

template <class S>
struct LocalVector {
  int n = 0;
  std::array<S, kMaxDim> v{};
  std::array<std::array<S, kMaxDim>, kMaxDim> d{};  // d[c][a] = d_c X^a

  explicit LocalVector(int dim = 0) : n(dim) {
    for (int a = 0; a < n; ++a) {
      v[a] = ScalarTraits<S>::zero(n);
      for (int c = 0; c < n; ++c) d[c][a] = ScalarTraits<S>::zero(n);
    }
  }
};

// A (1,1) or (0,2) array with first derivatives: m[a][b], dm[c][a][b].
template <class S>
struct LocalMatrix {
  int n = 0;
  std::array<std::array<S, kMaxDim>, kMaxDim> m{};
  std::array<std::array<std::array<S, kMaxDim>, kMaxDim>, kMaxDim> dm{};
};

inline SmallVec hessian_row(const Jet2& j, int c) {
  const int n = j.dim();
  SmallVec r(n);
  for (int k = 0; k < n; ++k) r[k] = j.hessian(c, k);
  return r;
}

template <class S>
S value_of(const Jet2& j) {
  return ScalarTraits<S>::from_jet_row(j.value(), j.gradient());
}

template <class S>
S derivative_of(const Jet2& j, int c) {
  if constexpr (std::is_same_v<S, double>) {
    return j.gradient(c);
  } else {
    return ScalarTraits<S>::from_jet_row(j.gradient(c), hessian_row(j, c));
  }
}

template <class S>
LocalVector<S> local_vector(std::span<const Jet2> comps) {
  const int n = static_cast<int>(comps.size());
  LocalVector<S> out;
  out.n = n;
  for (int a = 0; a < n; ++a) {
    out.v[a] = value_of<S>(comps[a]);
    for (int c = 0; c < n; ++c) out.d[c][a] = derivative_of<S>(comps[a], c);
  }
  return out;
}

template <class S>
LocalVector<S> local_vector(const VectorField& x, std::span<const double> p) {
  const auto jets = x.jets(p);
  return local_vector<S>(std::span<const Jet2>(jets));
}

// Field with the given value at p and vanishing derivatives. Valid wherever the
// consumer is tensorial in that argument.
template <class S>
LocalVector<S> constant_vector(const SmallVec& values) {
  const int n = static_cast<int>(values.size());
  LocalVector<S> out(n);
  for (int a = 0; a < n; ++a) out.v[a] = ScalarTraits<S>::from_jet_row(values[a], SmallVec::Zero(n));
  return out;
}

template <class S>
LocalMatrix<S> local_metric(const MetricField& g, std::span<const double> p) {
  const int n = g.dim();
  const auto jets = g.jets(p);
  LocalMatrix<S> out;
  out.n = n;
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      const Jet2& j = jets[packed_index(n, a, b)];
      out.m[a][b] = out.m[b][a] = value_of<S>(j);
      for (int c = 0; c < n; ++c) out.dm[c][a][b] = out.dm[c][b][a] = derivative_of<S>(j, c);
    }
  }
  return out;
}

// Entries are row-major jets of a full n x n array.
template <class S>
LocalMatrix<S> local_matrix(std::span<const Jet2> jets, int n) {
  LocalMatrix<S> out;
  out.n = n;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const Jet2& j = jets[a * n + b];
      out.m[a][b] = value_of<S>(j);
      for (int c = 0; c < n; ++c) out.dm[c][a][b] = derivative_of<S>(j, c);
    }
  }
  return out;
}

template <class S>
S zero_like(int n) {
  return ScalarTraits<S>::zero(n);
}

template <class S>
S inner(const LocalMatrix<S>& g, const LocalVector<S>& x, const LocalVector<S>& y) {
  S s = zero_like<S>(g.n);
  for (int a = 0; a < g.n; ++a) {
    for (int b = 0; b < g.n; ++b) s += g.m[a][b] * x.v[a] * y.v[b];
  }
  return s;
}

// Inner product with a bare vector of values.
template <class S>
S inner_values(const LocalMatrix<S>& g, const std::array<S, kMaxDim>& x, const LocalVector<S>& y) {
  S s = zero_like<S>(g.n);
  for (int a = 0; a < g.n; ++a) {
    for (int b = 0; b < g.n; ++b) s += g.m[a][b] * x[a] * y.v[b];
  }
  return s;
}

// W<X, Y>, the derivative of g(X, Y) along W.
template <class S>
S derive_inner(const LocalVector<S>& w, const LocalMatrix<S>& g, const LocalVector<S>& x, const LocalVector<S>& y) {
  const int n = g.n;
  S s = zero_like<S>(n);
  for (int c = 0; c < n; ++c) {
    S dc = zero_like<S>(n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        dc += g.dm[c][a][b] * x.v[a] * y.v[b] + g.m[a][b] * (x.d[c][a] * y.v[b] + x.v[a] * y.d[c][b]);
      }
    }
    s += w.v[c] * dc;
  }
  return s;
}

// Values of [X, Y] at p.
template <class S>
std::array<S, kMaxDim> bracket(const LocalVector<S>& x, const LocalVector<S>& y) {
  const int n = x.n;
  std::array<S, kMaxDim> out{};
  for (int k = 0; k < n; ++k) {
    S s = zero_like<S>(n);
    for (int j = 0; j < n; ++j) s += x.v[j] * y.d[j][k] - y.v[j] * x.d[j][k];
    out[k] = s;
  }
  return out;
}

// Koszul form 1/2 {X<Y,Z> + Y<Z,X> - Z<X,Y> - <X,[Y,Z]> + <Y,[Z,X]> + <Z,[X,Y]>}.
template <class S>
S koszul(const LocalMatrix<S>& g, const LocalVector<S>& x, const LocalVector<S>& y, const LocalVector<S>& z) {
  S s = derive_inner(x, g, y, z) + derive_inner(y, g, z, x) - derive_inner(z, g, x, y);
  s -= inner_values(g, bracket(y, z), x);
  s += inner_values(g, bracket(z, x), y);
  s += inner_values(g, bracket(x, y), z);
  return 0.5 * s;
}

// J applied to Y with the product rule on derivatives.
template <class S>
LocalVector<S> apply(const LocalMatrix<S>& j, const LocalVector<S>& y) {
  const int n = j.n;
  LocalVector<S> out(n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      out.v[a] += j.m[a][b] * y.v[b];
      for (int c = 0; c < n; ++c) out.d[c][a] += j.dm[c][a][b] * y.v[b] + j.m[a][b] * y.d[c][b];
    }
  }
  return out;
}

template <class S>
SmallVec values(const std::array<S, kMaxDim>& a, int n) {
  SmallVec out(n);
  for (int i = 0; i < n; ++i) out[i] = ScalarTraits<S>::value(a[i]);
  return out;
}

template <class S>
SmallVec values(const LocalVector<S>& x) {
  return values(x.v, x.n);
}

}  // namespace koszul::detail
