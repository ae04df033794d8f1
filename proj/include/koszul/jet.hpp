#pragma once

// Forward-mode Taylor jets.
//
// Jet2 carries value, gradient and Hessian of a scalar at a chart point and is
// what expression evaluation produces. Jet1 carries value and gradient only; the
// geometric kernels run on Jet1 when they need the derivative of a quantity that
// is itself built from first derivatives (Koszul forms under a directional
// derivative), seeded from the Hessian rows of Jet2.

#include <Eigen/Core>
#include <cmath>
#include <cstddef>

namespace koszul {

inline constexpr int kMaxDim = 8;
inline constexpr int kMaxPacked = kMaxDim * (kMaxDim + 1) / 2;

using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using PackedSym = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxPacked, 1>;

// Index of (i, j), i <= j, in a row-major packed upper triangle of order n.
constexpr int packed_index(int n, int i, int j) {
  if (i > j) {
    const int tmp = i;
    i = j;
    j = tmp;
  }
  return i * n - i * (i - 1) / 2 + (j - i);
}

class Jet2 {
 public:
  Jet2() = default;
  explicit Jet2(int n) : value_(0.0), gradient_(SmallVec::Zero(n)), hessian_(PackedSym::Zero(n * (n + 1) / 2)) {}

  static Jet2 constant(int n, double c) {
    Jet2 j(n);
    j.value_ = c;
    return j;
  }
  static Jet2 variable(int n, int i, double x) {
    Jet2 j(n);
    j.value_ = x;
    j.gradient_[i] = 1.0;
    return j;
  }

  int dim() const { return static_cast<int>(gradient_.size()); }
  double value() const { return value_; }
  const SmallVec& gradient() const { return gradient_; }
  double gradient(int i) const { return gradient_[i]; }
  double hessian(int i, int j) const { return hessian_[packed_index(dim(), i, j)]; }
  const PackedSym& packed_hessian() const { return hessian_; }
  SmallMat hessian_matrix() const;

  Jet2 operator-() const;
  friend Jet2 operator+(const Jet2& a, const Jet2& b);
  friend Jet2 operator-(const Jet2& a, const Jet2& b);
  friend Jet2 operator*(const Jet2& a, const Jet2& b);
  friend Jet2 operator/(const Jet2& a, const Jet2& b);

  // phi(a) given phi(a.value), phi'(.) and phi''(.).
  Jet2 compose(double phi, double dphi, double ddphi) const;

 private:
  double value_ = 0.0;
  SmallVec gradient_;
  PackedSym hessian_;
};

// Value plus gradient. Used as the scalar of the geometric kernels when a
// first derivative of the kernel output is wanted.
struct Jet1 {
  double v = 0.0;
  SmallVec g;

  Jet1() = default;
  Jet1(double value, SmallVec grad) : v(value), g(std::move(grad)) {}

  Jet1& operator+=(const Jet1& o) {
    v += o.v;
    g += o.g;
    return *this;
  }
  Jet1& operator-=(const Jet1& o) {
    v -= o.v;
    g -= o.g;
    return *this;
  }
  friend Jet1 operator+(Jet1 a, const Jet1& b) { return a += b; }
  friend Jet1 operator-(Jet1 a, const Jet1& b) { return a -= b; }
  friend Jet1 operator-(const Jet1& a) { return {-a.v, -a.g}; }
  friend Jet1 operator*(const Jet1& a, const Jet1& b) { return {a.v * b.v, a.v * b.g + b.v * a.g}; }
  friend Jet1 operator*(double s, const Jet1& a) { return {s * a.v, s * a.g}; }
  friend Jet1 operator*(const Jet1& a, double s) { return {s * a.v, s * a.g}; }
  friend Jet1 operator/(const Jet1& a, const Jet1& b) {
    return {a.v / b.v, (a.g * b.v - a.v * b.g) / (b.v * b.v)};
  }
};

// Uniform access for kernels templated on double or Jet1.
template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static double zero(int) { return 0.0; }
  static double from_jet_row(double value, const SmallVec&) { return value; }
  static double value(double s) { return s; }
};

template <>
struct ScalarTraits<Jet1> {
  static Jet1 zero(int n) { return {0.0, SmallVec::Zero(n)}; }
  static Jet1 from_jet_row(double value, const SmallVec& row) { return {value, row}; }
  static double value(const Jet1& s) { return s.v; }
};

}  // namespace koszul
