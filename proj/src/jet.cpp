#include "koszul/jet.hpp"

namespace koszul {

SmallMat Jet2::hessian_matrix() const {
  const int n = dim();
  SmallMat h(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) h(i, j) = hessian(i, j);
  }
  return h;
}

Jet2 Jet2::operator-() const {
  Jet2 r = *this;
  r.value_ = -value_;
  r.gradient_ = -gradient_;
  r.hessian_ = -hessian_;
  return r;
}

Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r = a;
  r.value_ += b.value_;
  r.gradient_ += b.gradient_;
  r.hessian_ += b.hessian_;
  return r;
}

Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 r = a;
  r.value_ -= b.value_;
  r.gradient_ -= b.gradient_;
  r.hessian_ -= b.hessian_;
  return r;
}

Jet2 operator*(const Jet2& a, const Jet2& b) {
  const int n = a.dim();
  Jet2 r(n);
  r.value_ = a.value_ * b.value_;
  r.gradient_ = a.value_ * b.gradient_ + b.value_ * a.gradient_;
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j, ++k) {
      r.hessian_[k] = a.value_ * b.hessian_[k] + b.value_ * a.hessian_[k] +
                      a.gradient_[i] * b.gradient_[j] + b.gradient_[i] * a.gradient_[j];
    }
  }
  return r;
}

Jet2 operator/(const Jet2& a, const Jet2& b) {
  const double x = b.value_;
  const Jet2 inv = b.compose(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x));
  return a * inv;
}

Jet2 Jet2::compose(double phi, double dphi, double ddphi) const {
  const int n = dim();
  Jet2 r(n);
  r.value_ = phi;
  r.gradient_ = dphi * gradient_;
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j, ++k) {
      r.hessian_[k] = dphi * hessian_[k] + ddphi * gradient_[i] * gradient_[j];
    }
  }
  return r;
}

}  // namespace koszul
