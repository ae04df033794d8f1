#pragma once

// Riemann curvature of the four connections from the Koszul-form formula
//   R(X,Y,Z,T) = X(K(Y,Z,T)) - Y(K(X,Z,T)) - K([X,Y],Z,T)
//              + <<K(X,Z,.), K(Y,T,.)>> - <<K(Y,Z,.), K(X,T,.)>>
// and the relations that express the semi-symmetric curvatures through the
// Levi-Civita one.

#include <span>

#include "koszul/koszul_forms.hpp"

namespace koszul {

// A value together with the largest magnitude among the terms summed to get
// it, for relative error budgets.
struct ScaledValue {
  double value = 0.0;
  double scale = 0.0;

  void add(double term);
};

ScaledValue riemann_terms(const Frame& f, const VectorField& x, const VectorField& y, const VectorField& z,
                          const VectorField& t);

double riemann(const ConnectionVariant& v, const MetricField& g, const VectorField& x, const VectorField& y,
               const VectorField& z, const VectorField& t, std::span<const double> p);

// Levi-Civita curvature plus the semi-symmetric metric correction terms.
ScaledValue riemann_relation_ssm_terms(const MetricField& g, const VectorField& pf, const VectorField& x,
                                       const VectorField& y, const VectorField& z, const VectorField& t,
                                       std::span<const double> p);
double riemann_relation_ssm(const MetricField& g, const VectorField& pf, const VectorField& x, const VectorField& y,
                            const VectorField& z, const VectorField& t, std::span<const double> p);

// Levi-Civita curvature plus the semi-symmetric non-metric correction terms.
ScaledValue riemann_relation_ssnm_terms(const MetricField& g, const VectorField& pf, const VectorField& x,
                                        const VectorField& y, const VectorField& z, const VectorField& t,
                                        std::span<const double> p);
double riemann_relation_ssnm(const MetricField& g, const VectorField& pf, const VectorField& x, const VectorField& y,
                             const VectorField& z, const VectorField& t, std::span<const double> p);

// R^(X,Y,fZ,T) - f(p) R^(X,Y,Z,T) for the semi-symmetric non-metric connection.
ScaledValue nontensorial_defect_terms(const MetricField& g, const VectorField& pf, const ScalarField& f,
                                      const VectorField& x, const VectorField& y, const VectorField& z,
                                      const VectorField& t, std::span<const double> p);
double nontensorial_defect(const MetricField& g, const VectorField& pf, const ScalarField& f, const VectorField& x,
                           const VectorField& y, const VectorField& z, const VectorField& t,
                           std::span<const double> p);

}  // namespace koszul
