#include "koszul/curvature.hpp"

#include <cmath>

namespace koszul {

void ScaledValue::add(double term) {
  value += term;
  scale = std::max(scale, std::abs(term));
}

ScaledValue riemann_terms(const Frame& f, const VectorField& x, const VectorField& y, const VectorField& z,
                          const VectorField& t) {
  ScaledValue r;
  r.add(f.derive_koszul_variant(x, y, z, t));
  r.add(-f.derive_koszul_variant(y, x, z, t));
  // The forms are tensorial in the first slot, so the value of [X, Y] at p is enough.
  r.add(-f.koszul_variant_at(f.bracket(x, y), z, t));
  r.add(f.co_inner(f.lower(x, z), f.lower(y, t)));
  r.add(-f.co_inner(f.lower(y, z), f.lower(x, t)));
  return r;
}

double riemann(const ConnectionVariant& v, const MetricField& g, const VectorField& x, const VectorField& y,
               const VectorField& z, const VectorField& t, std::span<const double> p) {
  return riemann_terms(Frame(g, v, p), x, y, z, t).value;
}

ScaledValue riemann_relation_ssm_terms(const MetricField& g, const VectorField& pf, const VectorField& x,
                                       const VectorField& y, const VectorField& z, const VectorField& t,
                                       std::span<const double> p) {
  const Frame lc(g, ConnectionVariant::levi_civita(), p);
  const Frame ss(g, ConnectionVariant::ss_metric(pf), p);
  const auto r = riemann_terms(lc, x, y, z, t);
  ScaledValue out;
  out.scale = r.scale;
  out.add(r.value);
  out.add(-lc.inner(y, pf) * lc.inner(x, z) * lc.inner(pf, t));
  out.add(lc.inner(x, pf) * lc.inner(y, z) * lc.inner(pf, t));
  out.add(ss.koszul_variant(x, pf, z) * lc.inner(y, t));
  out.add(-ss.koszul_variant(y, pf, z) * lc.inner(x, t));
  out.add(-lc.koszul(x, pf, t) * lc.inner(y, z));
  out.add(lc.koszul(y, pf, t) * lc.inner(x, z));
  return out;
}

double riemann_relation_ssm(const MetricField& g, const VectorField& pf, const VectorField& x, const VectorField& y,
                            const VectorField& z, const VectorField& t, std::span<const double> p) {
  return riemann_relation_ssm_terms(g, pf, x, y, z, t, p).value;
}

ScaledValue riemann_relation_ssnm_terms(const MetricField& g, const VectorField& pf, const VectorField& x,
                                        const VectorField& y, const VectorField& z, const VectorField& t,
                                        std::span<const double> p) {
  const Frame lc(g, ConnectionVariant::levi_civita(), p);
  const Frame sn(g, ConnectionVariant::ss_non_metric(pf), p);
  const auto r = riemann_terms(lc, x, y, z, t);
  ScaledValue out;
  out.scale = r.scale;
  out.add(r.value);
  out.add(lc.derive_inner(x, z, pf) * lc.inner(y, t));
  out.add(-lc.derive_inner(y, z, pf) * lc.inner(x, t));
  out.add(-sn.koszul_variant(y, z, x) * lc.inner(pf, t));
  out.add(sn.koszul_variant(x, z, y) * lc.inner(pf, t));
  return out;
}

double riemann_relation_ssnm(const MetricField& g, const VectorField& pf, const VectorField& x, const VectorField& y,
                             const VectorField& z, const VectorField& t, std::span<const double> p) {
  return riemann_relation_ssnm_terms(g, pf, x, y, z, t, p).value;
}

ScaledValue nontensorial_defect_terms(const MetricField& g, const VectorField& pf, const ScalarField& f,
                                      const VectorField& x, const VectorField& y, const VectorField& z,
                                      const VectorField& t, std::span<const double> p) {
  require_same_dim(f.chart.dim(), g.dim(), "scalar field");
  const Frame sn(g, ConnectionVariant::ss_non_metric(pf), p);
  const auto fz = riemann_terms(sn, x, y, f.expr * z, t);
  const auto rz = riemann_terms(sn, x, y, z, t);
  const double fp = eval_value(f.expr, p);
  ScaledValue out;
  out.scale = std::max(fz.scale, std::abs(fp) * rz.scale);
  out.add(fz.value);
  out.add(-fp * rz.value);
  return out;
}

double nontensorial_defect(const MetricField& g, const VectorField& pf, const ScalarField& f, const VectorField& x,
                           const VectorField& y, const VectorField& z, const VectorField& t,
                           std::span<const double> p) {
  return nontensorial_defect_terms(g, pf, f, x, y, z, t, p).value;
}

}  // namespace koszul
