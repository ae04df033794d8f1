#include "koszul/products.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "koszul/error.hpp"

namespace koszul {

int WarpedProductSpec::dim() const {
  int n = base.chart.dim();
  for (const auto& f : fibers) n += f.chart.dim();
  return n;
}

int WarpedProductSpec::offset(int factor) const {
  if (factor < 0 || factor > fiber_count()) throw std::out_of_range("factor index out of range");
  int n = 0;
  for (int k = 0; k < factor; ++k) n += factor_chart(k).dim();
  return n;
}

const ChartDomain& WarpedProductSpec::factor_chart(int factor) const {
  return factor == 0 ? base.chart : fibers.at(factor - 1).chart;
}

const MetricField& WarpedProductSpec::factor_metric(int factor) const {
  return factor == 0 ? base.metric : fibers.at(factor - 1).metric;
}

const std::optional<ProductStructure>& WarpedProductSpec::factor_structure(int factor) const {
  return factor == 0 ? base.structure : fibers.at(factor - 1).structure;
}

bool WarpedProductSpec::has_structure() const {
  for (int k = 0; k < factor_count(); ++k) {
    if (!factor_structure(k)) return false;
  }
  return true;
}

ChartDomain WarpedProductSpec::chart() const {
  std::vector<Interval> bounds;
  for (int k = 0; k < factor_count(); ++k) {
    const auto& b = factor_chart(k).bounds();
    bounds.insert(bounds.end(), b.begin(), b.end());
  }
  return ChartDomain(bounds);
}

void WarpedProductSpec::validate() const {
  if (fibers.empty()) throw std::invalid_argument("a warped product needs at least one fiber");
  bool any = false;
  bool all = true;
  for (int k = 0; k < factor_count(); ++k) {
    require_same_dim(factor_metric(k).dim(), factor_chart(k).dim(), "factor metric");
    if (const auto& s = factor_structure(k)) {
      require_same_dim(s->dim(), factor_chart(k).dim(), "factor structure");
      any = true;
    } else {
      all = false;
    }
  }
  if (any && !all) throw std::invalid_argument("a product structure needs a structure on every factor");
  for (const auto& f : fibers) {
    require_same_dim(f.warp.chart.dim(), base.chart.dim(), "warping function");
    if (f.warp.expr.max_coord() >= base.chart.dim()) {
      throw DimensionMismatch("warping function depends on non-base coordinates");
    }
  }
  if (p) {
    if (p->factor < 0 || p->factor > fiber_count()) throw std::invalid_argument("P placed on a missing factor");
    require_same_dim(p->field.dim(), factor_chart(p->factor).dim(), "P");
  }
}

MetricField assemble_product_metric(const WarpedProductSpec& spec) {
  spec.validate();
  const int n = spec.dim();
  std::vector<std::vector<Expr>> rows(n, std::vector<Expr>(n));
  for (int k = 0; k < spec.factor_count(); ++k) {
    const auto& g = spec.factor_metric(k);
    const int off = spec.offset(k);
    const Expr w2 = k == 0 ? Expr(1.0) : pow(spec.fibers[k - 1].warp.expr, 2);
    for (int a = 0; a < g.dim(); ++a) {
      for (int b = a; b < g.dim(); ++b) {
        const Expr e = g.entry(a, b).shifted(off);
        rows[off + a][off + b] = k == 0 ? e : w2 * e;
      }
    }
  }
  return MetricField(spec.chart(), rows);
}

ProductStructure assemble_product_structure(const WarpedProductSpec& spec) {
  spec.validate();
  if (!spec.has_structure()) throw std::invalid_argument("product structure requested but factors carry none");
  const int n = spec.dim();
  std::vector<std::vector<Expr>> rows(n, std::vector<Expr>(n));
  for (int k = 0; k < spec.factor_count(); ++k) {
    const auto& j = *spec.factor_structure(k);
    const int off = spec.offset(k);
    for (int a = 0; a < j.dim(); ++a) {
      for (int b = 0; b < j.dim(); ++b) rows[off + a][off + b] = j.entry(a, b).shifted(off);
    }
  }
  return ProductStructure(spec.chart(), rows);
}

VectorField lift_field(const WarpedProductSpec& spec, int factor, const VectorField& field) {
  require_same_dim(field.dim(), spec.factor_chart(factor).dim(), "lifted field");
  const int off = spec.offset(factor);
  std::vector<Expr> comps(spec.dim());
  for (int a = 0; a < field.dim(); ++a) comps[off + a] = field[a].shifted(off);
  return VectorField(spec.chart(), comps);
}

VectorField lift_field(const WarpedProductSpec& spec, const Slot& slot) {
  return lift_field(spec, slot.factor, slot.field);
}

ConnectionVariant product_variant(const WarpedProductSpec& spec, ConnectionTag tag) {
  switch (tag) {
    case ConnectionTag::LeviCivita:
      return ConnectionVariant::levi_civita();
    case ConnectionTag::SSMetric:
    case ConnectionTag::SSNonMetric: {
      if (!spec.p) throw std::invalid_argument("semi-symmetric connection needs P");
      auto pf = lift_field(spec, *spec.p);
      return tag == ConnectionTag::SSMetric ? ConnectionVariant::ss_metric(std::move(pf))
                                            : ConnectionVariant::ss_non_metric(std::move(pf));
    }
    case ConnectionTag::AlmostProduct:
      return ConnectionVariant::almost_product(assemble_product_structure(spec));
  }
  throw std::invalid_argument("unknown connection tag");
}

std::vector<Point> split_point(const WarpedProductSpec& spec, std::span<const double> p) {
  require_same_dim(static_cast<int>(p.size()), spec.dim(), "product point");
  std::vector<Point> out;
  for (int k = 0; k < spec.factor_count(); ++k) {
    const int off = spec.offset(k);
    out.emplace_back(p.begin() + off, p.begin() + off + spec.factor_chart(k).dim());
  }
  return out;
}

VectorField apply_structure(const ProductStructure& j, const VectorField& x) {
  require_same_dim(x.dim(), j.dim(), "structure argument");
  std::vector<Expr> comps;
  for (int a = 0; a < j.dim(); ++a) {
    Expr e;
    for (int b = 0; b < j.dim(); ++b) {
      if (j.entry(a, b).is_zero() || x[b].is_zero()) continue;
      e = e.is_zero() ? j.entry(a, b) * x[b] : e + j.entry(a, b) * x[b];
    }
    comps.push_back(e);
  }
  return VectorField(x.chart(), comps);
}

// ---------------------------------------------------------------------------

namespace {

ConnectionVariant factor_variant(const WarpedProductSpec& spec, ConnectionTag tag, int factor) {
  if (tag == ConnectionTag::AlmostProduct) {
    const auto& s = spec.factor_structure(factor);
    if (!s) throw std::invalid_argument("almost product connection needs a structure on every factor");
    return ConnectionVariant::almost_product(*s);
  }
  if ((tag == ConnectionTag::SSMetric || tag == ConnectionTag::SSNonMetric) && spec.p && spec.p->factor == 0 &&
      factor == 0) {
    return tag == ConnectionTag::SSMetric ? ConnectionVariant::ss_metric(spec.p->field)
                                          : ConnectionVariant::ss_non_metric(spec.p->field);
  }
  return ConnectionVariant::levi_civita();
}

void require_base(const Slot& x) {
  if (x.factor != 0) throw std::invalid_argument("expected a base field");
}

void require_same_factor(const Slot& a, const Slot& b) {
  if (a.factor != b.factor) throw std::invalid_argument("fields from different factors");
}

}  // namespace

FactorData::FactorData(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const double> p)
    : spec_(&spec), points_(split_point(spec, p)) {
  warp_.resize(points_.size());
  for (int j = 1; j < spec.factor_count(); ++j) warp_[j] = spec.fibers[j - 1].warp.jet(points_[0]);
  for (int k = 0; k < spec.factor_count(); ++k) {
    lc_.emplace_back(spec.factor_metric(k), ConnectionVariant::levi_civita(), points_[k]);
    var_.emplace_back(spec.factor_metric(k), factor_variant(spec, tag, k), points_[k]);
  }
  if (spec.base.structure) j1_ = spec.base.structure->value(points_[0]);
}

const Slot& FactorData::p_slot() const {
  if (!spec_->p) throw std::invalid_argument("no P on this product");
  return *spec_->p;
}

double FactorData::df(int j, const Slot& x) const {
  require_base(x);
  return df(j).dot(x.field.value(points_[0]));
}

SmallVec FactorData::df_j1(int j) const {
  if (!j1_) throw std::invalid_argument("base carries no structure");
  return j1_->transpose() * df(j);
}

double FactorData::df_j1(int j, const Slot& x) const {
  require_base(x);
  return df_j1(j).dot(x.field.value(points_[0]));
}

double FactorData::hessian(int j, const Slot& x, const Slot& t) const {
  require_base(x);
  require_base(t);
  return hessian_scalar(spec_->base.metric, spec_->fibers[j - 1].warp, x.field, t.field, points_[0]);
}

const SmallMat& FactorData::base_inverse() const {
  if (!base_inverse_) {
    const SmallMat& g = lc_[0].gram();
    require_nondegenerate(g, kDefaultRankTol);
    base_inverse_ = g.inverse();
  }
  return *base_inverse_;
}

double FactorData::base_cometric(const SmallVec& a, const SmallVec& b) const { return a.dot(base_inverse() * b); }

double FactorData::g(const Slot& a, const Slot& b) const {
  if (a.factor != b.factor) return 0.0;
  return lc_[a.factor].inner(a.field, b.field);
}

Slot FactorData::j(const Slot& a) const {
  const auto& s = spec_->factor_structure(a.factor);
  if (!s) throw std::invalid_argument("factor carries no structure");
  return Slot{a.factor, apply_structure(*s, a.field)};
}

double FactorData::g_j(const Slot& a, const Slot& b) const {
  if (a.factor != b.factor) return 0.0;
  const auto& s = spec_->factor_structure(b.factor);
  if (!s) throw std::invalid_argument("factor carries no structure");
  const auto& pt = points_[b.factor];
  return lc_[a.factor].inner(a.field.value(pt), s->value(pt) * b.field.value(pt));
}

double FactorData::dg(const Slot& w, const Slot& a, const Slot& b) const {
  require_same_factor(w, a);
  require_same_factor(a, b);
  return lc_[a.factor].derive_inner(w.field, a.field, b.field);
}

double FactorData::k(const Slot& a, const Slot& b, const Slot& c) const {
  require_same_factor(a, b);
  require_same_factor(b, c);
  return lc_[a.factor].koszul(a.field, b.field, c.field);
}

double FactorData::kv(const Slot& a, const Slot& b, const Slot& c) const {
  require_same_factor(a, b);
  require_same_factor(b, c);
  return var_[a.factor].koszul_variant(a.field, b.field, c.field);
}

SmallVec FactorData::lower(const Slot& a, const Slot& b) const {
  require_same_factor(a, b);
  return lc_[a.factor].lower_levi_civita(a.field, b.field);
}

SmallVec FactorData::lower_v(const Slot& a, const Slot& b) const {
  require_same_factor(a, b);
  return var_[a.factor].lower(a.field, b.field);
}

ScaledValue FactorData::r(const Slot& a, const Slot& b, const Slot& c, const Slot& d) const {
  require_same_factor(a, b);
  require_same_factor(c, d);
  require_same_factor(a, c);
  return riemann_terms(lc_[a.factor], a.field, b.field, c.field, d.field);
}

ScaledValue FactorData::rv(const Slot& a, const Slot& b, const Slot& c, const Slot& d) const {
  require_same_factor(a, b);
  require_same_factor(c, d);
  require_same_factor(a, c);
  return riemann_terms(var_[a.factor], a.field, b.field, c.field, d.field);
}

double FactorData::kk(const Slot& a, const Slot& b, const Slot& c, const Slot& d) const {
  require_same_factor(a, c);
  return lc_[a.factor].co_inner(lower(a, b), lower(c, d));
}

double FactorData::kkv(const Slot& a, const Slot& b, const Slot& c, const Slot& d) const {
  require_same_factor(a, c);
  return var_[a.factor].co_inner(lower_v(a, b), lower_v(c, d));
}

double FactorData::xt_f(int j, const Slot& x, const Slot& t) const {
  require_base(x);
  require_base(t);
  const Jet2& f = warp_[j];
  const SmallVec xv = x.field.value(points_[0]);
  const auto tj = t.field.jets(points_[0]);
  double s = 0.0;
  for (int c = 0; c < static_cast<int>(xv.size()); ++c) {
    for (int a = 0; a < static_cast<int>(tj.size()); ++a) {
      s += xv[c] * (tj[a].gradient(c) * f.gradient(a) + tj[a].value() * f.hessian(c, a));
    }
  }
  return s;
}

MetricField ConformalSpec::metric() const {
  const int n = chart.dim();
  std::vector<std::vector<Expr>> rows(n, std::vector<Expr>(n));
  const Expr w2 = pow(omega.expr, 2);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) rows[a][b] = base_metric.entry(a, b).is_zero() ? Expr() : w2 * base_metric.entry(a, b);
  }
  return MetricField(chart, rows);
}

ScaledValue conformal_kk_terms(const ConformalSpec& spec, ConnectionTag tag, const VectorField& x,
                               const VectorField& y, const VectorField& z, const VectorField& t,
                               std::span<const double> p) {
  if (tag != ConnectionTag::LeviCivita && tag != ConnectionTag::AlmostProduct) {
    throw UnsupportedCase("conformal contraction is available for lc and ap only");
  }
  if (tag == ConnectionTag::AlmostProduct && !spec.structure) throw std::invalid_argument("missing structure");
  const Frame f0(spec.base_metric, ConnectionVariant::levi_civita(), p);
  require_nondegenerate(f0.gram(), kDefaultRankTol);
  const Jet2 w = spec.omega.jet(p);
  const SmallVec dw = w.gradient();
  // K(X,Y,.) = Omega * (Omega K0(X,Y,.) + X(Omega) Y0 + Y(Omega) X0 - g0(X,Y) dOmega)
  auto reduced = [&](const VectorField& a, const VectorField& b) -> SmallVec {
    const SmallVec av = a.value(p), bv = b.value(p);
    return w.value() * f0.lower_levi_civita(a, b) + dw.dot(av) * f0.flat(bv) + dw.dot(bv) * f0.flat(av) -
           f0.inner(av, bv) * dw;
  };
  auto form = [&](const VectorField& a, const VectorField& b) -> SmallVec {
    if (tag == ConnectionTag::LeviCivita) return reduced(a, b);
    const SmallMat jm = spec.structure->value(p);
    return 0.5 * (reduced(a, b) + jm.transpose() * reduced(a, apply_structure(*spec.structure, b)));
  };
  const SmallVec l = form(x, y), r = form(z, t);
  const SmallMat inv = f0.gram().inverse();
  ScaledValue out;
  for (int a = 0; a < l.size(); ++a) {
    for (int b = 0; b < r.size(); ++b) out.add(l[a] * inv(a, b) * r[b]);
  }
  return out;
}

std::string to_string(ClauseKind kind) {
  switch (kind) {
    case ClauseKind::Koszul:
      return "koszul";
    case ClauseKind::Riemann:
      return "riemann";
    case ClauseKind::Contraction:
      return "kk";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Clause registry.

namespace {

using Slots = std::span<const Slot>;
using C = const FactorData&;

ScaledValue sum(std::initializer_list<double> terms) {
  ScaledValue v;
  for (double t : terms) v.add(t);
  return v;
}

ScaledValue scaled(double k, const ScaledValue& s) { return {k * s.value, std::abs(k) * s.scale}; }

ScaledValue zero(C, Slots) { return {}; }

// Fiber index of slot i.
int fib(Slots s, int i) { return s[i].factor; }

class Registry {
 public:
  Registry& tag(ConnectionTag t, PPlacement p, bool single) {
    tag_ = t;
    p_ = p;
    single_ = single;
    return *this;
  }
  Registry& kind(ClauseKind k) {
    kind_ = k;
    return *this;
  }
  Registry& add(const std::string& id, std::initializer_list<const char*> patterns, ClauseEval eval,
                bool printed = false) {
    for (const char* pat : patterns) out.push_back({id, kind_, tag_, p_, single_, pat, printed, eval});
    return *this;
  }

  std::vector<ProductClause> out;

 private:
  ConnectionTag tag_ = ConnectionTag::LeviCivita;
  PPlacement p_ = PPlacement::None;
  bool single_ = false;
  ClauseKind kind_ = ClauseKind::Koszul;
};

// f g_F(V, W) X(f), the mixed Koszul term shared by every family.
double mixed(C c, const Slot& x, const Slot& v, const Slot& w) {
  const int j = v.factor;
  return c.f(j) * c.g(v, w) * c.df(j, x);
}

// g_F(U,W) g_F(V,Q) - g_F(V,W) g_F(U,Q).
double wedge(C c, const Slot& u, const Slot& v, const Slot& w, const Slot& q) {
  return c.g(u, w) * c.g(v, q) - c.g(v, w) * c.g(u, q);
}

void koszul_clauses(Registry& r) {
  const auto lc = ConnectionTag::LeviCivita;
  const auto ssm = ConnectionTag::SSMetric;
  const auto ssnm = ConnectionTag::SSNonMetric;
  const auto ap = ConnectionTag::AlmostProduct;
  r.kind(ClauseKind::Koszul);

  r.tag(lc, PPlacement::None, false)
      .add("prop-5.2(1)", {"BBB"}, [](C c, Slots s) { return sum({c.k(s[0], s[1], s[2])}); })
      .add("prop-5.2(2)", {"BBj", "BjB", "jBB"}, zero)
      .add("prop-5.2(3)", {"Bjj"}, [](C c, Slots s) { return sum({mixed(c, s[0], s[1], s[2])}); })
      .add("prop-5.2(3)", {"jBj"}, [](C c, Slots s) { return sum({mixed(c, s[1], s[0], s[2])}); })
      .add("prop-5.2(3)", {"jjB"}, [](C c, Slots s) { return sum({-mixed(c, s[2], s[0], s[1])}); })
      .add("prop-5.2(4)", {"Bjk", "jBk", "jkB"}, zero)
      .add("prop-5.2(5)", {"jjj"},
           [](C c, Slots s) {
             const double f = c.f(fib(s, 0));
             return sum({f * f * c.k(s[0], s[1], s[2])});
           })
      .add("prop-5.2(6)", {"jka"}, zero)
      .add("prop-5.2(7)", {"jjk", "jkj", "kjj"}, zero);

  // P on the base.
  auto with_p = [](C c, const Slot& v, const Slot& x, const Slot& w) {
    const double f = c.f(v.factor);
    return mixed(c, x, v, w) + f * f * c.g(x, c.p_slot()) * c.g(v, w);
  };
  r.tag(ssm, PPlacement::Base, true)
      .add("prop-2.15(1)", {"BBB"}, [](C c, Slots s) { return sum({c.kv(s[0], s[1], s[2])}); })
      .add("prop-2.15(2)", {"BBj", "BjB", "jBB"}, zero)
      .add("prop-2.15(3)", {"Bjj"}, [](C c, Slots s) { return sum({mixed(c, s[0], s[1], s[2])}); })
      .add("prop-2.15(4)", {"jBj"}, [with_p](C c, Slots s) { return sum({with_p(c, s[0], s[1], s[2])}); })
      .add("prop-2.15(4)", {"jjB"}, [with_p](C c, Slots s) { return sum({-with_p(c, s[0], s[2], s[1])}); })
      .add("prop-2.15(5)", {"jjj"}, [](C c, Slots s) {
        const double f = c.f(fib(s, 0));
        return sum({f * f * c.k(s[0], s[1], s[2])});
      });
  r.tag(ssnm, PPlacement::Base, true)
      .add("prop-3.13(1)", {"BBB"}, [](C c, Slots s) { return sum({c.kv(s[0], s[1], s[2])}); })
      .add("prop-3.13(2)", {"BBj", "BjB", "jBB"}, zero)
      .add("prop-3.13(3)", {"Bjj"}, [](C c, Slots s) { return sum({mixed(c, s[0], s[1], s[2])}); })
      .add("prop-3.13(3)", {"jjB"}, [](C c, Slots s) { return sum({-mixed(c, s[2], s[0], s[1])}); })
      .add("prop-3.13(4)", {"jBj"}, [with_p](C c, Slots s) { return sum({with_p(c, s[0], s[1], s[2])}); })
      .add("prop-3.13(5)", {"jjj"}, [](C c, Slots s) {
        const double f = c.f(fib(s, 0));
        return sum({f * f * c.k(s[0], s[1], s[2])});
      });

  // P on the fiber.
  auto f2_gb_gp = [](C c, const Slot& x, const Slot& y, const Slot& w) {
    const double f = c.f(w.factor);
    return f * f * c.g(x, y) * c.g(c.p_slot(), w);
  };
  r.tag(ssm, PPlacement::Fiber, true)
      .add("prop-2.16(1)", {"BBB"}, [](C c, Slots s) { return sum({c.k(s[0], s[1], s[2])}); })
      .add("prop-2.16(2)", {"BBj"}, [f2_gb_gp](C c, Slots s) { return sum({-f2_gb_gp(c, s[0], s[1], s[2])}); })
      .add("prop-2.16(2)", {"BjB"}, [f2_gb_gp](C c, Slots s) { return sum({f2_gb_gp(c, s[0], s[2], s[1])}); })
      .add("prop-2.16(3)", {"jBB"}, zero)
      .add("prop-2.16(4)", {"Bjj"}, [](C c, Slots s) { return sum({mixed(c, s[0], s[1], s[2])}); })
      .add("prop-2.16(4)", {"jBj"}, [](C c, Slots s) { return sum({mixed(c, s[1], s[0], s[2])}); })
      .add("prop-2.16(4)", {"jjB"}, [](C c, Slots s) { return sum({-mixed(c, s[2], s[0], s[1])}); })
      .add("prop-2.16(5)", {"jjj"}, [](C c, Slots s) {
        const auto& P = c.p_slot();
        const double f = c.f(fib(s, 0));
        const double f2 = f * f, f4 = f2 * f2;
        return sum({f2 * c.k(s[0], s[1], s[2]), f4 * c.g(s[1], P) * c.g(s[0], s[2]),
                    -f4 * c.g(s[0], s[1]) * c.g(P, s[2])});
      });
  r.tag(ssnm, PPlacement::Fiber, true)
      .add("prop-3.14(1)", {"BBB"}, [](C c, Slots s) { return sum({c.k(s[0], s[1], s[2])}); })
      .add("prop-3.14(2)", {"BBj", "jBB"}, zero)
      .add("prop-3.14(3)", {"BjB"}, [f2_gb_gp](C c, Slots s) { return sum({f2_gb_gp(c, s[0], s[2], s[1])}); })
      .add("prop-3.14(4)", {"Bjj"}, [](C c, Slots s) { return sum({mixed(c, s[0], s[1], s[2])}); })
      .add("prop-3.14(4)", {"jBj"}, [](C c, Slots s) { return sum({mixed(c, s[1], s[0], s[2])}); })
      .add("prop-3.14(4)", {"jjB"}, [](C c, Slots s) { return sum({-mixed(c, s[2], s[0], s[1])}); })
      .add("prop-3.14(5)", {"jjj"}, [](C c, Slots s) {
        const auto& P = c.p_slot();
        const double f = c.f(fib(s, 0));
        const double f2 = f * f, f4 = f2 * f2;
        return sum({f2 * c.k(s[0], s[1], s[2]), f4 * c.g(s[1], P) * c.g(s[0], s[2])});
      });

  // (1/2)[f g_F(V,W) X(f) + f (J X)(f) g_F(V, J W)]
  auto ap_mixed = [](C c, const Slot& v, const Slot& x, const Slot& w) {
    const int j = v.factor;
    return 0.5 * (c.f(j) * c.g(v, w) * c.df(j, x) + c.f(j) * c.df_j1(j, x) * c.g_j(v, w));
  };
  r.tag(ap, PPlacement::None, true)
      .add("prop-4.14(1)", {"BBB"}, [](C c, Slots s) { return sum({c.kv(s[0], s[1], s[2])}); })
      .add("prop-4.14(2)", {"BBj", "BjB", "jBB"}, zero)
      .add("prop-4.14(3)", {"Bjj"}, [](C c, Slots s) { return sum({mixed(c, s[0], s[1], s[2])}); })
      .add("prop-4.14(4)", {"jBj"}, [ap_mixed](C c, Slots s) { return sum({ap_mixed(c, s[0], s[1], s[2])}); })
      .add("prop-4.14(4)", {"jjB"}, [ap_mixed](C c, Slots s) { return sum({-ap_mixed(c, s[0], s[2], s[1])}); })
      .add("prop-4.14(5)", {"jjj"}, [](C c, Slots s) {
        const double f = c.f(fib(s, 0));
        return sum({f * f * c.kv(s[0], s[1], s[2])});
      });
}

void riemann_clauses(Registry& r) {
  const auto lc = ConnectionTag::LeviCivita;
  const auto ssm = ConnectionTag::SSMetric;
  const auto ssnm = ConnectionTag::SSNonMetric;
  const auto ap = ConnectionTag::AlmostProduct;
  r.kind(ClauseKind::Riemann);

  // -f H^f(X,T) g_F(V,W) for slots (X, V, W, T).
  auto hess_term = [](C c, Slots s) {
    const int j = fib(s, 1);
    return -c.f(j) * c.hessian(j, s[0], s[3]) * c.g(s[1], s[2]);
  };
  auto fiber_block = [](C c, Slots s) {
    const int j = fib(s, 0);
    const double f = c.f(j);
    ScaledValue v = scaled(f * f, c.r(s[0], s[1], s[2], s[3]));
    v.add(f * f * c.base_cometric(c.df(j), c.df(j)) * wedge(c, s[0], s[1], s[2], s[3]));
    return v;
  };

  r.tag(lc, PPlacement::None, false)
      .add("thm-5.5(1)", {"BBBB"}, [](C c, Slots s) { return c.r(s[0], s[1], s[2], s[3]); })
      .add("thm-5.5(2)", {"BBBj", "BBjj"}, zero)
      .add("thm-5.5(3)", {"BjjB"}, [hess_term](C c, Slots s) { return sum({hess_term(c, s)}); })
      .add("thm-5.5(4)", {"BBjk", "BjkB", "Bjkj", "Bkjj"}, zero)
      .add("thm-5.5(5)", {"jjBj"}, zero)
      .add("thm-5.5(6)", {"Bkja"}, zero)
      .add("thm-5.5(7)", {"jjjj"}, fiber_block)
      .add("thm-5.5(8)", {"kjjj", "kkjj"}, zero)
      .add("thm-5.5(9)", {"kjkj"},
           [](C c, Slots s) {
             const int k = fib(s, 0), j = fib(s, 1);
             return sum({c.f(k) * c.f(j) * c.base_cometric(c.df(k), c.df(j)) * c.g(s[0], s[2]) * c.g(s[1], s[3])});
           })
      .add("thm-5.5(10)", {"jjka", "jkja"}, zero)
      .add("thm-5.5(11)", {"jkab"}, zero);

  // Semi-symmetric metric, P on the base.
  auto fiber_ssm = [](double sign) {
    return [sign](C c, Slots s) {
      const int j = fib(s, 0);
      const double f = c.f(j);
      const auto& P = c.p_slot();
      const double bracket = f * f * c.base_cometric(c.df(j), c.df(j)) + sign * 2 * f * f * f * c.df(j, P) +
                             sign * f * f * f * f * c.g(P, P);
      ScaledValue v = scaled(f * f, c.r(s[0], s[1], s[2], s[3]));
      v.add(bracket * wedge(c, s[0], s[1], s[2], s[3]));
      return v;
    };
  };
  r.tag(ssm, PPlacement::Base, true)
      .add("thm-2.17(1)", {"BBBB"}, [](C c, Slots s) { return c.rv(s[0], s[1], s[2], s[3]); })
      .add("thm-2.17(2)", {"BBBj", "BjBB"}, zero)
      .add("thm-2.17(3)", {"BBjj", "jjBB"}, zero)
      .add("thm-2.17(4)", {"BjjB"},
           [hess_term](C c, Slots s) {
             const auto &X = s[0], &V = s[1], &W = s[2], &T = s[3];
             const auto& P = c.p_slot();
             const int j = V.factor;
             const double f = c.f(j);
             const double gvw = c.g(V, W);
             return sum({hess_term(c, s), f * f * c.g(X, P) * gvw * c.g(P, T), -f * c.df(j, P) * gvw * c.g(X, T),
                         -f * f * c.g(P, P) * gvw * c.g(X, T), -f * f * gvw * c.k(X, P, T)});
           })
      .add("thm-2.17(5)", {"jjBj", "Bjjj"}, zero)
      .add("thm-2.17(6)", {"jjjj"}, fiber_ssm(1.0))
      .add("thm-2.17(6)", {"jjjj"}, fiber_ssm(-1.0), true);

  // Semi-symmetric metric, P on the fiber.
  auto bbbj_ssm = [](C c, const Slot& x, const Slot& y, const Slot& z, const Slot& q) {
    const int j = q.factor;
    const double f = c.f(j);
    const double gpq = c.g(c.p_slot(), q);
    return sum({-f * c.df(j, x) * c.g(y, z) * gpq, f * c.df(j, y) * c.g(x, z) * gpq});
  };
  auto jjbj_ssm = [](C c, const Slot& u, const Slot& v, const Slot& z, const Slot& q) {
    const int j = u.factor;
    const double f = c.f(j);
    const auto& P = c.p_slot();
    const double k = f * f * f * c.df(j, z);
    return sum({-k * c.g(P, u) * c.g(q, v), k * c.g(P, v) * c.g(q, u)});
  };
  r.tag(ssm, PPlacement::Fiber, true)
      .add("thm-2.18(1)", {"BBBB"},
           [](C c, Slots s) {
             const auto &X = s[0], &Y = s[1], &Z = s[2], &T = s[3];
             const auto& P = c.p_slot();
             const double f = c.f(P.factor);
             const double gpp = c.g(P, P);
             ScaledValue v = c.r(X, Y, Z, T);
             v.add(f * f * c.g(X, Z) * gpp * c.g(Y, T));
             v.add(-f * f * c.g(Y, Z) * gpp * c.g(X, T));
             return v;
           })
      .add("thm-2.18(2)", {"BBBj"}, [bbbj_ssm](C c, Slots s) { return bbbj_ssm(c, s[0], s[1], s[2], s[3]); })
      .add("thm-2.18(2)", {"BjBB"},
           [bbbj_ssm](C c, Slots s) { return scaled(-1.0, bbbj_ssm(c, s[2], s[3], s[0], s[1])); })
      .add("thm-2.18(3)", {"BBjj", "jjBB"}, zero)
      .add("thm-2.18(4)", {"BjjB"},
           [hess_term](C c, Slots s) {
             const auto &X = s[0], &V = s[1], &W = s[2], &T = s[3];
             const auto& P = c.p_slot();
             const double f = c.f(V.factor);
             const double f2 = f * f;
             const double gxt = c.g(X, T);
             return sum({hess_term(c, s), -f2 * gxt * c.k(V, P, W), -f2 * f2 * c.g(P, P) * c.g(V, W) * gxt,
                         f2 * f2 * c.g(V, P) * c.g(P, W) * gxt});
           })
      .add("thm-2.18(5)", {"jjBj"}, [jjbj_ssm](C c, Slots s) { return jjbj_ssm(c, s[0], s[1], s[2], s[3]); })
      .add("thm-2.18(5)", {"Bjjj"},
           [jjbj_ssm](C c, Slots s) { return scaled(-1.0, jjbj_ssm(c, s[2], s[3], s[0], s[1])); })
      .add("thm-2.18(6)", {"jjjj"}, [fiber_block](C c, Slots s) {
        const auto &U = s[0], &V = s[1], &W = s[2], &Q = s[3];
        const auto& P = c.p_slot();
        const double f = c.f(U.factor);
        const double f4 = f * f * f * f, f6 = f4 * f * f;
        ScaledValue v = fiber_block(c, s);
        for (double t : {-f6 * c.g(V, P) * c.g(U, W) * c.g(P, Q), f6 * c.g(U, P) * c.g(V, W) * c.g(P, Q),
                         f4 * c.k(U, P, W) * c.g(V, Q), -f4 * c.k(V, P, W) * c.g(U, Q),
                         -f4 * c.k(U, P, Q) * c.g(V, W), f4 * c.k(V, P, Q) * c.g(U, W),
                         f6 * c.g(P, P) * c.g(U, W) * c.g(V, Q), -f6 * c.g(U, P) * c.g(P, W) * c.g(V, Q),
                         -f6 * c.g(P, P) * c.g(V, W) * c.g(U, Q), f6 * c.g(V, P) * c.g(P, W) * c.g(U, Q)}) {
          v.add(t);
        }
        return v;
      });

  // Semi-symmetric non-metric, P on the base.
  r.tag(ssnm, PPlacement::Base, true)
      .add("thm-3.15(1)", {"BBBB"}, [](C c, Slots s) { return c.rv(s[0], s[1], s[2], s[3]); })
      .add("thm-3.15(2)", {"BBBj", "BjBB", "BBjB"}, zero)
      .add("thm-3.15(3)", {"BBjj", "jjBB"}, zero)
      .add("thm-3.15(4)", {"BjjB"},
           [hess_term](C c, Slots s) {
             const auto &X = s[0], &V = s[1], &W = s[2], &T = s[3];
             const int j = V.factor;
             return sum({hess_term(c, s), 2 * c.f(j) * c.df(j, X) * c.g(V, W) * c.g(c.p_slot(), T)});
           })
      .add("thm-3.15(5)", {"BjBj"},
           [](C c, Slots s) {
             const auto &X = s[0], &V = s[1], &T = s[2], &W = s[3];
             const int j = V.factor;
             const double f = c.f(j);
             const auto& P = c.p_slot();
             return sum({f * c.hessian(j, X, T) * c.g(V, W), f * f * c.g(V, W) * c.dg(X, P, T)});
           })
      .add("thm-3.15(6)", {"jjBj", "Bjjj"}, zero)
      .add("thm-3.15(7)", {"jjjB"},
           [](C c, Slots s) {
             const auto &U = s[0], &V = s[1], &Q = s[2], &Z = s[3];
             const double f = c.f(U.factor);
             const double k = f * f * c.g(c.p_slot(), Z);
             return sum({k * c.k(U, Q, V), -k * c.k(V, Q, U)});
           })
      .add("thm-3.15(8)", {"jjjj"}, fiber_block);

  // Semi-symmetric non-metric, P on the fiber.
  r.tag(ssnm, PPlacement::Fiber, true)
      .add("thm-3.16(1)", {"BBBB"}, [](C c, Slots s) { return c.r(s[0], s[1], s[2], s[3]); })
      .add("thm-3.16(2)", {"BBBj"},
           [](C c, Slots s) {
             const auto &X = s[0], &Y = s[1], &Z = s[2], &Q = s[3];
             const double f = c.f(Q.factor);
             const double k = f * f * c.g(c.p_slot(), Q);
             return sum({k * c.k(X, Z, Y), -k * c.k(Y, Z, X)});
           })
      .add("thm-3.16(3)", {"BjBB"}, zero)
      .add("thm-3.16(3)", {"BBjB"},
           [](C c, Slots s) {
             const auto &X = s[0], &Y = s[1], &Q = s[2], &Z = s[3];
             const int j = Q.factor;
             const double k = 2 * c.f(j) * c.g(c.p_slot(), Q);
             return sum({k * c.df(j, X) * c.g(Y, Z), -k * c.df(j, Y) * c.g(X, Z)});
           })
      .add("thm-3.16(3)", {"BBjB"}, zero, true)
      .add("thm-3.16(4)", {"BBjj", "jjBB"}, zero)
      .add("thm-3.16(5)", {"BjjB"},
           [hess_term](C c, Slots s) {
             const auto &X = s[0], &V = s[1], &W = s[2], &T = s[3];
             const double f = c.f(V.factor);
             return sum({hess_term(c, s), -f * f * c.dg(V, W, c.p_slot()) * c.g(X, T)});
           })
      .add("thm-3.16(6)", {"BjBj"},
           [](C c, Slots s) {
             const int j = fib(s, 1);
             return sum({c.f(j) * c.hessian(j, s[0], s[2]) * c.g(s[1], s[3])});
           })
      .add("thm-3.16(7)", {"jjBj", "jjjB"}, zero)
      .add("thm-3.16(8)", {"Bjjj"},
           [](C c, Slots s) {
             const auto &Z = s[0], &Q = s[1], &U = s[2], &V = s[3];
             const int j = Q.factor;
             const double f = c.f(j);
             const auto& P = c.p_slot();
             const double k = 2 * f * f * f * c.df(j, Z);
             return sum({k * c.g(U, P) * c.g(Q, V), k * c.g(Q, U) * c.g(P, V)});
           })
      .add("thm-3.16(8)", {"Bjjj"},
           [](C c, Slots s) {
             const auto &Z = s[0], &Q = s[1], &U = s[2], &V = s[3];
             const int j = Q.factor;
             const double f = c.f(j);
             return sum({f * f * f * c.df(j, Z) * c.g(Q, U) * c.g(c.p_slot(), V)});
           },
           true)
      .add("thm-3.16(9)", {"jjjj"}, [fiber_block](C c, Slots s) {
        const auto &U = s[0], &V = s[1], &W = s[2], &Q = s[3];
        const auto& P = c.p_slot();
        const double f = c.f(U.factor);
        const double f4 = f * f * f * f;
        ScaledValue v = fiber_block(c, s);
        v.add(f4 * c.g(P, Q) * c.k(U, W, V));
        v.add(-f4 * c.g(P, Q) * c.k(V, W, U));
        v.add(f4 * c.dg(U, W, P) * c.g(V, Q));
        v.add(-f4 * c.dg(V, W, P) * c.g(U, Q));
        return v;
      });

  // Almost product.
  // H~(X,T) = X(T f) - g*_B(lower~(X,T), df) and its J_1-twisted companion.
  auto ap_bjjb = [](bool printed) {
    return [printed](C c, Slots s) {
      const auto &X = s[0], &V = s[1], &W = s[2], &T = s[3];
      const int j = V.factor;
      const double f = c.f(j);
      const SmallVec lxt = c.lower_v(X, T);
      const double h = printed ? c.hessian(j, X, T) : c.xt_f(j, X, T) - c.base_cometric(lxt, c.df(j));
      const double twisted = c.xt_f(j, X, c.j(T)) - c.base_cometric(lxt, c.df_j1(j));
      return sum({-0.5 * f * h * c.g(V, W), -0.5 * f * twisted * c.g_j(V, W)});
    };
  };
  r.tag(ap, PPlacement::None, true)
      .add("thm-4.17(1)", {"BBBB"}, [](C c, Slots s) { return c.rv(s[0], s[1], s[2], s[3]); })
      .add("thm-4.17(2)", {"BBBj", "BjBB"}, zero)
      .add("thm-4.17(3)", {"BBjj", "jjBB"}, zero)
      .add("thm-4.17(4)", {"BjjB"}, ap_bjjb(false))
      .add("thm-4.17(4)", {"BjjB"}, ap_bjjb(true), true)
      .add("thm-4.17(5)", {"jjBj"},
           [](C c, Slots s) {
             const auto &U = s[0], &V = s[1], &Z = s[2], &Q = s[3];
             const int j = U.factor;
             const double f = c.f(j);
             const Slot ju = c.j(U), jv = c.j(V), jq = c.j(Q);
             const double a = 0.25 * f * c.df(j, Z);
             const double b = -0.25 * f * c.df_j1(j, Z);
             return sum({-a * c.k(V, Q, U), a * c.k(V, jq, ju), a * c.k(U, Q, V), -a * c.k(U, jq, jv),
                         b * c.k(V, jq, U), -b * c.k(V, Q, ju), -b * c.k(U, jq, V), b * c.k(U, Q, jv)});
           })
      .add("thm-4.17(6)", {"Bjjj"}, zero)
      .add("thm-4.17(7)", {"jjjj"}, [](C c, Slots s) {
        const auto &U = s[0], &V = s[1], &W = s[2], &Q = s[3];
        const int j = U.factor;
        const double f = c.f(j);
        const SmallVec d = c.df(j), dj = c.df_j1(j);
        const double k = 0.25 * f * f;
        ScaledValue v = scaled(f * f, c.rv(U, V, W, Q));
        v.add(k * c.base_cometric(d, d) * wedge(c, U, V, W, Q));
        const double jd = k * c.base_cometric(dj, d);
        v.add(jd * c.g_j(U, W) * c.g(V, Q));
        v.add(jd * c.g(U, W) * c.g_j(V, Q));
        v.add(-jd * c.g_j(V, W) * c.g(U, Q));
        v.add(-jd * c.g(V, W) * c.g_j(U, Q));
        const double jj = k * c.base_cometric(dj, dj);
        v.add(jj * c.g_j(U, W) * c.g_j(V, Q));
        v.add(-jj * c.g_j(V, W) * c.g_j(U, Q));
        return v;
      });
}

void contraction_clauses(Registry& r) {
  const auto lc = ConnectionTag::LeviCivita;
  const auto ap = ConnectionTag::AlmostProduct;
  r.kind(ClauseKind::Contraction);

  r.tag(lc, PPlacement::None, false)
      .add("eq-5.3", {"BB|BB"}, [](C c, Slots s) { return sum({c.kk(s[0], s[1], s[2], s[3])}); })
      .add("eq-5.4", {"BB|jB", "BB|Bj"}, zero)
      .add("eq-5.5", {"BB|jj"},
           [](C c, Slots s) {
             const int j = fib(s, 2);
             return sum({-c.f(j) * c.base_cometric(c.lower(s[0], s[1]), c.df(j)) * c.g(s[2], s[3])});
           })
      .add("eq-5.6", {"Bj|Bj", "Bj|jB"},
           [](C c, Slots s) {
             const int j = fib(s, 1);
             const Slot& z = s[2].factor == 0 ? s[2] : s[3];
             const Slot& t = s[2].factor == 0 ? s[3] : s[2];
             return sum({c.df(j, s[0]) * c.df(j, z) * c.g(t, s[1])});
           })
      .add("eq-5.7", {"BB|jk", "Bj|Bk"}, zero)
      .add("eq-5.8", {"Bj|jj"},
           [](C c, Slots s) {
             const int j = fib(s, 1);
             return sum({c.f(j) * c.df(j, s[0]) * c.k(s[2], s[3], s[1])});
           })
      .add("eq-5.9", {"Bk|jj", "Bj|kj"}, zero)
      .add("eq-5.10", {"Bj|ka"}, zero)
      .add("eq-5.11", {"jj|jj"},
           [](C c, Slots s) {
             const int j = fib(s, 0);
             const double f2 = c.f(j) * c.f(j);
             return sum({f2 * c.base_cometric(c.df(j), c.df(j)) * c.g(s[0], s[1]) * c.g(s[2], s[3]),
                         f2 * c.kk(s[0], s[1], s[2], s[3])});
           })
      .add("eq-5.12", {"kj|jj"}, zero)
      .add("eq-5.13", {"kk|jj"},
           [](C c, Slots s) {
             const int i = fib(s, 0), j = fib(s, 2);
             return sum({c.f(i) * c.f(j) * c.base_cometric(c.df(i), c.df(j)) * c.g(s[0], s[1]) * c.g(s[2], s[3])});
           })
      .add("eq-5.14", {"kj|kj"}, zero)
      .add("eq-5.15", {"kk|ja"}, zero)
      .add("eq-5.16", {"jk|ab"}, zero);

  r.tag(ap, PPlacement::None, true)
      .add("eq-4.10", {"BB|BB"}, [](C c, Slots s) { return sum({c.kkv(s[0], s[1], s[2], s[3])}); })
      .add("eq-4.11", {"BB|jB", "BB|Bj"}, zero)
      .add("eq-4.12", {"BB|jj"},
           [](C c, Slots s) {
             const int j = fib(s, 2);
             const double f = c.f(j);
             const SmallVec l = c.lower_v(s[0], s[1]);
             return sum({-0.5 * f * c.base_cometric(l, c.df(j)) * c.g(s[2], s[3]),
                         -0.5 * f * c.base_cometric(l, c.df_j1(j)) * c.g_j(s[2], s[3])});
           })
      .add("eq-4.13", {"Bj|Bj"},
           [](C c, Slots s) {
             const int j = fib(s, 1);
             return sum({c.df(j, s[0]) * c.df(j, s[2]) * c.g(s[3], s[1])});
           })
      .add("eq-4.14", {"Bj|jB"},
           [](C c, Slots s) {
             const auto &X = s[0], &Y = s[1], &T = s[2], &Z = s[3];
             const int j = Y.factor;
             const double xf = c.df(j, X);
             return sum({0.5 * xf * c.df(j, Z) * c.g(T, Y), 0.5 * xf * c.df_j1(j, Z) * c.g_j(T, Y)});
           })
      .add("eq-4.15", {"jB|jB"},
           [](C c, Slots s) {
             const auto &Y = s[0], &X = s[1], &T = s[2], &Z = s[3];
             const int j = Y.factor;
             const double xf = c.df(j, X), jxf = c.df_j1(j, X), zf = c.df(j, Z), jzf = c.df_j1(j, Z);
             const double gty = c.g(T, Y), gtjy = c.g_j(T, Y);
             return sum({0.25 * xf * zf * gty, 0.25 * xf * jzf * gtjy, 0.25 * jxf * zf * gtjy, 0.25 * jxf * jzf * gty});
           })
      .add("eq-4.16", {"Bj|jj"},
           [](C c, Slots s) {
             const int j = fib(s, 1);
             return sum({c.f(j) * c.df(j, s[0]) * c.kv(s[2], s[3], s[1])});
           })
      .add("eq-4.17", {"jB|jj"},
           [](C c, Slots s) {
             const auto &Y = s[0], &X = s[1], &Z = s[2], &T = s[3];
             const int j = Y.factor;
             const double f = c.f(j);
             // The third slot is tensorial, so J Y enters by value.
             const double kjy = c.lower_v(Z, T).dot(c.j(Y).field.value(c.point(j)));
             return sum({0.5 * f * c.df(j, X) * c.kv(Z, T, Y), 0.5 * f * c.df_j1(j, X) * kjy});
           })
      .add("eq-4.18", {"jj|jj"}, [](C c, Slots s) {
        const auto &X = s[0], &Y = s[1], &Z = s[2], &T = s[3];
        const int j = X.factor;
        const double f = c.f(j);
        const SmallVec d = c.df(j), dj = c.df_j1(j);
        const double k = 0.25 * f * f;
        return sum({k * c.base_cometric(d, d) * c.g(X, Y) * c.g(Z, T),
                    k * c.base_cometric(dj, d) * c.g_j(X, Y) * c.g(Z, T),
                    k * c.base_cometric(d, dj) * c.g(X, Y) * c.g_j(Z, T),
                    k * c.base_cometric(dj, dj) * c.g_j(X, Y) * c.g_j(Z, T), f * f * c.kkv(X, Y, Z, T)});
      });
}

std::vector<ProductClause> build_registry() {
  Registry r;
  koszul_clauses(r);
  riemann_clauses(r);
  contraction_clauses(r);
  return std::move(r.out);
}

std::string letters(const std::string& pattern) {
  std::string out;
  for (char ch : pattern) {
    if (ch != '|') out.push_back(ch);
  }
  return out;
}

}  // namespace

const std::vector<ProductClause>& product_clauses() {
  static const std::vector<ProductClause> registry = build_registry();
  return registry;
}

bool matches_pattern(const std::string& pattern, std::span<const Slot> slots) {
  const std::string pat = letters(pattern);
  if (pat.size() != slots.size()) return false;
  std::map<char, int> fiber_of;
  for (std::size_t i = 0; i < pat.size(); ++i) {
    const char ch = pat[i];
    const int f = slots[i].factor;
    if (ch == 'B') {
      if (f != 0) return false;
      continue;
    }
    if (f == 0) return false;
    auto it = fiber_of.find(ch);
    if (it == fiber_of.end()) {
      for (const auto& [other, g] : fiber_of) {
        if (g == f) return false;
      }
      fiber_of[ch] = f;
    } else if (it->second != f) {
      return false;
    }
  }
  return true;
}

bool clause_applies(const ProductClause& c, const WarpedProductSpec& spec, ConnectionTag tag) {
  if (c.tag != tag) return false;
  if (c.single_fiber && spec.fiber_count() != 1) return false;
  if (tag == ConnectionTag::AlmostProduct && !spec.has_structure()) return false;
  switch (c.p_on) {
    case PPlacement::None:
      return true;
    case PPlacement::Base:
      return spec.p && spec.p->factor == 0;
    case PPlacement::Fiber:
      return spec.p && spec.p->factor != 0;
  }
  return false;
}

ScaledValue evaluate_clause(const ProductClause& c, const WarpedProductSpec& spec, ConnectionTag tag,
                            std::span<const Slot> slots, std::span<const double> p) {
  if (!clause_applies(c, spec, tag)) throw UnsupportedCase("clause " + c.key() + " does not apply to this product");
  if (!matches_pattern(c.pattern, slots)) throw UnsupportedCase("slot origins do not match " + c.key());
  for (const auto& s : slots) {
    if (s.factor < 0 || s.factor > spec.fiber_count()) throw std::invalid_argument("slot on a missing factor");
    require_same_dim(s.field.dim(), spec.factor_chart(s.factor).dim(), "slot field");
  }
  const FactorData data(spec, tag, p);
  if (c.kind != ClauseKind::Koszul) require_nondegenerate(data.lc(0).gram(), kDefaultRankTol);
  return c.eval(data, slots);
}

const ProductClause& find_clause(const WarpedProductSpec& spec, ConnectionTag tag, ClauseKind kind,
                                 std::span<const Slot> slots) {
  for (const auto& c : product_clauses()) {
    if (c.kind != kind || c.printed) continue;
    if (!clause_applies(c, spec, tag)) continue;
    if (matches_pattern(c.pattern, slots)) return c;
  }
  std::string origins;
  for (const auto& s : slots) origins += s.factor == 0 ? "B" : "F" + std::to_string(s.factor);
  throw UnsupportedCase("no " + to_string(kind) + " clause for " + to_string(tag) + " with slot origins " + origins);
}

namespace {

ScaledValue dispatch(const WarpedProductSpec& spec, ConnectionTag tag, ClauseKind kind, std::size_t arity,
                     std::span<const Slot> slots, std::span<const double> p) {
  if (slots.size() != arity) throw std::invalid_argument("wrong number of slots");
  return evaluate_clause(find_clause(spec, tag, kind, slots), spec, tag, slots, p);
}

}  // namespace

ScaledValue factorwise_koszul_terms(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const Slot> slots,
                                    std::span<const double> p) {
  return dispatch(spec, tag, ClauseKind::Koszul, 3, slots, p);
}

ScaledValue factorwise_riemann_terms(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const Slot> slots,
                                     std::span<const double> p) {
  return dispatch(spec, tag, ClauseKind::Riemann, 4, slots, p);
}

ScaledValue factorwise_kk_terms(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const Slot> slots,
                                std::span<const double> p) {
  return dispatch(spec, tag, ClauseKind::Contraction, 4, slots, p);
}

double factorwise_koszul(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const Slot> slots,
                         std::span<const double> p) {
  return factorwise_koszul_terms(spec, tag, slots, p).value;
}

double factorwise_riemann(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const Slot> slots,
                          std::span<const double> p) {
  return factorwise_riemann_terms(spec, tag, slots, p).value;
}

double factorwise_kk(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const Slot> slots,
                     std::span<const double> p) {
  return factorwise_kk_terms(spec, tag, slots, p).value;
}

}  // namespace koszul
