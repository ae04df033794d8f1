#include "koszul/verifier.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "koszul/curvature.hpp"
#include "koszul/error.hpp"

namespace koszul {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Sampling.

namespace {

std::uint64_t mix(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  h ^= 0xff;
  h *= 1099511628211ULL;
  return h;
}

std::uint64_t stream_seed(std::uint64_t seed, const std::string& a, const std::string& b) {
  return mix(mix(1469598103934665603ULL ^ seed, a), b);
}

Expr random_poly(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Expr e(u(rng));
  for (int i = 0; i < n; ++i) {
    e = e + u(rng) * Expr::coord(i);
    for (int j = i; j < n; ++j) e = e + u(rng) * Expr::coord(i) * Expr::coord(j);
  }
  return e;
}

}  // namespace

VectorField random_field(const ChartDomain& chart, std::mt19937_64& rng) {
  std::vector<Expr> comps;
  for (int a = 0; a < chart.dim(); ++a) comps.push_back(random_poly(chart.dim(), rng));
  return VectorField(chart, comps);
}

ScalarField random_scalar(const ChartDomain& chart, std::mt19937_64& rng) {
  return ScalarField(chart, random_poly(chart.dim(), rng));
}

Point random_point(const ChartDomain& chart, std::mt19937_64& rng) {
  Point p;
  for (const auto& iv : chart.bounds()) {
    std::uniform_real_distribution<double> u(0.95 * iv.lo + 0.05 * iv.hi, 0.05 * iv.lo + 0.95 * iv.hi);
    p.push_back(u(rng));
  }
  return p;
}

bool well_conditioned(const SmallMat& g) {
  const PseudoSolver s(GramSnapshot{g, kDefaultRankTol});
  const double top = s.max_abs_eigenvalue();
  for (int i = 0; i < s.dim(); ++i) {
    const double l = std::abs(s.eigenvalues()[i]);
    if (l > kExactZero * top && l <= kNearSingular * top) return false;
  }
  return true;
}

bool direct_route_ok(const WarpedProductSpec& spec, std::span<const double> p) {
  const auto pts = split_point(spec, p);
  for (const auto& f : spec.fibers) {
    if (std::abs(f.warp.jet(pts[0]).value()) < kSmallWarp) return false;
  }
  const PseudoSolver s(GramSnapshot{metric_at(assemble_product_metric(spec), p), kDefaultRankTol});
  return s.condition_ratio() > kNearSingular;
}

// ---------------------------------------------------------------------------
// Results.

bool ClauseResult::ok() const {
  if (kind == CheckKind::Existence) return passes > 0;
  return passes == samples;
}

bool CheckReport::ok() const { return failures() == 0; }

std::vector<const ClauseResult*> CheckReport::failing() const {
  std::set<std::string> witnessed;
  for (const auto& c : clauses) {
    if (c.kind == CheckKind::Existence && c.ok()) witnessed.insert(c.id);
  }
  std::vector<const ClauseResult*> out;
  for (const auto& c : clauses) {
    const bool failed = c.kind == CheckKind::Existence ? !witnessed.count(c.id) : !c.ok();
    if (failed) out.push_back(&c);
  }
  return out;
}

int CheckReport::failures() const { return static_cast<int>(failing().size()); }

json CheckReport::to_json(bool with_time) const {
  json out;
  out["suite"] = suite;
  out["seed"] = seed;
  json cl = json::array();
  for (const auto& c : clauses) {
    json e;
    e["id"] = c.id;
    e["fixture"] = c.fixture;
    e["kind"] = c.kind == CheckKind::Universal ? "universal" : "existence";
    e["samples"] = c.samples;
    e["passes"] = c.passes;
    e["excluded"] = c.excluded;
    e["ok"] = c.ok();
    e["max_rel_residual"] = c.max_rel_residual;
    e["tolerance"] = c.tolerance;
    e["worst_point"] = c.worst_point;
    e["route_counts"] = c.route_counts;
    json errs = json::array();
    for (const auto& ev : c.errors) errs.push_back({{"type", ev.type}, {"message", ev.message}, {"point", ev.point}});
    e["errors"] = errs;
    e["error_count"] = c.error_count;
    cl.push_back(e);
  }
  out["clauses"] = cl;
  json meta;
  meta["points"] = sampling.points;
  meta["draws"] = sampling.draws;
  meta["tol_rel"] = tol.rel;
  meta["tol_abs"] = tol.abs;
  meta["tol_curvature_rel"] = tol.curvature_rel;
  meta["fixtures"] = fixtures;
  meta["version"] = "0.1.0";
  meta["failures"] = failures();
  if (with_time) meta["wall_time_s"] = wall_time_s;
  out["meta"] = meta;
  return out;
}

// ---------------------------------------------------------------------------
// Identity clauses.

namespace {

struct Check {
  ScaledValue lhs;
  ScaledValue rhs;
};

ScaledValue sv(std::initializer_list<double> terms) {
  ScaledValue v;
  for (double t : terms) v.add(t);
  return v;
}

// One field draw.
struct Draw {
  VectorField x, y, z, t, x2, r, p, w;
  ScalarField f;
  double a = 0.0, b = 0.0;
};

CovectorField flat_field(const MetricField& g, const VectorField& y) {
  const int n = g.dim();
  std::vector<Expr> comps;
  for (int i = 0; i < n; ++i) {
    Expr e;
    bool any = false;
    for (int j = 0; j < n; ++j) {
      const Expr& gij = i <= j ? g.entry(i, j) : g.entry(j, i);
      if (gij.is_zero() || y[j].is_zero()) continue;
      e = any ? e + gij * y[j] : gij * y[j];
      any = true;
    }
    comps.push_back(e);
  }
  return CovectorField(g.chart(), comps);
}

CovectorField combine(double a, const CovectorField& u, double b, const CovectorField& v) {
  std::vector<Expr> comps;
  for (int i = 0; i < u.dim(); ++i) comps.push_back(a * u.components()[i] + b * v.components()[i]);
  return CovectorField(u.chart(), comps);
}

CovectorField scale_form(const Expr& f, const CovectorField& u) {
  std::vector<Expr> comps;
  for (const auto& c : u.components()) comps.push_back(f * c);
  return CovectorField(u.chart(), comps);
}

class Env {
 public:
  Env(const Fixture& fx, const Point& p, const Draw& d) : fx_(fx), p_(p), d_(d) {}

  const Fixture& fixture() const { return fx_; }
  const MetricField& g() const { return fx_.metric; }
  const Point& p() const { return p_; }
  const Draw& d() const { return d_; }

  ConnectionVariant variant(ConnectionTag tag) const {
    switch (tag) {
      case ConnectionTag::LeviCivita:
        return ConnectionVariant::levi_civita();
      case ConnectionTag::SSMetric:
        return ConnectionVariant::ss_metric(d_.p);
      case ConnectionTag::SSNonMetric:
        return ConnectionVariant::ss_non_metric(d_.p);
      case ConnectionTag::AlmostProduct:
        return ConnectionVariant::almost_product(*fx_.structure);
    }
    return {};
  }

  const Frame& frame(ConnectionTag tag) const {
    auto& slot = frames_[static_cast<int>(tag)];
    if (!slot) slot.emplace(fx_.metric, variant(tag), p_);
    return *slot;
  }

  SmallVec val(const VectorField& v) const { return v.value(p_); }
  double g(const VectorField& a, const VectorField& b) const { return frame(ConnectionTag::LeviCivita).inner(a, b); }
  double df(const VectorField& v) const { return d_.f.jet(p_).gradient().dot(val(v)); }
  double fv() const { return d_.f.jet(p_).value(); }
  VectorField fx(const VectorField& v) const { return d_.f.expr * v; }
  VectorField j(const VectorField& v) const { return apply_structure(*fx_.structure, v); }
  double bracket_inner(const VectorField& a, const VectorField& b, const VectorField& c) const {
    const Frame& f = frame(ConnectionTag::LeviCivita);
    return f.inner(f.bracket(a, b), val(c));
  }

 private:
  const Fixture& fx_;
  const Point& p_;
  const Draw& d_;
  mutable std::optional<Frame> frames_[4];
};

using IdentityEval = std::function<std::vector<Check>(const Env&)>;

enum Need : unsigned {
  kNone = 0,
  kStructure = 1,
  kRadical = 2,
  kStationaryRadical = 4,
  kProduct = 8,
  kConformal = 16,
};

struct IdentityClause {
  std::string id;
  std::vector<std::string> suites;
  CheckKind kind = CheckKind::Universal;
  unsigned needs = kNone;
  bool pseudo_solve = false;
  bool curvature = false;
  bool pointwise = false;  // one draw per point
  IdentityEval eval;
};

std::vector<Check> vec_checks(const std::vector<ScaledValue>& lhs, const std::vector<ScaledValue>& rhs) {
  std::vector<Check> out;
  for (std::size_t i = 0; i < lhs.size(); ++i) out.push_back({lhs[i], rhs[i]});
  return out;
}

// Componentwise sums of scaled covectors.
struct VSide {
  std::vector<ScaledValue> c;
  explicit VSide(int n) : c(static_cast<std::size_t>(n)) {}
  VSide& add(const SmallVec& v, double k = 1.0) {
    for (int i = 0; i < v.size(); ++i) c[static_cast<std::size_t>(i)].add(k * v[i]);
    return *this;
  }
};

std::string num(ConnectionTag tag) {
  return tag == ConnectionTag::SSMetric ? "2" : tag == ConnectionTag::SSNonMetric ? "3" : "4";
}

unsigned tag_needs(ConnectionTag tag) { return tag == ConnectionTag::AlmostProduct ? kStructure : kNone; }

// Koszul-form properties.
void add_form_properties(std::vector<IdentityClause>& out, ConnectionTag tag, const std::string& thm) {
  const unsigned needs = tag_needs(tag);
  auto add = [&](int k, IdentityEval e) {
    out.push_back({thm + "(" + std::to_string(k) + ")", {thm}, CheckKind::Universal, needs, false, false, false,
                   std::move(e)});
  };
  add(1, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    auto K = [&](const VectorField& a, const VectorField& b, const VectorField& c) {
      return F.koszul_variant(a, b, c);
    };
    const VectorField m = d.a * d.x + d.b * d.x2;
    const VectorField my = d.a * d.y + d.b * d.x2;
    const VectorField mz = d.a * d.z + d.b * d.x2;
    return std::vector<Check>{
        {sv({K(m, d.y, d.z)}), sv({d.a * K(d.x, d.y, d.z), d.b * K(d.x2, d.y, d.z)})},
        {sv({K(d.x, my, d.z)}), sv({d.a * K(d.x, d.y, d.z), d.b * K(d.x, d.x2, d.z)})},
        {sv({K(d.x, d.y, mz)}), sv({d.a * K(d.x, d.y, d.z), d.b * K(d.x, d.y, d.x2)})}};
  });
  add(2, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    return std::vector<Check>{{sv({F.koszul_variant(e.fx(d.x), d.y, d.z)}), sv({e.fv() * F.koszul_variant(d.x, d.y, d.z)})}};
  });
  add(3, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    return std::vector<Check>{{sv({F.koszul_variant(d.x, e.fx(d.y), d.z)}),
                               sv({e.fv() * F.koszul_variant(d.x, d.y, d.z), e.df(d.x) * e.g(d.y, d.z)})}};
  });
  add(4, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    return std::vector<Check>{{sv({F.koszul_variant(d.x, d.y, e.fx(d.z))}), sv({e.fv() * F.koszul_variant(d.x, d.y, d.z)})}};
  });
  add(5, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    const double extra = tag == ConnectionTag::SSNonMetric ? 1.0 : 0.0;
    return std::vector<Check>{{sv({F.koszul_variant(d.x, d.y, d.z), F.koszul_variant(d.x, d.z, d.y)}),
                               sv({F.derive_inner(d.x, d.y, d.z), extra * e.g(d.y, d.p) * e.g(d.x, d.z),
                                   extra * e.g(d.z, d.p) * e.g(d.x, d.y)})}};
  });
  add(6, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    const ScaledValue lhs = sv({F.koszul_variant(d.x, d.y, d.z), -F.koszul_variant(d.y, d.x, d.z)});
    if (tag == ConnectionTag::AlmostProduct) {
      return std::vector<Check>{{lhs, sv({0.5 * e.bracket_inner(d.x, d.y, d.z), 0.5 * F.koszul(d.x, e.j(d.y), e.j(d.z)),
                                          -0.5 * F.koszul(d.y, e.j(d.x), e.j(d.z))})}};
    }
    return std::vector<Check>{
        {lhs, sv({e.bracket_inner(d.x, d.y, d.z), e.g(d.y, d.p) * e.g(d.x, d.z), -e.g(d.x, d.p) * e.g(d.y, d.z)})}};
  });
  add(7, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    if (tag == ConnectionTag::AlmostProduct) {
      return std::vector<Check>{{sv({F.koszul_variant(d.x, e.j(d.y), e.j(d.z))}), sv({F.koszul_variant(d.x, d.y, d.z)})}};
    }
    const double lie = lie_derivative_metric(d.y, e.g(), d.z, d.x, e.p());
    const double ssm = tag == ConnectionTag::SSMetric ? 1.0 : 0.0;
    return std::vector<Check>{{sv({F.koszul_variant(d.x, d.y, d.z), F.koszul_variant(d.z, d.y, d.x)}),
                               sv({lie, 2 * e.g(d.y, d.p) * e.g(d.x, d.z), -ssm * e.g(d.x, d.y) * e.g(d.p, d.z),
                                   -ssm * e.g(d.y, d.z) * e.g(d.p, d.x)})}};
  });
  if (tag == ConnectionTag::AlmostProduct) return;
  add(8, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    const double last = tag == ConnectionTag::SSMetric ? -e.g(d.y, d.z) * e.g(d.p, d.x) : e.g(d.z, d.p) * e.g(d.x, d.y);
    return std::vector<Check>{{sv({F.koszul_variant(d.x, d.y, d.z), F.koszul_variant(d.y, d.z, d.x)}),
                               sv({F.derive_inner(d.y, d.z, d.x), e.bracket_inner(d.x, d.y, d.z),
                                   e.g(d.y, d.p) * e.g(d.x, d.z), last})}};
  });
}

// Lower covariant derivative properties.
void add_lower_properties(std::vector<IdentityClause>& out, ConnectionTag tag, const std::string& prop) {
  const unsigned needs = tag_needs(tag);
  auto add = [&](int k, IdentityEval e) {
    out.push_back({prop + "(" + std::to_string(k) + ")", {prop}, CheckKind::Universal, needs, false, false, false,
                   std::move(e)});
  };
  add(1, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    const int n = F.dim();
    const VectorField m = d.a * d.x + d.b * d.x2;
    const VectorField my = d.a * d.y + d.b * d.x2;
    auto a = vec_checks(VSide(n).add(F.lower(m, d.y)).c,
                        VSide(n).add(F.lower(d.x, d.y), d.a).add(F.lower(d.x2, d.y), d.b).c);
    auto b = vec_checks(VSide(n).add(F.lower(d.x, my)).c,
                        VSide(n).add(F.lower(d.x, d.y), d.a).add(F.lower(d.x, d.x2), d.b).c);
    a.insert(a.end(), b.begin(), b.end());
    return a;
  });
  add(2, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    return vec_checks(VSide(F.dim()).add(F.lower(e.fx(d.x), d.y)).c, VSide(F.dim()).add(F.lower(d.x, d.y), e.fv()).c);
  });
  add(3, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    return vec_checks(VSide(F.dim()).add(F.lower(d.x, e.fx(d.y))).c,
                      VSide(F.dim()).add(F.lower(d.x, d.y), e.fv()).add(F.flat(e.val(d.y)), e.df(d.x)).c);
  });
  add(4, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    const double extra = tag == ConnectionTag::SSNonMetric ? 1.0 : 0.0;
    return std::vector<Check>{{sv({F.lower(d.x, d.y).dot(e.val(d.z)), F.lower(d.x, d.z).dot(e.val(d.y))}),
                               sv({F.derive_inner(d.x, d.y, d.z), extra * e.g(d.y, d.p) * e.g(d.x, d.z),
                                   extra * e.g(d.z, d.p) * e.g(d.x, d.y)})}};
  });
  add(5, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    if (tag == ConnectionTag::AlmostProduct) {
      return std::vector<Check>{{sv({F.lower(d.x, d.y).dot(e.val(d.z)), -F.lower(d.y, d.x).dot(e.val(d.z))}),
                                 sv({0.5 * e.bracket_inner(d.x, d.y, d.z), 0.5 * F.koszul(d.x, e.j(d.y), e.j(d.z)),
                                     -0.5 * F.koszul(d.y, e.j(d.x), e.j(d.z))})}};
    }
    const int n = F.dim();
    return vec_checks(VSide(n).add(F.lower(d.x, d.y)).add(F.lower(d.y, d.x), -1.0).c,
                      VSide(n)
                          .add(F.flat(F.bracket(d.x, d.y)))
                          .add(F.flat(e.val(d.x)), e.g(d.y, d.p))
                          .add(F.flat(e.val(d.y)), -e.g(d.x, d.p))
                          .c);
  });
  add(6, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    if (tag == ConnectionTag::AlmostProduct) {
      const SmallVec jz = e.fixture().structure->value(e.p()) * e.val(d.z);
      return std::vector<Check>{{sv({F.lower(d.x, e.j(d.y)).dot(jz)}), sv({F.lower(d.x, d.y).dot(e.val(d.z))})}};
    }
    const double lie = lie_derivative_metric(d.y, e.g(), d.z, d.x, e.p());
    const double ssm = tag == ConnectionTag::SSMetric ? 1.0 : 0.0;
    return std::vector<Check>{{sv({F.lower(d.x, d.y).dot(e.val(d.z)), F.lower(d.z, d.y).dot(e.val(d.x))}),
                               sv({lie, 2 * e.g(d.y, d.p) * e.g(d.x, d.z), -ssm * e.g(d.x, d.y) * e.g(d.p, d.z),
                                   -ssm * e.g(d.y, d.z) * e.g(d.p, d.x)})}};
  });
  if (tag == ConnectionTag::AlmostProduct) return;
  add(7, [tag](const Env& e) {
    const Frame& F = e.frame(tag);
    const auto& d = e.d();
    const double last = tag == ConnectionTag::SSMetric ? -e.g(d.y, d.z) * e.g(d.p, d.x) : e.g(d.z, d.p) * e.g(d.x, d.y);
    return std::vector<Check>{{sv({F.lower(d.x, d.y).dot(e.val(d.z)), F.lower(d.y, d.z).dot(e.val(d.x))}),
                               sv({F.derive_inner(d.y, d.z, d.x), e.bracket_inner(d.x, d.y, d.z),
                                   e.g(d.y, d.p) * e.g(d.x, d.z), last})}};
  });
}

// Covariant derivative of annihilator forms.
void add_form_derivative_properties(std::vector<IdentityClause>& out, ConnectionTag tag, const std::string& prop) {
  const unsigned needs = tag_needs(tag);
  auto add = [&](int k, IdentityEval e) {
    out.push_back({prop + "(" + std::to_string(k) + ")", {prop}, CheckKind::Universal, needs, true, false, false,
                   std::move(e)});
  };
  add(1, [tag](const Env& e) {
    const auto& d = e.d();
    const auto v = e.variant(tag);
    const CovectorField w1 = flat_field(e.g(), d.r), w2 = flat_field(e.g(), d.x2);
    auto D = [&](const VectorField& x, const CovectorField& w) { return cov_deriv_form(v, e.g(), x, w, d.y, e.p()); };
    return std::vector<Check>{{sv({D(d.a * d.x + d.b * d.x2, w1)}), sv({d.a * D(d.x, w1), d.b * D(d.x2, w1)})},
                              {sv({D(d.x, combine(d.a, w1, d.b, w2))}), sv({d.a * D(d.x, w1), d.b * D(d.x, w2)})}};
  });
  add(2, [tag](const Env& e) {
    const auto& d = e.d();
    const auto v = e.variant(tag);
    const CovectorField w = flat_field(e.g(), d.r);
    return std::vector<Check>{{sv({cov_deriv_form(v, e.g(), e.fx(d.x), w, d.y, e.p())}),
                               sv({e.fv() * cov_deriv_form(v, e.g(), d.x, w, d.y, e.p())})}};
  });
  add(3, [tag](const Env& e) {
    const auto& d = e.d();
    const auto v = e.variant(tag);
    const CovectorField w = flat_field(e.g(), d.r);
    const double wy = w.value(e.p()).dot(e.val(d.y));
    return std::vector<Check>{{sv({cov_deriv_form(v, e.g(), d.x, scale_form(d.f.expr, w), d.y, e.p())}),
                               sv({e.fv() * cov_deriv_form(v, e.g(), d.x, w, d.y, e.p()), e.df(d.x) * wy})}};
  });
  add(4, [tag](const Env& e) {
    const auto& d = e.d();
    const Frame& F = e.frame(tag);
    const double lhs = cov_deriv_form(e.variant(tag), e.g(), d.x, flat_field(e.g(), d.y), d.z, e.p());
    const double k = F.lower(d.x, d.y).dot(e.val(d.z));
    if (tag == ConnectionTag::SSNonMetric) {
      return std::vector<Check>{{sv({lhs}), sv({k, -e.g(d.y, d.p) * e.g(d.x, d.z), -e.g(d.x, d.y) * e.g(d.p, d.z)})}};
    }
    return std::vector<Check>{{sv({lhs}), sv({k})}};
  });
}

// (nabla_X lower(Y, Z))(T) through the Levi-Civita one.
std::vector<Check> second_lower_relation(const Env& e, ConnectionTag tag, bool printed) {
  const auto& d = e.d();
  const Frame& L = e.frame(ConnectionTag::LeviCivita);
  const Frame& S = e.frame(ConnectionTag::SSMetric);
  const Frame& N = e.frame(ConnectionTag::SSNonMetric);
  const double lhs = second_lower_deriv(e.variant(tag), e.g(), d.x, d.y, d.z, d.t, e.p());
  const double base = second_lower_deriv(ConnectionVariant::levi_civita(), e.g(), d.x, d.y, d.z, d.t, e.p());
  // The printed forms differentiate g(Y, Z) where g(Z, P) belongs.
  const double xg = printed ? L.derive_inner(d.x, d.y, d.z) : L.derive_inner(d.x, d.z, d.p);
  ScaledValue rhs = sv({base, xg * e.g(d.y, d.t), e.g(d.z, d.p) * L.koszul(d.x, d.y, d.t)});
  if (tag == ConnectionTag::SSMetric) {
    rhs.add(-L.derive_inner(d.x, d.y, d.z) * e.g(d.p, d.t));
    rhs.add(-e.g(d.y, d.z) * L.koszul(d.x, d.p, d.t));
    rhs.add(-S.koszul_variant(d.y, d.z, d.x) * e.g(d.p, d.t));
    rhs.add(S.koszul_variant(d.y, d.z, d.p) * e.g(d.x, d.t));
  } else {
    const Frame& last = printed ? S : N;
    rhs.add(-last.koszul_variant(d.y, d.z, d.x) * e.g(d.p, d.t));
  }
  return {{sv({lhs}), rhs}};
}

ScaledValue riem(const Env& e, ConnectionTag tag, const VectorField& x, const VectorField& y, const VectorField& z,
                 const VectorField& t) {
  return riemann_terms(e.frame(tag), x, y, z, t);
}

ScaledValue neg(ScaledValue v) {
  v.value = -v.value;
  return v;
}

ScaledValue times(double k, ScaledValue v) {
  v.value *= k;
  v.scale *= std::abs(k);
  return v;
}

// f-linearity in the listed slots and additivity in the first.
std::vector<Check> tensoriality(const Env& e, ConnectionTag tag, std::initializer_list<int> slots) {
  const auto& d = e.d();
  std::vector<Check> out;
  const ScaledValue base = riem(e, tag, d.x, d.y, d.z, d.t);
  for (int s : slots) {
    VectorField v[4] = {d.x, d.y, d.z, d.t};
    v[s] = e.fx(v[s]);
    out.push_back({riem(e, tag, v[0], v[1], v[2], v[3]), times(e.fv(), base)});
  }
  const ScaledValue sum_lhs = riem(e, tag, d.a * d.x + d.b * d.x2, d.y, d.z, d.t);
  ScaledValue rhs = times(d.a, base);
  const ScaledValue other = times(d.b, riem(e, tag, d.x2, d.y, d.z, d.t));
  rhs.value += other.value;
  rhs.scale = std::max(rhs.scale, other.scale);
  out.push_back({sum_lhs, rhs});
  return out;
}

// Whether a computation raises NotAnnihilator.
bool evaluable(const std::function<void()>& fn) {
  try {
    fn();
    return true;
  } catch (const NotAnnihilator&) {
    return false;
  }
}

Check verdict(bool agree) { return {sv({agree ? 0.0 : 1.0}), sv({0.0})}; }

// Levi-Civita connection from Christoffel symbols of a nondegenerate metric.
SmallVec christoffel_derivative(const MetricField& g, const VectorField& x, const VectorField& y, const Point& p) {
  const int n = g.dim();
  const auto jets = g.jets(p);
  auto gj = [&](int a, int b) -> const Jet2& { return jets[packed_index(n, std::min(a, b), std::max(a, b))]; };
  SmallMat gm(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) gm(a, b) = gj(a, b).value();
  }
  const SmallMat inv = gm.inverse();
  const SmallVec xv = x.value(p);
  const auto yj = y.jets(p);
  SmallVec out(n);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += xv[c] * yj[k].gradient(c);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double gamma = 0.0;
        for (int l = 0; l < n; ++l) {
          gamma += 0.5 * inv(k, l) * (gj(j, l).gradient(i) + gj(i, l).gradient(j) - gj(i, j).gradient(l));
        }
        s += gamma * xv[i] * yj[j].value();
      }
    }
    out[k] = s;
  }
  return out;
}

double zero_scale(const Env& e, std::initializer_list<const VectorField*> fields) {
  double s = e.frame(ConnectionTag::LeviCivita).gram().cwiseAbs().maxCoeff();
  for (const auto* v : fields) s *= std::max(1.0, e.val(*v).norm());
  return s;
}

Check zero_check(double value, double scale) {
  ScaledValue l = sv({value});
  l.scale = std::max(l.scale, scale);
  return {l, sv({0.0})};
}

std::vector<IdentityClause> build_identities() {
  std::vector<IdentityClause> out;
  using T = ConnectionTag;
  add_form_properties(out, T::SSMetric, "thm-2.2");
  add_form_properties(out, T::SSNonMetric, "thm-3.2");
  add_form_properties(out, T::AlmostProduct, "thm-4.3");
  add_lower_properties(out, T::SSMetric, "prop-2.5");
  add_lower_properties(out, T::SSNonMetric, "prop-3.5");
  add_lower_properties(out, T::AlmostProduct, "prop-4.5");
  add_form_derivative_properties(out, T::SSMetric, "prop-2.7");
  add_form_derivative_properties(out, T::SSNonMetric, "prop-3.7");
  add_form_derivative_properties(out, T::AlmostProduct, "prop-4.8");

  auto add = [&](const std::string& id, std::vector<std::string> suites, unsigned needs, bool pseudo, bool curv,
                 IdentityEval e, CheckKind kind = CheckKind::Universal, bool pointwise = false) {
    out.push_back({id, std::move(suites), kind, needs, pseudo, curv, pointwise, std::move(e)});
  };

  // Radical chains.
  for (T tag : {T::SSMetric, T::SSNonMetric}) {
    const std::string n = num(tag);
    add("cor-" + n + ".4", {"cor-" + n + ".4"}, kRadical, false, false, [tag](const Env& e) {
      const Frame& F = e.frame(tag);
      const auto& d = e.d();
      const double k1 = F.koszul_variant(d.x, d.y, d.w);
      return std::vector<Check>{{sv({k1}), sv({F.koszul_variant(d.y, d.x, d.w)})},
                                {sv({k1}), sv({-F.koszul_variant(d.x, d.w, d.y)})},
                                {sv({k1}), sv({-F.koszul_variant(d.y, d.w, d.x)})}};
    });
    const std::string eq = tag == T::SSMetric ? "eq-2.8" : "eq-3.5";
    add(eq, {eq}, kStationaryRadical, false, false, [tag](const Env& e) {
      const Frame& F = e.frame(tag);
      const auto& d = e.d();
      const double s = zero_scale(e, {&d.x, &d.y, &d.w});
      return std::vector<Check>{zero_check(F.koszul_variant(d.x, d.y, d.w), s),
                                zero_check(F.koszul_variant(d.y, d.x, d.w), s),
                                zero_check(F.koszul_variant(d.x, d.w, d.y), s),
                                zero_check(F.koszul_variant(d.y, d.w, d.x), s)};
    });
  }

  // Connection relations.
  add("eq-2.7", {"eq-2.7"}, kNone, false, false, [](const Env& e) {
    const auto& d = e.d();
    const Frame& S = e.frame(T::SSMetric);
    const Frame& L = e.frame(T::LeviCivita);
    const int n = S.dim();
    return vec_checks(VSide(n).add(S.lower(d.x, d.y)).add(L.lower(d.x, d.y), -1.0).c,
                      VSide(n)
                          .add(L.flat(e.val(d.x)), e.g(d.y, d.p))
                          .add(L.flat(e.val(d.p)), -e.g(d.x, d.y))
                          .c);
  });
  add("eq-3.4", {"eq-3.4"}, kNone, false, false, [](const Env& e) {
    const auto& d = e.d();
    const Frame& N = e.frame(T::SSNonMetric);
    const Frame& L = e.frame(T::LeviCivita);
    const int n = N.dim();
    return vec_checks(VSide(n).add(N.lower(d.x, d.y)).add(L.lower(d.x, d.y), -1.0).c,
                      VSide(n).add(L.flat(e.val(d.x)), e.g(d.y, d.p)).c);
  });
  for (T tag : {T::SSMetric, T::SSNonMetric}) {
    const std::string id = tag == T::SSMetric ? "eq-2.11" : "eq-3.7";
    add(id, {id}, kNone, true, false, [tag](const Env& e) {
      const auto& d = e.d();
      const CovectorField w = flat_field(e.g(), d.r);
      const SmallVec wv = w.value(e.p());
      const double v = cov_deriv_form(e.variant(tag), e.g(), d.x, w, d.y, e.p());
      const double l = cov_deriv_form(ConnectionVariant::levi_civita(), e.g(), d.x, w, d.y, e.p());
      const double a = -wv.dot(e.val(d.x)) * e.g(d.p, d.y);
      const double b = tag == T::SSMetric ? wv.dot(e.val(d.p)) * e.g(d.x, d.y) : 0.0;
      return std::vector<Check>{{sv({v, -l}), sv({a, b})}};
    });
  }
  add("eq-2.12", {"eq-2.12"}, kNone, true, true,
      [](const Env& e) { return second_lower_relation(e, T::SSMetric, false); });
  add("eq-2.12/printed", {"eq-2.12"}, kNone, true, true,
      [](const Env& e) { return second_lower_relation(e, T::SSMetric, true); }, CheckKind::Existence);
  add("eq-3.8", {"eq-3.8"}, kNone, true, true,
      [](const Env& e) { return second_lower_relation(e, T::SSNonMetric, false); });
  add("eq-3.8/printed", {"eq-3.8"}, kNone, true, true,
      [](const Env& e) { return second_lower_relation(e, T::SSNonMetric, true); }, CheckKind::Existence);

  // Canonical connection on nondegenerate almost product manifolds.
  add("eq-4.1", {"eq-4.1"}, kStructure, true, false, [](const Env& e) {
    const auto& d = e.d();
    const Frame& A = e.frame(T::AlmostProduct);
    if (A.solver().condition_ratio() <= kNearSingular) return std::vector<Check>{};
    const SmallVec n1 = christoffel_derivative(e.g(), d.x, d.y, e.p());
    const SmallVec n2 = christoffel_derivative(e.g(), d.x, e.j(d.y), e.p());
    const SmallVec jz = e.fixture().structure->value(e.p()) * e.val(d.z);
    return std::vector<Check>{{sv({A.koszul_variant(d.x, d.y, d.z)}),
                               sv({0.5 * A.inner(n1, e.val(d.z)), 0.5 * A.inner(n2, jz)})}};
  });

  // Curvature formulas.
  for (T tag : {T::SSMetric, T::SSNonMetric, T::AlmostProduct}) {
    const std::string id = tag == T::SSMetric ? "prop-2.13" : tag == T::SSNonMetric ? "prop-3.11" : "prop-4.13";
    add(id, {id}, tag_needs(tag), true, true, [tag](const Env& e) {
      const auto& d = e.d();
      const auto v = e.variant(tag);
      const Frame& F = e.frame(tag);
      const double a = second_lower_deriv(v, e.g(), d.x, d.y, d.z, d.t, e.p());
      const double b = second_lower_deriv(v, e.g(), d.y, d.x, d.z, d.t, e.p());
      const double c = F.koszul_variant_at(F.bracket(d.x, d.y), d.z, d.t);
      return std::vector<Check>{{riem(e, tag, d.x, d.y, d.z, d.t), sv({a, -b, -c})}};
    });
  }
  add("prop-2.14", {"prop-2.14"}, kNone, true, true, [](const Env& e) {
    const auto& d = e.d();
    return std::vector<Check>{{riem(e, T::SSMetric, d.x, d.y, d.z, d.t),
                               riemann_relation_ssm_terms(e.g(), d.p, d.x, d.y, d.z, d.t, e.p())}};
  });
  add("prop-3.12", {"prop-3.12"}, kNone, true, true, [](const Env& e) {
    const auto& d = e.d();
    return std::vector<Check>{{riem(e, T::SSNonMetric, d.x, d.y, d.z, d.t),
                               riemann_relation_ssnm_terms(e.g(), d.p, d.x, d.y, d.z, d.t, e.p())}};
  });
  add("eq-2.18", {"eq-2.18"}, kNone, true, true, [](const Env& e) {
    const auto& d = e.d();
    const ScaledValue r = riem(e, T::SSMetric, d.x, d.y, d.z, d.t);
    return std::vector<Check>{{r, neg(riem(e, T::SSMetric, d.y, d.x, d.z, d.t))},
                              {r, neg(riem(e, T::SSMetric, d.x, d.y, d.t, d.z))}};
  });
  add("eq-3.15", {"eq-3.15"}, kNone, true, true, [](const Env& e) {
    const auto& d = e.d();
    return std::vector<Check>{
        {riem(e, T::SSNonMetric, d.x, d.y, d.z, d.t), neg(riem(e, T::SSNonMetric, d.y, d.x, d.z, d.t))}};
  });
  add("eq-3.15-counterexample", {"eq-3.15", "eq-3.15-counterexample"}, kNone, true, true,
      [](const Env& e) {
        const auto& d = e.d();
        return std::vector<Check>{
            {riem(e, T::SSNonMetric, d.x, d.y, d.z, d.t), neg(riem(e, T::SSNonMetric, d.x, d.y, d.t, d.z))}};
      },
      CheckKind::Existence);
  add("eq-3.10", {"eq-3.10", "thm-3.10"}, kNone, true, true, [](const Env& e) {
    const auto& d = e.d();
    const double xf = e.df(d.x), yf = e.df(d.y);
    return std::vector<Check>{
        {nontensorial_defect_terms(e.g(), d.p, d.f, d.x, d.y, d.z, d.t, e.p()),
         sv({xf * e.g(d.z, d.p) * e.g(d.y, d.t), xf * e.g(d.y, d.z) * e.g(d.p, d.t),
             -yf * e.g(d.z, d.p) * e.g(d.x, d.t), -yf * e.g(d.x, d.z) * e.g(d.p, d.t)})}};
  });
  add("thm-3.10", {"thm-3.10"}, kNone, true, true,
      [](const Env& e) { return tensoriality(e, T::SSNonMetric, {0, 1, 3}); });
  add("thm-2.11", {"thm-2.11"}, kNone, true, true,
      [](const Env& e) { return tensoriality(e, T::SSMetric, {0, 1, 2, 3}); });
  add("thm-4.12", {"thm-4.12"}, kStructure, true, true,
      [](const Env& e) { return tensoriality(e, T::AlmostProduct, {0, 1, 2, 3}); });

  // Semi-regularity verdicts agree across connections.
  for (T tag : {T::SSMetric, T::SSNonMetric}) {
    const std::string id = tag == T::SSMetric ? "prop-2.10" : "prop-3.9";
    add(id, {id}, kNone, true, false, [tag](const Env& e) {
      const auto& d = e.d();
      auto ok = [&](const ConnectionVariant& v) {
        return evaluable([&] {
          kk_contraction(v, e.g(), d.x, d.y, d.z, d.t, e.p());
          second_lower_deriv(v, e.g(), d.x, d.y, d.z, d.t, e.p());
        });
      };
      return std::vector<Check>{verdict(ok(ConnectionVariant::levi_civita()) == ok(e.variant(tag)))};
    });
  }
  add("prop-4.6", {"prop-4.6"}, kStructure, true, false, [](const Env& e) {
    const auto& d = e.d();
    const Frame& L = e.frame(T::LeviCivita);
    const int n = L.dim();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const auto ci = VectorField::coordinate(e.g().chart(), i), cj = VectorField::coordinate(e.g().chart(), j);
        if (!L.is_annihilator(L.lower(ci, cj))) return std::vector<Check>{};
      }
    }
    const Frame& A = e.frame(T::AlmostProduct);
    return std::vector<Check>{verdict(A.is_annihilator(A.lower(d.x, d.y)))};
  });
  add("prop-4.10", {"prop-4.10"}, kStructure, true, false, [](const Env& e) {
    const auto& d = e.d();
    const auto v = e.variant(T::AlmostProduct);
    const bool kk = evaluable([&] { kk_contraction(v, e.g(), d.x, d.y, d.z, d.t, e.p()); });
    const bool sl = evaluable([&] { second_lower_deriv(v, e.g(), d.x, d.y, d.z, d.t, e.p()); });
    return std::vector<Check>{verdict(kk == sl)};
  });

  // Radical-stationarity of warped and conformal fixtures.
  add("thm-5.3", {"thm-5.3"}, kProduct, true, false,
      [](const Env& e) {
        return std::vector<Check>{verdict(check_radical_stationary(e.g(), {e.p()}).stationary)};
      },
      CheckKind::Universal, true);
  add("thm-4.15", {"thm-4.15"}, kProduct | kStructure, true, false,
      [](const Env& e) {
        bool ok = check_radical_stationary(e.g(), {e.p()}).stationary;
        const Frame& A = e.frame(T::AlmostProduct);
        const int n = A.dim();
        for (int i = 0; i < n && ok; ++i) {
          for (int j = 0; j < n && ok; ++j) {
            ok = A.is_annihilator(
                A.lower(VectorField::coordinate(e.g().chart(), i), VectorField::coordinate(e.g().chart(), j)));
          }
        }
        return std::vector<Check>{verdict(ok)};
      },
      CheckKind::Universal, true);
  add("ex-4.11(stationary)", {"ex-4.11"}, kConformal, true, false,
      [](const Env& e) {
        return std::vector<Check>{verdict(check_radical_stationary(e.g(), {e.p()}).stationary)};
      },
      CheckKind::Universal, true);
  return out;
}

const std::vector<IdentityClause>& identities() {
  static const std::vector<IdentityClause> r = build_identities();
  return r;
}

// ---------------------------------------------------------------------------
// Verifier clause table.

struct VClause {
  std::string id;
  std::vector<std::string> suites;
  ClauseFamily family;
  const IdentityClause* identity = nullptr;
};

std::string family_of(const std::string& product_id) {
  const auto paren = product_id.find('(');
  return paren == std::string::npos ? product_id : product_id.substr(0, paren);
}

// Continuity probe clauses: (id, tag, kinds).
struct ProbeSpec {
  std::string id;
  ConnectionTag tag;
  std::vector<ClauseKind> kinds;
};

const std::vector<ProbeSpec>& probe_specs() {
  using T = ConnectionTag;
  static const std::vector<ProbeSpec> r = {
      {"thm-5.4(continuity)", T::LeviCivita, {ClauseKind::Riemann, ClauseKind::Contraction}},
      {"thm-2.11(continuity)", T::SSMetric, {ClauseKind::Riemann}},
      {"thm-3.10(continuity)", T::SSNonMetric, {ClauseKind::Riemann}},
      {"thm-4.12(continuity)", T::AlmostProduct, {ClauseKind::Riemann}},
      {"thm-4.16(continuity)", T::AlmostProduct, {ClauseKind::Contraction}},
  };
  return r;
}

const std::vector<VClause>& vclauses() {
  static const std::vector<VClause> r = [] {
    std::vector<VClause> out;
    for (const auto& c : identities()) out.push_back({c.id, c.suites, ClauseFamily::Identity, &c});
    out.push_back({"ex-4.11(kk)", {"ex-4.11"}, ClauseFamily::Identity, nullptr});
    std::set<std::string> seen;
    for (const auto& c : product_clauses()) {
      if (!seen.insert(c.id).second) continue;
      std::vector<std::string> suites{family_of(c.id)};
      if (c.id.rfind("eq-4.", 0) == 0) suites.push_back("thm-4.16");
      if (c.id.rfind("eq-5.", 0) == 0) suites.push_back("thm-5.4");
      out.push_back({c.id, suites, ClauseFamily::Product, nullptr});
    }
    for (const auto& p : probe_specs()) {
      out.push_back({p.id, {family_of(p.id), "continuity"}, ClauseFamily::Continuity, nullptr});
    }
    out.push_back({"ex-4.11(continuity)", {"ex-4.11", "continuity"}, ClauseFamily::Continuity, nullptr});
    return out;
  }();
  return r;
}

const VClause& find_vclause(const std::string& id) {
  for (const auto& c : vclauses()) {
    if (c.id == id) return c;
  }
  throw UnknownClause("unknown clause \"" + id + "\"");
}

// ---------------------------------------------------------------------------
// Running.

class ResultBuilder {
 public:
  ResultBuilder(std::string id, std::string fixture, CheckKind kind, double rel, double abs)
      : rel_(rel), abs_(abs) {
    r_.id = std::move(id);
    r_.fixture = std::move(fixture);
    r_.kind = kind;
    r_.tolerance = rel;
  }

  void route(const std::string& name) { ++r_.route_counts[name]; }

  void exclude(const std::string& why) {
    ++r_.excluded;
    route("excluded:" + why);
  }

  void error(const std::string& type, const std::string& msg, const Point& p, bool counts_as_sample) {
    ++r_.error_count;
    if (r_.errors.size() < 8) r_.errors.push_back({type, msg, p});
    if (counts_as_sample) {
      ++r_.samples;
      if (r_.kind == CheckKind::Universal) note_worst(std::numeric_limits<double>::infinity(), p);
    } else {
      ++r_.excluded;
    }
  }

  void sample(const std::vector<Check>& checks, const Point& p) {
    if (checks.empty()) {
      exclude("premise");
      return;
    }
    ++r_.samples;
    double worst = 0.0;
    bool witnessed = false;
    for (const auto& c : checks) {
      const double diff = std::abs(c.lhs.value - c.rhs.value);
      const double scale = std::max(c.lhs.scale, c.rhs.scale);
      if (!std::isfinite(diff)) {
        worst = std::numeric_limits<double>::infinity();
        continue;
      }
      worst = std::max(worst, diff / (scale + abs_ / rel_));
      if (scale > 0 && diff > kWitness * scale) witnessed = true;
    }
    if (r_.kind == CheckKind::Existence) {
      if (witnessed) ++r_.passes;
      if (worst >= r_.max_rel_residual) {
        r_.max_rel_residual = worst;
        r_.worst_point = p;
      }
      return;
    }
    if (worst <= rel_) ++r_.passes;
    note_worst(worst, p);
  }

  // A factor-wise-only evaluation: passes when finite.
  void finite_sample(double v, const Point& p) {
    if (r_.kind == CheckKind::Existence) {
      ++r_.excluded;
      return;
    }
    ++r_.samples;
    if (std::isfinite(v)) {
      ++r_.passes;
    } else {
      note_worst(std::numeric_limits<double>::infinity(), p);
    }
  }

  ClauseResult& result() { return r_; }

 private:
  void note_worst(double v, const Point& p) {
    if (v > r_.max_rel_residual || r_.worst_point.empty()) {
      if (v >= r_.max_rel_residual) {
        r_.max_rel_residual = v;
        r_.worst_point = p;
      }
    }
  }

  ClauseResult r_;
  double rel_, abs_;
};

// Some eigenvalue is nonzero but at most kNearSingular of the largest.
bool in_near_singular_band(const SmallMat& g) {
  const PseudoSolver s(GramSnapshot{g, kDefaultRankTol});
  const double top = s.max_abs_eigenvalue();
  for (int i = 0; i < s.dim(); ++i) {
    const double l = std::abs(s.eigenvalues()[i]);
    if (l > 0.0 && l <= kNearSingular * top) return true;
  }
  return false;
}

// Anchors first (they sit on the singular set), then random points drawn off
// the near-singular band.
std::vector<Point> sample_points(const Fixture& fx, int n, std::mt19937_64& rng) {
  std::vector<Point> out;
  for (const auto& a : fx.anchors) {
    if (static_cast<int>(out.size()) < n) out.push_back(a);
  }
  while (static_cast<int>(out.size()) < n) {
    Point p = random_point(fx.chart, rng);
    for (int tries = 0; tries < 64 && in_near_singular_band(metric_at(fx.metric, p)); ++tries) {
      p = random_point(fx.chart, rng);
    }
    out.push_back(std::move(p));
  }
  return out;
}

Draw make_draw(const Fixture& fx, std::mt19937_64& rng) {
  Draw d;
  const auto& c = fx.chart;
  d.x = random_field(c, rng);
  d.y = random_field(c, rng);
  d.z = random_field(c, rng);
  d.t = random_field(c, rng);
  d.x2 = random_field(c, rng);
  d.r = random_field(c, rng);
  const VectorField pr = random_field(c, rng);
  d.p = fx.p ? *fx.p : pr;
  d.f = random_scalar(c, rng);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  d.a = u(rng);
  d.b = u(rng);
  d.w = fx.radical.empty() ? VectorField::zero(c) : d.f.expr * fx.radical.front();
  return d;
}

bool fixture_fits(unsigned needs, const Fixture& fx) {
  if ((needs & kStructure) && !fx.structure) return false;
  if ((needs & kRadical) && fx.radical.empty()) return false;
  if ((needs & kStationaryRadical) && (fx.radical.empty() || !fx.radical_stationary)) return false;
  if ((needs & kProduct) && !fx.product) return false;
  if ((needs & kConformal) && !fx.conformal) return false;
  return true;
}

ClauseResult run_identity(const IdentityClause& c, const Fixture& fx, const TheoremSuite& s) {
  const double rel = c.curvature ? s.tol.curvature_rel : s.tol.rel;
  ResultBuilder b(c.id, fx.id, c.kind, rel, s.tol.abs);
  std::mt19937_64 rng(stream_seed(s.sampling.seed, c.id, fx.id));
  const auto points = sample_points(fx, s.sampling.points, rng);
  const int draws = c.pointwise ? 1 : s.sampling.draws;
  for (const auto& p : points) {
    const bool trusted = !c.pseudo_solve || well_conditioned(metric_at(fx.metric, p));
    for (int k = 0; k < draws; ++k) {
      const Draw d = make_draw(fx, rng);
      if (!trusted) {
        b.exclude("near-singular");
        continue;
      }
      try {
        const Env env(fx, p, d);
        b.sample(c.eval(env), p);
        b.route("direct");
      } catch (const NotAnnihilator& e) {
        b.error("NotAnnihilator", e.what(), p, fx.radical_stationary);
      } catch (const SingularBaseMetric& e) {
        b.error("SingularBaseMetric", e.what(), p, false);
      } catch (const Error& e) {
        b.error("Error", e.what(), p, true);
      }
    }
  }
  return b.result();
}

std::vector<Slot> draw_slots(const WarpedProductSpec& spec, const std::string& pattern, std::mt19937_64& rng) {
  std::map<char, int> fiber_of;
  std::vector<int> pool;
  for (int j = 1; j <= spec.fiber_count(); ++j) pool.push_back(j);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<Slot> out;
  for (char ch : pattern) {
    if (ch == '|') continue;
    int f = 0;
    if (ch != 'B') {
      if (!fiber_of.count(ch)) {
        fiber_of[ch] = pool.back();
        pool.pop_back();
      }
      f = fiber_of[ch];
    }
    out.push_back({f, random_field(spec.factor_chart(f), rng)});
  }
  return out;
}

int letter_count(const std::string& pattern) {
  std::set<char> s;
  for (char ch : pattern) {
    if (ch != 'B' && ch != '|') s.insert(ch);
  }
  return static_cast<int>(s.size());
}

// The product with P placed as the clause needs: the fixture's P when it sits
// there, else a draw.
std::optional<WarpedProductSpec> spec_for(const ProductClause& c, const Fixture& fx, std::mt19937_64& rng) {
  WarpedProductSpec spec = *fx.product;
  if (letter_count(c.pattern) > spec.fiber_count()) return std::nullopt;
  switch (c.p_on) {
    case PPlacement::None:
      spec.p.reset();
      break;
    case PPlacement::Base:
      if (!spec.p || spec.p->factor != 0) spec.p = Slot{0, random_field(spec.base.chart, rng)};
      break;
    case PPlacement::Fiber:
      if (!spec.p || spec.p->factor == 0) spec.p = Slot{1, random_field(spec.fibers[0].chart, rng)};
      break;
  }
  if (!clause_applies(c, spec, c.tag)) return std::nullopt;
  return spec;
}

ScaledValue direct_value(const WarpedProductSpec& spec, const MetricField& g, ConnectionTag tag, ClauseKind kind,
                         const std::vector<Slot>& slots, const Point& p) {
  const Frame fr(g, product_variant(spec, tag), p);
  std::vector<VectorField> v;
  for (const auto& s : slots) v.push_back(lift_field(spec, s));
  if (kind == ClauseKind::Koszul) return sv({fr.koszul_variant(v[0], v[1], v[2])});
  if (kind == ClauseKind::Riemann) return riemann_terms(fr, v[0], v[1], v[2], v[3]);
  return sv({fr.co_inner(fr.lower(v[0], v[1]), fr.lower(v[2], v[3]))});
}

std::vector<ClauseResult> run_product(const std::string& id, const Fixture& fx, const TheoremSuite& s) {
  std::vector<ClauseResult> out;
  if (!fx.product) return out;
  for (const auto& c : product_clauses()) {
    if (c.id != id) continue;
    std::mt19937_64 rng(stream_seed(s.sampling.seed, c.key(), fx.id));
    if (!spec_for(c, fx, rng)) continue;
    const bool curv = c.kind != ClauseKind::Koszul;
    ResultBuilder b(c.key(), fx.id, c.printed ? CheckKind::Existence : CheckKind::Universal,
                    curv ? s.tol.curvature_rel : s.tol.rel, s.tol.abs);
    const auto points = sample_points(fx, s.sampling.points, rng);
    for (const auto& p : points) {
      for (int k = 0; k < s.sampling.draws; ++k) {
        const auto spec = *spec_for(c, fx, rng);
        const auto slots = draw_slots(spec, c.pattern, rng);
        try {
          const ScaledValue fw = evaluate_clause(c, spec, c.tag, slots, p);
          if (curv && !direct_route_ok(spec, p)) {
            b.route("factorwise");
            b.finite_sample(fw.value, p);
            continue;
          }
          const MetricField g = spec.p ? assemble_product_metric(spec) : fx.metric;
          b.sample({{direct_value(spec, g, c.tag, c.kind, slots, p), fw}}, p);
          b.route("direct+factorwise");
        } catch (const NotAnnihilator& e) {
          b.error("NotAnnihilator", e.what(), p, fx.radical_stationary);
        } catch (const Error& e) {
          b.error("Error", e.what(), p, true);
        }
      }
    }
    if (b.result().samples + b.result().excluded > 0) out.push_back(b.result());
  }
  return out;
}

// Conformal contraction against the direct one.
ClauseResult run_conformal_kk(const Fixture& fx, const TheoremSuite& s) {
  ResultBuilder b("ex-4.11(kk)", fx.id, CheckKind::Universal, s.tol.curvature_rel, s.tol.abs);
  std::mt19937_64 rng(stream_seed(s.sampling.seed, "ex-4.11(kk)", fx.id));
  const auto points = sample_points(fx, s.sampling.points, rng);
  const auto& spec = *fx.conformal;
  for (const auto& p : points) {
    const bool direct = std::abs(spec.omega.jet(p).value()) >= kSmallWarp && well_conditioned(metric_at(fx.metric, p));
    for (int k = 0; k < s.sampling.draws; ++k) {
      const Draw d = make_draw(fx, rng);
      for (ConnectionTag tag : {ConnectionTag::LeviCivita, ConnectionTag::AlmostProduct}) {
        if (tag == ConnectionTag::AlmostProduct && !spec.structure) continue;
        try {
          const ScaledValue fw = conformal_kk_terms(spec, tag, d.x, d.y, d.z, d.t, p);
          if (!direct) {
            b.route("factorwise");
            b.finite_sample(fw.value, p);
            continue;
          }
          ConnectionVariant v = tag == ConnectionTag::LeviCivita ? ConnectionVariant::levi_civita()
                                                                 : ConnectionVariant::almost_product(*spec.structure);
          const Frame fr(fx.metric, v, p);
          b.sample({{sv({fr.co_inner(fr.lower(d.x, d.y), fr.lower(d.z, d.t))}), fw}}, p);
          b.route("direct+closed-form");
        } catch (const Error& e) {
          b.error("Error", e.what(), p, true);
        }
      }
    }
  }
  return b.result();
}

ClauseResult run_probes(const std::string& id, const Fixture& fx, const TheoremSuite& s) {
  ResultBuilder b(id, fx.id, CheckKind::Universal, 10.0, 0.0);
  b.result().tolerance = 10.0;
  const auto [a, z] = singular_path(fx);
  std::vector<std::string> quantities;
  if (id == "ex-4.11(continuity)") {
    if (fx.conformal) {
      quantities.push_back("conformal-kk:lc");
      if (fx.conformal->structure) quantities.push_back("conformal-kk:ap");
    }
  } else if (fx.product) {
    for (const auto& p : probe_specs()) {
      if (p.id != id) continue;
      for (const auto& c : product_clauses()) {
        if (c.printed || c.tag != p.tag) continue;
        if (std::find(p.kinds.begin(), p.kinds.end(), c.kind) == p.kinds.end()) continue;
        std::mt19937_64 rng(0);
        if (spec_for(c, fx, rng)) quantities.push_back(c.key());
      }
    }
  }
  for (const auto& q : quantities) {
    const ContinuityReport r = continuity_probe(q, fx, a, z, 16, s.sampling.seed);
    b.route("probe");
    auto& res = b.result();
    ++res.samples;
    if (!r.errors.empty()) {
      for (const auto& e : r.errors) b.error(e.type, q + ": " + e.message, e.point, false);
      --res.excluded;
      continue;
    }
    if (r.continuous) ++res.passes;
    if (r.divergence_ratio >= res.max_rel_residual) {
      res.max_rel_residual = r.divergence_ratio;
      res.worst_point = a;
    }
  }
  return b.result();
}

bool clause_fits(const VClause& c, const Fixture& fx) {
  switch (c.family) {
    case ClauseFamily::Identity:
      if (!c.identity) return fx.conformal.has_value();
      return fixture_fits(c.identity->needs, fx);
    case ClauseFamily::Product:
      return fx.product.has_value();
    case ClauseFamily::Continuity:
      return c.id == "ex-4.11(continuity)" ? fx.conformal.has_value()
                                           : (fx.product.has_value() && !fx.anchors.empty());
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Suites.

std::vector<std::string> suite_ids() {
  std::set<std::string> s;
  for (const auto& c : vclauses()) s.insert(c.suites.begin(), c.suites.end());
  return {s.begin(), s.end()};
}

std::vector<std::string> suite_clauses(const std::string& suite) {
  std::vector<std::string> out;
  for (const auto& c : vclauses()) {
    if (suite == "all" || std::find(c.suites.begin(), c.suites.end(), suite) != c.suites.end()) out.push_back(c.id);
  }
  if (out.empty()) throw UnknownClause("unknown suite \"" + suite + "\"");
  return out;
}

std::vector<std::string> registered_clause_ids() {
  std::set<std::string> s;
  for (const auto& c : vclauses()) s.insert(c.id);
  return {s.begin(), s.end()};
}

std::vector<std::string> required_clause_ids() {
  std::vector<std::string> out;
  auto numbered = [&](const std::string& id, int n) {
    for (int k = 1; k <= n; ++k) out.push_back(id + "(" + std::to_string(k) + ")");
  };
  numbered("thm-2.2", 8);
  numbered("thm-3.2", 8);
  numbered("thm-4.3", 7);
  numbered("prop-2.5", 7);
  numbered("prop-3.5", 7);
  numbered("prop-4.5", 6);
  numbered("prop-2.7", 4);
  numbered("prop-3.7", 4);
  numbered("prop-4.8", 4);
  numbered("prop-2.15", 5);
  numbered("prop-2.16", 5);
  numbered("prop-3.13", 5);
  numbered("prop-3.14", 5);
  numbered("prop-4.14", 5);
  numbered("prop-5.2", 7);
  numbered("thm-2.17", 6);
  numbered("thm-2.18", 6);
  numbered("thm-3.15", 8);
  numbered("thm-3.16", 9);
  numbered("thm-4.17", 7);
  numbered("thm-5.5", 11);
  for (int k = 10; k <= 18; ++k) out.push_back("eq-4." + std::to_string(k));
  for (int k = 3; k <= 16; ++k) out.push_back("eq-5." + std::to_string(k));
  for (const char* id : {"cor-2.4", "cor-3.4", "eq-2.7", "eq-2.8", "eq-2.11", "eq-2.12", "eq-2.18", "eq-3.4",
                         "eq-3.5", "eq-3.7", "eq-3.8", "eq-3.10", "eq-3.15", "eq-3.15-counterexample", "eq-4.1",
                         "prop-2.10", "prop-2.13", "prop-2.14", "prop-3.9", "prop-3.11", "prop-3.12", "prop-4.6",
                         "prop-4.10", "prop-4.13", "thm-2.11", "thm-3.10", "thm-4.12", "thm-4.15", "thm-5.3",
                         "ex-4.11(kk)", "ex-4.11(stationary)", "ex-4.11(continuity)", "thm-2.11(continuity)",
                         "thm-3.10(continuity)", "thm-4.12(continuity)", "thm-4.16(continuity)",
                         "thm-5.4(continuity)"}) {
    out.push_back(id);
  }
  return out;
}

TheoremSuite make_suite(const std::string& id, Sampling sampling, Tolerances tol, std::vector<std::string> fixtures) {
  return {id, std::move(fixtures), suite_clauses(id), sampling, tol};
}

CheckReport run_suite(const TheoremSuite& suite, const Catalog& catalog) {
  const auto start = std::chrono::steady_clock::now();
  CheckReport report;
  report.suite = suite.id;
  report.seed = suite.sampling.seed;
  report.sampling = suite.sampling;
  report.tol = suite.tol;
  std::vector<const Fixture*> fixtures;
  if (suite.fixtures.empty()) {
    for (const auto& id : catalog.ids()) fixtures.push_back(&catalog.get(id));
  } else {
    for (const auto& id : suite.fixtures) fixtures.push_back(&catalog.get(id));
  }
  for (const auto* f : fixtures) report.fixtures.push_back(f->id);

  for (const auto& cid : suite.clauses) {
    const VClause& c = find_vclause(cid);
    for (const auto* fx : fixtures) {
      if (!clause_fits(c, *fx)) continue;
      switch (c.family) {
        case ClauseFamily::Identity:
          report.clauses.push_back(c.identity ? run_identity(*c.identity, *fx, suite) : run_conformal_kk(*fx, suite));
          break;
        case ClauseFamily::Product: {
          auto r = run_product(c.id, *fx, suite);
          report.clauses.insert(report.clauses.end(), r.begin(), r.end());
          break;
        }
        case ClauseFamily::Continuity:
          report.clauses.push_back(run_probes(c.id, *fx, suite));
          break;
      }
    }
  }
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------------------
// Continuity.

ContinuityReport continuity_probe(const std::function<double(double)>& q, int n_steps, int refinements) {
  return continuity_probe(std::function<ScaledValue(double)>([&](double s) { return ScaledValue{q(s), 0.0}; }),
                          n_steps, refinements);
}

ContinuityReport continuity_probe(const std::function<ScaledValue(double)>& q, int n_steps, int refinements) {
  ContinuityReport r;
  for (int level = 0; level <= refinements; ++level) {
    const int n = n_steps << level;
    ScaledValue prev = q(0.0);
    double worst = 0.0;
    for (int i = 1; i <= n; ++i) {
      const double s = static_cast<double>(i) / n;
      const ScaledValue v = q(s);
      const double diff = std::abs(v.value - prev.value);
      if (!(diff <= kContinuityNoise * std::max(v.scale, prev.scale))) worst = std::max(worst, diff * n);
      prev = v;
    }
    r.levels.push_back({n, worst});
  }
  const double first = r.levels.front().max_divided_difference;
  const double last = r.levels.back().max_divided_difference;
  if (!std::isfinite(last)) {
    r.divergence_ratio = std::numeric_limits<double>::infinity();
  } else if (first == 0.0) {
    r.divergence_ratio = last == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  } else {
    r.divergence_ratio = last / first;
  }
  r.continuous = r.divergence_ratio < 10.0;
  return r;
}

std::pair<Point, Point> singular_path(const Fixture& fixture) {
  Point c = fixture.anchors.empty() ? Point(static_cast<std::size_t>(fixture.chart.dim()), 0.0) : fixture.anchors.front();
  const auto& iv = fixture.chart.bounds().front();
  const double half = std::min({1.0, c[0] - iv.lo, iv.hi - c[0]}) * 0.9;
  Point a = c, b = c;
  a[0] -= half;
  b[0] += half;
  return {a, b};
}

ContinuityReport continuity_probe(const std::string& quantity, const Fixture& fixture, const Point& a,
                                  const Point& b, int n_steps, std::uint64_t seed) {
  std::mt19937_64 rng(stream_seed(seed, quantity, fixture.id));
  auto at = [&](double s) {
    Point p = a;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = a[i] + s * (b[i] - a[i]);
    return p;
  };
  std::function<ScaledValue(const Point&)> f;
  const std::string conf = "conformal-kk:", direct = "direct-kk:";
  if (quantity.rfind(conf, 0) == 0) {
    if (!fixture.conformal) throw UnknownClause(quantity + " needs a conformal fixture");
    const ConnectionTag tag =
        quantity.substr(conf.size()) == "ap" ? ConnectionTag::AlmostProduct : ConnectionTag::LeviCivita;
    const Draw d = make_draw(fixture, rng);
    const ConformalSpec spec = *fixture.conformal;
    f = [=](const Point& p) { return conformal_kk_terms(spec, tag, d.x, d.y, d.z, d.t, p); };
  } else if (quantity.rfind(direct, 0) == 0) {
    const ConnectionTag tag =
        quantity.substr(direct.size()) == "ap" ? ConnectionTag::AlmostProduct : ConnectionTag::LeviCivita;
    const Draw d = make_draw(fixture, rng);
    const MetricField g = fixture.metric;
    const ConnectionVariant v = tag == ConnectionTag::AlmostProduct ? ConnectionVariant::almost_product(*fixture.structure)
                                                                     : ConnectionVariant::levi_civita();
    f = [=](const Point& p) { return ScaledValue{kk_contraction(v, g, d.x, d.y, d.z, d.t, p), 0.0}; };
  } else {
    if (!fixture.product) throw UnknownClause(quantity + " needs a product fixture");
    const ProductClause* clause = nullptr;
    for (const auto& c : product_clauses()) {
      if (c.key() == quantity) clause = &c;
    }
    if (!clause) throw UnknownClause("unknown quantity \"" + quantity + "\"");
    const auto spec = spec_for(*clause, fixture, rng);
    if (!spec) throw UnsupportedCase(quantity + " does not apply to " + fixture.id);
    const auto slots = draw_slots(*spec, clause->pattern, rng);
    const ProductClause c = *clause;
    const WarpedProductSpec sp = *spec;
    f = [=](const Point& p) { return evaluate_clause(c, sp, c.tag, slots, p); };
  }
  ContinuityReport r;
  try {
    r = continuity_probe(std::function<ScaledValue(double)>([&](double s) { return f(at(s)); }), n_steps);
  } catch (const Error& e) {
    r.continuous = false;
    r.errors.push_back({"Error", e.what(), a});
  }
  r.quantity = quantity;
  r.fixture = fixture.id;
  return r;
}

}  // namespace koszul
