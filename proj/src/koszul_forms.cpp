#include "koszul/koszul_forms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "koszul/error.hpp"

namespace koszul {

ProductStructure::ProductStructure(ChartDomain chart, const std::vector<std::vector<Expr>>& rows)
    : chart_(std::move(chart)) {
  const int n = dim();
  require_same_dim(static_cast<int>(rows.size()), n, "product structure rows");
  for (const auto& r : rows) {
    require_same_dim(static_cast<int>(r.size()), n, "product structure row");
    for (const auto& e : r) {
      if (e.max_coord() >= n) throw DimensionMismatch("product structure references a coordinate outside the chart");
      entries_.push_back(e);
    }
  }
}

ProductStructure ProductStructure::diagonal(ChartDomain chart, const std::vector<Expr>& diag) {
  const int n = chart.dim();
  require_same_dim(static_cast<int>(diag.size()), n, "product structure diagonal");
  std::vector<std::vector<Expr>> rows(n, std::vector<Expr>(n));
  for (int i = 0; i < n; ++i) rows[i][i] = diag[i];
  return ProductStructure(std::move(chart), rows);
}

SmallMat ProductStructure::value(std::span<const double> p) const {
  chart_.require_point(p);
  const int n = dim();
  SmallMat m(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) m(a, b) = eval_value(entry(a, b), p);
  }
  return m;
}

std::vector<Jet2> ProductStructure::jets(std::span<const double> p) const {
  chart_.require_point(p);
  std::vector<Jet2> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(eval_jet2(e, p));
  return out;
}

double ProductStructure::defect(const MetricField& g, std::span<const double> p) const {
  require_same_dim(g.dim(), dim(), "product structure");
  const SmallMat j = value(p);
  const SmallMat gm = metric_at(g, p);
  const int n = dim();
  const double d1 = (j * j - SmallMat::Identity(n, n)).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, gm.cwiseAbs().maxCoeff());
  const double d2 = (j.transpose() * gm * j - gm).cwiseAbs().maxCoeff() / scale;
  return std::max(d1, d2);
}

std::string to_string(ConnectionTag tag) {
  switch (tag) {
    case ConnectionTag::LeviCivita:
      return "lc";
    case ConnectionTag::SSMetric:
      return "ssm";
    case ConnectionTag::SSNonMetric:
      return "ssnm";
    case ConnectionTag::AlmostProduct:
      return "ap";
  }
  return "?";
}

void ConnectionVariant::validate(int dim) const {
  switch (tag) {
    case ConnectionTag::LeviCivita:
      return;
    case ConnectionTag::SSMetric:
    case ConnectionTag::SSNonMetric:
      if (!p) throw std::invalid_argument(to_string(tag) + " connection requires a vector field P");
      require_same_dim(p->dim(), dim, "P");
      return;
    case ConnectionTag::AlmostProduct:
      if (!j) throw std::invalid_argument("ap connection requires a product structure J");
      require_same_dim(j->dim(), dim, "J");
      return;
  }
}

Frame::Frame(const MetricField& g, ConnectionVariant v, std::span<const double> p, double rank_tol)
    : variant_(std::move(v)), point_(p.begin(), p.end()), n_(g.dim()), rank_tol_(rank_tol) {
  g.chart().require_point(p);
  variant_.validate(n_);
  const auto gj = g.jets(p);
  g0_.n = g1_.n = n_;
  gram_.resize(n_, n_);
  for (int a = 0; a < n_; ++a) {
    for (int b = a; b < n_; ++b) {
      const Jet2& j = gj[packed_index(n_, a, b)];
      gram_(a, b) = gram_(b, a) = j.value();
      g0_.m[a][b] = g0_.m[b][a] = detail::value_of<double>(j);
      g1_.m[a][b] = g1_.m[b][a] = detail::value_of<Jet1>(j);
      for (int c = 0; c < n_; ++c) {
        g0_.dm[c][a][b] = g0_.dm[c][b][a] = detail::derivative_of<double>(j, c);
        g1_.dm[c][a][b] = g1_.dm[c][b][a] = detail::derivative_of<Jet1>(j, c);
      }
    }
  }
  if (variant_.p) {
    const auto pj = variant_.p->jets(p);
    p0_ = detail::local_vector<double>(std::span<const Jet2>(pj));
    p1_ = detail::local_vector<Jet1>(std::span<const Jet2>(pj));
  }
  if (variant_.j) {
    const auto jj = variant_.j->jets(p);
    j0_ = detail::local_matrix<double>(std::span<const Jet2>(jj), n_);
    j1_ = detail::local_matrix<Jet1>(std::span<const Jet2>(jj), n_);
  }
}

const std::vector<Jet2>& Frame::jets(const VectorField& x) const {
  constexpr std::size_t kCacheSize = 24;
  for (const auto& c : jet_cache_) {
    bool same = true;
    for (int a = 0; a < n_ && same; ++a) same = c.field[a].id() == x[a].id();
    if (same) return c.jets;
  }
  if (jet_cache_.size() == kCacheSize) jet_cache_.erase(jet_cache_.begin());
  jet_cache_.push_back({x, x.jets(point_)});
  return jet_cache_.back().jets;
}

const PseudoSolver& Frame::solver() const {
  if (!solver_) solver_.emplace(GramSnapshot{gram_, rank_tol_});
  return *solver_;
}

template <class S>
S Frame::variant_kernel(const detail::LocalMatrix<S>& g, const detail::LocalVector<S>* p,
                        const detail::LocalMatrix<S>* j, const detail::LocalVector<S>& x,
                        const detail::LocalVector<S>& y, const detail::LocalVector<S>& z) const {
  switch (variant_.tag) {
    case ConnectionTag::LeviCivita:
      return detail::koszul(g, x, y, z);
    case ConnectionTag::SSMetric:
      return detail::koszul(g, x, y, z) + detail::inner(g, y, *p) * detail::inner(g, x, z) -
             detail::inner(g, x, y) * detail::inner(g, *p, z);
    case ConnectionTag::SSNonMetric:
      return detail::koszul(g, x, y, z) + detail::inner(g, y, *p) * detail::inner(g, x, z);
    case ConnectionTag::AlmostProduct: {
      const auto jy = detail::apply(*j, y);
      const auto jz = detail::apply(*j, z);
      return 0.5 * (detail::koszul(g, x, y, z) + detail::koszul(g, x, jy, jz));
    }
  }
  return detail::zero_like<S>(g.n);
}

double Frame::inner(const VectorField& x, const VectorField& y) const {
  require_same_dim(x.dim(), n_, "field");
  require_same_dim(y.dim(), n_, "field");
  return inner(x.value(point_), y.value(point_));
}

SmallVec Frame::bracket(const VectorField& x, const VectorField& y) const {
  return detail::values(detail::bracket(local<double>(x), local<double>(y)), n_);
}

double Frame::koszul(const VectorField& x, const VectorField& y, const VectorField& z) const {
  return detail::koszul(g0_, local<double>(x), local<double>(y), local<double>(z));
}

double Frame::koszul_variant(const VectorField& x, const VectorField& y, const VectorField& z) const {
  return variant_kernel<double>(g0_, p0_ ? &*p0_ : nullptr, j0_ ? &*j0_ : nullptr, local<double>(x), local<double>(y),
                                local<double>(z));
}

double Frame::koszul_variant_at(const SmallVec& x, const VectorField& y, const VectorField& z) const {
  require_same_dim(static_cast<int>(x.size()), n_, "vector");
  return variant_kernel<double>(g0_, p0_ ? &*p0_ : nullptr, j0_ ? &*j0_ : nullptr,
                                detail::constant_vector<double>(x), local<double>(y), local<double>(z));
}

double Frame::derive_koszul_variant(const VectorField& w, const VectorField& x, const VectorField& y,
                                    const VectorField& z) const {
  const Jet1 k = variant_kernel<Jet1>(g1_, p1_ ? &*p1_ : nullptr, j1_ ? &*j1_ : nullptr, local<Jet1>(x),
                                      local<Jet1>(y), local<Jet1>(z));
  return k.g.dot(w.value(point_));
}

double Frame::derive_inner(const VectorField& w, const VectorField& x, const VectorField& y) const {
  return detail::derive_inner(local<double>(w), g0_, local<double>(x), local<double>(y));
}

SmallVec Frame::lower(const VectorField& x, const VectorField& y) const {
  const auto lx = local<double>(x);
  const auto ly = local<double>(y);
  SmallVec out(n_);
  for (int k = 0; k < n_; ++k) {
    const auto ek = detail::constant_vector<double>(SmallVec::Unit(n_, k));
    out[k] = variant_kernel<double>(g0_, p0_ ? &*p0_ : nullptr, j0_ ? &*j0_ : nullptr, lx, ly, ek);
  }
  return out;
}

SmallVec Frame::lower_levi_civita(const VectorField& x, const VectorField& y) const {
  const auto lx = local<double>(x);
  const auto ly = local<double>(y);
  SmallVec out(n_);
  for (int k = 0; k < n_; ++k) {
    out[k] = detail::koszul(g0_, lx, ly, detail::constant_vector<double>(SmallVec::Unit(n_, k)));
  }
  return out;
}

double Frame::co_inner(const SmallVec& omega, const SmallVec& tau) const {
  try {
    return solver().co_inner(omega, tau);
  } catch (NotAnnihilator& e) {
    e.set_point(point_);
    throw;
  }
}

bool Frame::is_annihilator(const SmallVec& omega) const { return solver().is_annihilator(omega); }

double koszul(const MetricField& g, const VectorField& x, const VectorField& y, const VectorField& z,
              std::span<const double> p) {
  return Frame(g, ConnectionVariant::levi_civita(), p).koszul(x, y, z);
}

double koszul_variant(const ConnectionVariant& v, const MetricField& g, const VectorField& x, const VectorField& y,
                      const VectorField& z, std::span<const double> p) {
  return Frame(g, v, p).koszul_variant(x, y, z);
}

CovectorValue lower_cov_deriv(const ConnectionVariant& v, const MetricField& g, const VectorField& x,
                              const VectorField& y, std::span<const double> p) {
  return {Point(p.begin(), p.end()), Frame(g, v, p).lower(x, y)};
}

double cov_deriv_form(const ConnectionVariant& v, const MetricField& g, const VectorField& x,
                      const CovectorField& omega, const VectorField& y, std::span<const double> p) {
  const Frame f(g, v, p);
  require_same_dim(omega.dim(), f.dim(), "covector field");
  const auto oj = omega.jets(p);
  const auto lx = f.local<double>(x);
  const auto ly = f.local<double>(y);
  const int n = f.dim();
  // X(omega(Y)) = X^c (d_c omega_a Y^a + omega_a d_c Y^a)
  double xo = 0.0;
  SmallVec ov(n);
  for (int a = 0; a < n; ++a) {
    ov[a] = oj[a].value();
    for (int c = 0; c < n; ++c) xo += lx.v[c] * (oj[a].gradient(c) * ly.v[a] + oj[a].value() * ly.d[c][a]);
  }
  return xo - f.co_inner(f.lower(x, y), ov);
}

double second_lower_deriv(const ConnectionVariant& v, const MetricField& g, const VectorField& x, const VectorField& y,
                          const VectorField& z, const VectorField& t, std::span<const double> p) {
  const Frame f(g, v, p);
  return f.derive_koszul_variant(x, y, z, t) - f.co_inner(f.lower(x, t), f.lower(y, z));
}

double kk_contraction(const ConnectionVariant& v, const MetricField& g, const VectorField& x, const VectorField& y,
                      const VectorField& z, const VectorField& t, std::span<const double> p) {
  const Frame f(g, v, p);
  return f.co_inner(f.lower(x, y), f.lower(z, t));
}

RadicalReport check_radical_stationary(const MetricField& g, const std::vector<Point>& points, double rank_tol) {
  RadicalReport report;
  const int n = g.dim();
  for (const auto& p : points) {
    const Frame f(g, ConnectionVariant::levi_civita(), p, rank_tol);
    ++report.points_checked;
    const auto radical = f.solver().radical_basis();
    if (radical.empty()) continue;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const SmallVec w =
            f.lower(VectorField::coordinate(g.chart(), i), VectorField::coordinate(g.chart(), j));
        if (f.is_annihilator(w)) continue;
        double worst = 0.0;
        const double norm = w.norm();
        for (const auto& r : radical) worst = std::max(worst, std::abs(w.dot(r)) / norm);
        report.stationary = false;
        report.failures.push_back({p, i, j, worst});
      }
    }
  }
  return report;
}

}  // namespace koszul
