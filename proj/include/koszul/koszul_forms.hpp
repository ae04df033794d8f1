#pragma once

// Koszul forms of a possibly degenerate metric and the objects built from them:
// lower covariant derivatives, covariant derivatives of radical-annihilating
// 1-forms, and the co-inner product of two lower covariant derivatives.
//
// Four variants are supported. With K the Koszul form of g:
//   LeviCivita     K(X,Y,Z)
//   SSMetric       K(X,Y,Z) + g(Y,P) g(X,Z) - g(X,Y) g(P,Z)
//   SSNonMetric    K(X,Y,Z) + g(Y,P) g(X,Z)
//   AlmostProduct  (K(X,Y,Z) + K(X,JY,JZ)) / 2
// Everything is evaluated from metric jets, never from Christoffel symbols, so
// it stays defined where g is degenerate.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "koszul/degenerate_linalg.hpp"
#include "koszul/detail/local.hpp"
#include "koszul/fields.hpp"

namespace koszul {

// Almost product structure J (J^2 = id, g(JX, JY) = g(X, Y)), stored row-major
// as J^a_b.
class ProductStructure {
 public:
  ProductStructure() = default;
  ProductStructure(ChartDomain chart, const std::vector<std::vector<Expr>>& rows);
  static ProductStructure diagonal(ChartDomain chart, const std::vector<Expr>& diag);

  const ChartDomain& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  const Expr& entry(int a, int b) const { return entries_[static_cast<std::size_t>(a * dim() + b)]; }
  SmallMat value(std::span<const double> p) const;
  std::vector<Jet2> jets(std::span<const double> p) const;

  // Largest relative violation of J^2 = id and g(JX,JY) = g(X,Y) at p.
  double defect(const MetricField& g, std::span<const double> p) const;

 private:
  ChartDomain chart_;
  std::vector<Expr> entries_;
};

enum class ConnectionTag { LeviCivita, SSMetric, SSNonMetric, AlmostProduct };

std::string to_string(ConnectionTag tag);

struct ConnectionVariant {
  ConnectionTag tag = ConnectionTag::LeviCivita;
  std::optional<VectorField> p;
  std::optional<ProductStructure> j;

  static ConnectionVariant levi_civita() { return {}; }
  static ConnectionVariant ss_metric(VectorField p) { return {ConnectionTag::SSMetric, std::move(p), std::nullopt}; }
  static ConnectionVariant ss_non_metric(VectorField p) {
    return {ConnectionTag::SSNonMetric, std::move(p), std::nullopt};
  }
  static ConnectionVariant almost_product(ProductStructure j) {
    return {ConnectionTag::AlmostProduct, std::nullopt, std::move(j)};
  }

  // Throws std::invalid_argument when the payload required by the tag is absent.
  void validate(int dim) const;
};

// All jets needed at one point for one metric and connection variant.
class Frame {
 public:
  Frame(const MetricField& g, ConnectionVariant v, std::span<const double> p, double rank_tol = kDefaultRankTol);

  const Point& point() const { return point_; }
  int dim() const { return n_; }
  const ConnectionVariant& variant() const { return variant_; }
  const SmallMat& gram() const { return gram_; }
  const PseudoSolver& solver() const;

  template <class S>
  detail::LocalVector<S> local(const VectorField& x) const {
    require_same_dim(x.dim(), n_, "field");
    return detail::local_vector<S>(std::span<const Jet2>(jets(x)));
  }
  // Component jets at p, memoized per field.
  const std::vector<Jet2>& jets(const VectorField& x) const;

  double inner(const VectorField& x, const VectorField& y) const;
  double inner(const SmallVec& x, const SmallVec& y) const { return x.dot(gram_ * y); }
  SmallVec bracket(const VectorField& x, const VectorField& y) const;
  SmallVec flat(const SmallVec& x) const { return gram_ * x; }

  // Levi-Civita Koszul form and the variant's form.
  double koszul(const VectorField& x, const VectorField& y, const VectorField& z) const;
  double koszul_variant(const VectorField& x, const VectorField& y, const VectorField& z) const;
  // Variant form with a first argument known only by its value at p (the forms
  // are tensorial in that slot).
  double koszul_variant_at(const SmallVec& x, const VectorField& y, const VectorField& z) const;

  // W(K_v(X, Y, Z)): derivative of the variant's form along W.
  double derive_koszul_variant(const VectorField& w, const VectorField& x, const VectorField& y,
                               const VectorField& z) const;
  // W(g(X, Y)).
  double derive_inner(const VectorField& w, const VectorField& x, const VectorField& y) const;

  // Components k -> K_v(X, Y, d_k).
  SmallVec lower(const VectorField& x, const VectorField& y) const;
  SmallVec lower_levi_civita(const VectorField& x, const VectorField& y) const;

  // Co-inner product; NotAnnihilator carries this frame's point.
  double co_inner(const SmallVec& omega, const SmallVec& tau) const;
  bool is_annihilator(const SmallVec& omega) const;

 private:
  template <class S>
  S variant_kernel(const detail::LocalMatrix<S>& g, const detail::LocalVector<S>* p, const detail::LocalMatrix<S>* j,
                   const detail::LocalVector<S>& x, const detail::LocalVector<S>& y,
                   const detail::LocalVector<S>& z) const;

  ConnectionVariant variant_;
  Point point_;
  int n_ = 0;
  double rank_tol_ = kDefaultRankTol;
  SmallMat gram_;
  detail::LocalMatrix<double> g0_;
  detail::LocalMatrix<Jet1> g1_;
  std::optional<detail::LocalVector<double>> p0_;
  std::optional<detail::LocalVector<Jet1>> p1_;
  std::optional<detail::LocalMatrix<double>> j0_;
  std::optional<detail::LocalMatrix<Jet1>> j1_;
  mutable std::optional<PseudoSolver> solver_;
  struct CachedJets {
    VectorField field;  // held so node ids stay unique
    std::vector<Jet2> jets;
  };
  mutable std::vector<CachedJets> jet_cache_;
};

double koszul(const MetricField& g, const VectorField& x, const VectorField& y, const VectorField& z,
              std::span<const double> p);

double koszul_variant(const ConnectionVariant& v, const MetricField& g, const VectorField& x, const VectorField& y,
                      const VectorField& z, std::span<const double> p);

CovectorValue lower_cov_deriv(const ConnectionVariant& v, const MetricField& g, const VectorField& x,
                              const VectorField& y, std::span<const double> p);

// (nabla_X omega)(Y) = X(omega(Y)) - <<lower(X, Y), omega>>.
double cov_deriv_form(const ConnectionVariant& v, const MetricField& g, const VectorField& x,
                      const CovectorField& omega, const VectorField& y, std::span<const double> p);

// (nabla_X lower(Y, Z))(T) = X(K_v(Y, Z, T)) - <<lower(X, T), lower(Y, Z)>>.
double second_lower_deriv(const ConnectionVariant& v, const MetricField& g, const VectorField& x, const VectorField& y,
                          const VectorField& z, const VectorField& t, std::span<const double> p);

// <<lower(X, Y), lower(Z, T)>>.
double kk_contraction(const ConnectionVariant& v, const MetricField& g, const VectorField& x, const VectorField& y,
                      const VectorField& z, const VectorField& t, std::span<const double> p);

struct RadicalFailure {
  Point point;
  int i = 0;  // lower(d_i, d_j) fails to annihilate the radical
  int j = 0;
  double violation = 0.0;  // largest |omega . r| / |omega| over radical vectors r
};

struct RadicalReport {
  bool stationary = true;
  int points_checked = 0;
  std::vector<RadicalFailure> failures;
};

RadicalReport check_radical_stationary(const MetricField& g, const std::vector<Point>& points,
                                       double rank_tol = kDefaultRankTol);

}  // namespace koszul
