#pragma once

// Warped and multiply warped products B x_{f_1} F_1 x ... x_{f_l} F_l.
//
// The product chart lists base coordinates first, then each fiber's in
// declaration order. Factor 0 is the base, factor j >= 1 is fiber j.
//
// The factor-wise evaluators compute Koszul forms, curvatures and Koszul-form
// contractions of the product from factor data only (factor metrics, factor
// Koszul forms and curvatures, warp jets). They dispatch on the origin pattern
// of the slots through a clause registry; each registered clause carries the
// right-hand side of one case of a product formula.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "koszul/curvature.hpp"
#include "koszul/koszul_forms.hpp"

namespace koszul {

struct FactorSpec {
  ChartDomain chart;
  MetricField metric;
  std::optional<ProductStructure> structure;
};

struct FiberSpec {
  ChartDomain chart;
  MetricField metric;
  ScalarField warp;  // over the base chart
  std::optional<ProductStructure> structure;
};

// A field living on one factor.
struct Slot {
  int factor = 0;
  VectorField field;
};

struct WarpedProductSpec {
  FactorSpec base;
  std::vector<FiberSpec> fibers;
  std::optional<Slot> p;

  int fiber_count() const { return static_cast<int>(fibers.size()); }
  int factor_count() const { return fiber_count() + 1; }
  int dim() const;
  int offset(int factor) const;
  const ChartDomain& factor_chart(int factor) const;
  const MetricField& factor_metric(int factor) const;
  const std::optional<ProductStructure>& factor_structure(int factor) const;
  bool has_structure() const;
  ChartDomain chart() const;

  // Throws DimensionMismatch or std::invalid_argument.
  void validate() const;
};

MetricField assemble_product_metric(const WarpedProductSpec& spec);
ProductStructure assemble_product_structure(const WarpedProductSpec& spec);  // J = (J_1, J_2, ...)
VectorField lift_field(const WarpedProductSpec& spec, int factor, const VectorField& field);
VectorField lift_field(const WarpedProductSpec& spec, const Slot& slot);

// The connection of the product for a tag: P lifted from spec.p, J assembled.
ConnectionVariant product_variant(const WarpedProductSpec& spec, ConnectionTag tag);

// Splits a product point into factor points.
std::vector<Point> split_point(const WarpedProductSpec& spec, std::span<const double> p);

// JX as a field, J given by expressions.
VectorField apply_structure(const ProductStructure& j, const VectorField& x);

// Factor data at one product point.
class FactorData {
 public:
  FactorData(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const double> p);

  int fibers() const { return static_cast<int>(points_.size()) - 1; }
  const Point& point(int factor) const { return points_[factor]; }
  const Slot& p_slot() const;

  double f(int j) const { return warp_[j].value(); }
  SmallVec df(int j) const { return warp_[j].gradient(); }
  double df(int j, const Slot& x) const;        // X(f_j), X on the base
  double df_j1(int j, const Slot& x) const;     // (J_1 X)(f_j)
  SmallVec df_j1(int j) const;                  // df_j o J_1
  double hessian(int j, const Slot& x, const Slot& t) const;  // Levi-Civita Hessian of f_j on the base
  double xt_f(int j, const Slot& x, const Slot& t) const;     // X(T(f_j))
  double base_cometric(const SmallVec& a, const SmallVec& b) const;

  double g(const Slot& a, const Slot& b) const;            // factor metric, 0 across factors
  double g_j(const Slot& a, const Slot& b) const;          // g(a, J b)
  double dg(const Slot& w, const Slot& a, const Slot& b) const;  // w(g(a, b))
  Slot j(const Slot& a) const;

  // On the factor of the slots: Levi-Civita and variant forms.
  double k(const Slot& a, const Slot& b, const Slot& c) const;
  double kv(const Slot& a, const Slot& b, const Slot& c) const;
  SmallVec lower(const Slot& a, const Slot& b) const;
  SmallVec lower_v(const Slot& a, const Slot& b) const;
  ScaledValue r(const Slot& a, const Slot& b, const Slot& c, const Slot& d) const;
  ScaledValue rv(const Slot& a, const Slot& b, const Slot& c, const Slot& d) const;
  double kk(const Slot& a, const Slot& b, const Slot& c, const Slot& d) const;
  double kkv(const Slot& a, const Slot& b, const Slot& c, const Slot& d) const;

  const Frame& lc(int factor) const { return lc_[factor]; }
  const Frame& var(int factor) const { return var_[factor]; }

 private:
  const WarpedProductSpec* spec_;
  std::vector<Point> points_;
  std::vector<Jet2> warp_;  // index 0 unused
  std::vector<Frame> lc_;
  std::vector<Frame> var_;
  std::optional<SmallMat> j1_;
  mutable std::optional<SmallMat> base_inverse_;
  const SmallMat& base_inverse() const;
};

enum class ClauseKind { Koszul, Riemann, Contraction };
enum class PPlacement { None, Base, Fiber };

std::string to_string(ClauseKind kind);

using ClauseEval = std::function<ScaledValue(const FactorData&, std::span<const Slot>)>;

struct ProductClause {
  std::string id;       // e.g. "prop-2.15(4)", "eq-5.13"
  ClauseKind kind;
  ConnectionTag tag;
  PPlacement p_on;
  bool single_fiber;    // stated for one fiber only
  std::string pattern;  // one letter per slot: B for the base, lowercase letters for distinct fibers
  bool printed;         // the printed form where it differs from the corrected one
  ClauseEval eval;

  std::string key() const { return id + "[" + pattern + "]" + (printed ? "/printed" : ""); }
};

const std::vector<ProductClause>& product_clauses();

// Whether the slot origins fit the pattern (same letter same fiber, distinct
// letters distinct fibers).
bool matches_pattern(const std::string& pattern, std::span<const Slot> slots);

// Whether the clause's family (connection, P placement, fiber count) fits.
bool clause_applies(const ProductClause& c, const WarpedProductSpec& spec, ConnectionTag tag);

ScaledValue evaluate_clause(const ProductClause& c, const WarpedProductSpec& spec, ConnectionTag tag,
                            std::span<const Slot> slots, std::span<const double> p);

// Dispatch to the unique corrected clause matching the slots; UnsupportedCase
// when none does.
const ProductClause& find_clause(const WarpedProductSpec& spec, ConnectionTag tag, ClauseKind kind,
                                 std::span<const Slot> slots);

ScaledValue factorwise_koszul_terms(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const Slot> slots,
                                    std::span<const double> p);
ScaledValue factorwise_riemann_terms(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const Slot> slots,
                                     std::span<const double> p);
ScaledValue factorwise_kk_terms(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const Slot> slots,
                                std::span<const double> p);

double factorwise_koszul(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const Slot> slots,
                         std::span<const double> p);
double factorwise_riemann(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const Slot> slots,
                          std::span<const double> p);
double factorwise_kk(const WarpedProductSpec& spec, ConnectionTag tag, std::span<const Slot> slots,
                     std::span<const double> p);

// Conformal metric g = Omega^2 g0 with g0 nondegenerate and J a g0-isometric
// almost product structure. The contraction <<K_v(X,Y,.), K_v(Z,T,.)>> of the
// Levi-Civita or almost product form, written so that it stays polynomial in
// Omega and is evaluable at Omega = 0.
struct ConformalSpec {
  ChartDomain chart;
  MetricField base_metric;  // g0
  ScalarField omega;
  std::optional<ProductStructure> structure;

  MetricField metric() const;  // Omega^2 g0
};

ScaledValue conformal_kk_terms(const ConformalSpec& spec, ConnectionTag tag, const VectorField& x,
                               const VectorField& y, const VectorField& z, const VectorField& t,
                               std::span<const double> p);

}  // namespace koszul
