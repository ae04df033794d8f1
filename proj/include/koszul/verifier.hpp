#pragma once

// Theorem suites: seeded sampling of points and fields on catalog fixtures,
// evaluation of both sides of each identity, and a JSON report.
//
// Three clause families share one registry:
//   identity    both sides evaluated on the fixture metric (Koszul-form
//               properties, connection relations, curvature formulas)
//   product     direct evaluation on the assembled product metric against the
//               factor-wise clause of the products registry
//   continuity  a factor-wise quantity sampled along a path through the
//               degenerate set at refined step sizes
//
// Universal clauses must hold at every sample. Existence clauses (printed
// forms that disagree with the direct computation, the non-symmetry of the
// semi-symmetric non-metric curvature) pass when at least one sample
// witnesses the disagreement.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "koszul/curvature.hpp"
#include "koszul/manifold_file.hpp"

namespace koszul {

struct Tolerances {
  double rel = 1e-7;
  double abs = 1e-10;
  double curvature_rel = 1e-6;
};

struct Sampling {
  std::uint64_t seed = 42;
  int points = 64;
  int draws = 8;
};

// Metric eigenvalues in (exact_zero, near_singular] relative to the largest
// make pointwise pseudo-solves unreliable; those at or below exact_zero are
// radical directions.
constexpr double kNearSingular = 1e-6;
constexpr double kExactZero = 1e-14;
// Warps below this magnitude send product samples to the factor-wise route.
constexpr double kSmallWarp = 1e-3;
// Existence clauses need a disagreement above this fraction of the scale.
constexpr double kWitness = 1e-3;
// Roundoff floor of continuity probes, relative to the term scale.
constexpr double kContinuityNoise = 1e-9;

enum class CheckKind { Universal, Existence };
enum class ClauseFamily { Identity, Product, Continuity };

struct TheoremSuite {
  std::string id;
  std::vector<std::string> fixtures;  // empty: every fixture the clauses apply to
  std::vector<std::string> clauses;   // clause ids
  Sampling sampling;
  Tolerances tol;
};

struct ErrorEvent {
  std::string type;
  std::string message;
  Point point;
};

struct ClauseResult {
  std::string id;       // registered clause id, with pattern for product clauses
  std::string fixture;
  CheckKind kind = CheckKind::Universal;
  int samples = 0;
  int passes = 0;       // universal: samples within tolerance; existence: witnesses
  int excluded = 0;     // samples a precondition excluded
  double max_rel_residual = 0.0;
  double tolerance = 0.0;
  Point worst_point;
  std::map<std::string, int> route_counts;
  std::vector<ErrorEvent> errors;  // first few only
  int error_count = 0;

  bool ok() const;
};

struct CheckReport {
  std::string suite;
  std::uint64_t seed = 0;
  Sampling sampling;
  Tolerances tol;
  std::vector<std::string> fixtures;
  std::vector<ClauseResult> clauses;
  double wall_time_s = 0.0;

  bool ok() const;
  // Universal results that failed, and every result of an existence clause no
  // fixture witnessed.
  std::vector<const ClauseResult*> failing() const;
  int failures() const;
  nlohmann::json to_json(bool with_time = true) const;
};

// Suite and clause ids.
std::vector<std::string> suite_ids();  // sorted, without "all"
std::vector<std::string> suite_clauses(const std::string& suite);  // UnknownClause
std::vector<std::string> registered_clause_ids();                  // sorted, unique
// Every numbered clause the verifier must cover.
std::vector<std::string> required_clause_ids();

TheoremSuite make_suite(const std::string& id, Sampling sampling = {}, Tolerances tol = {},
                        std::vector<std::string> fixtures = {});

// UnknownFixture / UnknownClause.
CheckReport run_suite(const TheoremSuite& suite, const Catalog& catalog);

// Degree <= 2 polynomial field with coefficients in [-2, 2].
VectorField random_field(const ChartDomain& chart, std::mt19937_64& rng);
ScalarField random_scalar(const ChartDomain& chart, std::mt19937_64& rng);
Point random_point(const ChartDomain& chart, std::mt19937_64& rng);

// Whether a pointwise pseudo-solve is trusted at p: no eigenvalue of g(p) in
// (kExactZero, kNearSingular] relative to the largest.
bool well_conditioned(const SmallMat& g);
// For products: additionally every warp is at least kSmallWarp, and no
// eigenvalue at all below kNearSingular.
bool direct_route_ok(const WarpedProductSpec& spec, std::span<const double> p);

struct ContinuityLevel {
  int steps = 0;
  double max_divided_difference = 0.0;
};

struct ContinuityReport {
  std::string quantity;
  std::string fixture;
  std::vector<ContinuityLevel> levels;
  double divergence_ratio = 0.0;  // finest over coarsest max divided difference
  bool continuous = true;
  std::vector<ErrorEvent> errors;
};

// Samples q on s in [0, 1] with n_steps, 2 n_steps, ... (refinements + 1
// levels). Discontinuous when the max divided difference grows by 10x or more
// from the coarsest to the finest level; a jump grows it by 2 per level.
ContinuityReport continuity_probe(const std::function<double(double)>& q, int n_steps = 16, int refinements = 4);
// With term scales: a difference within kContinuityNoise of the larger scale
// of its two samples counts as zero.
ContinuityReport continuity_probe(const std::function<ScaledValue(double)>& q, int n_steps = 16,
                                  int refinements = 4);

// Named quantities: a product clause key (e.g. "thm-5.5(3)[BaaB]"), or
// "conformal-kk:lc" / "conformal-kk:ap", or "direct-kk:lc" (pointwise
// pseudo-solve on the assembled metric). Fields are drawn from seed and held
// fixed along the straight path a -> b.
ContinuityReport continuity_probe(const std::string& quantity, const Fixture& fixture, const Point& a,
                                  const Point& b, int n_steps = 16, std::uint64_t seed = 42);

// The default path of a fixture: through its first anchor along the first
// coordinate.
std::pair<Point, Point> singular_path(const Fixture& fixture);

}  // namespace koszul
