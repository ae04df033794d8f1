#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "koszul/error.hpp"
#include "koszul/verifier.hpp"
#include "oracle.hpp"

using namespace koszul;

namespace {

const Catalog& catalog() {
  static const Catalog c = Catalog::shipped();
  return c;
}

Sampling small(int points = 8, int draws = 2) { return {42, points, draws}; }

}  // namespace

TEST_CASE("every required clause is registered") {
  const auto ids = registered_clause_ids();
  const std::set<std::string> have(ids.begin(), ids.end());
  for (const auto& id : required_clause_ids()) CHECK_MESSAGE(have.count(id), id);
  CHECK(std::is_sorted(ids.begin(), ids.end()));
}

TEST_CASE("unknown names") {
  CHECK_THROWS_AS(suite_clauses("thm-9.9"), UnknownClause);
  CHECK_THROWS_AS(make_suite("nope"), UnknownClause);
  CHECK_THROWS_AS(run_suite(make_suite("thm-2.2", small(), {}, {"fix-zz"}), catalog()), UnknownFixture);
  TheoremSuite s{"custom", {"fix-a"}, {"thm-2.2(1)", "thm-0.0(1)"}, small(), {}};
  CHECK_THROWS_AS(run_suite(s, catalog()), UnknownClause);
}

TEST_CASE("empty clause list gives an empty report") {
  const TheoremSuite s{"empty", {"fix-a"}, {}, small(), {}};
  const CheckReport r = run_suite(s, catalog());
  CHECK(r.clauses.empty());
  CHECK(r.failures() == 0);
  CHECK(r.ok());
  CHECK(r.to_json(false)["clauses"].empty());
}

TEST_CASE("thm-2.2 on fix-a: eight clauses, 64 points") {
  const CheckReport r = run_suite(make_suite("thm-2.2", {42, 64, 8}, {}, {"fix-a"}), catalog());
  REQUIRE(r.clauses.size() == 8);
  for (const auto& c : r.clauses) {
    CHECK_MESSAGE(c.ok(), c.id);
    CHECK(c.samples == 64 * 8);
    CHECK(c.passes + c.excluded <= c.samples + c.excluded);
    CHECK(c.max_rel_residual < 1e-8);
    CHECK(c.max_rel_residual >= 0.0);
  }
}

TEST_CASE("reports are deterministic given the seed") {
  const auto s = make_suite("prop-3.5", small(6, 2), {}, {"fix-c"});
  const auto a = run_suite(s, catalog()).to_json(false).dump();
  const auto b = run_suite(s, catalog()).to_json(false).dump();
  CHECK(a == b);
  const auto other = make_suite("prop-3.5", {7, 6, 2}, {}, {"fix-c"});
  CHECK(run_suite(other, catalog()).to_json(false).dump() != a);
}

TEST_CASE("report json layout") {
  const auto r = run_suite(make_suite("eq-2.7", small(), {}, {"fix-a"}), catalog());
  const auto j = r.to_json();
  CHECK(j["suite"] == "eq-2.7");
  CHECK(j["seed"] == 42);
  REQUIRE(j["clauses"].size() == 1);
  for (const char* key : {"id", "samples", "passes", "max_rel_residual", "worst_point", "route_counts", "errors"}) {
    CHECK_MESSAGE(j["clauses"][0].contains(key), key);
  }
  CHECK(j["meta"].contains("wall_time_s"));
  CHECK_FALSE(r.to_json(false)["meta"].contains("wall_time_s"));
}

TEST_CASE("non-symmetry of the non-metric curvature is witnessed on fix-a") {
  const auto r = run_suite(make_suite("eq-3.15-counterexample", small(16, 2), {}, {"fix-a"}), catalog());
  REQUIRE(r.clauses.size() == 1);
  CHECK(r.clauses[0].kind == CheckKind::Existence);
  CHECK(r.clauses[0].passes > 0);
  CHECK(r.ok());
}

TEST_CASE("printed relations are witnessed as wrong, corrected ones hold") {
  const auto r = run_suite(make_suite("eq-3.8", small(8, 2), {}, {"fix-a", "fix-g"}), catalog());
  int printed = 0;
  for (const auto& c : r.clauses) {
    if (c.id == "eq-3.8/printed") {
      ++printed;
    } else {
      CHECK_MESSAGE(c.ok(), std::string(c.id + " on " + c.fixture));
    }
  }
  CHECK(printed == 2);
  CHECK(r.ok());
}

TEST_CASE("radical chain needs a radical field") {
  const auto r = run_suite(make_suite("cor-2.4", small(), {}, {"fix-a", "fix-r", "fix-rn"}), catalog());
  REQUIRE(r.clauses.size() == 2);
  CHECK(r.ok());
  const auto z = run_suite(make_suite("eq-2.8", small(), {}, {"fix-r", "fix-rn"}), catalog());
  REQUIRE(z.clauses.size() == 1);
  CHECK(z.clauses[0].fixture == "fix-r");
  CHECK(z.ok());
}

TEST_CASE("NotAnnihilator on a fixture declared non-stationary is an exclusion with a location") {
  const auto r = run_suite(make_suite("prop-2.13", small(4, 2), {}, {"fix-nx"}), catalog());
  REQUIRE(r.clauses.size() == 1);
  const auto& c = r.clauses[0];
  CHECK(c.ok());
  REQUIRE(c.error_count > 0);
  CHECK(c.errors[0].type == "NotAnnihilator");
  CHECK(c.errors[0].point == Point{0.0, 0.2});
  CHECK(c.excluded >= c.error_count);
}

TEST_CASE("product samples at a zero warp use the factor-wise route") {
  const auto r = run_suite(make_suite("thm-2.17", small(4, 2), {}, {"fix-b"}), catalog());
  REQUIRE_FALSE(r.clauses.empty());
  int factorwise = 0, direct = 0;
  for (const auto& c : r.clauses) {
    if (c.route_counts.count("factorwise")) factorwise += c.route_counts.at("factorwise");
    if (c.route_counts.count("direct+factorwise")) direct += c.route_counts.at("direct+factorwise");
  }
  CHECK(factorwise > 0);
  CHECK(direct > 0);
  for (const auto& c : r.clauses) {
    if (c.kind == CheckKind::Universal) CHECK_MESSAGE(c.ok(), c.id);
  }
}

TEST_CASE("random fields are degree-2 polynomials with coefficients in [-2, 2]") {
  const ChartDomain chart({{-1, 1}, {-1, 1}, {-1, 1}});
  std::mt19937_64 rng(5), again(5);
  for (int k = 0; k < 20; ++k) {
    const VectorField v = random_field(chart, rng);
    const VectorField w = random_field(chart, again);
    const Point o{0, 0, 0}, q{0.3, -0.7, 0.2};
    CHECK(oracle::field_at(v, q) == oracle::field_at(w, q));
    const auto j0 = v.jets(o);
    const auto j1 = v.jets(q);
    for (int a = 0; a < 3; ++a) {
      CHECK(std::abs(j0[a].value()) <= 2.0);
      for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(j0[a].gradient(i)) <= 2.0);
        for (int j = 0; j < 3; ++j) {
          CHECK(j1[a].hessian(i, j) == doctest::Approx(j0[a].hessian(i, j)));
          CHECK(std::abs(j0[a].hessian(i, j)) <= (i == j ? 4.0 : 2.0));
        }
      }
      // Degree two: the second-order Taylor polynomial at o is exact at q.
      double taylor = j0[a].value();
      for (int i = 0; i < 3; ++i) {
        taylor += j0[a].gradient(i) * q[i];
        for (int j = 0; j < 3; ++j) taylor += 0.5 * j0[a].hessian(i, j) * q[i] * q[j];
      }
      CHECK(oracle::field_at(v, q)[a] == doctest::Approx(taylor).epsilon(1e-12));
    }
  }
}

TEST_CASE("conditioning rule") {
  SmallMat g(2, 2);
  g << 1, 0, 0, 0.5;
  CHECK(well_conditioned(g));
  g(1, 1) = 0.0;
  CHECK(well_conditioned(g));
  g(1, 1) = 1e-8;
  CHECK_FALSE(well_conditioned(g));
  g(1, 1) = -1e-7;
  CHECK_FALSE(well_conditioned(g));
}

TEST_CASE("continuity probe on plain functions") {
  const auto constant = continuity_probe([](double) { return 3.0; });
  CHECK(constant.continuous);
  for (const auto& l : constant.levels) CHECK(l.max_divided_difference == 0.0);
  CHECK(constant.levels.size() == 5);
  CHECK(constant.levels.back().steps == 256);

  const auto smooth = continuity_probe([](double s) { return std::sin(5 * s); });
  CHECK(smooth.continuous);
  CHECK(smooth.divergence_ratio < 2.0);

  const auto jump = continuity_probe([](double s) { return s < 0.4 ? 0.0 : 1.0; });
  CHECK_FALSE(jump.continuous);
  CHECK(jump.divergence_ratio == doctest::Approx(16.0));

  const auto kink = continuity_probe([](double s) { return std::abs(s - 0.37); });
  CHECK(kink.continuous);

  // Roundoff below the term scale is not a jump.
  const auto noise = continuity_probe(std::function<ScaledValue(double)>([](double s) {
    return ScaledValue{s * 1e-14 + (std::fmod(s * 977, 1.0) < 0.5 ? 1e-13 : 0.0), 1.0};
  }));
  CHECK(noise.continuous);
}

TEST_CASE("factor-wise quantities are continuous through the zero warp") {
  const Fixture& b = catalog().get("fix-b");
  const Point a{-1.0, 0.3}, z{1.0, 0.3};
  const auto r = continuity_probe("thm-5.5(3)[BjjB]", b, a, z);
  CHECK(r.errors.empty());
  CHECK(r.continuous);

  const Fixture& e = catalog().get("fix-e");
  const auto [ea, ez] = singular_path(e);
  CHECK(ea[0] < 0.0);
  CHECK(ez[0] > 0.0);
  const auto kk = continuity_probe("conformal-kk:ap", e, ea, ez);
  CHECK(kk.errors.empty());
  CHECK(kk.continuous);
}

TEST_CASE("named probe quantities are validated") {
  const Fixture& b = catalog().get("fix-b");
  CHECK_THROWS_AS(continuity_probe("thm-0.0(1)[BBBB]", b, {-1, 0.3}, {1, 0.3}), UnknownClause);
  CHECK_THROWS_AS(continuity_probe("conformal-kk:lc", b, {-1, 0.3}, {1, 0.3}), UnknownClause);
}

TEST_CASE("suites group clauses") {
  const auto t = suite_clauses("thm-4.16");
  CHECK(std::count(t.begin(), t.end(), "eq-4.18") == 1);
  CHECK(std::count(t.begin(), t.end(), "thm-4.16(continuity)") == 1);
  const auto c = suite_clauses("continuity");
  CHECK(c.size() == 6);
  const auto all = suite_clauses("all");
  CHECK(all.size() == registered_clause_ids().size());
  const auto ids = suite_ids();
  CHECK(std::count(ids.begin(), ids.end(), "thm-2.2") == 1);
}
