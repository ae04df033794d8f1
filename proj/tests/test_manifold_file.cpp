#include <cmath>

#include "doctest.h"
#include "koszul/error.hpp"
#include "koszul/manifold_file.hpp"
#include "oracle.hpp"

using namespace koszul;

TEST_CASE("shipped catalog loads") {
  const Catalog c = Catalog::shipped();
  for (const char* id : {"fix-a", "fix-b", "fix-c", "fix-d", "fix-e", "fix-f", "fix-g", "fix-m", "fix-nx", "fix-r",
                         "fix-rn"}) {
    CHECK(c.contains(id));
  }
  CHECK_THROWS_AS(c.get("fix-zz"), UnknownFixture);
}

TEST_CASE("fix-a is dt^2 + t^2 dth^2 with P = d/dt and J = (1,-1)") {
  const Catalog c = Catalog::shipped();
  const Fixture& f = c.get("fix-a");
  CHECK(f.kind == FixtureKind::Product);
  REQUIRE(f.product);
  CHECK(f.product->fiber_count() == 1);
  const Point p{2.0, 0.7};
  const auto g = oracle::metric_at(f.metric, p);
  CHECK(g(0, 0) == doctest::Approx(1.0));
  CHECK(g(1, 1) == doctest::Approx(4.0));
  CHECK(g(0, 1) == doctest::Approx(0.0));
  REQUIRE(f.p);
  CHECK(oracle::field_at(*f.p, p)[0] == doctest::Approx(1.0));
  REQUIRE(f.structure);
  CHECK(f.structure->value(p)(1, 1) == doctest::Approx(-1.0));
  CHECK(f.coords == std::vector<std::string>{"t", "th"});
  const Slot s = f.slot("th");
  CHECK(s.factor == 1);
  CHECK(f.scalars.count("f1"));
  CHECK(f.fields.count("rot"));
}

TEST_CASE("fix-f, fix-m and fix-e assemble") {
  const Catalog c = Catalog::shipped();
  const Fixture& ff = c.get("fix-f");
  const auto g = oracle::metric_at(ff.metric, {1.5, 0.0, 0.0});
  CHECK(g(1, 1) == doctest::Approx(2.25));
  CHECK(g(2, 2) == doctest::Approx(std::pow(1.5, 4)));
  CHECK(ff.slot("th2").factor == 2);

  const Fixture& fm = c.get("fix-m");
  CHECK(fm.chart.dim() == 7);
  CHECK(fm.product->fiber_count() == 4);
  CHECK(fm.factor_of(6) == 4);

  const Fixture& fe = c.get("fix-e");
  CHECK(fe.kind == FixtureKind::Conformal);
  REQUIRE(fe.conformal);
  const auto ge = oracle::metric_at(fe.metric, {0.5, 0.2});
  CHECK(ge(0, 0) == doctest::Approx(0.25));
  CHECK(ge(1, 1) == doctest::Approx(0.25));
}

TEST_CASE("structures on the catalog are isometric involutions") {
  const Catalog c = Catalog::shipped();
  std::mt19937_64 rng(3);
  for (const auto& id : c.ids()) {
    const Fixture& f = c.get(id);
    if (!f.structure) continue;
    for (int k = 0; k < 16; ++k) {
      Point p;
      for (const auto& iv : f.chart.bounds()) p.push_back(std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng));
      CHECK_MESSAGE(f.structure->defect(f.metric, p) < 1e-10, id);
    }
  }
}

TEST_CASE("malformed files raise ParseError") {
  CHECK_THROWS_AS(parse_fixture("{not json"), ParseError);
  CHECK_THROWS_AS(parse_fixture(R"J({"id":"x","coords":["a"],"bounds":[[0,1]]})J"), ParseError);
  CHECK_THROWS_AS(parse_fixture(R"J({"id":"x","coords":["a"],"bounds":[[0,1]],"metric":[["(frob 1)"]]})J"), ParseError);
  CHECK_THROWS_AS(parse_fixture(R"J({"id":"x","coords":["a"],"bounds":[[0,1]],"metric":[["(coord 3)"]]})J"),
                  ParseError);
  CHECK_THROWS_AS(parse_fixture(R"J({"id":"x","coords":["a"],"bounds":[[1,0]],"metric":[["1"]]})J"), ParseError);
  CHECK_THROWS_AS(parse_fixture(R"J({"id":"x","kind":"product","base":"nowhere.json","fibers":[]})J"), ParseError);
  CHECK_THROWS_AS(parse_fixture(R"J({"id":"x","kind":"torus"})J"), ParseError);
}

TEST_CASE("inline manifold with fields, scalars and numeric entries") {
  const Fixture f = parse_fixture(R"J({"id":"inline","dim":2,"bounds":[[-1,1],[-1,1]],
    "metric":[[1, 0],[0, "(add 1 (pow (coord 0) 2))"]],
    "fields":{"X":["(coord 1)", 2]}, "scalars":{"h":"(mul (coord 0) (coord 1))"}, "p":{"field":"X"}})J");
  CHECK(f.coords == std::vector<std::string>{"x0", "x1"});
  CHECK(oracle::metric_at(f.metric, {0.5, 0})(1, 1) == doctest::Approx(1.25));
  CHECK(oracle::field_at(f.field("X"), {0, 0.3})[0] == doctest::Approx(0.3));
  CHECK(f.scalars.at("h").jet(std::vector<double>{2, 3}).value() == doctest::Approx(6));
  CHECK(f.p);
  CHECK_THROWS_AS(f.field("Y"), ParseError);
}
