#include "doctest.h"
#include "koszul/degenerate_linalg.hpp"
#include "koszul/error.hpp"

using namespace koszul;

namespace {

GramSnapshot diag2(double a, double b, double tol = kDefaultRankTol) {
  SmallMat m = SmallMat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return {m, tol};
}

SmallVec vec(std::initializer_list<double> xs) {
  SmallVec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("radical basis") {
  auto r = radical_basis(diag2(1, 0));
  REQUIRE(r.size() == 1);
  CHECK(std::abs(r[0][1]) == doctest::Approx(1.0));
  CHECK(radical_basis(diag2(1, 1)).empty());
  r = radical_basis(diag2(1, 1e-15));
  REQUIRE(r.size() == 1);
  CHECK(std::abs(r[0][1]) == doctest::Approx(1.0));
  CHECK(radical_basis(diag2(1, -1e-3)).empty());
}

TEST_CASE("annihilators") {
  CHECK(is_annihilator(vec({3, 0}), diag2(1, 0)));
  CHECK_FALSE(is_annihilator(vec({0, 1}), diag2(1, 0)));
  CHECK(is_annihilator(vec({0, 4}), diag2(1, 4)));
}

TEST_CASE("co-inner product") {
  CHECK(co_inner(vec({0, 4}), vec({0, 4}), diag2(1, 4)) == doctest::Approx(4.0));
  CHECK(co_inner(vec({0, 0}), vec({1, 2}), diag2(1, 4)) == 0.0);
  CHECK(co_inner(vec({5, 0}), vec({5, 0}), diag2(1, 0)) == doctest::Approx(25.0));
  CHECK_THROWS_AS(co_inner(vec({5, 1}), vec({5, 0}), diag2(1, 0)), NotAnnihilator);
  CHECK_THROWS_AS(co_inner(vec({5, 0}), vec({0, 1e-3}), diag2(1, 0)), NotAnnihilator);

  // Lorentzian, rotated, with a radical direction: compare against the
  // inverse on the range computed by hand.
  SmallMat q(3, 3);
  q << 1, 1, 0, -1, 1, 0, 0, 0, std::sqrt(2.0);
  q /= std::sqrt(2.0);
  SmallMat d = SmallMat::Zero(3, 3);
  d(0, 0) = -2;
  d(1, 1) = 3;
  const SmallMat g = q * d * q.transpose();
  const SmallVec a = g * vec({0.3, -1.2, 0.7});
  const SmallVec b = g * vec({1.1, 0.4, -0.5});
  CHECK(co_inner(a, b, {g, kDefaultRankTol}) == doctest::Approx(vec({0.3, -1.2, 0.7}).dot(g * vec({1.1, 0.4, -0.5}))));
}

TEST_CASE("rank decisions are scale invariant") {
  for (double s : {1e-6, 1.0, 1e6}) {
    PseudoSolver ps(diag2(s, s * 1e-12));
    CHECK(ps.rank() == 1);
    PseudoSolver qs(diag2(s, s * 1e-6));
    CHECK(qs.rank() == 2);
  }
}

TEST_CASE("cometric") {
  const auto line = ChartDomain::box(1, -3, 3);
  const auto g = MetricField::identity(line);
  const Point p{1.0};
  CHECK(cometric(g, {p, vec({1})}, {p, vec({1})}) == 1.0);
  CHECK(cometric(g, {p, vec({1})}, {p, vec({2})}) == 2.0);
  CHECK(cometric(g, {p, vec({0})}, {p, vec({2})}) == 0.0);
  const auto deg = MetricField::diagonal(line, {Expr::coord(0)});
  CHECK_THROWS_AS(cometric(deg, {Point{0.0}, vec({1})}, {Point{0.0}, vec({1})}), SingularBaseMetric);
}
