#include "doctest.h"
#include "koszul/error.hpp"
#include "koszul/fields.hpp"
#include "oracle.hpp"

using namespace koszul;

namespace {

Expr t() { return Expr::coord(0); }

MetricField fix_a() { return MetricField::diagonal(ChartDomain::box(2, -2, 2), {Expr(1.0), t() * t()}); }

}  // namespace

TEST_CASE("metric evaluation") {
  const auto g = fix_a();
  const SmallMat m = metric_at(g, std::vector<double>{2.0, 0.1});
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 1) == 4.0);
  CHECK(m(0, 1) == 0.0);
  const SmallMat z = metric_at(g, std::vector<double>{0.0, 0.1});
  CHECK(z(1, 1) == 0.0);
  const auto id = MetricField::identity(ChartDomain::box(3));
  CHECK(metric_at(id, std::vector<double>{0.3, 0.2, 0.1}).isIdentity());
}

TEST_CASE("flat map") {
  const auto g = fix_a();
  const auto th = VectorField::coordinate(g.chart(), 1);
  const auto w = flat(g, th, std::vector<double>{2.0, 0.0});
  CHECK(w.components[0] == 0.0);
  CHECK(w.components[1] == 4.0);
  CHECK(flat(g, th, std::vector<double>{0.0, 0.0}).components.isZero());
  CHECK(flat(g, VectorField::zero(g.chart()), std::vector<double>{1.0, 0.0}).components.isZero());
}

TEST_CASE("lie bracket") {
  const auto chart = ChartDomain::box(2, -10, 10);
  const auto dt = VectorField::coordinate(chart, 0);
  const auto dth = VectorField::coordinate(chart, 1);
  const std::vector<double> p{5.0, 0.0};
  CHECK(lie_bracket(dt, dth, p).isZero());
  const auto br = lie_bracket(t() * dt, dt, p);
  CHECK(br[0] == -1.0);
  CHECK(br[1] == 0.0);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 4; ++k) {
    const auto a = oracle::random_field(chart, rng);
    const auto b = oracle::random_field(chart, rng);
    const std::vector<double> q{0.3, -0.8};
    CHECK(lie_bracket(a, a, q).isZero());
    const SmallVec got = lie_bracket(a, b, q);
    const auto want = oracle::bracket(a, b, q);
    for (int i = 0; i < 2; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("lie derivative of the metric") {
  const auto g = fix_a();
  const auto dt = VectorField::coordinate(g.chart(), 0);
  const auto dth = VectorField::coordinate(g.chart(), 1);
  const std::vector<double> p{2.0, 0.4};
  CHECK(lie_derivative_metric(dth, g, dt, dth, p) == 0.0);
  CHECK(lie_derivative_metric(dth, g, dth, dth, p) == 0.0);
  CHECK(lie_derivative_metric(dt, g, dth, dth, p) == 4.0);
  CHECK(lie_derivative_metric(VectorField::zero(g.chart()), g, dth, dth, p) == 0.0);
}

TEST_CASE("scalar hessian") {
  const auto line = ChartDomain::box(1, -3, 3);
  const auto flat1 = MetricField::identity(line);
  const auto d = VectorField::coordinate(line, 0);
  const std::vector<double> p{0.7};
  CHECK(hessian_scalar(flat1, ScalarField(line, t() * t()), d, d, p) == doctest::Approx(2.0));
  CHECK(hessian_scalar(flat1, ScalarField(line, t()), d, d, p) == 0.0);

  const auto plane = ChartDomain::box(2);
  const auto flat2 = MetricField::identity(plane);
  const ScalarField f(plane, Expr::coord(0) * Expr::coord(1));
  CHECK(hessian_scalar(flat2, f, VectorField::coordinate(plane, 0), VectorField::coordinate(plane, 1),
                       std::vector<double>{0.2, 0.5}) == doctest::Approx(1.0));

  // Unit sphere: H^f(d_phi, d_phi) for f = cos(theta) is -sin^2(theta) cos(theta).
  const auto sph = ChartDomain({{0.3, 2.8}, {-3, 3}});
  const auto gs = MetricField::diagonal(sph, {Expr(1.0), pow(sin(Expr::coord(0)), 2)});
  const auto dphi = VectorField::coordinate(sph, 1);
  const double th = 1.1;
  CHECK(hessian_scalar(gs, ScalarField(sph, cos(Expr::coord(0))), dphi, dphi, std::vector<double>{th, 0.0}) ==
        doctest::Approx(-std::sin(th) * std::sin(th) * std::cos(th)));

  CHECK_THROWS_AS(hessian_scalar(fix_a(), ScalarField(fix_a().chart(), t()), VectorField::coordinate(fix_a().chart(), 0),
                                 VectorField::coordinate(fix_a().chart(), 0), std::vector<double>{0.0, 0.0}),
                  SingularBaseMetric);
}

TEST_CASE("dimension checks") {
  CHECK_THROWS_AS(VectorField(ChartDomain::box(2), {Expr::coord(2), Expr(0.0)}), DimensionMismatch);
  CHECK_THROWS_AS(metric_at(fix_a(), std::vector<double>{1.0}), DimensionMismatch);
  CHECK_THROWS_AS(ChartDomain::box(9), DimensionMismatch);
}
