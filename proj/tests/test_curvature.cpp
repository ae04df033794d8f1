#include <cmath>
#include <random>

#include "doctest.h"
#include "koszul/curvature.hpp"
#include "oracle.hpp"

using namespace koszul;

namespace {

Expr x(int i) { return Expr::coord(i); }

const ChartDomain kPlane = ChartDomain::box(2, -2, 2);
const ChartDomain kSphere({{0.3, 2.8}, {-3.0, 3.0}});
const ChartDomain kChart3 = ChartDomain::box(3, -1, 1);

MetricField warped(const Expr& f) { return MetricField::diagonal(kPlane, {Expr(1.0), f * f}); }
MetricField sphere() { return MetricField::diagonal(kSphere, {Expr(1.0), pow(sin(x(0)), 2)}); }

MetricField curved3() {
  std::vector<std::vector<Expr>> rows(3, std::vector<Expr>(3));
  rows[0][0] = -(2.0 + x(1) * x(1));
  rows[0][1] = 0.3 * x(2);
  rows[0][2] = 0.1 * x(0) * x(1);
  rows[1][1] = 1.5 + sin(x(0));
  rows[1][2] = Expr(0.2);
  rows[2][2] = exp(0.5 * x(1)) + x(0) * x(0);
  return MetricField(kChart3, rows);
}

VectorField e(const ChartDomain& c, int i) { return VectorField::coordinate(c, i); }

// R(X,Y,Z,T) = g(nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z, T) by
// nested finite differences of the Christoffel route.
double riemann_oracle(const MetricField& g, const VectorField& a, const VectorField& b, const VectorField& c,
                      const VectorField& d, const Point& p) {
  const int n = g.dim();
  auto nabla_of = [&](const VectorField& u, const VectorField& w, const VectorField& z) {
    // nabla_U (nabla_W Z) at p; inner field differentiated numerically.
    const auto gamma = oracle::christoffel(g, p);
    const oracle::Vec uv = oracle::field_at(u, p);
    const oracle::Vec nw = oracle::levi_civita(g, w, z, p);
    oracle::Vec out(n);
    for (int k = 0; k < n; ++k) {
      auto comp = [&](const Point& q) { return oracle::levi_civita(g, w, z, q)[k]; };
      out[k] = oracle::directional(comp, p, uv, 1e-2) + uv.dot(gamma[k] * nw);
    }
    return out;
  };
  const oracle::Vec br = oracle::bracket(a, b, p);
  const auto gamma = oracle::christoffel(g, p);
  oracle::Vec nbr(n);
  const oracle::Vec cv = oracle::field_at(c, p);
  for (int k = 0; k < n; ++k) {
    auto comp = [&](const Point& q) { return koszul::eval_value(c[k], q); };
    nbr[k] = oracle::directional(comp, p, br) + br.dot(gamma[k] * cv);
  }
  const oracle::Vec r = nabla_of(a, b, c) - nabla_of(b, a, c) - nbr;
  return r.dot(oracle::metric_at(g, p) * oracle::field_at(d, p));
}

}  // namespace

TEST_CASE("warped plane curvature") {
  const auto gb = warped(x(0) * x(0));
  CHECK(riemann(ConnectionVariant::levi_civita(), gb, e(kPlane, 0), e(kPlane, 1), e(kPlane, 1), e(kPlane, 0),
                Point{1.0, 0.3}) == doctest::Approx(-2.0));
  const auto ga = warped(x(0));
  for (double t : {-1.5, 0.5, 2.0}) {
    CHECK(riemann(ConnectionVariant::levi_civita(), ga, e(kPlane, 0), e(kPlane, 1), e(kPlane, 1), e(kPlane, 0),
                  Point{t, 0.3}) == doctest::Approx(0.0).scale(1.0));
  }
  const auto flat = MetricField::identity(kPlane);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(riemann(ConnectionVariant::levi_civita(), flat, e(kPlane, i), e(kPlane, j), e(kPlane, j), e(kPlane, i),
                    Point{0.1, 0.2}) == 0.0);
}

TEST_CASE("unit sphere curvature") {
  const auto g = sphere();
  for (double th : {0.4, 1.0, 1.57, 2.5}) {
    const double r = riemann(ConnectionVariant::levi_civita(), g, e(kSphere, 0), e(kSphere, 1), e(kSphere, 1),
                             e(kSphere, 0), Point{th, 0.2});
    CHECK(r == doctest::Approx(std::sin(th) * std::sin(th)).epsilon(1e-7));
  }
}

TEST_CASE("curvature matches the Christoffel route") {
  std::mt19937_64 rng(21);
  const auto g = curved3();
  const Point p{0.15, -0.3, 0.4};
  for (int k = 0; k < 3; ++k) {
    const auto a = oracle::random_field(kChart3, rng);
    const auto b = oracle::random_field(kChart3, rng);
    const auto c = oracle::random_field(kChart3, rng);
    const auto d = oracle::random_field(kChart3, rng);
    const auto got = riemann_terms(Frame(g, ConnectionVariant::levi_civita(), p), a, b, c, d);
    CHECK(got.value == doctest::Approx(riemann_oracle(g, a, b, c, d, p)).epsilon(1e-5).scale(got.scale));
  }
}

TEST_CASE("semi-symmetric metric relation") {
  const auto ga = warped(x(0));
  const auto dt = e(kPlane, 0), dth = e(kPlane, 1);
  const Point p{2.0, 0.1};
  const double direct = riemann(ConnectionVariant::ss_metric(dt), ga, dt, dth, dth, dt, p);
  CHECK(riemann_relation_ssm(ga, dt, dt, dth, dth, dt, p) == doctest::Approx(direct).epsilon(1e-8).scale(1.0));
  CHECK(riemann_relation_ssm(ga, VectorField::zero(kPlane), dt, dth, dth, dt, p) ==
        doctest::Approx(riemann(ConnectionVariant::levi_civita(), ga, dt, dth, dth, dt, p)).scale(1.0));

  const auto gs = sphere();
  const auto dphi = e(kSphere, 1);
  const Point q{1.1, 0.4};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const auto xs = e(kSphere, i), ys = e(kSphere, 1 - i), zs = e(kSphere, j), ts = e(kSphere, 1 - j);
      CHECK(riemann_relation_ssm(gs, dphi, xs, ys, zs, ts, q) ==
            doctest::Approx(riemann(ConnectionVariant::ss_metric(dphi), gs, xs, ys, zs, ts, q)).epsilon(1e-8).scale(1.0));
    }

  std::mt19937_64 rng(22);
  const auto g3 = curved3();
  const Point r{-0.2, 0.35, 0.1};
  for (int k = 0; k < 3; ++k) {
    const auto pf = oracle::random_field(kChart3, rng);
    const auto a = oracle::random_field(kChart3, rng);
    const auto b = oracle::random_field(kChart3, rng);
    const auto c = oracle::random_field(kChart3, rng);
    const auto d = oracle::random_field(kChart3, rng);
    const auto rel = riemann_relation_ssm_terms(g3, pf, a, b, c, d, r);
    const auto dir = riemann_terms(Frame(g3, ConnectionVariant::ss_metric(pf), r), a, b, c, d);
    CHECK(rel.value == doctest::Approx(dir.value).epsilon(1e-9).scale(std::max(rel.scale, dir.scale)));
  }
}

TEST_CASE("semi-symmetric non-metric relation and defect") {
  const auto ga = warped(x(0));
  const auto dt = e(kPlane, 0), dth = e(kPlane, 1);
  const Point p{2.0, 0.1};
  CHECK(riemann_relation_ssnm(ga, dt, dt, dth, dth, dt, p) ==
        doctest::Approx(riemann(ConnectionVariant::ss_non_metric(dt), ga, dt, dth, dth, dt, p)).epsilon(1e-8).scale(1.0));
  CHECK(riemann_relation_ssnm(ga, VectorField::zero(kPlane), dt, dth, dth, dt, p) ==
        doctest::Approx(riemann(ConnectionVariant::levi_civita(), ga, dt, dth, dth, dt, p)).scale(1.0));

  // Defect against the four correction terms, assembled by hand for f = t:
  // X(f) g(Z,P) g(Y,T) + X(f) g(Y,Z) g(P,T) - Y(f) g(Z,P) g(X,T) - Y(f) g(X,Z) g(P,T)
  // with (X,Y,Z,T) = (dt, dth, dth, dt), P = dt at t = 2: 0 + 1 * 4 * 1 - 0 - 0.
  const ScalarField f(kPlane, x(0));
  CHECK(nontensorial_defect(ga, dt, f, dt, dth, dth, dt, p) == doctest::Approx(4.0));
  // (X,Y,Z,T) = (dt, dth, dt, dth): X(f) g(Z,P) g(Y,T) = 1 * 1 * 4.
  CHECK(nontensorial_defect(ga, dt, f, dt, dth, dt, dth, p) == doctest::Approx(4.0));
  CHECK(nontensorial_defect(ga, dt, ScalarField(kPlane, Expr(1.0)), dt, dth, dt, dth, p) ==
        doctest::Approx(0.0).scale(1.0));
  CHECK(nontensorial_defect(ga, VectorField::zero(kPlane), f, dt, dth, dt, dth, p) ==
        doctest::Approx(0.0).scale(1.0));

  std::mt19937_64 rng(23);
  const auto g3 = curved3();
  const Point r{0.25, -0.1, -0.3};
  for (int k = 0; k < 3; ++k) {
    const auto pf = oracle::random_field(kChart3, rng);
    const auto a = oracle::random_field(kChart3, rng);
    const auto b = oracle::random_field(kChart3, rng);
    const auto c = oracle::random_field(kChart3, rng);
    const auto d = oracle::random_field(kChart3, rng);
    const auto rel = riemann_relation_ssnm_terms(g3, pf, a, b, c, d, r);
    const auto dir = riemann_terms(Frame(g3, ConnectionVariant::ss_non_metric(pf), r), a, b, c, d);
    CHECK(rel.value == doctest::Approx(dir.value).epsilon(1e-9).scale(std::max(rel.scale, dir.scale)));

    const ScalarField s(kChart3, 1.0 + x(0) * x(1) - 0.5 * x(2));
    const auto def = nontensorial_defect_terms(g3, pf, s, a, b, c, d, r);
    const oracle::Mat m = oracle::metric_at(g3, r);
    auto gg = [&](const VectorField& u, const VectorField& w) {
      return oracle::field_at(u, r).dot(m * oracle::field_at(w, r));
    };
    auto fn = [&](const Point& q) { return koszul::eval_value(s.expr, q); };
    const double xf = oracle::directional(fn, r, oracle::field_at(a, r));
    const double yf = oracle::directional(fn, r, oracle::field_at(b, r));
    const double want = xf * gg(c, pf) * gg(b, d) + xf * gg(b, c) * gg(pf, d) - yf * gg(c, pf) * gg(a, d) -
                        yf * gg(a, c) * gg(pf, d);
    CHECK(def.value == doctest::Approx(want).epsilon(1e-9).scale(def.scale));
  }
}

TEST_CASE("antisymmetries") {
  std::mt19937_64 rng(24);
  const auto g3 = curved3();
  const Point r{0.3, 0.2, -0.1};
  const auto pf = oracle::random_field(kChart3, rng);
  const auto a = oracle::random_field(kChart3, rng);
  const auto b = oracle::random_field(kChart3, rng);
  const auto c = oracle::random_field(kChart3, rng);
  const auto d = oracle::random_field(kChart3, rng);
  const Frame ss(g3, ConnectionVariant::ss_metric(pf), r);
  const auto abcd = riemann_terms(ss, a, b, c, d);
  CHECK(abcd.value == doctest::Approx(-riemann_terms(ss, b, a, c, d).value).epsilon(1e-9).scale(abcd.scale));
  CHECK(abcd.value == doctest::Approx(-riemann_terms(ss, a, b, d, c).value).epsilon(1e-9).scale(abcd.scale));
  const Frame sn(g3, ConnectionVariant::ss_non_metric(pf), r);
  const auto h = riemann_terms(sn, a, b, c, d);
  CHECK(h.value == doctest::Approx(-riemann_terms(sn, b, a, c, d).value).epsilon(1e-9).scale(h.scale));
  CHECK(std::abs(h.value + riemann_terms(sn, a, b, d, c).value) > 1e-3 * h.scale);
}
