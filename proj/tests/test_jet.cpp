#include <cmath>
#include <random>

#include "doctest.h"
#include "koszul/error.hpp"
#include "koszul/expr.hpp"
#include "oracle.hpp"

using koszul::Expr;
using koszul::eval_jet2;

namespace {

Expr x(int i) { return Expr::coord(i); }

void check_against_fd(const Expr& e, const koszul::Point& p) {
  const int n = static_cast<int>(p.size());
  const auto j = eval_jet2(e, p);
  auto f = [&](const koszul::Point& q) { return koszul::eval_value(e, q); };
  CHECK(j.value() == doctest::Approx(f(p)).epsilon(1e-14));
  for (int a = 0; a < n; ++a) {
    const double g = oracle::directional(f, p, oracle::unit(n, a));
    CHECK(j.gradient(a) == doctest::Approx(g).epsilon(1e-8).scale(1.0));
    for (int b = 0; b < n; ++b) {
      auto fa = [&](const koszul::Point& q) { return oracle::directional(f, q, oracle::unit(n, a)); };
      const double h = oracle::directional(fa, p, oracle::unit(n, b), 1e-2);
      CHECK(j.hessian(a, b) == doctest::Approx(h).epsilon(1e-6).scale(1.0));
    }
  }
}

}  // namespace

TEST_CASE("polynomial jets") {
  auto j = eval_jet2(x(0) * x(0), std::vector<double>{3.0});
  CHECK(j.value() == 9.0);
  CHECK(j.gradient(0) == 6.0);
  CHECK(j.hessian(0, 0) == 2.0);

  j = eval_jet2(x(0) * x(1), std::vector<double>{2.0, 5.0});
  CHECK(j.value() == 10.0);
  CHECK(j.gradient(0) == 5.0);
  CHECK(j.gradient(1) == 2.0);
  CHECK(j.hessian(0, 0) == 0.0);
  CHECK(j.hessian(0, 1) == 1.0);
  CHECK(j.hessian(1, 1) == 0.0);

  j = eval_jet2(sin(x(0)), std::vector<double>{0.0});
  CHECK(j.value() == 0.0);
  CHECK(j.gradient(0) == 1.0);
  CHECK(j.hessian(0, 0) == 0.0);
}

TEST_CASE("directional derivative") {
  std::vector<double> v{1.0}, p{3.0};
  CHECK(koszul::directional_derivative(x(0) * x(0), v, p) == 6.0);
  std::vector<double> v2{0.0, 1.0}, p2{2.0, 5.0};
  CHECK(koszul::directional_derivative(x(0) * x(1), v2, p2) == 2.0);
  std::vector<double> v3{2.0}, p3{0.0};
  CHECK(koszul::directional_derivative(exp(x(0)), v3, p3) == 2.0);
}

TEST_CASE("composite jets match finite differences") {
  const koszul::Point p{0.7, -0.4, 1.3};
  check_against_fd(sin(x(0) * x(1)) + exp(x(2) - x(0)), p);
  check_against_fd(x(0) / (1.0 + x(1) * x(1)), p);
  check_against_fd(log(2.0 + x(0)) * sqrt(x(2)), p);
  check_against_fd(pow(x(0) - x(2), 3) * cos(x(1)), p);
  check_against_fd(pow(1.0 + x(1) * x(1), -2), p);
}

TEST_CASE("random polynomial jets match finite differences") {
  std::mt19937_64 rng(7);
  const auto chart = koszul::ChartDomain::box(3);
  for (int k = 0; k < 5; ++k) {
    const auto f = oracle::random_field(chart, rng);
    check_against_fd(f[0] * f[1] + f[2], {0.2, -0.5, 0.9});
  }
}

TEST_CASE("domain and dimension errors") {
  const std::vector<double> zero{0.0};
  CHECK_THROWS_AS(eval_jet2(log(x(0)), zero), koszul::DomainError);
  CHECK_THROWS_AS(eval_jet2(sqrt(x(0)), zero), koszul::DomainError);
  CHECK_THROWS_AS(eval_jet2(1.0 / x(0), zero), koszul::DomainError);
  CHECK_THROWS_AS(eval_jet2(x(1), zero), koszul::DimensionMismatch);
  CHECK_NOTHROW(eval_jet2(sqrt(1.0 + x(0)), zero));
}

TEST_CASE("value evaluator agrees with jets and shares their domain rules") {
  const std::vector<double> zero{0.0};
  CHECK_THROWS_AS(koszul::eval_value(log(x(0)), zero), koszul::DomainError);
  CHECK_THROWS_AS(koszul::eval_value(sqrt(x(0)), zero), koszul::DomainError);
  CHECK_THROWS_AS(koszul::eval_value(1.0 / x(0), zero), koszul::DomainError);
  CHECK_THROWS_AS(koszul::eval_value(pow(x(0), -1), zero), koszul::DomainError);
  CHECK_THROWS_AS(koszul::eval_value(x(1), zero), koszul::DimensionMismatch);
  CHECK_THROWS_AS(koszul::eval_value(x(0), std::vector<double>{}), koszul::DimensionMismatch);
  const Expr e = pow(x(0), 3) * sin(x(1)) - exp(x(0) / (2.0 + x(1))) + sqrt(1.5 + cos(x(0))) * log(3.0 + x(1));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const koszul::Point p{u(rng), u(rng)};
    CHECK(koszul::eval_value(e, p) == doctest::Approx(eval_jet2(e, p).value()).epsilon(1e-15));
  }
  CHECK(koszul::eval_value(pow(x(0), 2), zero) == 0.0);
}

TEST_CASE("parser round trip") {
  const Expr e = Expr::parse("(add (mul 2 (coord 0)) (pow (sin (coord 1)) 2) (const 0.5))");
  const std::vector<double> p{1.5, 0.25};
  CHECK(koszul::eval_value(e, p) == doctest::Approx(3.0 + std::pow(std::sin(0.25), 2) + 0.5));
  const Expr back = Expr::parse(e.to_string());
  CHECK(koszul::eval_value(back, p) == doctest::Approx(koszul::eval_value(e, p)).epsilon(1e-15));
  CHECK(koszul::eval_value(Expr::parse("(sub (coord 0))"), p) == -1.5);
  CHECK_THROWS_AS(Expr::parse("(add (coord 0)"), koszul::ParseError);
  CHECK_THROWS_AS(Expr::parse("(frob 1)"), koszul::ParseError);
  CHECK_THROWS_AS(Expr::parse("(coord -1)"), koszul::ParseError);
}

TEST_CASE("shifted expressions") {
  const Expr e = x(0) * x(1);
  const Expr s = e.shifted(2);
  CHECK(s.max_coord() == 3);
  const std::vector<double> p{9, 9, 2, 5};
  CHECK(koszul::eval_value(s, p) == 10.0);
}
