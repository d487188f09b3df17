#include "doctest.h"

#include "decomp/calculus.hpp"
#include "decomp/expr.hpp"
#include "decomp/interval.hpp"
#include "decomp/region.hpp"

#include <cmath>

using namespace decomp;

namespace {
Expr x = var("x"), y = var("y"), d = var("d"), h = var("h");
Region xy_region() {
  return Region({{"x"}, {"y"}}, {Constraint(x, Relation::Ge, constant(1)), Constraint(y, Relation::Ge, constant(0))});
}
}  // namespace

TEST_CASE("normalize flattens, folds constants and drops unit exponents") {
  Expr nested = raw::sum({raw::sum({x, y}), constant(0)});
  CHECK(normalize(nested) == raw::sum({x, y}));
  CHECK(normalize(nested).key() == "(+ x y)");

  Expr folded = normalize(raw::product({constant(2), constant(3), x}));
  CHECK(folded.key() == "(* 6 x)");

  Expr unit = normalize(raw::power(raw::exp(y), 1));
  CHECK(unit == exp(y));
}

TEST_CASE("normalize merges like terms and bases") {
  CHECK((x + x).key() == "(* 2 x)");
  CHECK((x * x).key() == "(^ x 2)");
  CHECK((x - x).key() == "0");
  CHECK((exp(x) * exp(y)) == exp(x + y));
  CHECK(log(exp(y)) == y);
  CHECK(exp(log(x)) == x);
  CHECK(power(constant(4), Rational(1, 2)).key() == "2");
  CHECK((x / x).key() == "1");
}

TEST_CASE("canonical serialization round-trips") {
  Expr e = x * log(x) + exp(y) - Rational(1, 2) * power(x + y, Rational(-3, 2));
  CHECK(parse_sexpr(e.key()) == e);
  CHECK(normalize(parse_sexpr(e.key())).key() == e.key());
}

TEST_CASE("evaluate") {
  CHECK(evaluate(x * y, {{"x", 3}, {"y", 4}}) == 12.0);
  CHECK(evaluate(x * log(x) + exp(y), {{"x", 1}, {"y", 0}}) == 1.0);
  CHECK_THROWS_AS(evaluate(log(x), {{"x", 0}}), DomainError);
  CHECK_THROWS_AS(evaluate(power(x, Rational(1, 2)), {{"x", -1}}), DomainError);
  CHECK(std::isinf(evaluate(exp(x), {{"x", 1000}})));
  auto exact = evaluate_exact(x / (x + constant(1)), {{"x", 3}});
  REQUIRE(exact);
  CHECK(*exact == Rational(3, 4));
}

TEST_CASE("differentiate follows the standard rules") {
  Assignment at{{"x", 1.7}, {"y", 0.6}, {"d", 2.5}};
  Expr e1 = y * exp(Rational(-1, 2) * y);
  Expr expected1 = exp(Rational(-1, 2) * y) * (constant(1) - Rational(1, 2) * y);
  CHECK(evaluate(differentiate(e1, "y"), at) == doctest::Approx(evaluate(expected1, at)).epsilon(1e-12));
  CHECK(differentiate(x * log(x), "x") == log(x) + constant(1));
  CHECK(differentiate(power(d, -5), "d") == Rational(-5) * power(d, -6));
}

TEST_CASE("structural monotonicity") {
  CHECK(structural_monotonicity(x * y, "y", xy_region()) == Monotonicity::Increasing);
  Region dr({{"d"}}, {Constraint(d, Relation::Ge, constant(1))});
  CHECK(structural_monotonicity(power(d, -5), "d", dr) == Monotonicity::Decreasing);
  Monotonicity m = structural_monotonicity(x * log(x) - exp(y), "x", xy_region());
  CHECK((m == Monotonicity::Increasing || m == Monotonicity::Unknown));
  CHECK(structural_monotonicity(exp(y), "x", xy_region()) == Monotonicity::Constant);
}

TEST_CASE("region thresholds and bounds") {
  Region r = xy_region().with(Constraint(y, Relation::Le, Rational(2) * log(x)));
  auto b = direct_bounds(r);
  CHECK(b["x"].lo == 1.0);
  CHECK(b["y"].lo == 0.0);
  auto ts = thresholds(r);
  bool y_upper = false, x_lower = false;
  for (const auto& t : ts) {
    if (t.var == "y" && t.upper && t.bound == Rational(2) * log(x)) y_upper = true;
    if (t.var == "x" && !t.upper && t.bound == exp(Rational(1, 2) * y)) x_lower = true;
  }
  CHECK(y_upper);
  CHECK(x_lower);
  CHECK_THROWS_AS(r.add(Constraint(var("z"), Relation::Ge, constant(0))), ExprError);
  Region dup = r.with(Constraint(x, Relation::Ge, constant(1)));
  CHECK(dup.constraints().size() == r.constraints().size());
}

TEST_CASE("interval arithmetic is exact where possible") {
  Interval one = Interval::point(1.0);
  CHECK((one - one).lo == 0.0);
  CHECK((one - one).hi == 0.0);
  Interval third = Interval::point(1.0) / Interval::point(3.0);
  CHECK(third.lo < third.hi);
  CHECK(third.contains(1.0 / 3.0));
  Interval z = Interval(0.0, 0.0) * Interval(1.0, Interval::inf);
  CHECK(z.lo == 0.0);
  CHECK(z.hi == 0.0);
  CHECK(ilog(Interval(0.0, 1.0)).partial);
  CHECK(!ilog(Interval(1.0, 2.0)).partial);
  CHECK(ilog(Interval(1.0, 1.0)).lo == 0.0);
  Program p(x * log(x) + exp(y), {"x", "y"});
  Interval v = p.eval(std::vector<Interval>{Interval(1.0, 2.0), Interval(0.0, 1.0)});
  CHECK(v.lo <= 1.0);
  CHECK(v.hi >= 2.0 * std::log(2.0) + std::exp(1.0));
  CHECK(p.eval(std::vector<double>{1.0, 0.0}) == 1.0);
}
