#include "doctest.h"

#include "decomp/calculus.hpp"
#include "decomp/prover.hpp"

#include <cmath>

using namespace decomp;

namespace {
Expr x = var("x"), y = var("y");
Constraint ge(const Expr& a, const Expr& b) { return Constraint(a, Relation::Ge, b); }
Constraint le(const Expr& a, const Expr& b) { return Constraint(a, Relation::Le, b); }
Constraint gt(const Expr& a, const Expr& b) { return Constraint(a, Relation::Gt, b); }

Expr f_eq1 = x * y;
Expr g_eq1 = x * log(x) + exp(y);
Region low_y() { return Region({{"x"}, {"y"}}, {ge(x, constant(1)), ge(y, constant(0)), le(y, Rational(2) * log(x))}); }
Region high_y() { return Region({{"x"}, {"y"}}, {ge(x, constant(1)), ge(y, constant(0)), gt(y, Rational(2) * log(x))}); }
}  // namespace

TEST_CASE("standard grid") {
  auto g = GridSpec::standard();
  REQUIRE(g.values.size() == 15);
  CHECK(g.values.front() == 1);
  CHECK(g.values[13] == 8192);
  CHECK(g.max() == 10000);
}

TEST_CASE("piece where y is below the logarithmic threshold") {
  auto res = grid_search(f_eq1, g_eq1, low_y());
  REQUIRE(res.proved);
  CHECK(res.C <= 2);
  MESSAGE("C = " << to_string(res.C) << " via " << res.cert.strategy << " in " << res.boxes << " boxes");
}

TEST_CASE("piece where y is above the logarithmic threshold") {
  auto res = grid_search(f_eq1, g_eq1, high_y());
  REQUIRE(res.proved);
  CHECK(res.C == 1);
  MESSAGE("via " << res.cert.strategy << " in " << res.boxes << " boxes");
}

TEST_CASE("a false piece is refuted at every grid constant") {
  Region r({{"x"}}, {ge(x, constant(0))});
  auto res = grid_search(power(x, 2), x, r);
  CHECK(!res.proved);
  for (const auto& a : res.attempts) CHECK(a.status == AttemptStatus::Refuted);
  auto one = prove_piece(power(x, 2), x, r, 3);
  REQUIRE(one.status == AttemptStatus::Refuted);
  double w = one.witness.at("x");
  CHECK(w * w > 3 * w);
}

TEST_CASE("homogeneous piece on an ordering") {
  Region r({{"x"}, {"y"}}, {ge(x, constant(0)), ge(y, constant(0)), le(x, y)});
  Expr f = power(x * y, Rational(1, 2));
  Expr g = Rational(1, 2) * (x + y);
  auto res = grid_search(f, g, r);
  REQUIRE(res.proved);
  CHECK(res.C <= 2);
  MESSAGE("C = " << to_string(res.C) << " via " << res.cert.strategy);
}

TEST_CASE("logarithm against identity") {
  Region r({{"x"}}, {ge(x, constant(1))});
  auto res = grid_search(log(x), x, r);
  REQUIRE(res.proved);
  CHECK(res.C == 1);
}

TEST_CASE("homogeneous degree") {
  CHECK(homogeneous_degree(x * y + power(x, 2)) == Rational(2));
  CHECK(!homogeneous_degree(x + constant(1)));
  CHECK(homogeneous_degree(power(x * y, Rational(1, 2))) == Rational(1));
  CHECK(!homogeneous_degree(log(x)));
}

TEST_CASE("logarithms of products split on positive regions") {
  Expr h = var("h"), m = var("m");
  Region r({{"h"}, {"m"}}, {ge(h, constant(1)), ge(m, constant(1))});
  CHECK(expand_logs(log(h * m) - log(h), r) == log(m));
  CHECK(expand_logs(log(power(m, 2)), r) == Rational(2) * log(m));
}
