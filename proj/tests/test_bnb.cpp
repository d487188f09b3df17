#include "doctest.h"

#include "decomp/bnb.hpp"
#include "decomp/calculus.hpp"

#include <cmath>

using namespace decomp;

namespace {
Expr x = var("x"), y = var("y"), d = var("d"), h = var("h");
Constraint ge(const Expr& a, const Expr& b) { return Constraint(a, Relation::Ge, b); }
Constraint le(const Expr& a, const Expr& b) { return Constraint(a, Relation::Le, b); }
Region one_var(const std::string& v, std::vector<Constraint> cs) { return Region({{v}}, std::move(cs)); }
}  // namespace

TEST_CASE("logarithm is dominated by the identity on x >= 1") {
  auto r = prove_nonnegative(x - log(x), one_var("x", {ge(x, constant(1))}));
  CHECK(r.outcome == BoxOutcome::Proved);
}

TEST_CASE("exponential tail beats polynomial times half exponential") {
  auto r = prove_nonnegative(exp(y) - y * exp(Rational(1, 2) * y), one_var("y", {ge(y, constant(0))}));
  CHECK(r.outcome == BoxOutcome::Proved);
}

TEST_CASE("a false claim yields a verified feasible witness") {
  Region reg = one_var("x", {ge(x, constant(0))});
  auto r = prove_nonnegative(x - power(x, 2), reg);
  REQUIRE(r.outcome == BoxOutcome::Counterexample);
  double w = r.witness.at("x");
  CHECK(w - w * w < 0);
  CHECK(certainly_satisfies(reg, r.witness));
}

TEST_CASE("tight minimum reached at a corner") {
  Region reg = one_var("x", {ge(x, constant(0)), le(x, constant(1))});
  Expr H = Rational(1, 2) * x + constant(Rational(1, 2)) - power(x, Rational(1, 2));
  auto r = prove_nonnegative(H, reg);
  CHECK(r.outcome == BoxOutcome::Proved);
}

TEST_CASE("thresholds prune infeasible boxes") {
  Region reg({{"x"}, {"y"}}, {ge(x, constant(1)), le(x, constant(10)), ge(y, constant(0)), le(y, Rational(2) * log(x))});
  auto r = prove_nonnegative(Rational(3) * log(x) + constant(1) - y, reg);
  CHECK(r.outcome == BoxOutcome::Proved);
}

TEST_CASE("constant claims") {
  Region reg = one_var("x", {ge(x, constant(0))});
  CHECK(prove_nonnegative(x - x, reg).outcome == BoxOutcome::Proved);
  CHECK(prove_nonnegative(constant(-1), reg).outcome == BoxOutcome::Counterexample);
}
