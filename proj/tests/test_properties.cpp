#include "doctest.h"

#include "decomp/calculus.hpp"
#include "decomp/decomposer.hpp"
#include "decomp/interval.hpp"
#include "decomp/problem.hpp"
#include "decomp/simplifier.hpp"

#include <cmath>
#include <functional>
#include <random>

using namespace decomp;

namespace {

using Rng = std::mt19937_64;

double unit(Rng& rng) { return std::uniform_real_distribution<double>(0, 1)(rng); }
int pick(Rng& rng, int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

// Random raw (unnormalized) expressions in x and y that stay finite and
// defined for x, y in [1/2, 4]: constants are positive and logs only see
// 1 + (something positive).
Expr random_expr(Rng& rng, int depth) {
  if (depth == 0 || pick(rng, 4) == 0) {
    switch (pick(rng, 3)) {
      case 0: return var("x");
      case 1: return var("y");
      default: return constant(Rational(1 + pick(rng, 5), 1 + pick(rng, 3)));
    }
  }
  static const Rational exps[] = {Rational(-2), Rational(-1), Rational(1, 2), Rational(2), Rational(3), Rational(1)};
  switch (pick(rng, 5)) {
    case 0: return raw::sum({random_expr(rng, depth - 1), random_expr(rng, depth - 1), random_expr(rng, depth - 1)});
    case 1: return raw::product({random_expr(rng, depth - 1), random_expr(rng, depth - 1)});
    case 2: return raw::power(random_expr(rng, depth - 1), exps[pick(rng, 6)]);
    case 3: return raw::log(raw::sum({constant(1), random_expr(rng, depth - 1)}));
    default: return raw::exp(raw::product({constant(Rational(1, 4)), random_expr(rng, depth - 1)}));
  }
}

// Plain recursive double evaluation, independent of the library evaluator.
double oracle(const Expr& e, double x, double y) {
  switch (e.kind()) {
    case Kind::Const: return to_double(e.value());
    case Kind::Var: return e.name() == "x" ? x : y;
    case Kind::Sum: {
      double s = 0;
      for (const auto& c : e.children()) s += oracle(c, x, y);
      return s;
    }
    case Kind::Product: {
      double p = 1;
      for (const auto& c : e.children()) p *= oracle(c, x, y);
      return p;
    }
    case Kind::Power: return std::pow(oracle(e.base(), x, y), to_double(e.exponent()));
    case Kind::Log: return std::log(oracle(e.arg(), x, y));
    case Kind::Exp: return std::exp(oracle(e.arg(), x, y));
  }
  return NAN;
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1.0}); }

Region square() {
  Expr x = var("x"), y = var("y");
  return Region({{"x"}, {"y"}}, {Constraint(x, Relation::Ge, constant(Rational(1, 2))),
                                 Constraint(x, Relation::Le, constant(4)),
                                 Constraint(y, Relation::Ge, constant(Rational(1, 2))),
                                 Constraint(y, Relation::Le, constant(4))});
}

ProblemStatement must_parse(const std::string& text) {
  auto r = parse_problem(text);
  REQUIRE(r.ok());
  return *r.problem;
}

}  // namespace

TEST_CASE("normalize is idempotent and preserves values") {
  Rng rng(1);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    Expr e = random_expr(rng, 4);
    Expr n = normalize(e);
    CAPTURE(e.key());
    CHECK(normalize(n) == n);
    for (int k = 0; k < 3; ++k) {
      double x = 0.5 + 3.5 * unit(rng), y = 0.5 + 3.5 * unit(rng);
      double want = oracle(e, x, y);
      if (!std::isfinite(want) || std::abs(want) > 1e12) continue;
      CHECK(close(evaluate(n, {{"x", x}, {"y", y}}), want, 1e-9));
      ++checked;
    }
  }
  CHECK(checked > 2000);
}

TEST_CASE("derivatives agree with finite differences") {
  Rng rng(2);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    Expr e = normalize(random_expr(rng, 3));
    Expr dx = differentiate(e, "x");
    double x = 0.75 + 3 * unit(rng), y = 0.5 + 3.5 * unit(rng);
    // Five-point stencil.
    double h = 1e-3;
    auto f = [&](double t) { return oracle(e, t, y); };
    double fd = (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
    if (!std::isfinite(fd) || std::abs(f(x)) > 1e6) continue;
    CAPTURE(e.key());
    CHECK(close(evaluate(dx, {{"x", x}, {"y", y}}), fd, 1e-6));
    ++checked;
  }
  CHECK(checked > 400);
}

TEST_CASE("structural monotonicity claims hold at sampled pairs") {
  Rng rng(3);
  Region r = square();
  int claims = 0;
  for (int i = 0; i < 1000; ++i) {
    Expr e = normalize(random_expr(rng, 3));
    Monotonicity m = structural_monotonicity(e, "x", r);
    if (m == Monotonicity::Unknown) continue;
    ++claims;
    CAPTURE(e.key());
    CAPTURE(to_string(m));
    for (int k = 0; k < 10; ++k) {
      double a = 0.5 + 3.5 * unit(rng), b = 0.5 + 3.5 * unit(rng), y = 0.5 + 3.5 * unit(rng);
      if (a > b) std::swap(a, b);
      double fa = oracle(e, a, y), fb = oracle(e, b, y);
      double slack = 1e-12 * std::max({std::abs(fa), std::abs(fb), 1.0});
      if (m == Monotonicity::Increasing) CHECK(fa <= fb + slack);
      if (m == Monotonicity::Decreasing) CHECK(fa >= fb - slack);
      if (m == Monotonicity::Constant) CHECK(std::abs(fa - fb) <= slack);
    }
  }
  CHECK(claims > 300);
}

TEST_CASE("interval evaluation encloses every point of the box") {
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    Expr e = normalize(random_expr(rng, 4));
    double xl = 0.5 + 3 * unit(rng), yl = 0.5 + 3 * unit(rng);
    double xh = xl + 0.5 * unit(rng), yh = yl + 0.5 * unit(rng);
    Interval enc = eval_interval(e, {{"x", Interval(xl, xh)}, {"y", Interval(yl, yh)}});
    CAPTURE(e.key());
    REQUIRE_FALSE(enc.partial);
    for (int k = 0; k < 5; ++k) {
      double x = xl + (xh - xl) * unit(rng), y = yl + (yh - yl) * unit(rng);
      double v = evaluate(e, {{"x", x}, {"y", y}});
      if (std::isnan(v)) continue;
      CHECK(enc.lo <= v);
      CHECK(v <= enc.hi);
    }
  }
}

TEST_CASE("regime bounds replay, survive serialization and reject tampering") {
  auto p = must_parse(
      "\\sum_{d=0}^{\\infty} \\frac{2d+1}{2h^2\\left(1+\\frac{d(d+1)}{h^2}\\right)"
      "\\left(1+\\frac{d(d+1)}{h^2 m^2}\\right)^2} \\ll 1+\\log(m^2), h \\geq 1, m \\geq 1");
  Expr s = p.series().summand;
  Expr d = var("d"), h = var("h"), m = var("m");
  std::vector<std::vector<Constraint>> regimes{
      {Constraint(d, Relation::Le, h)},
      {Constraint(d, Relation::Ge, h), Constraint(d, Relation::Le, h * m)},
      {Constraint(d, Relation::Ge, h * m)}};
  for (const auto& extra : regimes) {
    std::vector<Constraint> cs{Constraint(h, Relation::Ge, constant(1)), Constraint(m, Relation::Ge, constant(1)),
                               Constraint(d, Relation::Ge, constant(1))};
    cs.insert(cs.end(), extra.begin(), extra.end());
    Region seg({{"h"}, {"m"}, {"d", VarRole::Index}}, cs);
    SimplifierOptions so;
    so.focus = "d";
    RegimeBound rb = dominate_bound(s, seg, so);
    CHECK(replay(rb).valid);
    RegimeBound back = deserialize_bound(serialize(rb));
    CHECK(replay(back).valid);
    CHECK(serialize(back) == serialize(rb));

    RegimeBound tampered = rb;
    tampered.factor = rb.factor / 4;
    CHECK_FALSE(replay(tampered).valid);
  }
}

TEST_CASE("dominating bounds of random rational summands replay and dominate") {
  Rng rng(5);
  Expr d = var("d");
  Region r({{"d", VarRole::Index}}, {Constraint(d, Relation::Ge, constant(1))});
  SimplifierOptions so;
  so.focus = "d";
  int built = 0;
  for (int i = 0; i < 60; ++i) {
    int a = 1 + pick(rng, 3), b = 1 + pick(rng, 5), c = 1 + pick(rng, 3), k = 1 + pick(rng, 3);
    Expr e = (constant(c) + d) / ((constant(a) + constant(b) * power(d, k)) * (constant(1) + power(d, 2)));
    RegimeBound rb;
    try {
      rb = dominate_bound(e, r, so);
    } catch (const SimplifierError&) {
      continue;
    }
    ++built;
    CAPTURE(e.key());
    CHECK(replay(rb).valid);
    for (double t = 1; t < 1e6; t *= 1.7) {
      double lhs = evaluate(e, {{"d", t}});
      CHECK(lhs <= to_double(rb.factor) * evaluate(rb.bound, {{"d", t}}) * (1 + 1e-12));
    }
  }
  CHECK(built == 60);
}

TEST_CASE("coverage: the Fenchel-Young split covers, a gapped split does not") {
  auto p = must_parse("x y \\ll x\\log x + e^y, x \\geq 1, y \\geq 0");
  auto good = parse_decomposition_text(p, "y \\leq 2\\log x\ny > 2\\log x");
  CHECK(validate_cover(p, good).status == CoverStatus::ProvedCover);

  auto gapped = parse_decomposition_text(p, "y \\leq \\log x\ny > 2\\log x");
  CoverageReport rep = validate_cover(p, gapped);
  REQUIRE(rep.status == CoverStatus::NotCover);
  double x = rep.witness.at("x"), y = rep.witness.at("y");
  CHECK(x >= 1);
  CHECK(y >= 0);
  CHECK(y > std::log(x));
  CHECK(y <= 2 * std::log(x));
}
