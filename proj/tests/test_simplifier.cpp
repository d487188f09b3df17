#include "doctest.h"

#include "decomp/calculus.hpp"
#include "decomp/problem.hpp"
#include "decomp/simplifier.hpp"

#include <cmath>
#include <random>

using namespace decomp;

namespace {
Expr d = var("d"), h = var("h"), m = var("m"), x = var("x");
Constraint ge(const Expr& a, const Expr& b) { return Constraint(a, Relation::Ge, b); }
Constraint le(const Expr& a, const Expr& b) { return Constraint(a, Relation::Le, b); }

Expr summand() {
  auto p = parse_problem(
      "\\sum_{d=0}^{\\infty} \\frac{2d+1}{2h^2\\left(1+\\frac{d(d+1)}{h^2}\\right)"
      "\\left(1+\\frac{d(d+1)}{h^2 m^2}\\right)^2} \\ll 1+\\log(m^2), h \\geq 1, m \\geq 1");
  REQUIRE(p.ok());
  return p.problem->series().summand;
}

Region segment(std::vector<Constraint> extra) {
  std::vector<Constraint> cs{ge(h, constant(1)), ge(m, constant(1))};
  cs.insert(cs.end(), extra.begin(), extra.end());
  return Region({{"h"}, {"m"}, {"d", VarRole::Index}}, cs);
}

// Independent check: source <= K * bound at random points of the segment,
// with (h, m, d) drawn by hand rather than through the library sampler.
void oracle_check(const RegimeBound& rb, int which) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    double hv = std::pow(10.0, 3 * u(rng)), mv = std::pow(10.0, 3 * u(rng));
    double lo = which == 0 ? 1 : which == 1 ? hv : hv * mv;
    double hi = which == 0 ? hv : which == 1 ? hv * mv : hv * mv * 1000;
    if (lo > hi) continue;
    double dv = lo + (hi - lo) * u(rng);
    Assignment a{{"h", hv}, {"m", mv}, {"d", dv}};
    double s = (2 * dv + 1) / (2 * hv * hv * (1 + dv * (dv + 1) / (hv * hv)) *
                               std::pow(1 + dv * (dv + 1) / (hv * hv * mv * mv), 2));
    CHECK(s <= to_double(rb.factor) * evaluate(rb.bound, a) * (1 + 1e-12));
  }
}

}  // namespace

TEST_CASE("three regimes of the parametric series summand") {
  SimplifierOptions opts;
  opts.focus = "d";
  std::vector<Region> regions{segment({ge(d, constant(1)), le(d, h)}), segment({ge(d, h), le(d, h * m)}),
                              segment({ge(d, h * m)})};
  std::vector<Expr> expected{d / power(h, 2), power(d, -1), power(h, 4) * power(m, 4) / power(d, 5)};
  std::vector<Rational> caps{6, 8, 16};
  for (int i = 0; i < 3; ++i) {
    auto rb = dominate_bound(summand(), regions[i], opts);
    CHECK(rb.bound == expected[i]);
    CHECK(rb.factor <= caps[i]);
    CHECK(rb.factor > 0);
    auto rep = replay(rb);
    CHECK_MESSAGE(rep.valid, rep.reason);
    oracle_check(rb, i);
    auto back = deserialize_bound(serialize(rb));
    CHECK(serialize(back) == serialize(rb));
    CHECK(replay(back).valid);
  }
}

TEST_CASE("dropping a positive term cannot give an upper bound") {
  Region r({{"x"}}, {ge(x, constant(0))});
  RegimeBound rb;
  rb.source = x + constant(1);
  rb.region = r;
  rb.bound = x;
  rb.factor = 1;
  JustificationStep st;
  st.rule = Rule::PositivityDrop;
  st.before = x + constant(1);
  st.after = x;
  st.polarity = 1;
  st.premises = {le(constant(0), constant(1))};
  rb.steps = {st};
  auto rep = replay(rb);
  CHECK(!rep.valid);
  CHECK(rep.failed_step == 0);
}

TEST_CASE("reciprocal of a sum bounded by reciprocal of a term") {
  Region r({{"x"}}, {ge(x, constant(1))});
  auto rb = dominate_bound(power(constant(1) + x, -1), r);
  CHECK(rb.bound == power(x, -1));
  CHECK(rb.factor == 1);
  REQUIRE(rb.steps.size() == 1);
  CHECK(rb.steps[0].rule == Rule::DenominatorLeadingTerm);
  CHECK(rb.steps[0].polarity == -1);
  CHECK(replay(rb).valid);
}

TEST_CASE("numerator sums cost their term count") {
  Region r({{"x"}}, {ge(x, constant(1))});
  auto rb = dominate_bound(constant(1) + x + power(x, 2), r);
  CHECK(rb.bound == power(x, 2));
  CHECK(rb.factor == 3);
  CHECK(replay(rb).valid);
}

TEST_CASE("simplifier errors name the offending subexpression") {
  Region r({{"x"}}, {ge(x, constant(0)), le(x, constant(1))});
  try {
    dominate_bound(power(x - constant(2), -1), r);
    FAIL("expected an error");
  } catch (const SimplifierError& e) {
    CHECK(e.code == "PositivityUnderivable");
  }
  Region wide({{"x"}, {"y"}}, {ge(x, constant(1)), ge(var("y"), constant(1))});
  try {
    dominate_bound(power(x + var("y"), -1), wide);
    FAIL("expected an error");
  } catch (const SimplifierError& e) {
    CHECK(e.code == "NoDominantTerm");
    CHECK(e.subexpr == (x + var("y")).key());
  }
}

TEST_CASE("polarity follows exponents and coefficients") {
  Expr s = constant(1) + x;
  CHECK(occurrence_polarities(power(s, -2) * x, s) == std::vector<int>{-1});
  CHECK(occurrence_polarities(log(s), s) == std::vector<int>{1});
  CHECK(occurrence_polarities(constant(-1) * s * var("y"), s) == std::vector<int>{-1});
}
