#include "doctest.h"

#include "decomp/calculus.hpp"
#include "decomp/interval.hpp"
#include "decomp/series.hpp"

#include <cmath>

using namespace decomp;

namespace {
Expr d = var("d"), h = var("h"), m = var("m");

SeriesProblem parse_series(const std::string& text) {
  auto p = parse_problem(text);
  REQUIRE(p.ok());
  REQUIRE(p.problem->is_series());
  return p.problem->series();
}

const char* kLogSeries =
    "\\sum_{d=0}^{\\infty} \\frac{2d+1}{2h^2\\left(1+\\frac{d(d+1)}{h^2}\\right)"
    "\\left(1+\\frac{d(d+1)}{h^2 m^2}\\right)^2} \\ll 1+\\log(m^2), h \\geq 1, m \\geq 1";

// Direct summation of the summand at fixed parameters.
double direct_sum(double hv, double mv, long terms) {
  double s = 0;
  for (long k = 0; k < terms; ++k) {
    double x = static_cast<double>(k);
    s += (2 * x + 1) / (2 * hv * hv * (1 + x * (x + 1) / (hv * hv)) * std::pow(1 + x * (x + 1) / (hv * hv * mv * mv), 2));
  }
  return s;
}

RegimeBound monomial_bound(const Expr& bound, const Rational& K) {
  RegimeBound rb;
  rb.bound = bound;
  rb.factor = K;
  return rb;
}

Region hm_params() {
  return Region({{"h"}, {"m"}}, {Constraint(h, Relation::Ge, constant(1)), Constraint(m, Relation::Ge, constant(1))});
}
}  // namespace

TEST_CASE("segment sums dominate numeric partial sums") {
  Region params = hm_params();
  struct Case {
    Expr bound;
    Expr a;
    std::optional<Expr> b;
  };
  std::vector<Case> cases{{d / power(h, 2), constant(0), h},
                          {power(d, -1), h, h * m},
                          {power(h, 4) * power(m, 4) * power(d, -5), h * m, std::nullopt}};
  for (const auto& c : cases) {
    Expr S = bound_segment_sum(monomial_bound(c.bound, 1), "d", c.a, c.b, params);
    CHECK_FALSE(depends_on(S, "d"));
    Program term(c.bound, {"h", "m", "d"});
    for (double hv : {1.0, 2.0, 10.0})
      for (double mv : {1.0, 2.0, 10.0}) {
        Assignment a{{"h", hv}, {"m", mv}};
        double lo = evaluate(c.a, a);
        double hi = c.b ? evaluate(*c.b, a) : 1e6;
        double sum = 0;
        for (double k = std::ceil(lo); k < hi; k += 1) sum += term.eval(std::vector<double>{hv, mv, k});
        CHECK(sum <= evaluate(S, a) * (1 + 1e-12));
      }
  }
  // 1/d on [h, hm): 1/h + log m.
  Expr S = bound_segment_sum(monomial_bound(power(d, -1), 1), "d", h, h * m, params);
  CHECK(evaluate(S, {{"h", 3}, {"m", 5}}) == doctest::Approx(1.0 / 3 + std::log(5.0)));
  // h^4 m^4 / d^5 on [hm, inf): 1/(hm) + 1/4, at most 5/4.
  Expr T = bound_segment_sum(monomial_bound(power(h, 4) * power(m, 4) * power(d, -5), 1), "d", h * m, std::nullopt,
                             params);
  CHECK(evaluate(T, {{"h", 3}, {"m", 5}}) == doctest::Approx(1.0 / 15 + 0.25));
  CHECK(evaluate(T, {{"h", 1}, {"m", 1}}) == doctest::Approx(1.25));
}

TEST_CASE("divergent and unsupported segment bounds") {
  Region params = hm_params();
  auto code = [&](const Expr& bound, const Expr& a, const std::optional<Expr>& b) {
    try {
      bound_segment_sum(monomial_bound(bound, 1), "d", a, b, params);
    } catch (const SeriesError& e) {
      return e.code;
    }
    return std::string("none");
  };
  CHECK(code(power(d, -1), h, std::nullopt) == "DivergentTail");
  CHECK(code(d, h, std::nullopt) == "DivergentTail");
  CHECK(code(power(d, -2), h - constant(1), h) == "NonMonotoneBound");
  CHECK(code(d + constant(1), h, h * m) == "NotMonomial");
}

TEST_CASE("parametric series with the two-breakpoint ladder") {
  SeriesProblem p = parse_series(kLogSeries);
  auto res = prove_series(p, {h, h * m});
  INFO(res.reason);
  REQUIRE(res.proved);
  REQUIRE(res.segments.size() == 4);
  CHECK(res.C <= 10000);
  // Truncated sum plus a tail bound: for d >= N the summand is at most
  // 1.5 h^4 m^4 d^-5, whose sum is at most (3/8) h^4 m^4 (N-1)^-4.
  const long N = 1000000;
  double C = to_double(res.C);
  for (double hv : {1.0, 5.0, 25.0})
    for (double mv : {1.0, 5.0, 25.0}) {
      double tail = std::pow(hv * mv, 4) / std::pow(static_cast<double>(N - 1), 4);
      double S = direct_sum(hv, mv, N) + tail;
      CHECK(S <= C * (1 + std::log(mv * mv)));
    }
}

TEST_CASE("p-series by the integral test") {
  SeriesProblem p = parse_series("\\sum_{n=1}^{\\infty} \\frac{1}{n^2} \\ll 1");
  auto res = prove_series(p, {});
  INFO(res.reason);
  REQUIRE(res.proved);
  CHECK(res.C <= 2);
  CHECK(res.C >= Rational(1645, 1000));  // the sum is pi^2/6
}

TEST_CASE("geometric series in closed form") {
  SeriesProblem p = parse_series("\\sum_{n=1}^{\\infty} \\left(\\frac{1}{2}\\right)^n \\ll 1");
  auto g = geometric_sum(p);
  REQUIRE(g.has_value());
  CHECK(evaluate(*g, {}) == doctest::Approx(1.0));
  auto res = prove_series(p, {});
  REQUIRE(res.proved);
  CHECK(res.C == 1);
  CHECK(res.segments.front().kind == "geometric");

  SeriesProblem q = parse_series("\\sum_{n=0}^{\\infty} r^n \\ll \\frac{1}{1-r}, 0 < r, r \\leq \\frac{1}{2}");
  auto gq = geometric_sum(q);
  REQUIRE(gq.has_value());
  CHECK(evaluate(*gq, {{"r", 0.25}}) == doctest::Approx(4.0 / 3));
}

TEST_CASE("a series that is not summable is not proved") {
  SeriesProblem p = parse_series("\\sum_{n=1}^{\\infty} \\frac{1}{n} \\ll 1");
  auto res = prove_series(p, {});
  CHECK_FALSE(res.proved);
  CHECK(res.reason.find("DivergentTail") != std::string::npos);
}
