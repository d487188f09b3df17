#include "doctest.h"

#include "decomp/problem.hpp"

using namespace decomp;

namespace {

const char* kFenchel = "x y \\ll x\\log x + e^y, x \\geq 1, y \\geq 0";
const char* kSeries =
    "S(h,m) := \\sum_{d=0}^{\\infty} \\frac{2d+1}{2h^2\\left(1+\\frac{d(d+1)}{h^2}\\right)"
    "\\left(1+\\frac{d(d+1)}{h^2 m^2}\\right)^2} \\ll 1+\\log(m^2), h \\geq 1, m \\geq 1";

ProblemStatement must_parse(const std::string& text, ParseOptions opts = {}) {
  auto r = parse_problem(text, opts);
  if (!r.ok()) FAIL("parse failed: " << r.diagnostics.front().message << " at " << r.diagnostics.front().position);
  return *r.problem;
}

}  // namespace

TEST_CASE("two-variable estimate with side conditions") {
  auto p = must_parse(kFenchel);
  REQUIRE(!p.is_series());
  Expr x = var("x"), y = var("y");
  CHECK(p.inequality().lhs == x * y);
  CHECK(p.inequality().rhs == x * log(x) + exp(y));
  const auto& cs = p.inequality().region.constraints();
  REQUIRE(cs.size() == 2);
  CHECK(cs[0] == Constraint(x, Relation::Ge, constant(1)));
  CHECK(cs[1] == Constraint(y, Relation::Ge, constant(0)));
  CHECK(p.inequality().region.var_names() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("parametric series with a label") {
  auto p = must_parse(kSeries);
  REQUIRE(p.is_series());
  const auto& s = p.series();
  Expr d = var("d"), h = var("h"), m = var("m");
  Expr one = constant(1);
  Expr expected = (Rational(2) * d + one) /
                  (Rational(2) * power(h, 2) * (one + d * (d + one) / power(h, 2)) *
                   power(one + d * (d + one) / (power(h, 2) * power(m, 2)), 2));
  CHECK(s.summand == expected);
  CHECK(s.index == "d");
  CHECK(s.start == 0);
  CHECK(s.target == one + log(power(m, 2)));
  CHECK(s.params.var_names() == std::vector<std::string>{"h", "m"});
  CHECK(p.label == "S(h,m)");
}

TEST_CASE("identity estimate") {
  auto p = must_parse("x \\ll x, x \\geq 0");
  CHECK(p.inequality().lhs == var("x"));
  CHECK(p.inequality().rhs == var("x"));
}

TEST_CASE("big-O spelling and templates agree with \\ll") {
  auto a = must_parse("x y \\ll x^2 + y^2, x \\geq 1, y \\geq 1");
  auto b = must_parse("xy = O(x^2+y^2) where x \\ge 1, y \\ge 1");
  auto c = must_parse("prove that x y is O(x^2 + y^2) for x, y \\geq 1");
  auto d = must_parse("show $xy \\ll x^2 + y^2$ where $x \\geq 1$ and $y \\geq 1$");
  CHECK(problem_key(a) == problem_key(b));
  CHECK(problem_key(a) == problem_key(c));
  CHECK(problem_key(a) == problem_key(d));
}

TEST_CASE("chained and strict constraints are preserved") {
  auto p = must_parse("x y \\ll x \\log x + e^y, x \\geq 1, 0 \\leq y < 2\\log x");
  const auto& cs = p.inequality().region.constraints();
  REQUIRE(cs.size() == 3);
  CHECK(cs[1] == Constraint(constant(0), Relation::Le, var("y")));
  CHECK(cs[2].rel == Relation::Lt);
}

TEST_CASE("expression details") {
  CHECK(parse_expression("\\sqrt{x}") == power(var("x"), Rational(1, 2)));
  CHECK(parse_expression("\\sqrt[3]{x}") == power(var("x"), Rational(1, 3)));
  CHECK(parse_expression("2^{n}") == exp(var("n") * log(constant(2))));
  CHECK(parse_expression("e^{-y/2}") == exp(Rational(-1, 2) * var("y")));
  CHECK(parse_expression("x_1 x_{2}") == var("x_1") * var("x_2"));
  CHECK(parse_expression("\\ln(1+x)") == log(constant(1) + var("x")));
  CHECK(parse_expression("\\log^2 x") == power(log(var("x")), 2));
  CHECK(parse_expression("\\left(\\frac{1}{2}\\right)^n") ==
        exp(var("n") * log(constant(Rational(1, 2)))));
  CHECK(parse_expression("0.25 x") == Rational(1, 4) * var("x"));
}

TEST_CASE("unsupported constructs carry positions") {
  auto r = parse_problem("\\sin x \\ll 1, x \\geq 0");
  REQUIRE(!r.ok());
  CHECK(r.diagnostics.front().code == "UnsupportedConstruct");
  CHECK(r.diagnostics.front().position == 0);

  r = parse_problem("x + |y| \\ll 1, x \\geq 0, y \\geq 0");
  REQUIRE(!r.ok());
  CHECK(r.diagnostics.front().code == "UnsupportedConstruct");
  CHECK(r.diagnostics.front().position == 4);

  r = parse_problem("x^y \\ll 1, x \\geq 0, y \\geq 1");
  REQUIRE(!r.ok());
  CHECK(r.diagnostics.front().code == "UnsupportedConstruct");
  CHECK(r.diagnostics.front().position == 0);
  CHECK(parse_problem("x^y \\ll e^{xy}, x \\geq 1, y \\geq 1").ok());

  r = parse_problem("x \\ll");
  REQUIRE(!r.ok());
  CHECK(r.diagnostics.front().position <= 5);
}

TEST_CASE("variables without constraints are rejected unless allowed") {
  auto r = parse_problem("x y \\ll x^2 + y^2, x \\geq 1");
  REQUIRE(!r.ok());
  CHECK(r.diagnostics.front().code == "AmbiguousDomain");
  CHECK(r.diagnostics.front().position == 2);
  ParseOptions opts;
  opts.allow_unconstrained = true;
  CHECK(parse_problem("x y \\ll x^2 + y^2, x \\geq 1", opts).ok());
}

TEST_CASE("series validation") {
  CHECK(!parse_problem("\\sum_{n=1}^{\\infty} h \\ll 1, h \\geq 1").ok());
  CHECK(!parse_problem("\\sum_{n=1}^{10} n \\ll 1").ok());
  auto p = must_parse("\\sum_{n=1}^\\infty \\frac{1}{n^2} \\ll 1");
  CHECK(p.series().params.vars().empty());
  CHECK(p.series().start == 1);
}

TEST_CASE("canonical rendering round-trips") {
  for (const char* text : {kFenchel, kSeries, "x \\ll x, x \\geq 0",
                           "\\sum_{n=1}^{\\infty} \\left(\\frac{1}{2}\\right)^n \\ll 1",
                           "x^{\\frac{1}{3}} y^{2/3} \\ll x + y, x \\geq 0, y > 0",
                           "x_1 x_2 x_3 \\ll x_1^3 + x_2^3 + x_3^3 - 0, x_1 \\geq 0, x_2 \\geq 0, x_3 \\geq 0"}) {
    auto p = must_parse(text);
    std::string canon = render_canonical(p);
    auto q = must_parse(canon);
    CHECK_MESSAGE(problem_key(p) == problem_key(q), canon);
    CHECK(render_canonical(q) == canon);
  }
}

TEST_CASE("corpus entry format") {
  CorpusEntry e;
  e.id = "question_demo";
  e.statement = kFenchel;
  e.expected = "proved";
  e.tags = {"inequality", "two-variable"};
  std::string text = render_corpus_entry(e);
  auto back = parse_corpus_entry(text);
  CHECK(back.id == e.id);
  CHECK(back.statement == e.statement);
  CHECK(back.tags == e.tags);
  CHECK(render_corpus_entry(back) == text);
}
