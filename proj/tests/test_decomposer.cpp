#include "doctest.h"

#include "decomp/calculus.hpp"
#include "decomp/decomposer.hpp"
#include "decomp/llm.hpp"

#include <cmath>
#include <cstdio>
#include <random>

using namespace decomp;

namespace {
const char* kFenchel = "x y \\ll x\\log x + e^y, x \\geq 1, y \\geq 0";
const char* kSeries =
    "\\sum_{d=0}^{\\infty} \\frac{2d+1}{2h^2\\left(1+\\frac{d(d+1)}{h^2}\\right)"
    "\\left(1+\\frac{d(d+1)}{h^2 m^2}\\right)^2} \\ll 1+\\log(m^2), h \\geq 1, m \\geq 1";
const char* kAmGm3 = "x y z \\ll x^3 + y^3 + z^3, x \\geq 0, y \\geq 0, z \\geq 0";

ProblemStatement must_parse(const std::string& text) {
  auto r = parse_problem(text);
  REQUIRE(r.ok());
  return *r.problem;
}

Expr x = var("x"), y = var("y"), h = var("h"), m = var("m");

// Replies from a fixed script, counting requests.
class ScriptedTransport : public Transport {
 public:
  explicit ScriptedTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  Json send(const Json& request) override {
    requests.push_back(request);
    std::string r = replies_.at(std::min(requests.size() - 1, replies_.size() - 1));
    return {{"choices", Json::array({{{"message", {{"role", "assistant"}, {"content", r}}}}})}};
  }
  std::vector<Json> requests;

 private:
  std::vector<std::string> replies_;
};

std::string temp_path(const std::string& name) { return std::string(DECOMP_SOURCE_DIR) + "/build/" + name; }
}  // namespace

TEST_CASE("crossover split for the exponential against x log x") {
  auto p = must_parse(kFenchel);
  auto cands = heuristic_propose(p);
  REQUIRE_FALSE(cands.empty());
  CHECK(cands.size() <= 8);
  const auto& q = p.inequality();
  Constraint below(y, Relation::Le, constant(2) * log(x)), above(y, Relation::Gt, constant(2) * log(x));
  bool found = false;
  for (const auto& d : cands) {
    if (d.is_ladder() || d.k() != 2) continue;
    const auto& pieces = d.cover().pieces;
    if (pieces[0].key() == q.region.with(below).key() && pieces[1].key() == q.region.with(above).key()) {
      found = true;
      CHECK(validate_cover(p, d).status == CoverStatus::ProvedCover);
    }
  }
  CHECK(found);
}

TEST_CASE("breakpoint ladder where the denominator factors reach 1") {
  auto p = must_parse(kSeries);
  auto cands = heuristic_propose(p);
  REQUIRE_FALSE(cands.empty());
  REQUIRE(cands.front().is_ladder());
  const auto& l = cands.front().breakpoints().ladder;
  REQUIRE(l.size() == 2);
  CHECK(l[0] == h);
  CHECK(l[1] == h * m);
  // Independent check: d(d+1)/h^2 and d(d+1)/(h^2 m^2) are within a factor 2
  // of 1 at these points.
  for (double hv : {1.0, 3.0, 20.0})
    for (double mv : {1.0, 4.0}) {
      double d1 = evaluate(l[0], {{"h", hv}, {"m", mv}}), d2 = evaluate(l[1], {{"h", hv}, {"m", mv}});
      CHECK(d1 * d1 / (hv * hv) == doctest::Approx(1.0));
      CHECK(d2 * d2 / (hv * hv * mv * mv) == doctest::Approx(1.0));
    }
  CHECK(validate_cover(p, cands.front()).status == CoverStatus::ProvedCover);
}

TEST_CASE("orderings for a symmetric problem cover every sampled point") {
  auto p = must_parse(kAmGm3);
  CHECK(is_symmetric(p.inequality()));
  auto cands = heuristic_propose(p);
  const Decomposition* ordering = nullptr;
  const Decomposition* maxcover = nullptr;
  for (const auto& d : cands) {
    if (d.origin == "ordering") ordering = &d;
    if (d.origin == "max") maxcover = &d;
  }
  REQUIRE(ordering);
  REQUIRE(maxcover);
  CHECK(ordering->k() == 6);
  CHECK(maxcover->k() == 3);
  CHECK(validate_cover(p, *ordering).status == CoverStatus::ProvedCover);
  CHECK(validate_cover(p, *maxcover).status == CoverStatus::ProvedCover);

  // Oracle: the piece containing a point is the one whose chain matches its
  // sorted order, so every one of 10^4 log-uniform points is covered.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-6, 6);
  std::size_t covered = 0;
  for (int i = 0; i < 10000; ++i) {
    Assignment a{{"x", std::pow(10, u(rng))}, {"y", std::pow(10, u(rng))}, {"z", std::pow(10, u(rng))}};
    bool in = false;
    for (const auto& piece : ordering->cover().pieces) in = in || satisfies(piece, a);
    covered += in;
  }
  CHECK(covered == 10000);
  // Sampled validation of the same cover, bypassing the structural check by
  // splitting a piece's chain into two overlapping halves.
  RegionCover c = ordering->cover();
  c.pieces.push_back(p.inequality().region.with(Constraint(x, Relation::Le, y)));
  auto rep = validate_cover(p, {c, "manual"});
  CHECK(rep.status == CoverStatus::SampledCover);
  CHECK(rep.samples >= 9000);
  CHECK(rep.uncovered == 0);
}

TEST_CASE("a gap between pieces is found with a checkable witness") {
  auto p = must_parse(kFenchel);
  const Region& D = p.inequality().region;
  RegionCover c{{D.with(Constraint(y, Relation::Le, log(x))), D.with(Constraint(y, Relation::Gt, constant(2) * log(x)))}};
  auto rep = validate_cover(p, {c, "manual"});
  REQUIRE(rep.status == CoverStatus::NotCover);
  double xv = rep.witness.at("x"), yv = rep.witness.at("y");
  CHECK(xv >= 1);
  CHECK(yv >= 0);
  CHECK(yv > std::log(xv));
  CHECK(yv <= 2 * std::log(xv));
}

TEST_CASE("ladder order is checked on the parameter region") {
  auto p = must_parse("\\sum_{d=0}^{\\infty} \\frac{1}{(1+d)^2} \\ll 1, h \\geq 1, m \\geq 2");
  // The summand does not mention h or m, but they are declared parameters.
  CHECK(validate_cover(p, {Breakpoints{{h, h * m}}, "manual"}).status == CoverStatus::ProvedCover);
  auto bad = validate_cover(p, {Breakpoints{{h * m, h}}, "manual"});
  REQUIRE(bad.status == CoverStatus::NotCover);
  CHECK(bad.witness.at("h") * bad.witness.at("m") > bad.witness.at("h"));
  CHECK(validate_cover(p, {Breakpoints{{h, h}}, "manual"}).status == CoverStatus::NotCover);
}

TEST_CASE("heuristics are deterministic and report when nothing applies") {
  auto p = must_parse(kFenchel);
  auto a = heuristic_propose(p), b = heuristic_propose(p);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(render_decomposition_text(p, a[i]) == render_decomposition_text(p, b[i]));
  CHECK(render_decomposition_text(p, a.front()) == "y \\leq \\log\\left(x\\right)\ny > \\log\\left(x\\right)\n");
  try {
    heuristic_propose(must_parse("x^2 \\ll x, x \\geq 1"));
    FAIL("expected NoCandidate");
  } catch (const DecomposerError& e) {
    CHECK(e.code == "NoCandidate");
  }
}

TEST_CASE("prompt carries the four sections and the problem") {
  auto p = must_parse(kSeries);
  std::string prompt = render_prompt(builtin_prompt_template(), p);
  for (const char* tag : {"<guiding_principles>", "<task>", "<requirements_for_breakpoints>", "<output_format>"})
    CHECK(prompt.find(tag) != std::string::npos);
  CHECK(prompt.find(render_canonical(p)) != std::string::npos);
  CHECK(prompt.find("{{") == std::string::npos);
}

TEST_CASE("model replies are parsed, retried and rejected") {
  auto p = must_parse(kSeries);
  ProposerConfig cfg;
  cfg.model = "test-model";
  std::size_t before = HttpTransport::requests_sent();

  ScriptedTransport good({"```\nh\nh m\n```"});
  auto res = llm_propose(p, cfg, good);
  REQUIRE(res.decomposition.is_ladder());
  CHECK(res.decomposition.breakpoints().ladder.size() == 2);
  CHECK(res.decomposition.breakpoints().ladder[1] == h * m);
  CHECK(res.transcripts.size() == 1);
  CHECK(res.transcripts[0].model == "test-model");

  ScriptedTransport retry({"split wherever", "h\nhm"});
  auto res2 = llm_propose(p, cfg, retry);
  CHECK(retry.requests.size() == 2);
  CHECK(res2.transcripts.size() == 2);
  CHECK_FALSE(res2.transcripts[0].error.empty());

  ScriptedTransport bad({"split wherever"});
  try {
    llm_propose(p, cfg, bad);
    FAIL("expected MalformedReply");
  } catch (const LlmError& e) {
    CHECK(e.code == "MalformedReply");
    CHECK(e.transcripts.size() == 3);
  }
  CHECK(bad.requests.size() == 3);

  auto q = must_parse(kFenchel);
  ScriptedTransport cover({"y \\leq 2\\log x\ny > 2\\log x"});
  auto res3 = llm_propose(q, cfg, cover);
  CHECK(validate_cover(q, res3.decomposition).status == CoverStatus::ProvedCover);
  CHECK(HttpTransport::requests_sent() == before);
}

TEST_CASE("recorded exchanges replay identically without the network") {
  auto p = must_parse(kSeries);
  ProposerConfig cfg;
  std::string path = temp_path("replay_test.jsonl");
  std::remove(path.c_str());
  std::size_t before = HttpTransport::requests_sent();
  {
    ScriptedTransport inner({"h\nh m"});
    RecordingTransport rec(inner, path);
    llm_propose(p, cfg, rec);
  }
  ReplayTransport replay(path);
  CHECK(replay.size() == 1);
  auto res = llm_propose(p, cfg, replay);
  CHECK(render_decomposition_text(p, res.decomposition) == "h\nh \\cdot m\n");
  CHECK(HttpTransport::requests_sent() == before);

  auto other = must_parse("\\sum_{n=1}^{\\infty} \\frac{1}{n^2} \\ll 1");
  try {
    llm_propose(other, cfg, replay);
    FAIL("expected FixtureMiss");
  } catch (const LlmError& e) {
    CHECK(e.code == "FixtureMiss");
  }
}
