#include "doctest.h"

#include "decomp/orchestrator.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

using namespace decomp;

namespace {

const char* kFenchel = "x y \\ll x\\log x + e^y, x \\geq 1, y \\geq 0";
const char* kSeries =
    "\\sum_{d=0}^{\\infty} \\frac{2d+1}{2h^2\\left(1+\\frac{d(d+1)}{h^2}\\right)"
    "\\left(1+\\frac{d(d+1)}{h^2 m^2}\\right)^2} \\ll 1+\\log(m^2), h \\geq 1, m \\geq 1";

ProblemStatement must_parse(const std::string& text) {
  auto r = parse_problem(text);
  REQUIRE(r.ok());
  return *r.problem;
}

std::string fake(const std::string& name) { return std::string(DECOMP_SOURCE_DIR) + "/tests/fake_cas/" + name; }
std::string temp_path(const std::string& name) { return std::string(DECOMP_SOURCE_DIR) + "/build/" + name; }

// Drops wall-clock fields so two records can be compared.
Json timeless(Json j) {
  if (j.is_object()) {
    for (const char* k : {"started", "finished", "wall_seconds", "elapsed", "timestamp", "run_id"}) j.erase(k);
    for (auto& [k, v] : j.items()) v = timeless(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = timeless(v);
  }
  return j;
}

class CannedTransport : public Transport {
 public:
  explicit CannedTransport(std::string reply) : reply_(std::move(reply)) {}
  Json send(const Json&) override {
    ++calls;
    return {{"choices", Json::array({{{"message", {{"content", reply_}}}}})}};
  }
  int calls = 0;

 private:
  std::string reply_;
};

}  // namespace

TEST_CASE("Fenchel-Young inequality proves with the 2 log x split") {
  auto p = must_parse(kFenchel);
  RunConfig cfg;
  cfg.order = ProposerOrder::HeuristicOnly;
  auto t0 = std::chrono::steady_clock::now();
  RunRecord r = prove_pipeline(p, cfg, "question_fenchel_young");
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs <= 10);
  REQUIRE(r.verdict.status == VerdictStatus::Proved);
  CHECK(r.verdict.C <= 2);
  CHECK(r.decomposition == "y \\leq 2 \\cdot \\log\\left(x\\right)\ny > 2 \\cdot \\log\\left(x\\right)\n");
  REQUIRE(r.pieces.size() == 2);
  for (const auto& piece : r.pieces) CHECK(piece_constant(piece).has_value());
  REQUIRE(r.coverage);
  CHECK(r.coverage->status == CoverStatus::ProvedCover);
  CHECK(r.state == "finished");
  CHECK(exit_code(r.verdict.status) == 0);
  std::string cert = certificate_text(r);
  CHECK(cert.find("verdict: Proved") != std::string::npos);
  CHECK(cert.find("x \\geq 1") != std::string::npos);
}

TEST_CASE("the two-variable log series proves with the h, hm ladder and records regime bounds") {
  auto p = must_parse(kSeries);
  RunConfig cfg;
  cfg.order = ProposerOrder::HeuristicOnly;
  RunRecord r = prove_pipeline(p, cfg, "series_log_ladder");
  REQUIRE(r.verdict.status == VerdictStatus::Proved);
  CHECK(r.verdict.C <= 10000);
  CHECK(r.aggregation == "sum");
  CHECK(r.decomposition == "h\nh \\cdot m\n");
  Rational sum = 0;
  std::size_t regimes = 0;
  for (const auto& piece : r.pieces) {
    sum += *piece_constant(piece);
    if (piece.regime) ++regimes;
  }
  CHECK(sum == r.verdict.C);
  CHECK(regimes == 3);
  std::string cert = certificate_text(r);
  CHECK(cert.find("h \\geq 1") != std::string::npos);
  CHECK(cert.find("m \\geq 1") != std::string::npos);
  CHECK(cert.find("sum over segments") != std::string::npos);
}

TEST_CASE("false claims are disproved with a verified counterexample") {
  for (const char* text : {"x^2 \\ll x, x \\geq 1", "x y \\ll x + y, x \\geq 1, y \\geq 1"}) {
    auto p = must_parse(text);
    RunRecord r = prove_pipeline(p, RunConfig{});
    REQUIRE(r.verdict.status == VerdictStatus::Disproved);
    const auto& cx = *r.verdict.counterexample;
    CHECK(cx.lhs > to_double(cx.C) * cx.rhs);
    CHECK(cx.C == 10000);
    CHECK(exit_code(r.verdict.status) == 1);
    CHECK(r.pieces.empty());
  }
}

TEST_CASE("records survive a JSON round trip and re-aggregate to the same verdict") {
  for (const char* text : {kFenchel, "x^2 \\ll x, x \\geq 1"}) {
    RunRecord r = prove_pipeline(must_parse(text), RunConfig{});
    Json j = to_json(r);
    CHECK(j["schema_version"] == 1);
    RunRecord back = run_record_from_json(Json::parse(j.dump()));
    CHECK(to_json(back) == j);
    Verdict v = aggregate(back);
    CHECK(v.status == r.verdict.status);
    CHECK(v.C == r.verdict.C);
  }
}

TEST_CASE("a gapped manual cover is rejected with a witness and never verified") {
  auto p = must_parse(kFenchel);
  RunConfig cfg;
  cfg.decomposition = "y \\leq \\log x\ny > 2\\log x\n";
  RunRecord r = prove_pipeline(p, cfg);
  REQUIRE(r.coverage);
  CHECK(r.coverage->status == CoverStatus::NotCover);
  CHECK_FALSE(r.coverage->witness.empty());
  CHECK(r.pieces.empty());
  CHECK(r.verdict.status == VerdictStatus::Unknown);
  REQUIRE_FALSE(r.warnings.empty());
  CHECK(r.warnings[0].find("witness") != std::string::npos);
  double xv = r.coverage->witness.at("x"), yv = r.coverage->witness.at("y");
  CHECK(yv > std::log(xv));
  CHECK(yv <= 2 * std::log(xv));
}

TEST_CASE("malformed manual decompositions are reported, not dropped") {
  RunConfig cfg;
  cfg.decomposition = "y \\leq \\log z\n";
  RunRecord r = prove_pipeline(must_parse(kFenchel), cfg);
  CHECK(r.verdict.status == VerdictStatus::Unknown);
  REQUIRE_FALSE(r.errors.empty());
  CHECK(r.errors[0].find("MalformedReply") != std::string::npos);
}

TEST_CASE("configuration validation") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.grid.values = {2, 1};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.replay = true;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(doubling_grid(100).values.back() == 100);
  CHECK(doubling_grid(64).values.size() == 7);
  Json j{{"backend", "both"}, {"order", "llm-first"}, {"grid_max", 16}};
  RunConfig c = run_config_from_json(j);
  CHECK(c.backend == BackendMode::Both);
  CHECK(c.order == ProposerOrder::LlmFirst);
  CHECK(c.grid.values.size() == 5);
  CHECK(run_config_from_json(to_json(c)).grid.values == c.grid.values);
  CHECK_THROWS_AS(run_config_from_json(Json{{"backend", "maple"}}), ConfigError);
  RunRecord r = prove_pipeline(must_parse(kFenchel), cfg);
  CHECK(r.verdict.status == VerdictStatus::Unknown);
  CHECK_FALSE(r.errors.empty());
}

TEST_CASE("both backends agree on the Fenchel-Young pieces") {
  auto p = must_parse(kFenchel);
  RunConfig cfg;
  cfg.order = ProposerOrder::HeuristicOnly;
  cfg.backend = BackendMode::Both;
  cfg.cas.executable = fake("answer_true.sh");
  cfg.cas.use_cache = false;
  RunRecord r = prove_pipeline(p, cfg);
  REQUIRE(r.verdict.status == VerdictStatus::Proved);
  CHECK_FALSE(r.soundness_incident);
  for (const auto& piece : r.pieces) {
    CHECK(piece.results.size() == 2);
    CHECK(piece.agreement == "agree");
  }
  std::size_t cas_logs = 0;
  for (const auto& t : r.transcripts) cas_logs += t.value("kind", "") == "cas";
  CHECK(cas_logs >= 2);
}

TEST_CASE("a CAS contradicting a builtin proof is a soundness incident") {
  auto p = must_parse("x \\ll x + 1, x \\geq 0");
  RunConfig cfg;
  cfg.backend = BackendMode::Both;
  cfg.cas.executable = fake("answer_by_constant.sh");
  cfg.cas.use_cache = false;
  RunRecord r = prove_pipeline(p, cfg);
  REQUIRE_FALSE(r.pieces.empty());
  CHECK(r.soundness_incident);
  CHECK(r.pieces[0].agreement == "disagree");
  CHECK(r.verdict.status == VerdictStatus::Unknown);
}

TEST_CASE("CAS-only runs degrade to Unknown without an executable") {
  RunConfig cfg;
  cfg.backend = BackendMode::Cas;
  cfg.cas.executable = "/nonexistent/wolframscript";
  RunRecord r = prove_pipeline(must_parse(kFenchel), cfg);
  CHECK(r.verdict.status == VerdictStatus::Unknown);
  bool reported = false;
  for (const auto& e : r.errors) reported = reported || e.find("ExecutableMissing") != std::string::npos;
  CHECK(reported);
}

TEST_CASE("CAS-only runs can prove through the bridge") {
  RunConfig cfg;
  cfg.order = ProposerOrder::HeuristicOnly;
  cfg.backend = BackendMode::Cas;
  cfg.cas.executable = fake("answer_true.sh");
  cfg.cas.use_cache = false;
  RunRecord r = prove_pipeline(must_parse(kFenchel), cfg);
  REQUIRE(r.verdict.status == VerdictStatus::Proved);
  CHECK(r.verdict.C == 1);
  for (const auto& piece : r.pieces) CHECK(piece.results.at(0).backend == "cas");
}

TEST_CASE("model proposals are used when heuristics are skipped") {
  auto p = must_parse(kFenchel);
  CannedTransport t("y \\leq 2\\log x\ny > 2\\log x");
  RunConfig cfg;
  cfg.order = ProposerOrder::LlmOnly;
  PipelineHooks hooks;
  hooks.transport = &t;
  RunRecord r = prove_pipeline(p, cfg, "", hooks);
  CHECK(t.calls == 1);
  CHECK(r.strategy == "llm");
  CHECK(r.verdict.status == VerdictStatus::Proved);
  REQUIRE_FALSE(r.transcripts.empty());
  CHECK(r.transcripts[0]["kind"] == "llm");
}

TEST_CASE("an unconfigured model proposer is a recorded error") {
  RunConfig cfg;
  cfg.order = ProposerOrder::LlmOnly;
  RunRecord r = prove_pipeline(must_parse(kFenchel), cfg);
  CHECK(r.verdict.status == VerdictStatus::Unknown);
  REQUIRE_FALSE(r.errors.empty());
  CHECK(r.errors[0].find("NotConfigured") != std::string::npos);
}

TEST_CASE("replay runs are deterministic and offline") {
  auto p = must_parse(kFenchel);
  std::string path = temp_path("orchestrator_replay.jsonl");
  std::remove(path.c_str());
  {
    CannedTransport inner("y \\leq 2\\log x\ny > 2\\log x");
    RecordingTransport rec(inner, path);
    RunConfig cfg;
    cfg.order = ProposerOrder::LlmOnly;
    PipelineHooks hooks;
    hooks.transport = &rec;
    prove_pipeline(p, cfg, "", hooks);
  }
  RunConfig cfg;
  cfg.order = ProposerOrder::LlmOnly;
  cfg.replay = true;
  cfg.replay_path = path;
  std::size_t before = HttpTransport::requests_sent();
  RunRecord a = prove_pipeline(p, cfg, "q");
  RunRecord b = prove_pipeline(p, cfg, "q");
  CHECK(HttpTransport::requests_sent() == before);
  CHECK(a.verdict.status == VerdictStatus::Proved);
  CHECK(timeless(to_json(a)) == timeless(to_json(b)));
}

TEST_CASE("checked-in model fixtures replay every recorded problem offline") {
  const std::string root = DECOMP_SOURCE_DIR;
  auto corpus = load_corpus(root + "/problems");
  std::ifstream answers(root + "/fixtures/answers.jsonl");
  REQUIRE(answers);
  RunConfig cfg;
  cfg.order = ProposerOrder::LlmOnly;
  cfg.replay = true;
  cfg.replay_path = root + "/fixtures/llm_replay.jsonl";
  std::size_t before = HttpTransport::requests_sent();
  std::size_t replayed = 0;
  for (std::string line; std::getline(answers, line);) {
    if (line.empty()) continue;
    std::string id = Json::parse(line).at("id");
    CAPTURE(id);
    auto e = find_problem(corpus, id);
    REQUIRE(e);
    ParseOptions po;
    po.allow_unconstrained = e->allow_unconstrained;
    auto parsed = parse_problem(e->statement, po);
    REQUIRE(parsed.ok());
    RunRecord a = prove_pipeline(*parsed.problem, cfg, id);
    RunRecord b = prove_pipeline(*parsed.problem, cfg, id);
    CHECK(a.origin == (e->expected == "proved" ? "llm" : ""));
    CHECK(a.errors.empty());
    CHECK(to_string(a.verdict.status) == (e->expected == "proved" ? "Proved" : "Disproved"));
    CHECK(timeless(to_json(a)) == timeless(to_json(b)));
    ++replayed;
  }
  CHECK(replayed >= 8);
  CHECK(HttpTransport::requests_sent() == before);
}

TEST_CASE("progress snapshots move from running to finished") {
  std::vector<std::string> states;
  std::vector<std::size_t> pieces;
  PipelineHooks hooks;
  hooks.progress = [&](const RunRecord& r) {
    states.push_back(r.state);
    pieces.push_back(r.pieces.size());
  };
  RunConfig cfg;
  cfg.order = ProposerOrder::HeuristicOnly;
  prove_pipeline(must_parse(kFenchel), cfg, "", hooks);
  REQUIRE(states.size() >= 3);
  CHECK(states.front() == "running");
  CHECK(states.back() == "finished");
  CHECK(pieces.back() == 2);
}
