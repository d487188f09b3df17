#include "decomp/orchestrator.hpp"

#include "decomp/problem.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

namespace decomp {

std::string to_string(ProposerOrder o) {
  switch (o) {
    case ProposerOrder::HeuristicFirst: return "heuristic-first";
    case ProposerOrder::LlmFirst: return "llm-first";
    case ProposerOrder::LlmOnly: return "llm-only";
    case ProposerOrder::HeuristicOnly: return "heuristic-only";
  }
  return "?";
}

ProposerOrder proposer_order_from_string(const std::string& s) {
  for (auto o : {ProposerOrder::HeuristicFirst, ProposerOrder::LlmFirst, ProposerOrder::LlmOnly,
                 ProposerOrder::HeuristicOnly})
    if (to_string(o) == s) return o;
  throw ConfigError("unknown proposer order '" + s + "'");
}

std::string to_string(BackendMode b) {
  switch (b) {
    case BackendMode::Builtin: return "builtin";
    case BackendMode::Cas: return "cas";
    case BackendMode::Both: return "both";
  }
  return "?";
}

BackendMode backend_mode_from_string(const std::string& s) {
  for (auto b : {BackendMode::Builtin, BackendMode::Cas, BackendMode::Both})
    if (to_string(b) == s) return b;
  throw ConfigError("unknown backend '" + s + "'");
}

std::string to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Proved: return "Proved";
    case VerdictStatus::Disproved: return "Disproved";
    case VerdictStatus::Unknown: return "Unknown";
  }
  return "?";
}

VerdictStatus verdict_status_from_string(const std::string& s) {
  for (auto v : {VerdictStatus::Proved, VerdictStatus::Disproved, VerdictStatus::Unknown})
    if (to_string(v) == s) return v;
  throw std::runtime_error("unknown verdict '" + s + "'");
}

int exit_code(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Proved: return 0;
    case VerdictStatus::Disproved: return 1;
    case VerdictStatus::Unknown: return 2;
  }
  return 3;
}

std::string utc_now() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunConfig::validate() const {
  if (grid.values.empty()) throw ConfigError("the constant grid is empty");
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    if (grid.values[i] <= 0) throw ConfigError("grid constants must be positive");
    if (i && grid.values[i] <= grid.values[i - 1]) throw ConfigError("grid constants must increase strictly");
  }
  if (prover.boxes_per_attempt == 0 || prover.total_boxes == 0) throw ConfigError("prover budgets must be positive");
  if (cas_timeout_seconds <= 0) throw ConfigError("the CAS timeout must be positive");
  if (replay && replay_path.empty()) throw ConfigError("replay mode needs a fixture file");
}

GridSpec doubling_grid(const Rational& max) {
  if (max < 1) throw ConfigError("the grid maximum must be at least 1");
  GridSpec g;
  for (Rational c = 1; c <= max; c *= 2) g.values.push_back(c);
  if (g.values.back() != max) g.values.push_back(max);
  return g;
}

Json to_json(const RunConfig& c) {
  Json grid = Json::array();
  for (const auto& v : c.grid.values) grid.push_back(to_string(v));
  Json j{{"order", to_string(c.order)},
         {"grid", grid},
         {"backend", to_string(c.backend)},
         {"boxes_per_attempt", c.prover.boxes_per_attempt},
         {"total_boxes", c.prover.total_boxes},
         {"cover_samples", c.cover.samples},
         {"cover_seed", c.cover.seed},
         {"cas_timeout_seconds", c.cas_timeout_seconds},
         {"replay", c.replay},
         {"replay_path", c.replay_path},
         {"llm_model", c.llm.model},
         {"llm_endpoint", c.llm.endpoint},
         {"llm_max_retries", c.llm.max_retries},
         {"cas_executable", c.cas.executable},
         {"cas_max_concurrent", c.cas.max_concurrent},
         {"falsify_first", c.falsify_first}};
  j["decomposition"] = c.decomposition ? Json(*c.decomposition) : Json(nullptr);
  return j;
}

RunConfig run_config_from_json(const Json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("the run configuration must be a JSON object");
  try {
    if (j.contains("order")) c.order = proposer_order_from_string(j["order"].get<std::string>());
    if (j.contains("backend")) c.backend = backend_mode_from_string(j["backend"].get<std::string>());
    if (j.contains("grid")) {
      c.grid.values.clear();
      for (const auto& v : j["grid"]) c.grid.values.push_back(parse_rational(v.is_string() ? v.get<std::string>() : v.dump()));
    }
    if (j.contains("grid_max")) {
      const auto& v = j["grid_max"];
      c.grid = doubling_grid(parse_rational(v.is_string() ? v.get<std::string>() : v.dump()));
    }
    if (j.contains("boxes_per_attempt")) c.prover.boxes_per_attempt = j["boxes_per_attempt"].get<std::size_t>();
    if (j.contains("total_boxes")) c.prover.total_boxes = j["total_boxes"].get<std::size_t>();
    if (j.contains("cover_samples")) c.cover.samples = j["cover_samples"].get<std::size_t>();
    if (j.contains("cover_seed")) c.cover.seed = j["cover_seed"].get<std::uint64_t>();
    if (j.contains("cas_timeout_seconds")) c.cas_timeout_seconds = j["cas_timeout_seconds"].get<int>();
    if (j.contains("replay")) c.replay = j["replay"].get<bool>();
    if (j.contains("replay_path")) c.replay_path = j["replay_path"].get<std::string>();
    if (j.contains("llm_model")) c.llm.model = j["llm_model"].get<std::string>();
    if (j.contains("llm_endpoint")) c.llm.endpoint = j["llm_endpoint"].get<std::string>();
    if (j.contains("llm_max_retries")) c.llm.max_retries = j["llm_max_retries"].get<int>();
    if (j.contains("cas_executable")) c.cas.executable = j["cas_executable"].get<std::string>();
    if (j.contains("cas_max_concurrent")) c.cas.max_concurrent = j["cas_max_concurrent"].get<int>();
    if (j.contains("falsify_first")) c.falsify_first = j["falsify_first"].get<bool>();
    if (j.contains("decomposition")) {
      if (j["decomposition"].is_null()) c.decomposition.reset();
      else c.decomposition = j["decomposition"].get<std::string>();
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad run configuration: ") + e.what());
  } catch (const ExprError& e) {
    throw ConfigError(std::string("bad grid constant: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

Json to_json(const Counterexample& c) {
  return {{"point", decomp::to_json(c.point)}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"C", to_string(c.C)}, {"terms", c.terms}};
}

Counterexample counterexample_from_json(const Json& j) {
  Counterexample c;
  for (const auto& [k, v] : j.at("point").items()) c.point[k] = v.get<double>();
  c.lhs = j.at("lhs").get<double>();
  c.rhs = j.at("rhs").get<double>();
  c.C = parse_rational(j.at("C").get<std::string>());
  c.terms = j.value("terms", 0L);
  return c;
}

Json to_json(const CoverageReport& c) {
  Json j{{"status", to_string(c.status)}, {"samples", c.samples}, {"uncovered", c.uncovered}, {"reason", c.reason}};
  j["witness"] = c.witness.empty() ? Json(nullptr) : decomp::to_json(c.witness);
  return j;
}

CoverStatus cover_status_from_string(const std::string& s) {
  for (auto c : {CoverStatus::ProvedCover, CoverStatus::SampledCover, CoverStatus::NotCover})
    if (to_string(c) == s) return c;
  throw std::runtime_error("unknown coverage status '" + s + "'");
}

CoverageReport coverage_from_json(const Json& j) {
  CoverageReport c;
  c.status = cover_status_from_string(j.at("status").get<std::string>());
  c.samples = j.value("samples", std::size_t{0});
  c.uncovered = j.value("uncovered", std::size_t{0});
  c.reason = j.value("reason", "");
  if (j.contains("witness") && j["witness"].is_object())
    for (const auto& [k, v] : j["witness"].items()) c.witness[k] = v.get<double>();
  return c;
}

Json to_json(const BackendResult& b) {
  return {{"backend", b.backend}, {"status", b.status},   {"C", to_string(b.C)},  {"reason", b.reason},
          {"elapsed", b.elapsed}, {"boxes", b.boxes}, {"certificate", b.certificate}};
}

BackendResult backend_result_from_json(const Json& j) {
  BackendResult b;
  b.backend = j.at("backend").get<std::string>();
  b.status = j.at("status").get<std::string>();
  b.C = parse_rational(j.at("C").get<std::string>());
  b.reason = j.value("reason", "");
  b.elapsed = j.value("elapsed", 0.0);
  b.boxes = j.value("boxes", std::size_t{0});
  b.certificate = j.value("certificate", Json());
  return b;
}

Json to_json(const PieceRecord& p) {
  Json results = Json::array();
  for (const auto& b : p.results) results.push_back(to_json(b));
  Json j{{"label", p.label},
         {"kind", p.kind},
         {"region", to_json(p.region)},
         {"lhs", p.lhs.key()},
         {"rhs", p.rhs.key()},
         {"lhs_latex", render_latex(p.lhs)},
         {"rhs_latex", render_latex(p.rhs)},
         {"claim_region", to_json(p.claim_region)},
         {"results", results},
         {"agreement", p.agreement},
         {"reason", p.reason}};
  auto c = piece_constant(p);
  j["status"] = c ? "Proved" : "Unknown";
  j["C"] = c ? Json(to_string(*c)) : Json(nullptr);
  j["regime"] = p.regime ? Json::parse(serialize(*p.regime)) : Json(nullptr);
  return j;
}

PieceRecord piece_from_json(const Json& j) {
  PieceRecord p;
  p.label = j.at("label").get<std::string>();
  p.kind = j.at("kind").get<std::string>();
  p.region = region_from_json(j.at("region"));
  p.lhs = parse_sexpr(j.at("lhs").get<std::string>());
  p.rhs = parse_sexpr(j.at("rhs").get<std::string>());
  p.claim_region = region_from_json(j.at("claim_region"));
  for (const auto& b : j.at("results")) p.results.push_back(backend_result_from_json(b));
  p.agreement = j.value("agreement", "");
  p.reason = j.value("reason", "");
  if (j.contains("regime") && !j["regime"].is_null()) p.regime = deserialize_bound(j["regime"].dump());
  return p;
}

Json to_json(const AttemptSummary& a) {
  return {{"strategy", a.strategy},         {"origin", a.origin},
          {"decomposition", a.decomposition}, {"coverage", a.coverage},
          {"unknown_pieces", a.unknown_pieces}, {"reason", a.reason}};
}

AttemptSummary attempt_from_json(const Json& j) {
  AttemptSummary a;
  a.strategy = j.value("strategy", "");
  a.origin = j.value("origin", "");
  a.decomposition = j.value("decomposition", "");
  a.coverage = j.value("coverage", "");
  a.unknown_pieces = j.value("unknown_pieces", std::size_t{0});
  a.reason = j.value("reason", "");
  return a;
}

}  // namespace

std::optional<Rational> piece_constant(const PieceRecord& p) {
  std::optional<Rational> best;
  for (const auto& b : p.results)
    if (b.status == "Proved" && (!best || b.C < *best)) best = b.C;
  return best;
}

Verdict aggregate(const RunRecord& r) {
  Verdict v;
  if (r.verdict.counterexample) {
    v.status = VerdictStatus::Disproved;
    v.counterexample = r.verdict.counterexample;
    v.C_ceiling = r.verdict.counterexample->C;
    return v;
  }
  bool incident = false;
  for (const auto& p : r.pieces)
    if (p.agreement == "disagree") {
      incident = true;
      v.reasons.push_back(p.label + ": backends disagree");
    }
  if (incident) return v;
  if (!r.coverage) {
    v.reasons.push_back("no decomposition was verified");
    return v;
  }
  if (r.coverage->status == CoverStatus::NotCover) {
    v.reasons.push_back("the decomposition does not cover the domain: " + r.coverage->reason);
    return v;
  }
  if (r.pieces.empty()) {
    v.reasons.push_back("the decomposition has no pieces");
    return v;
  }
  Rational C = 0;
  bool all = true;
  for (const auto& p : r.pieces) {
    auto c = piece_constant(p);
    if (!c) {
      all = false;
      std::string why = p.reason;
      for (const auto& b : p.results)
        if (!b.reason.empty()) why += (why.empty() ? "" : "; ") + b.backend + ": " + b.reason;
      v.reasons.push_back(p.label + ": " + (why.empty() ? "not proved" : why));
      continue;
    }
    if (r.aggregation == "sum") C += *c;
    else if (*c > C) C = *c;
  }
  if (all) {
    v.status = VerdictStatus::Proved;
    v.C = C;
  }
  return v;
}

Json to_json(const RunRecord& r) {
  Json pieces = Json::array();
  for (const auto& p : r.pieces) pieces.push_back(to_json(p));
  Json attempts = Json::array();
  for (const auto& a : r.attempts) attempts.push_back(to_json(a));
  Json verdict{{"status", to_string(r.verdict.status)}, {"reasons", r.verdict.reasons}};
  verdict["C"] = r.verdict.status == VerdictStatus::Proved ? Json(to_string(r.verdict.C)) : Json(nullptr);
  verdict["counterexample"] = r.verdict.counterexample ? to_json(*r.verdict.counterexample) : Json(nullptr);
  verdict["C_ceiling"] =
      r.verdict.status == VerdictStatus::Disproved ? Json(to_string(r.verdict.C_ceiling)) : Json(nullptr);
  Json j{{"schema_version", r.schema_version},
         {"run_id", r.run_id},
         {"problem_id", r.problem_id},
         {"statement", r.statement},
         {"series", r.series},
         {"state", r.state},
         {"config", to_json(r.config)},
         {"strategy", r.strategy},
         {"origin", r.origin},
         {"decomposition", r.decomposition},
         {"aggregation", r.aggregation},
         {"pieces", pieces},
         {"verdict", verdict},
         {"attempts", attempts},
         {"transcripts", r.transcripts},
         {"errors", r.errors},
         {"assumptions", r.assumptions},
         {"warnings", r.warnings},
         {"soundness_incident", r.soundness_incident},
         {"started", r.started},
         {"finished", r.finished},
         {"wall_seconds", r.wall_seconds}};
  j["coverage"] = r.coverage ? to_json(*r.coverage) : Json(nullptr);
  return j;
}

RunRecord run_record_from_json(const Json& j) {
  RunRecord r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kSchemaVersion)
    throw std::runtime_error("unsupported schema version " + std::to_string(r.schema_version));
  r.run_id = j.value("run_id", "");
  r.problem_id = j.value("problem_id", "");
  r.statement = j.value("statement", "");
  r.series = j.value("series", false);
  r.state = j.value("state", "finished");
  r.config = run_config_from_json(j.at("config"));
  r.strategy = j.value("strategy", "");
  r.origin = j.value("origin", "");
  r.decomposition = j.value("decomposition", "");
  if (j.contains("coverage") && !j["coverage"].is_null()) r.coverage = coverage_from_json(j["coverage"]);
  r.aggregation = j.value("aggregation", "max");
  for (const auto& p : j.at("pieces")) r.pieces.push_back(piece_from_json(p));
  const Json& v = j.at("verdict");
  r.verdict.status = verdict_status_from_string(v.at("status").get<std::string>());
  if (v.contains("C") && !v["C"].is_null()) r.verdict.C = parse_rational(v["C"].get<std::string>());
  if (v.contains("C_ceiling") && !v["C_ceiling"].is_null())
    r.verdict.C_ceiling = parse_rational(v["C_ceiling"].get<std::string>());
  if (v.contains("counterexample") && !v["counterexample"].is_null())
    r.verdict.counterexample = counterexample_from_json(v["counterexample"]);
  r.verdict.reasons = v.value("reasons", std::vector<std::string>{});
  for (const auto& a : j.value("attempts", Json::array())) r.attempts.push_back(attempt_from_json(a));
  for (const auto& t : j.value("transcripts", Json::array())) r.transcripts.push_back(t);
  r.errors = j.value("errors", std::vector<std::string>{});
  r.assumptions = j.value("assumptions", std::vector<std::string>{});
  r.warnings = j.value("warnings", std::vector<std::string>{});
  r.soundness_incident = j.value("soundness_incident", false);
  r.started = j.value("started", "");
  r.finished = j.value("finished", "");
  r.wall_seconds = j.value("wall_seconds", 0.0);
  return r;
}

std::string certificate_text(const RunRecord& r) {
  std::ostringstream os;
  os << "verdict: " << to_string(r.verdict.status);
  if (r.verdict.status == VerdictStatus::Proved) os << " C = " << to_string(r.verdict.C);
  os << "\n";
  os << "problem: " << r.statement << "\n";
  if (!r.decomposition.empty()) {
    os << "decomposition (" << r.origin << "):\n";
    std::istringstream lines(r.decomposition);
    for (std::string line; std::getline(lines, line);) os << "  " << line << "\n";
  }
  if (r.coverage) os << "coverage: " << to_string(r.coverage->status) << " (" << r.coverage->reason << ")\n";
  os << "global constant: " << (r.aggregation == "sum" ? "sum over segments" : "maximum over pieces") << "\n";
  if (r.verdict.counterexample) {
    const auto& c = *r.verdict.counterexample;
    os << "counterexample:";
    for (const auto& [k, v] : c.point) os << " " << k << " = " << v;
    os << "\n  lhs = " << c.lhs << ", rhs = " << c.rhs << ", lhs > " << to_string(c.C) << " * rhs";
    if (c.terms) os << " (" << c.terms << " terms)";
    os << "\n";
  }
  std::size_t boxes = 0;
  for (const auto& p : r.pieces) {
    auto c = piece_constant(p);
    os << p.label << ": " << (c ? "Proved C = " + to_string(*c) : std::string("Unknown")) << "\n";
    os << "  claim: " << render_latex(p.lhs) << " <= C (" << render_latex(p.rhs) << ")\n";
    if (p.regime) {
      os << "  regime bound: summand <= " << to_string(p.regime->factor) << " * " << render_latex(p.regime->bound)
         << "\n";
      for (const auto& s : p.regime->steps)
        os << "    " << to_string(s.rule) << ": " << render_latex(s.before) << " -> " << to_string(s.factor) << " * "
           << render_latex(s.after) << "\n";
    }
    for (const auto& b : p.results) {
      os << "  [" << b.backend << "] " << b.status;
      if (b.status == "Proved") os << " at C = " << to_string(b.C);
      if (!b.reason.empty()) os << " (" << b.reason << ")";
      os << "\n";
      boxes += b.boxes;
      if (b.backend == "builtin" && b.certificate.is_object()) {
        for (const auto& s : b.certificate.value("steps", Json::array()))
          os << "    " << s.value("rule", "") << ": " << s.value("detail", "") << "\n";
        if (b.certificate.contains("boxes")) os << "    boxes: " << b.certificate["boxes"].get<std::size_t>() << "\n";
      }
    }
  }
  os << "interval budget consumed: " << boxes << " boxes\n";
  if (!r.assumptions.empty()) {
    os << "assumptions:\n";
    for (const auto& a : r.assumptions) os << "  " << a << "\n";
  }
  return os.str();
}

}  // namespace decomp
