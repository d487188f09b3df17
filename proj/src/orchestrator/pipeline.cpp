#include "decomp/orchestrator.hpp"

#include "decomp/problem.hpp"

#include <chrono>
#include <future>
#include <memory>
#include <set>

namespace decomp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string constraints_latex(const std::vector<Constraint>& cs) {
  std::string out;
  for (const auto& c : cs) out += (out.empty() ? "" : ", ") + render_latex(c);
  return out;
}

std::vector<Constraint> own_constraints(const Region& piece, const Region& parent) {
  std::set<std::string> base;
  for (const auto& c : parent.constraints()) base.insert(c.key());
  std::vector<Constraint> out;
  for (const auto& c : piece.constraints())
    if (!base.count(c.key())) out.push_back(c);
  return out;
}

Json builtin_certificate(const PieceResult& r) {
  Json steps = Json::array();
  for (const auto& s : r.cert.steps) steps.push_back({{"rule", s.rule}, {"detail", s.detail}});
  Json attempts = Json::array();
  for (const auto& a : r.attempts)
    attempts.push_back({{"C", to_string(a.C)}, {"status", to_string(a.status)}, {"reason", a.reason}});
  Json j{{"attempts", attempts}, {"boxes", r.boxes}};
  if (r.proved) {
    j["strategy"] = r.cert.strategy;
    j["steps"] = steps;
    j["residual"] = r.cert.residual.key();
    j["residual_region"] = to_json(r.cert.residual_region);
  }
  return j;
}

BackendResult run_builtin(const PieceRecord& piece, const RunConfig& cfg) {
  auto t0 = Clock::now();
  BackendResult b;
  b.backend = "builtin";
  PieceResult r;
  try {
    r = grid_search(piece.lhs, piece.rhs, piece.claim_region, cfg.grid, cfg.prover);
  } catch (const std::exception& e) {
    b.status = "Unknown";
    b.reason = std::string("error: ") + e.what();
    b.elapsed = seconds_since(t0);
    return b;
  }
  b.status = r.proved ? "Proved" : "Unknown";
  b.C = r.proved ? r.C : Rational(0);
  b.reason = r.proved ? "" : r.reason;
  b.boxes = r.boxes;
  b.certificate = builtin_certificate(r);
  b.elapsed = seconds_since(t0);
  return b;
}

BackendResult run_cas(const PieceRecord& piece, const RunConfig& cfg, CasBridge& cas, std::vector<Json>& log) {
  auto t0 = Clock::now();
  BackendResult b;
  b.backend = "cas";
  b.status = "Unknown";
  try {
    CasPieceResult r = cas_grid_search(cas, piece.lhs, piece.rhs, piece.claim_region, cfg.grid, cfg.cas_timeout_seconds);
    Json replies = Json::array();
    bool all_false = !r.replies.empty();
    for (const auto& [C, rep] : r.replies) {
      replies.push_back({{"C", to_string(C)}, {"status", to_string(rep.status)}});
      if (rep.status != ResolveStatus::False) all_false = false;
      log.push_back({{"kind", "cas"},
                     {"piece", piece.label},
                     {"C", to_string(C)},
                     {"query", build_resolve_query(piece.lhs, piece.rhs, piece.claim_region, C, cfg.cas_timeout_seconds).text},
                     {"raw", rep.raw},
                     {"status", to_string(rep.status)},
                     {"cached", rep.cached},
                     {"timed_out", rep.timed_out},
                     {"exit_code", rep.exit_code},
                     {"elapsed", rep.elapsed}});
    }
    b.certificate = {{"replies", replies}};
    if (r.proved) {
      b.status = "Proved";
      b.C = r.C;
    } else {
      if (all_false && r.replies.size() == cfg.grid.values.size()) b.status = "False";
      b.reason = r.reason;
    }
  } catch (const std::exception& e) {
    b.reason = std::string("error: ") + e.what();
  }
  b.elapsed = seconds_since(t0);
  return b;
}

bool has_attempt(const Json& cert, const std::string& key, const Rational& C, const std::string& status) {
  if (!cert.is_object() || !cert.contains(key)) return false;
  for (const auto& a : cert[key])
    if (a.value("C", "") == to_string(C) && a.value("status", "") == status) return true;
  return false;
}

// A builtin proof at C contradicted by a CAS False at the same C, or the
// other way round.
std::string agreement(const PieceRecord& p) {
  const BackendResult* builtin = nullptr;
  const BackendResult* cas = nullptr;
  for (const auto& b : p.results) (b.backend == "builtin" ? builtin : cas) = &b;
  if (!builtin || !cas) return "";
  if (builtin->status == "Proved" && has_attempt(cas->certificate, "replies", builtin->C, "False")) return "disagree";
  if (cas->status == "Proved" && has_attempt(builtin->certificate, "attempts", cas->C, "Refuted")) return "disagree";
  return "agree";
}

void verify_pieces(std::vector<PieceRecord>& pieces, const RunConfig& cfg, CasBridge* cas, RunRecord& rec) {
  bool builtin = cfg.backend != BackendMode::Cas;
  bool use_cas = cfg.backend != BackendMode::Builtin;
  std::vector<std::vector<Json>> logs(pieces.size());
  std::vector<std::future<void>> jobs;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (!pieces[i].reason.empty()) continue;
    jobs.push_back(std::async(std::launch::async, [&, i] {
      PieceRecord& p = pieces[i];
      if (builtin) p.results.push_back(run_builtin(p, cfg));
      if (use_cas) {
        if (cas && cas->available()) {
          p.results.push_back(run_cas(p, cfg, *cas, logs[i]));
        } else {
          BackendResult b;
          b.backend = "cas";
          b.status = "Unknown";
          b.reason = "CAS unavailable";
          p.results.push_back(b);
        }
      }
      p.agreement = agreement(p);
    }));
  }
  for (auto& j : jobs) j.get();
  for (auto& l : logs)
    for (auto& t : l) rec.transcripts.push_back(std::move(t));
}

std::size_t unknown_count(const std::vector<PieceRecord>& pieces) {
  std::size_t n = 0;
  for (const auto& p : pieces)
    if (!piece_constant(p)) ++n;
  return n;
}

std::string witness_text(const Assignment& a) {
  std::string out;
  for (const auto& [k, v] : a) out += (out.empty() ? "" : ", ") + k + " = " + std::to_string(v);
  return out;
}

}  // namespace

std::vector<std::string> strategy_sequence(const RunConfig& cfg) {
  if (cfg.decomposition) return {"manual"};
  switch (cfg.order) {
    case ProposerOrder::HeuristicFirst: return {"heuristic", "llm"};
    case ProposerOrder::LlmFirst: return {"llm", "heuristic"};
    case ProposerOrder::LlmOnly: return {"llm"};
    case ProposerOrder::HeuristicOnly: return {"heuristic"};
  }
  return {};
}

std::vector<Decomposition> propose_candidates(const ProblemStatement& p, const std::string& strategy,
                                              const RunConfig& cfg, Transport* transport,
                                              std::vector<Json>& transcripts, std::vector<std::string>& errors) {
  std::vector<Decomposition> out;
  if (strategy == "manual") {
    try {
      Decomposition d = parse_decomposition_text(p, cfg.decomposition.value_or(""));
      d.origin = "manual";
      out.push_back(d);
    } catch (const DecomposerError& e) {
      errors.push_back("manual: " + e.code + ": " + e.what());
    }
    return out;
  }
  if (strategy == "heuristic") {
    try {
      out = heuristic_propose(p);
    } catch (const DecomposerError& e) {
      errors.push_back("heuristic: " + e.code + ": " + e.what());
    }
    Decomposition t = trivial_decomposition(p);
    std::string key = render_decomposition_text(p, t);
    bool seen = false;
    for (const auto& d : out) seen = seen || render_decomposition_text(p, d) == key;
    if (!seen) out.push_back(t);
    return out;
  }
  if (strategy == "llm") {
    std::unique_ptr<Transport> owned;
    if (!transport) {
      try {
        if (cfg.replay) {
          owned = std::make_unique<ReplayTransport>(cfg.replay_path);
        } else if (!cfg.llm.endpoint.empty()) {
          owned = std::make_unique<HttpTransport>(cfg.llm.endpoint, cfg.llm.api_key, cfg.llm.timeout_seconds);
        } else {
          errors.push_back("llm: NotConfigured: no model endpoint is configured");
          return out;
        }
      } catch (const DecomposerError& e) {
        errors.push_back("llm: " + e.code + ": " + e.what());
        return out;
      }
      transport = owned.get();
    }
    try {
      LlmProposal prop = llm_propose(p, cfg.llm, *transport);
      for (const auto& t : prop.transcripts) {
        Json j = to_json(t, p);
        j["kind"] = "llm";
        transcripts.push_back(j);
      }
      out.push_back(prop.decomposition);
    } catch (const LlmError& e) {
      for (const auto& t : e.transcripts) {
        Json j = to_json(t, p);
        j["kind"] = "llm";
        transcripts.push_back(j);
      }
      errors.push_back("llm: " + e.code + ": " + e.what());
    } catch (const DecomposerError& e) {
      errors.push_back("llm: " + e.code + ": " + e.what());
    }
    return out;
  }
  errors.push_back("unknown proposer '" + strategy + "'");
  return out;
}

std::vector<PieceRecord> piece_claims(const ProblemStatement& p, const Decomposition& d, const RunConfig& cfg) {
  std::vector<PieceRecord> out;
  if (!p.is_series()) {
    const auto& q = p.inequality();
    const auto& pieces = d.cover().pieces;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      PieceRecord r;
      std::string own = constraints_latex(own_constraints(pieces[i], q.region));
      r.label = "piece " + std::to_string(i + 1) + (own.empty() ? " (whole domain)" : ": " + own);
      r.kind = "piece";
      r.region = pieces[i];
      r.lhs = q.lhs;
      r.rhs = q.rhs;
      r.claim_region = pieces[i];
      out.push_back(std::move(r));
    }
    return out;
  }
  const auto& s = p.series();
  SeriesOptions so;
  so.grid = cfg.grid;
  so.prover = cfg.prover;
  so.verify = false;
  SeriesResult sr = prove_series(s, d.breakpoints().ladder, so);
  for (const auto& seg : sr.segments) {
    PieceRecord r;
    r.kind = seg.kind;
    if (seg.kind == "head") {
      r.label = "head " + s.index + " = " + render_latex(seg.start);
    } else if (seg.kind == "geometric") {
      r.label = "geometric " + s.index + " >= " + render_latex(seg.start);
    } else {
      r.label = "segment [" + render_latex(seg.start) + ", " + (seg.end ? render_latex(*seg.end) : "\\infty") + "]";
    }
    r.region = seg.region;
    r.regime = seg.regime;
    r.claim_region = seg.claim_region;
    r.rhs = s.target;
    if (seg.reason != "not verified") {
      r.reason = seg.reason;
      r.lhs = constant(0);
    } else {
      r.lhs = seg.sum_bound;
    }
    out.push_back(std::move(r));
  }
  return out;
}

RunRecord prove_pipeline(const ProblemStatement& p, const RunConfig& cfg, const std::string& problem_id,
                         const PipelineHooks& hooks) {
  auto t0 = Clock::now();
  RunRecord rec;
  rec.problem_id = problem_id;
  rec.statement = render_canonical(p);
  rec.series = p.is_series();
  rec.config = cfg;
  rec.config.llm.api_key.clear();
  rec.aggregation = p.is_series() ? "sum" : "max";
  rec.started = utc_now();
  rec.state = "running";
  const Region& domain = p.is_series() ? p.series().params : p.inequality().region;
  for (const auto& c : domain.constraints()) rec.assumptions.push_back(render_latex(c));
  rec.assumptions.push_back(p.is_series() ? "global constant is the sum of the segment constants"
                                          : "global constant is the maximum of the piece constants");

  auto finish = [&]() {
    rec.verdict = aggregate(rec);
    rec.soundness_incident = false;
    for (const auto& piece : rec.pieces) rec.soundness_incident = rec.soundness_incident || piece.agreement == "disagree";
    rec.state = "finished";
    rec.finished = utc_now();
    rec.wall_seconds = seconds_since(t0);
    if (hooks.progress) hooks.progress(rec);
    return rec;
  };

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    rec.errors.push_back(std::string("config: ") + e.what());
    return finish();
  }
  if (hooks.progress) hooks.progress(rec);

  if (cfg.falsify_first) {
    FalsifyOptions fo;
    fo.C = cfg.grid.max();
    std::optional<Counterexample> cx;
    try {
      cx = p.is_series() ? falsify_series(p.series(), fo)
                         : falsify(p.inequality().lhs, p.inequality().rhs, p.inequality().region, fo);
    } catch (const std::exception& e) {
      rec.errors.push_back(std::string("falsify: ") + e.what());
    }
    if (cx) {
      rec.verdict.counterexample = *cx;
      return finish();
    }
  }

  std::unique_ptr<CasBridge> owned_cas;
  CasBridge* cas = hooks.cas;
  if (!cas && cfg.backend != BackendMode::Builtin) {
    owned_cas = std::make_unique<CasBridge>(cfg.cas);
    cas = owned_cas.get();
  }
  if (cas && !cas->available()) rec.errors.push_back("cas: ExecutableMissing: the CAS executable is not available");

  struct Best {
    std::string strategy, origin, text;
    CoverageReport coverage;
    std::vector<PieceRecord> pieces;
    std::size_t unknown = 0;
  };
  std::optional<Best> best;
  std::optional<Best> rejected;  // last NotCover candidate

  for (const auto& strategy : strategy_sequence(cfg)) {
    auto candidates = propose_candidates(p, strategy, cfg, hooks.transport, rec.transcripts, rec.errors);
    for (const auto& d : candidates) {
      Best b;
      b.strategy = strategy;
      b.origin = d.origin;
      b.text = render_decomposition_text(p, d);
      b.coverage = validate_cover(p, d, cfg.cover);
      if (b.coverage.status == CoverStatus::NotCover) {
        std::string w = "decomposition from " + d.origin + " is not a cover: " + b.coverage.reason;
        if (!b.coverage.witness.empty()) w += " (witness " + witness_text(b.coverage.witness) + ")";
        rec.warnings.push_back(w);
        rec.attempts.push_back({strategy, d.origin, b.text, to_string(b.coverage.status), 0, b.coverage.reason});
        rejected = b;
        continue;
      }
      if (b.coverage.status == CoverStatus::NotCover) throw std::logic_error("a non-cover reached verification");
      try {
        b.pieces = piece_claims(p, d, cfg);
      } catch (const std::exception& e) {
        rec.attempts.push_back({strategy, d.origin, b.text, to_string(b.coverage.status), 0, e.what()});
        continue;
      }
      rec.strategy = b.strategy;
      rec.origin = b.origin;
      rec.decomposition = b.text;
      rec.coverage = b.coverage;
      rec.pieces = b.pieces;
      if (hooks.progress) hooks.progress(rec);
      verify_pieces(b.pieces, cfg, cas, rec);
      b.unknown = unknown_count(b.pieces);
      rec.pieces = b.pieces;
      if (hooks.progress) hooks.progress(rec);
      if (b.unknown == 0 && !b.pieces.empty()) return finish();
      std::string why;
      for (const auto& piece : b.pieces)
        if (!piece_constant(piece)) {
          why = piece.label;
          break;
        }
      rec.attempts.push_back(
          {strategy, d.origin, b.text, to_string(b.coverage.status), b.unknown, "not proved: " + why});
      if (!best || b.unknown < best->unknown) best = std::move(b);
    }
  }
  std::optional<Best>& chosen = best ? best : rejected;
  if (chosen) {
    rec.strategy = chosen->strategy;
    rec.origin = chosen->origin;
    rec.decomposition = chosen->text;
    rec.coverage = chosen->coverage;
    rec.pieces = chosen->pieces;
  } else {
    rec.strategy.clear();
    rec.origin.clear();
    rec.decomposition.clear();
    rec.coverage.reset();
    rec.pieces.clear();
  }
  return finish();
}

std::vector<GoldenQuery> golden_queries(const CorpusEntry& e, const RunConfig& cfg) {
  ParseOptions po;
  po.allow_unconstrained = e.allow_unconstrained;
  auto parsed = parse_problem(e.statement, po);
  if (!parsed.ok()) throw std::runtime_error(e.id + " does not parse");
  const ProblemStatement& p = *parsed.problem;
  std::vector<Json> transcripts;
  std::vector<std::string> errors;
  auto candidates = propose_candidates(p, "heuristic", cfg, nullptr, transcripts, errors);
  std::vector<GoldenQuery> out;
  auto pieces = piece_claims(p, candidates.front(), cfg);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    GoldenQuery g;
    g.file = e.id + "_" + std::to_string(i + 1) + ".m";
    if (!pieces[i].reason.empty()) {
      g.text = "(* no claim: " + pieces[i].reason + " *)\n";
    } else {
      try {
        g.text = build_resolve_query(pieces[i].lhs, pieces[i].rhs, pieces[i].claim_region, cfg.grid.values.front(),
                                     cfg.cas_timeout_seconds)
                     .text +
                 "\n";
      } catch (const UnrenderableExpr& ex) {
        g.text = std::string("(* unrenderable: ") + ex.what() + " *)\n";
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace decomp
