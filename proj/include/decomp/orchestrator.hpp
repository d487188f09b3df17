#pragma once

// End-to-end runs: propose a decomposition, check that it covers the domain,
// verify every piece on the enabled backends and aggregate a verdict.

#include "decomp/cas.hpp"
#include "decomp/decomposer.hpp"
#include "decomp/falsify.hpp"
#include "decomp/json_io.hpp"
#include "decomp/llm.hpp"
#include "decomp/series.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace decomp {

inline constexpr int kSchemaVersion = 1;

enum class ProposerOrder { HeuristicFirst, LlmFirst, LlmOnly, HeuristicOnly };
std::string to_string(ProposerOrder o);
ProposerOrder proposer_order_from_string(const std::string& s);

enum class BackendMode { Builtin, Cas, Both };
std::string to_string(BackendMode b);
BackendMode backend_mode_from_string(const std::string& s);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ProposerOrder order = ProposerOrder::HeuristicFirst;
  GridSpec grid = GridSpec::standard();
  BackendMode backend = BackendMode::Builtin;
  ProverOptions prover;
  CoverOptions cover;
  int cas_timeout_seconds = 60;
  /// Replay mode answers model prompts from `replay_path` and never opens a
  /// connection.
  bool replay = false;
  std::string replay_path;
  ProposerConfig llm;
  CasConfig cas;
  /// A user-supplied decomposition in the line format; skips the proposers.
  std::optional<std::string> decomposition;
  bool falsify_first = true;

  /// Throws ConfigError.
  void validate() const;
};

/// Grid 1, 2, 4, ... doubling up to and including `max` (which is appended
/// when it is not a power of two).
GridSpec doubling_grid(const Rational& max);

Json to_json(const RunConfig& c);
/// Fields absent from j keep their values from `base`.
RunConfig run_config_from_json(const Json& j, RunConfig base = {});

/// One backend's answer for one piece.
struct BackendResult {
  std::string backend;  // builtin or cas
  std::string status;   // Proved, Unknown or False
  Rational C = 0;
  std::string reason;
  double elapsed = 0;
  std::size_t boxes = 0;
  Json certificate;  // builtin: rule steps and residual; cas: queries
};

struct PieceRecord {
  std::string label;
  std::string kind;  // piece, head, segment or geometric
  Region region;     // the piece, or the index range of a segment
  Expr lhs, rhs;     // the claim lhs <= C rhs that was checked
  Region claim_region;
  std::optional<RegimeBound> regime;
  std::vector<BackendResult> results;
  /// agree, disagree or empty when fewer than two backends answered.
  std::string agreement;
  std::string reason;  // why no claim could be formed, if so
};

/// Smallest proved constant over the piece's backends.
std::optional<Rational> piece_constant(const PieceRecord& p);

enum class VerdictStatus { Proved, Disproved, Unknown };
std::string to_string(VerdictStatus s);
VerdictStatus verdict_status_from_string(const std::string& s);

struct Verdict {
  VerdictStatus status = VerdictStatus::Unknown;
  Rational C = 0;  // Proved: the global constant
  std::optional<Counterexample> counterexample;
  Rational C_ceiling = 0;  // Disproved: the largest constant tried
  std::vector<std::string> reasons;
};

/// A decomposition that was tried and did not prove.
struct AttemptSummary {
  std::string strategy;
  std::string origin;
  std::string decomposition;
  std::string coverage;
  std::size_t unknown_pieces = 0;
  std::string reason;
};

struct RunRecord {
  int schema_version = kSchemaVersion;
  std::string run_id;
  std::string problem_id;
  std::string statement;  // canonical form
  bool series = false;
  std::string state = "pending";  // pending, running or finished
  RunConfig config;
  std::string strategy;  // proposer that produced the decomposition
  std::string origin;
  std::string decomposition;  // line format
  std::optional<CoverageReport> coverage;
  /// "max" over region pieces or "sum" over series segments.
  std::string aggregation = "max";
  std::vector<PieceRecord> pieces;
  Verdict verdict;
  std::vector<AttemptSummary> attempts;
  std::vector<Json> transcripts;
  std::vector<std::string> errors;
  std::vector<std::string> assumptions;
  std::vector<std::string> warnings;
  bool soundness_incident = false;
  std::string started, finished;  // UTC timestamps
  double wall_seconds = 0;
};

Json to_json(const RunRecord& r);
RunRecord run_record_from_json(const Json& j);

/// Recomputes the verdict from the pieces, the coverage report and the
/// counterexample alone.
Verdict aggregate(const RunRecord& r);

/// Plain-text certificate: verdict, per-piece constants and rule steps,
/// interval budget and assumptions.
std::string certificate_text(const RunRecord& r);

struct PipelineHooks {
  /// Overrides the transport built from the configuration.
  Transport* transport = nullptr;
  /// Overrides the bridge built from the configuration.
  CasBridge* cas = nullptr;
  /// Called with a snapshot whenever a piece finishes.
  std::function<void(const RunRecord&)> progress;
};

RunRecord prove_pipeline(const ProblemStatement& p, const RunConfig& cfg, const std::string& problem_id = "",
                         const PipelineHooks& hooks = {});

/// The claims a decomposition reduces to, one per piece or segment, before
/// any backend runs.
std::vector<PieceRecord> piece_claims(const ProblemStatement& p, const Decomposition& d, const RunConfig& cfg = {});

/// Decomposition candidates from one proposer ("heuristic", "llm" or
/// "manual"), in the order they should be tried. Proposer failures are
/// appended to `errors` and model exchanges to `transcripts`.
std::vector<Decomposition> propose_candidates(const ProblemStatement& p, const std::string& strategy,
                                              const RunConfig& cfg, Transport* transport,
                                              std::vector<Json>& transcripts, std::vector<std::string>& errors);

/// Proposers in the order the configuration tries them.
std::vector<std::string> strategy_sequence(const RunConfig& cfg);

struct GoldenQuery {
  std::string file;  // <problem id>_<piece number>.m
  std::string text;  // query text with a trailing newline
};

/// Resolve queries at the first grid constant for every piece of the first
/// heuristic candidate of a corpus problem.
std::vector<GoldenQuery> golden_queries(const CorpusEntry& e, const RunConfig& cfg = {});

/// Exit status of the command-line tool for a verdict.
int exit_code(VerdictStatus s);

std::string utc_now();

}  // namespace decomp
