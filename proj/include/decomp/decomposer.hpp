#pragma once

#include "decomp/problem.hpp"
#include "decomp/region.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace decomp {

/// Pieces D_i of a region cover. Each piece holds every constraint of the
/// parent domain plus its own.
struct RegionCover {
  std::vector<Region> pieces;
};

/// Interior breakpoints d_1 .. d_k of a series index range, in the parameters.
struct Breakpoints {
  std::vector<Expr> ladder;
};

struct Decomposition {
  std::variant<RegionCover, Breakpoints> body;
  /// Where it came from: "trivial", "crossover", "ordering", "max", "ladder",
  /// "llm" or "manual".
  std::string origin;

  bool is_ladder() const { return std::holds_alternative<Breakpoints>(body); }
  const RegionCover& cover() const { return std::get<RegionCover>(body); }
  const Breakpoints& breakpoints() const { return std::get<Breakpoints>(body); }
  /// Piece count, or segment count for a ladder.
  std::size_t k() const;
  std::string describe() const;
};

class DecomposerError : public std::runtime_error {
 public:
  DecomposerError(std::string code, const std::string& message)
      : std::runtime_error(message), code(std::move(code)) {}
  /// NoCandidate, MalformedReply, ProviderError or FixtureMiss.
  std::string code;
};

/// The whole domain as one piece, or the empty ladder.
Decomposition trivial_decomposition(const ProblemStatement& p);

/// Deterministic candidates in priority order: crossover threshold splits,
/// variable-ordering covers for symmetric problems, and breakpoint ladders at
/// the points where a denominator term reaches 1. At most 8. Throws
/// NoCandidate when nothing applies.
std::vector<Decomposition> heuristic_propose(const ProblemStatement& p);

/// The threshold for `t1 <= c t2` solved for v, where it matches a known
/// shape (power products, or an exponential against a power product).
std::vector<Constraint> crossover_thresholds(const Expr& t1, const Expr& t2, const Region& r);

/// True when swapping any two variables leaves lhs, rhs and the region
/// unchanged.
bool is_symmetric(const InequalityProblem& p);

enum class CoverStatus { ProvedCover, SampledCover, NotCover };
std::string to_string(CoverStatus s);

struct CoverageReport {
  CoverStatus status = CoverStatus::NotCover;
  std::size_t samples = 0;
  std::size_t uncovered = 0;
  Assignment witness;  // NotCover: a point of the domain outside every piece
  std::string reason;
};

struct CoverOptions {
  std::size_t samples = 10000;
  std::uint64_t seed = 0xc0fe5eedULL;
};

/// ProvedCover for complementary threshold pairs, full ordering covers and
/// max covers (recognized structurally), and for ladders the prover shows to
/// be nondecreasing; otherwise samples the domain.
CoverageReport validate_cover(const ProblemStatement& p, const Decomposition& d, const CoverOptions& opts = {});

/// Region of the points where variable `name` is the largest: name >= v for
/// every other v.
std::vector<Constraint> max_constraints(const std::vector<std::string>& vars, const std::string& name);

/// Reads a decomposition in the line format used for model replies: one
/// piece per line (comma-separated constraints) for inequalities, one
/// breakpoint expression per line for series. Throws MalformedReply.
Decomposition parse_decomposition_text(const ProblemStatement& p, const std::string& text);
std::string render_decomposition_text(const ProblemStatement& p, const Decomposition& d);

}  // namespace decomp
