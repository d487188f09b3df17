#pragma once

#include "decomp/problem.hpp"
#include "decomp/prover.hpp"
#include "decomp/simplifier.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace decomp {

class SeriesError : public std::runtime_error {
 public:
  SeriesError(std::string code, const std::string& message) : std::runtime_error(message), code(std::move(code)) {}
  std::string code;  // DivergentTail, NonMonotoneBound or NotMonomial
};

/// Closed-form upper bound, in the parameters only, for the sum of
/// rb.factor * rb.bound over the integers d with a <= d < b (b absent means
/// infinity). rb.bound must be P * d^k with P free of d.
///   k >= 0: factor * integral of the bound over [a, b + 1]
///   k < 0:  factor * (bound at a + integral over [a, b])
Expr bound_segment_sum(const RegimeBound& rb, const std::string& index, const Expr& a, const std::optional<Expr>& b,
                       const Region& params);

struct SeriesOptions {
  GridSpec grid = GridSpec::standard();
  ProverOptions prover;
  SimplifierOptions simplifier;
  /// When false, segments are bounded but no constant is searched for.
  bool verify = true;
};

struct SegmentResult {
  /// "head" for the first term, "segment" for an integral-comparison
  /// segment, "geometric" for the closed-form geometric case.
  std::string kind;
  Expr start;
  std::optional<Expr> end;  // absent: infinity
  Region region;            // the index range with the parameter constraints
  std::optional<RegimeBound> regime;
  Expr sum_bound;           // bound on the segment sum, in the parameters
  Region claim_region;
  PieceResult piece;
  bool proved = false;
  Rational C = 0;
  std::string reason;
};

struct SeriesResult {
  bool proved = false;
  Rational C = 0;  // sum of the segment constants
  std::vector<SegmentResult> segments;
  std::string reason;
};

/// Proves sum_{d >= start} summand <= C * target uniformly over the
/// parameters, splitting the index range at the given ladder.
SeriesResult prove_series(const SeriesProblem& p, const std::vector<Expr>& ladder, const SeriesOptions& opts = {});

/// Exact sum when the summand is P * exp(alpha * d + beta) with alpha < 0
/// independent of d.
std::optional<Expr> geometric_sum(const SeriesProblem& p);

}  // namespace decomp
