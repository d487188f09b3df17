#pragma once

#include "decomp/problem.hpp"
#include "decomp/region.hpp"

#include <cstdint>
#include <optional>
#include <random>

namespace decomp {

/// Draws points of a region. Each variable is sampled inside the interval left
/// by its bounds, with the distance to the nearest finite end drawn
/// log-uniformly over [1e-6, 1e6] (or [1e-6, 1] times the width for bounded
/// variables), so both boundaries and large scales are visited.
class RegionSampler {
 public:
  RegionSampler(const Region& r, std::uint64_t seed);

  /// A point satisfying every constraint under double evaluation, if found
  /// within `tries` draws.
  std::optional<Assignment> sample(int tries = 64);

  std::mt19937_64& rng() { return rng_; }

 private:
  double draw(double lo, double hi);

  Region region_;
  std::vector<std::string> order_;
  std::map<std::string, VarBounds> bounds_;
  std::vector<Threshold> thresholds_;
  std::mt19937_64 rng_;
  int attempt_ = 0;
};

struct Counterexample {
  Assignment point;
  double lhs = 0;  // f, or the verified partial sum for series
  double rhs = 0;  // g, or the target
  Rational C = 0;
  long terms = 0;  // series only: partial sum length
};

struct FalsifyOptions {
  std::size_t samples = 2000;
  std::size_t ascent_rounds = 200;
  std::uint64_t seed = 0x5eedf00dULL;
  Rational C = 10000;
  /// Series only.
  std::size_t series_samples = 64;
  long max_terms = 20000;
};

/// Searches for a feasible point with f > C g. Any returned point is verified
/// with outward-rounded arithmetic.
std::optional<Counterexample> falsify(const Expr& f, const Expr& g, const Region& r, const FalsifyOptions& opts = {});

/// Searches for parameters whose partial sum already exceeds C times the
/// target. Requires the summand to be nonnegative beyond the partial sum,
/// which is checked.
std::optional<Counterexample> falsify_series(const SeriesProblem& p, const FalsifyOptions& opts = {});

}  // namespace decomp
