#pragma once

#include "decomp/bnb.hpp"
#include "decomp/expr.hpp"
#include "decomp/region.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace decomp {

/// Candidate constants, tried in increasing order.
struct GridSpec {
  std::vector<Rational> values;

  /// 1, 2, 4, ..., 8192, 10000.
  static GridSpec standard();
  static GridSpec single(const Rational& c);
  const Rational& max() const { return values.back(); }
};

struct ProofStep {
  std::string rule;
  std::string detail;
};

/// Everything needed to re-check a proof of f <= C g on a region.
struct Certificate {
  std::string backend = "builtin";
  Rational C = 0;
  std::string strategy;
  std::vector<ProofStep> steps;
  /// The final claim residual >= 0 that was discharged on `residual_region`.
  Expr residual;
  Region residual_region;
  std::size_t boxes = 0;
};

struct ProverOptions {
  std::size_t boxes_per_attempt = 4000;
  std::size_t total_boxes = 100000;
};

enum class AttemptStatus { Proved, Refuted, Unknown };

std::string to_string(AttemptStatus s);

struct ProveAttempt {
  AttemptStatus status = AttemptStatus::Unknown;
  Certificate cert;  // when Proved
  Assignment witness;  // when Refuted: a feasible point with f > C g
  std::string reason;
  std::size_t boxes = 0;
};

/// Tries to prove f <= C g on r. Refuted is only reported for a verified
/// feasible point where f > C g.
ProveAttempt prove_piece(const Expr& f, const Expr& g, const Region& r, const Rational& C,
                         const ProverOptions& opts = {}, std::size_t* budget = nullptr);

struct GridAttempt {
  Rational C;
  AttemptStatus status;
  std::string reason;
};

struct PieceResult {
  bool proved = false;
  Rational C = 0;  // smallest grid value proved
  Certificate cert;
  std::string reason;
  std::size_t boxes = 0;
  std::vector<GridAttempt> attempts;
};

/// Smallest grid constant for which prove_piece succeeds.
PieceResult grid_search(const Expr& f, const Expr& g, const Region& r, const GridSpec& grid = GridSpec::standard(),
                        const ProverOptions& opts = {});

/// +1 when e is nondecreasing in t.var, -1 when nonincreasing, 0 when
/// undecided, on every segment from a feasible point to the point where t.var
/// takes the threshold value.
int monotone_along(const Expr& e, const Threshold& t, const Region& r);

/// Rewrites log(a b) as log a + log b and log(a^p) as p log a wherever the
/// factors are positive on r.
Expr expand_logs(const Expr& e, const Region& r);

/// Common degree of a homogeneous expression (every monomial has the same
/// total degree), if any.
std::optional<Rational> homogeneous_degree(const Expr& e);

}  // namespace decomp
