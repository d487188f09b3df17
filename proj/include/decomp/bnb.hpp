#pragma once

// Interval branch-and-bound for claims of the form H >= 0 on a region.
//
// A box is discharged when some candidate form of H has a nonnegative lower
// bound on it. Candidates are H itself and H / t for every positive term t of
// H (valid where t > 0 on the box). Lower bounds are summed per term; each
// term is bounded by plain interval evaluation, tightened by evaluating it at
// the box corner selected by its monotonicity in every variable. Monotonicity
// is read off the interval sign of the (logarithmic) partial derivative, or of
// that derivative divided by one of its own sign-definite terms.

#include "decomp/expr.hpp"
#include "decomp/interval.hpp"
#include "decomp/region.hpp"

#include <cstddef>
#include <string>

namespace decomp {

enum class BoxOutcome { Proved, Counterexample, Exhausted, Stuck };

std::string to_string(BoxOutcome o);

struct BoxProofOptions {
  std::size_t max_boxes = 4000;
  bool search_counterexamples = true;
};

struct BoxProofResult {
  BoxOutcome outcome = BoxOutcome::Exhausted;
  std::size_t boxes = 0;
  Assignment witness;  // for Counterexample: a point of the region with H < 0
  std::string note;
};

/// Proves H >= 0 on every point of r. `budget`, when given, is a shared box
/// counter that is decremented and caps the search together with max_boxes.
BoxProofResult prove_nonnegative(const Expr& H, const Region& r, const BoxProofOptions& opts = {},
                                 std::size_t* budget = nullptr);

/// True when the point satisfies every constraint of r under outward-rounded
/// evaluation (no rounding artifact can make it feasible).
bool certainly_satisfies(const Region& r, const Assignment& a);

/// Interval enclosure of e over the box implied by r's single-variable bounds.
Interval region_enclosure(const Expr& e, const Region& r);

}  // namespace decomp
