#pragma once

// Regime-wise dominant-term bounds.
//
// dominate_bound rewrites every sum of an expression, outermost first, by one
// of its terms: a sum bounded from above becomes n*F times its dominant term
// (each term is at most F times that term), a sum bounded from below becomes
// a single term. The polarity of a site is +1 when enlarging it enlarges the
// whole expression and -1 when it shrinks it; all factors are assumed
// positive, which the rewrites check term by term. The result is
// source <= K * bound on the region.

#include "decomp/expr.hpp"
#include "decomp/region.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace decomp {

enum class Rule { NumeratorTermCount, DenominatorLeadingTerm, PositivityDrop, MonotoneSubstitution, ConstantAbsorb };

std::string to_string(Rule r);
std::optional<Rule> rule_from_string(const std::string& s);

struct JustificationStep {
  Rule rule = Rule::NumeratorTermCount;
  Expr before;  // the subexpression that is replaced
  Expr after;   // replaced by factor * after
  Rational factor = 1;
  int polarity = 1;
  std::vector<Constraint> premises;
};

/// source <= factor * bound on region.
struct RegimeBound {
  Expr source;
  Region region;
  Expr bound;
  Rational factor = 1;
  std::vector<JustificationStep> steps;
};

class SimplifierError : public std::runtime_error {
 public:
  SimplifierError(std::string code, std::string subexpr, const std::string& message)
      : std::runtime_error(message), code(std::move(code)), subexpr(std::move(subexpr)) {}
  std::string code;     // PositivityUnderivable or NoDominantTerm
  std::string subexpr;  // canonical key of the offending subexpression
};

struct SimplifierOptions {
  /// Only sums depending on this variable are rewritten (all sums if empty).
  std::string focus;
  std::vector<Rational> factors{1, 2, 4};
  std::size_t boxes_per_check = 1500;
};

RegimeBound dominate_bound(const Expr& e, const Region& r, const SimplifierOptions& opts = {});

struct ReplayResult {
  bool valid = false;
  /// Index of the first failing step; steps.size() for a failure of the
  /// chain as a whole.
  std::size_t failed_step = 0;
  std::string reason;
};

/// Re-checks a bound: every site must occur with the declared polarity, the
/// rule must point the right way for it, every premise must be proved, the
/// chain must end at factor * bound, and the claim must hold at sampled
/// points.
ReplayResult replay(const RegimeBound& rb, std::size_t spot_checks = 200);

/// Polarities (+1, -1, 0 for undetermined) of every occurrence of target in e.
std::vector<int> occurrence_polarities(const Expr& e, const Expr& target);

std::string serialize(const RegimeBound& rb);
RegimeBound deserialize_bound(const std::string& json);

}  // namespace decomp
