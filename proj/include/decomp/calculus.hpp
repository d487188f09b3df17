#pragma once

#include "decomp/expr.hpp"
#include "decomp/region.hpp"

namespace decomp {

/// Raised when an expression is evaluated outside its domain (log of a
/// non-positive number, fractional power of a negative number, 0^-p) or when
/// the result is indeterminate (inf - inf).
class DomainError : public ExprError {
 public:
  using ExprError::ExprError;
};

/// Evaluates e at a. Purely algebraic subtrees (constants, variables, +, *,
/// integer powers) are evaluated exactly in rational arithmetic and rounded to
/// nearest once; log, exp and fractional powers use round-to-nearest libm
/// calls. Overflow yields +/-inf. Throws DomainError.
double evaluate(const Expr& e, const Assignment& a);

/// Exact value when e is algebraic with rational-valued leaves.
std::optional<Rational> evaluate_exact(const Expr& e, const Assignment& a);

/// d e / d v, normalized.
Expr differentiate(const Expr& e, const std::string& v);

enum class Monotonicity { Increasing, Decreasing, Constant, Unknown };

std::string to_string(Monotonicity m);

/// Sound structural rule base. Increasing means nondecreasing in v on all of
/// r; Constant means e does not depend on v. Factor signs are decided from the
/// box implied by r's constraints.
Monotonicity structural_monotonicity(const Expr& e, const std::string& v, const Region& r);

}  // namespace decomp
