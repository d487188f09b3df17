#pragma once

#include "decomp/expr.hpp"

#include <limits>
#include <map>
#include <set>
#include <optional>
#include <string>
#include <vector>

namespace decomp {

enum class Relation { Le, Lt, Ge, Gt, Eq };

std::string to_string(Relation r);
Relation flip(Relation r);  // a R b  <=>  b flip(R) a
Relation negate(Relation r);  // !(a R b) <=> a negate(R) b, Eq is not negatable

/// lhs relation rhs. Both sides normalized.
struct Constraint {
  Expr lhs;
  Relation rel = Relation::Le;
  Expr rhs;

  Constraint() = default;
  Constraint(Expr l, Relation r, Expr rr);

  /// lhs - rhs, normalized.
  Expr difference() const;
  /// Canonical text "(<= y (* 2 (log x)))".
  std::string key() const;
  bool is_strict() const { return rel == Relation::Lt || rel == Relation::Gt; }
  std::set<std::string> vars() const;

  friend bool operator==(const Constraint& a, const Constraint& b) { return a.key() == b.key(); }
};

enum class VarRole { Real, Index };

struct VarDecl {
  std::string name;
  VarRole role = VarRole::Real;
  friend bool operator==(const VarDecl&, const VarDecl&) = default;
};

/// Variables and a conjunction of constraints over them.
class Region {
 public:
  Region() = default;
  Region(std::vector<VarDecl> vars, std::vector<Constraint> constraints);

  const std::vector<VarDecl>& vars() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  std::vector<std::string> var_names() const;
  bool declares(const std::string& v) const;

  /// Adds a constraint unless an identical one is present. Throws ExprError if
  /// it references an undeclared variable.
  void add(const Constraint& c);
  Region with(const Constraint& c) const;
  Region with(const std::vector<Constraint>& cs) const;
  void declare(const VarDecl& v);

  std::string key() const;

 private:
  std::vector<VarDecl> vars_;
  std::vector<Constraint> constraints_;
};

using Assignment = std::map<std::string, double>;

/// True when the assignment satisfies c under double evaluation, with the
/// given slack in favor of satisfaction (use a negative slack to demand a
/// margin).
bool satisfies(const Constraint& c, const Assignment& a, double slack = 0.0);
bool satisfies(const Region& r, const Assignment& a, double slack = 0.0);

/// Bounds implied directly by single-variable constraints `a*v + b REL 0`.
struct VarBounds {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_strict = false;
  bool hi_strict = false;
};
std::map<std::string, VarBounds> direct_bounds(const Region& r);

/// A constraint solved for one variable: var REL bound, with bound free of var.
struct Threshold {
  std::string var;
  bool upper = false;  // var <= bound (true) or var >= bound (false)
  bool strict = false;
  Expr bound;
  std::size_t constraint_index = 0;
};

/// Every way a region constraint can be solved for one of its variables via
/// the pattern base: linear (a*v + R), logarithmic (a*log v + R), and
/// power (a*v^p + R with v >= 0 known).
std::vector<Threshold> thresholds(const Region& r);

}  // namespace decomp
