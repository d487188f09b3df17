#pragma once

// Outward-rounded interval arithmetic over the extended reals.
//
// An Interval [lo, hi] encloses a set of finite real values; infinite
// endpoints mean "unbounded", so 0 * [1, inf] = [0, 0]. Every operation
// rounds lo toward -inf and hi toward +inf. Exactness of +, *, / is detected
// with error-free transformations (TwoSum, fma), so exact results such as
// 1 - 1 are not widened. libm calls (exp, log, pow) are widened by two ulps on
// each side except at exact points (exp 0, log 1, 0^p, 1^p).
//
// `partial` records that some point of the input box lies outside the domain
// of the expression (for example log over an interval reaching 0).

#include "decomp/expr.hpp"

#include <limits>
#include <map>
#include <string>
#include <vector>

namespace decomp {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool partial = false;

  static constexpr double inf = std::numeric_limits<double>::infinity();

  Interval() = default;
  Interval(double l, double h, bool p = false) : lo(l), hi(h), partial(p) {}
  static Interval point(double v) { return {v, v}; }
  static Interval entire(bool p = false) { return {-inf, inf, p}; }
  /// Tight enclosure of an exact rational.
  static Interval of(const Rational& q);

  bool contains(double v) const { return lo <= v && v <= hi; }
  bool is_point() const { return lo == hi; }
  bool bounded() const { return lo > -inf && hi < inf; }
  double width() const { return hi - lo; }
};

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a);
Interval operator-(const Interval& a, const Interval& b);
Interval operator*(const Interval& a, const Interval& b);
Interval operator/(const Interval& a, const Interval& b);
Interval ipow(const Interval& a, const Rational& p);
Interval ilog(const Interval& a);
Interval iexp(const Interval& a);
Interval hull(const Interval& a, const Interval& b);
Interval intersect(const Interval& a, const Interval& b);

/// Directed rounding helpers used by callers that combine endpoint values.
double add_down(double a, double b);
double add_up(double a, double b);
double mul_down(double a, double b);
double mul_up(double a, double b);

/// A flattened, stack-evaluated form of an expression over a fixed variable
/// order. Construction is the only expensive step.
class Program {
 public:
  Program() = default;
  Program(const Expr& e, const std::vector<std::string>& var_order);

  Interval eval(const std::vector<Interval>& box) const;
  /// Round-to-nearest evaluation; NaN outside the domain.
  double eval(const std::vector<double>& point) const;

  bool empty() const { return ops_.empty(); }

 private:
  enum class Op : unsigned char { Const, Var, Sum, Prod, Pow, Log, Exp };
  struct Instr {
    Op op;
    int arg = 0;  // Const: constant index, Var: variable index, Sum/Prod: arity, Pow: exponent index
  };
  std::vector<Instr> ops_;
  std::vector<Interval> consts_;
  std::vector<double> const_values_;
  std::vector<Rational> exponents_;
  std::vector<double> exponent_values_;
  std::vector<long> int_exponents_;  // LONG_MIN when not an integer
  std::size_t max_stack_ = 0;

  void compile(const Expr& e, const std::map<std::string, int>& index, std::size_t depth);
};

/// Convenience: interval evaluation of e with variables bound by name.
Interval eval_interval(const Expr& e, const std::map<std::string, Interval>& box);

}  // namespace decomp
