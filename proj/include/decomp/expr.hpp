#pragma once

// Symbolic scalar expressions over the reals.
//
// Expressions are immutable DAG nodes shared through std::shared_ptr. The
// smart constructors (sum, product, power, log, exp) always return normalized
// output when their inputs are normalized:
//   - sums and products are flattened and have >= 2 children,
//   - at most one constant child per sum/product, placed first,
//   - like terms in sums and like bases in products are merged,
//   - Power(x, 1) never appears,
//   - remaining children are ordered lexicographically by their serialized form.
// There are no subtraction or division nodes: a - b is a + (-1)*b and a / b
// is a * b^-1.

#include "decomp/rational.hpp"

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace decomp {

enum class Kind { Const, Var, Sum, Product, Power, Log, Exp };

class Expr;

struct Node {
  Kind kind;
  Rational value;  // Const: the value. Power: the exponent.
  std::string name;  // Var
  std::vector<Expr> children;
  std::string key;  // canonical serialization, cached
  std::size_t size = 1;  // AST node count
};

class Expr {
 public:
  Expr();  // Const 0
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  Kind kind() const { return node_->kind; }
  const Rational& value() const { return node_->value; }
  const Rational& exponent() const { return node_->value; }
  const std::string& name() const { return node_->name; }
  const std::vector<Expr>& children() const { return node_->children; }
  const Expr& child(std::size_t i) const { return node_->children.at(i); }
  const Expr& base() const { return node_->children.at(0); }
  const Expr& arg() const { return node_->children.at(0); }

  /// Canonical s-expression text, e.g. "(+ 1 (* 2 x))".
  const std::string& key() const { return node_->key; }
  std::size_t size() const { return node_->size; }

  bool is_const() const { return kind() == Kind::Const; }
  bool is_const(const Rational& q) const { return is_const() && value() == q; }
  bool is_var() const { return kind() == Kind::Var; }

  friend bool operator==(const Expr& a, const Expr& b) { return a.key() == b.key(); }
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }
  friend bool operator<(const Expr& a, const Expr& b);

 private:
  std::shared_ptr<const Node> node_;
};

// Raw constructors: build a node without any rewriting. Used by the parser and
// by tests that need non-normalized input.
namespace raw {
Expr sum(std::vector<Expr> children);
Expr product(std::vector<Expr> children);
Expr power(Expr base, Rational exponent);
Expr log(Expr arg);
Expr exp(Expr arg);
}  // namespace raw

Expr constant(const Rational& q);
Expr constant(long v);
Expr var(const std::string& name);

// Normalizing constructors.
Expr sum(std::vector<Expr> children);
Expr product(std::vector<Expr> children);
Expr power(const Expr& base, const Rational& exponent);
Expr log(const Expr& arg);
Expr exp(const Expr& arg);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator*(const Rational& q, const Expr& b);

/// Rebuilds e bottom-up through the normalizing constructors. Idempotent.
Expr normalize(const Expr& e);

/// Replaces every occurrence of variable `name` and renormalizes.
Expr substitute(const Expr& e, const std::string& name, const Expr& replacement);
Expr substitute(const Expr& e, const std::map<std::string, Expr>& replacements);

/// Replaces occurrences of a whole subexpression (by key) and renormalizes.
Expr replace_subexpr(const Expr& e, const Expr& target, const Expr& replacement);

std::set<std::string> free_vars(const Expr& e);
bool depends_on(const Expr& e, const std::string& v);

/// Splits a normalized term into (coefficient, rest); rest is Const 1 for a
/// pure constant.
std::pair<Rational, Expr> split_coefficient(const Expr& term);

/// Terms of a sum, or {e} for anything else.
std::vector<Expr> terms_of(const Expr& e);
/// Factors of a product, or {e} for anything else.
std::vector<Expr> factors_of(const Expr& e);

/// Multiplies out products of sums and small positive integer powers of sums.
/// Returns e unchanged when the result would exceed max_terms terms.
Expr expand(const Expr& e, std::size_t max_terms = 256);

/// Parses the canonical serialization produced by Expr::key().
Expr parse_sexpr(const std::string& text);

class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace decomp
