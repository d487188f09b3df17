#include "decomp/region.hpp"

#include "decomp/calculus.hpp"
#include "decomp/interval.hpp"

#include <algorithm>
#include <cmath>

namespace decomp {

std::string to_string(Relation r) {
  switch (r) {
    case Relation::Le: return "<=";
    case Relation::Lt: return "<";
    case Relation::Ge: return ">=";
    case Relation::Gt: return ">";
    case Relation::Eq: return "=";
  }
  return "?";
}

Relation flip(Relation r) {
  switch (r) {
    case Relation::Le: return Relation::Ge;
    case Relation::Lt: return Relation::Gt;
    case Relation::Ge: return Relation::Le;
    case Relation::Gt: return Relation::Lt;
    case Relation::Eq: return Relation::Eq;
  }
  return r;
}

Relation negate(Relation r) {
  switch (r) {
    case Relation::Le: return Relation::Gt;
    case Relation::Lt: return Relation::Ge;
    case Relation::Ge: return Relation::Lt;
    case Relation::Gt: return Relation::Le;
    case Relation::Eq: break;
  }
  throw ExprError("an equality constraint has no single-constraint negation");
}

Constraint::Constraint(Expr l, Relation r, Expr rr)
    : lhs(normalize(l)), rel(r), rhs(normalize(rr)) {}

Expr Constraint::difference() const { return lhs - rhs; }

std::string Constraint::key() const {
  return "(" + to_string(rel) + " " + lhs.key() + " " + rhs.key() + ")";
}

std::set<std::string> Constraint::vars() const {
  auto a = free_vars(lhs);
  auto b = free_vars(rhs);
  a.insert(b.begin(), b.end());
  return a;
}

Region::Region(std::vector<VarDecl> vars, std::vector<Constraint> constraints) {
  for (auto& v : vars) declare(v);
  for (auto& c : constraints) add(c);
}

std::vector<std::string> Region::var_names() const {
  std::vector<std::string> out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) out.push_back(v.name);
  return out;
}

bool Region::declares(const std::string& v) const {
  return std::any_of(vars_.begin(), vars_.end(), [&](const VarDecl& d) { return d.name == v; });
}

void Region::declare(const VarDecl& v) {
  for (auto& d : vars_) {
    if (d.name == v.name) {
      d.role = v.role;
      return;
    }
  }
  vars_.push_back(v);
}

void Region::add(const Constraint& c) {
  for (const auto& v : c.vars())
    if (!declares(v)) throw ExprError("constraint " + c.key() + " uses undeclared variable " + v);
  for (const auto& existing : constraints_)
    if (existing == c) return;
  constraints_.push_back(c);
}

Region Region::with(const Constraint& c) const {
  Region r = *this;
  r.add(c);
  return r;
}

Region Region::with(const std::vector<Constraint>& cs) const {
  Region r = *this;
  for (const auto& c : cs) r.add(c);
  return r;
}

std::string Region::key() const {
  std::string out = "(region (";
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (i) out += " ";
    out += vars_[i].name;
    if (vars_[i].role == VarRole::Index) out += ":int";
  }
  out += ")";
  std::vector<std::string> keys;
  for (const auto& c : constraints_) keys.push_back(c.key());
  std::sort(keys.begin(), keys.end());
  for (const auto& k : keys) out += " " + k;
  return out + ")";
}

bool satisfies(const Constraint& c, const Assignment& a, double slack) {
  double l, r;
  try {
    l = evaluate(c.lhs, a);
    r = evaluate(c.rhs, a);
  } catch (const DomainError&) {
    return false;
  }
  if (std::isnan(l) || std::isnan(r)) return false;
  double scale = std::max({1.0, std::fabs(l), std::fabs(r)});
  if (std::isinf(scale)) scale = 1.0;
  double tol = slack * scale;
  switch (c.rel) {
    case Relation::Le: return l <= r + tol;
    case Relation::Lt: return l < r + tol;
    case Relation::Ge: return l + tol >= r;
    case Relation::Gt: return l + tol > r;
    case Relation::Eq: return std::fabs(l - r) <= std::max(tol, 0.0);
  }
  return false;
}

bool satisfies(const Region& r, const Assignment& a, double slack) {
  return std::all_of(r.constraints().begin(), r.constraints().end(),
                     [&](const Constraint& c) { return satisfies(c, a, slack); });
}

namespace {

bool known_nonneg(const std::map<std::string, VarBounds>* known, const std::string& v, bool positive) {
  if (!known) return false;
  auto it = known->find(v);
  if (it == known->end()) return false;
  if (positive) return it->second.lo > 0.0 || (it->second.lo == 0.0 && it->second.lo_strict);
  return it->second.lo >= 0.0;
}

// Solves `coef * atom(v) + rest REL 0` for v where atom is v, log v or v^p.
void solve_for(const Constraint& c, std::size_t index, const std::string& v,
               const std::map<std::string, VarBounds>* known, std::vector<Threshold>& out) {
  Expr diff = c.difference();
  std::vector<Expr> with_v, without_v;
  for (const auto& t : terms_of(diff)) (depends_on(t, v) ? with_v : without_v).push_back(t);
  if (with_v.size() != 1) return;
  auto [coef, atom] = split_coefficient(with_v.front());
  if (coef == 0) return;
  Expr rest = without_v.empty() ? constant(0) : sum(without_v);
  // atom REL' bound with bound = -rest/coef; REL' flips when coef < 0.
  Expr bound = (Rational(-1) / coef) * rest;
  std::vector<Relation> rels;
  if (c.rel == Relation::Eq) {
    rels = {Relation::Le, Relation::Ge};
  } else {
    rels = {coef > 0 ? c.rel : flip(c.rel)};
  }
  Expr solved;
  bool reverse = false;
  if (atom.is_var() && atom.name() == v) {
    solved = bound;
  } else if (atom.kind() == Kind::Log && atom.arg().is_var() && atom.arg().name() == v) {
    solved = exp(bound);
  } else if (atom.kind() == Kind::Power && atom.base().is_var() && atom.base().name() == v) {
    const Rational& p = atom.exponent();
    if (!known_nonneg(known, v, p < 0)) return;
    reverse = p < 0;
    solved = power(bound, Rational(1) / p);
  } else {
    return;
  }
  for (Relation r : rels) {
    if (reverse) r = flip(r);
    Threshold t;
    t.var = v;
    t.upper = (r == Relation::Le || r == Relation::Lt);
    t.strict = (r == Relation::Lt || r == Relation::Gt);
    t.bound = solved;
    t.constraint_index = index;
    out.push_back(t);
  }
}

std::vector<Threshold> collect(const Region& r, const std::map<std::string, VarBounds>* known) {
  std::vector<Threshold> out;
  for (std::size_t i = 0; i < r.constraints().size(); ++i) {
    const auto& c = r.constraints()[i];
    for (const auto& v : c.vars()) solve_for(c, i, v, known, out);
  }
  return out;
}

// Bounds given by other variables are evaluated over their current ranges.
void tighten(std::map<std::string, VarBounds>& bounds, const Threshold& t) {
  std::map<std::string, Interval> box;
  for (const auto& v : free_vars(t.bound)) {
    auto it = bounds.find(v);
    box[v] = it == bounds.end() ? Interval::entire() : Interval(it->second.lo, it->second.hi);
  }
  Interval b;
  try {
    b = eval_interval(t.bound, box);
  } catch (const ExprError&) {
    return;
  }
  if (b.partial) return;
  auto& vb = bounds[t.var];
  if (t.upper) {
    if (b.hi < vb.hi || (b.hi == vb.hi && t.strict && b.is_point())) {
      vb.hi = b.hi;
      vb.hi_strict = t.strict && b.is_point();
    }
  } else {
    if (b.lo > vb.lo || (b.lo == vb.lo && t.strict && b.is_point())) {
      vb.lo = b.lo;
      vb.lo_strict = t.strict && b.is_point();
    }
  }
}

}  // namespace

std::map<std::string, VarBounds> direct_bounds(const Region& r) {
  std::map<std::string, VarBounds> bounds;
  for (const auto& v : r.vars()) bounds[v.name] = VarBounds{};
  for (const auto& t : collect(r, nullptr)) tighten(bounds, t);
  for (int round = 0; round < 3; ++round)
    for (const auto& t : collect(r, &bounds)) tighten(bounds, t);
  return bounds;
}

std::vector<Threshold> thresholds(const Region& r) {
  auto bounds = direct_bounds(r);
  return collect(r, &bounds);
}

}  // namespace decomp
