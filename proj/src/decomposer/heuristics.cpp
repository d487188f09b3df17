#include "decomp/decomposer.hpp"

#include "decomp/bnb.hpp"
#include "decomp/prover.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace decomp {

std::size_t Decomposition::k() const {
  if (is_ladder()) return breakpoints().ladder.size() + 1;
  return cover().pieces.size();
}

Decomposition trivial_decomposition(const ProblemStatement& p) {
  if (p.is_series()) return {Breakpoints{}, "trivial"};
  return {RegionCover{{p.inequality().region}}, "trivial"};
}

namespace {

bool has_nested_log(const Expr& e) {
  if (e.kind() == Kind::Log) {
    bool inner = false;
    std::vector<Expr> stack{e.arg()};
    while (!stack.empty()) {
      Expr x = stack.back();
      stack.pop_back();
      if (x.kind() == Kind::Log) inner = true;
      for (const auto& c : x.children()) stack.push_back(c);
    }
    if (inner) return true;
  }
  for (const auto& c : e.children())
    if (has_nested_log(c)) return true;
  return false;
}

// Drops constants and iterated logarithms, keeping the terms that decide the
// growth; returns e itself when nothing would remain.
Expr leading_part(const Expr& e) {
  std::vector<Expr> keep;
  for (const auto& t : terms_of(e))
    if (!t.is_const() && !has_nested_log(t)) keep.push_back(t);
  if (keep.empty()) return e;
  return sum(keep);
}

// log e split over products and powers, ignoring signs: only used to guess
// where two terms cross.
Expr log_split(const Expr& e) {
  switch (e.kind()) {
    case Kind::Product: {
      std::vector<Expr> parts;
      for (const auto& f : e.children()) parts.push_back(log_split(f));
      return sum(parts);
    }
    case Kind::Power: return constant(e.exponent()) * log_split(e.base());
    case Kind::Exp: return e.arg();
    case Kind::Const: return e.value() > 0 ? log(e) : constant(0);
    default: return log(e);
  }
}

}  // namespace

std::vector<Constraint> crossover_thresholds(const Expr& t1, const Expr& t2, const Region& r) {
  std::vector<Constraint> out;
  Interval i1 = region_enclosure(t1, r), i2 = region_enclosure(t2, r);
  if (i1.partial || i2.partial || i1.lo < 0 || i2.lo < 0) return out;
  Expr D = expand(log_split(t1) - log_split(t2), 64);
  std::set<std::string> vars;
  for (const auto& v : free_vars(t1)) vars.insert(v);
  for (const auto& v : free_vars(t2)) vars.insert(v);
  std::set<std::string> seen;
  bool solved = false;
  for (const auto& v : r.var_names()) {
    if (!vars.count(v) || solved) continue;
    Rational lin = 0, lg = 0;
    std::vector<Expr> rest;
    bool ok = true;
    for (const auto& t : terms_of(D)) {
      auto [k, body] = split_coefficient(t);
      if (body == var(v)) lin += k;
      else if (body == log(var(v))) lg += k;
      else if (depends_on(body, v)) ok = false;
      else rest.push_back(t);
    }
    if (!ok || (lin == 0) == (lg == 0)) continue;
    solved = true;
    // D = lin*v + R or D = lg*log v + R, with D <= 0 meaning t1 <= t2.
    Expr R = rest.empty() ? constant(0) : sum(rest);
    Expr lead = leading_part(expand(-R, 64));
    for (int c : {1, 2}) {
      Expr theta = lin != 0 ? normalize(constant(Rational(c) / lin) * lead)
                            : normalize(constant(c) * exp(constant(Rational(1) / lg) * lead));
      if (depends_on(theta, v)) continue;
      Interval range = region_enclosure(theta, r);
      if (range.partial) continue;
      Constraint th(var(v), Relation::Le, theta);
      if (seen.insert(th.key()).second) out.push_back(th);
    }
  }
  return out;
}

bool is_symmetric(const InequalityProblem& p) {
  auto names = p.region.var_names();
  if (names.size() < 2) return false;
  std::set<std::string> region_keys;
  for (const auto& c : p.region.constraints()) region_keys.insert(c.key());
  for (std::size_t i = 0; i + 1 < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      std::map<std::string, Expr> swap{{names[i], var(names[j])}, {names[j], var(names[i])}};
      if (substitute(p.lhs, swap) != p.lhs || substitute(p.rhs, swap) != p.rhs) return false;
      for (const auto& c : p.region.constraints()) {
        Constraint s(substitute(c.lhs, swap), c.rel, substitute(c.rhs, swap));
        if (!region_keys.count(s.key())) return false;
      }
    }
  }
  return true;
}

std::vector<Constraint> max_constraints(const std::vector<std::string>& vars, const std::string& name) {
  std::vector<Constraint> out;
  for (const auto& v : vars)
    if (v != name) out.emplace_back(var(v), Relation::Le, var(name));
  return out;
}

namespace {

std::vector<Decomposition> ordering_covers(const InequalityProblem& p) {
  std::vector<Decomposition> out;
  auto names = p.region.var_names();
  std::size_t n = names.size();
  if (n <= 3) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    RegionCover cover;
    do {
      std::vector<Constraint> chain;
      for (std::size_t i = 0; i + 1 < n; ++i) chain.emplace_back(var(names[perm[i]]), Relation::Le, var(names[perm[i + 1]]));
      cover.pieces.push_back(p.region.with(chain));
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.push_back({cover, "ordering"});
  }
  if (n >= 3) {
    RegionCover cover;
    for (const auto& v : names) cover.pieces.push_back(p.region.with(max_constraints(names, v)));
    out.push_back({cover, "max"});
  }
  return out;
}

// Power product c * prod f_i^e_i raised to q, without requiring the
// normalizer to distribute fractional exponents.
Expr power_of_product(const Expr& e, const Rational& q) {
  std::vector<Expr> out;
  for (const auto& f : factors_of(e)) {
    if (f.is_const()) {
      Rational root;
      if (is_integer(q)) out.push_back(constant(pow_int(f.value(), static_cast<long>(num(q)))));
      else if (num(q) == 1 || num(q) == -1) {
        if (exact_root(f.value(), static_cast<long>(den(q)), root))
          out.push_back(constant(num(q) == 1 ? root : Rational(1) / root));
      }
      continue;
    }
    if (f.kind() == Kind::Power) out.push_back(power(f.base(), f.exponent() * q));
    else out.push_back(power(f, q));
  }
  return product(out);
}

// Where the leading index term of u reaches 1.
std::optional<Expr> transition_point(const Expr& u, const std::string& index) {
  Rational best_k = 0;
  std::optional<Expr> best_coef;
  for (const auto& t : terms_of(expand(u, 64))) {
    Rational k = 0;
    std::vector<Expr> coef;
    bool ok = true;
    for (const auto& f : factors_of(t)) {
      if (!depends_on(f, index)) coef.push_back(f);
      else if (f.is_var()) k += 1;
      else if (f.kind() == Kind::Power && f.base().is_var()) k += f.exponent();
      else ok = false;
    }
    if (!ok || k <= 0) continue;
    if (k > best_k) {
      best_k = k;
      best_coef = product(coef);
    }
  }
  if (!best_coef) return std::nullopt;
  Expr point = normalize(power_of_product(*best_coef, Rational(-1) / best_k));
  if (point.is_const()) return std::nullopt;
  return point;
}

void collect_denominator_sums(const Expr& e, std::vector<Expr>& out) {
  for (const auto& f : factors_of(e)) {
    if (f.kind() == Kind::Power && f.exponent() < 0 && f.base().kind() == Kind::Sum) out.push_back(f.base());
  }
}

bool provably_le(const Expr& a, const Expr& b, const Region& params) {
  ProverOptions o;
  o.boxes_per_attempt = 1000;
  o.total_boxes = 6000;
  return prove_piece(a, b, params, 1, o).status == AttemptStatus::Proved;
}

std::vector<Decomposition> ladders(const SeriesProblem& p) {
  std::vector<Expr> sums;
  collect_denominator_sums(p.summand, sums);
  std::vector<Expr> points;
  std::set<std::string> seen;
  for (const auto& s : sums) {
    for (const auto& t : terms_of(s)) {
      if (!depends_on(t, p.index)) continue;
      auto pt = transition_point(t, p.index);
      if (pt && seen.insert(pt->key()).second) points.push_back(*pt);
    }
  }
  if (points.empty()) return {};
  // Insertion by provable order; incomparable points keep discovery order.
  std::vector<Expr> sorted;
  for (const auto& x : points) {
    auto at = sorted.end();
    for (auto it = sorted.begin(); it != sorted.end(); ++it) {
      if (provably_le(x, *it, p.params)) {
        at = it;
        break;
      }
    }
    sorted.insert(at, x);
  }
  std::vector<Decomposition> out{{Breakpoints{sorted}, "ladder"}};
  if (sorted.size() > 1)
    for (const auto& x : sorted) out.push_back({Breakpoints{{x}}, "ladder"});
  return out;
}

}  // namespace

std::vector<Decomposition> heuristic_propose(const ProblemStatement& p) {
  std::vector<Decomposition> out;
  if (p.is_series()) {
    out = ladders(p.series());
  } else {
    const auto& q = p.inequality();
    std::vector<Decomposition> orderings;
    if (is_symmetric(q)) orderings = ordering_covers(q);
    auto terms = terms_of(q.rhs);
    for (std::size_t i = 0; i < terms.size(); ++i)
      for (std::size_t j = i + 1; j < terms.size(); ++j)
        for (const auto& th : crossover_thresholds(terms[i], terms[j], q.region)) {
          Constraint above(th.lhs, Relation::Gt, th.rhs);
          if (out.size() + orderings.size() < 8)
            out.push_back({RegionCover{{q.region.with(th), q.region.with(above)}}, "crossover"});
        }
    for (auto& d : orderings) out.push_back(std::move(d));
  }
  if (out.empty()) throw DecomposerError("NoCandidate", "no decomposition pattern applies");
  if (out.size() > 8) out.resize(8);
  return out;
}

}  // namespace decomp
