#include "decomp/simplifier.hpp"

#include "decomp/bnb.hpp"
#include "decomp/calculus.hpp"
#include "decomp/falsify.hpp"
#include "decomp/json_io.hpp"
#include "decomp/prover.hpp"

#include <cmath>
#include <set>

namespace decomp {

std::string to_string(Rule r) {
  switch (r) {
    case Rule::NumeratorTermCount: return "NumeratorTermCount";
    case Rule::DenominatorLeadingTerm: return "DenominatorLeadingTerm";
    case Rule::PositivityDrop: return "PositivityDrop";
    case Rule::MonotoneSubstitution: return "MonotoneSubstitution";
    case Rule::ConstantAbsorb: return "ConstantAbsorb";
  }
  return "?";
}

std::optional<Rule> rule_from_string(const std::string& s) {
  for (Rule r : {Rule::NumeratorTermCount, Rule::DenominatorLeadingTerm, Rule::PositivityDrop,
                 Rule::MonotoneSubstitution, Rule::ConstantAbsorb})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

namespace {

void polarities(const Expr& e, const Expr& target, int p, std::vector<int>& out) {
  if (e == target) {
    out.push_back(p);
    return;
  }
  switch (e.kind()) {
    case Kind::Const:
    case Kind::Var:
      return;
    case Kind::Sum:
      for (const auto& c : e.children()) polarities(c, target, p, out);
      return;
    case Kind::Product: {
      int s = 1;
      for (const auto& c : e.children())
        if (c.is_const() && c.value() < 0) s = -s;
      for (const auto& c : e.children())
        if (!c.is_const()) polarities(c, target, p * s, out);
      return;
    }
    case Kind::Power:
      polarities(e.base(), target, e.exponent() > 0 ? p : -p, out);
      return;
    case Kind::Log:
    case Kind::Exp:
      polarities(e.arg(), target, p, out);
      return;
  }
}

bool nonnegative(const Expr& e, const Region& r, std::size_t boxes) {
  Interval iv = region_enclosure(e, r);
  if (!iv.partial && iv.lo >= 0) return true;
  BoxProofOptions o;
  o.max_boxes = boxes;
  o.search_counterexamples = false;
  return prove_nonnegative(e, r, o).outcome == BoxOutcome::Proved;
}

bool proves(const Expr& f, const Expr& g, const Region& r, const Rational& C, std::size_t boxes) {
  ProverOptions o;
  o.boxes_per_attempt = boxes;
  o.total_boxes = boxes * 4;
  std::size_t budget = o.total_boxes;
  return prove_piece(f, g, r, C, o, &budget).status == AttemptStatus::Proved;
}

// Outermost sum (pre-order) that depends on the focus variable and whose
// occurrences agree on a polarity.
std::optional<std::pair<Expr, int>> next_site(const Expr& root, const Expr& e, const std::string& focus,
                                              const std::set<std::string>& skipped) {
  if (e.kind() == Kind::Sum && (focus.empty() || depends_on(e, focus)) && !skipped.count(e.key())) {
    auto ps = occurrence_polarities(root, e);
    bool uniform = !ps.empty() && ps.front() != 0;
    for (int p : ps) uniform = uniform && p == ps.front();
    if (uniform) return std::make_pair(e, ps.front());
  }
  for (const auto& c : e.children())
    if (auto s = next_site(root, c, focus, skipped)) return s;
  return std::nullopt;
}

std::multiset<std::string> term_keys(const Expr& e) {
  std::multiset<std::string> out;
  for (const auto& t : terms_of(e)) out.insert(t.key());
  return out;
}

}  // namespace

std::vector<int> occurrence_polarities(const Expr& e, const Expr& target) {
  std::vector<int> out;
  polarities(e, target, 1, out);
  return out;
}

RegimeBound dominate_bound(const Expr& e, const Region& r, const SimplifierOptions& opts) {
  RegimeBound rb;
  rb.source = normalize(e);
  rb.region = r;
  Expr cur = rb.source;
  std::set<std::string> skipped;
  for (int iter = 0; iter < 48; ++iter) {
    auto site = next_site(cur, cur, opts.focus, skipped);
    if (!site) break;
    auto [S, pol] = *site;
    auto ts = terms_of(S);
    for (const auto& t : ts)
      if (!nonnegative(t, r, 300))
        throw SimplifierError("PositivityUnderivable", t.key(),
                              "cannot show the term " + t.key() + " is nonnegative on the region");
    JustificationStep step;
    step.before = S;
    step.polarity = pol;
    bool found = false;
    for (const auto& F : opts.factors) {
      for (std::size_t j = 0; j < ts.size() && !found; ++j) {
        if (pol > 0) {
          bool all = true;
          for (std::size_t i = 0; i < ts.size() && all; ++i)
            if (i != j) all = proves(ts[i], ts[j], r, F, opts.boxes_per_check);
          if (!all) continue;
          step.rule = Rule::NumeratorTermCount;
          step.after = ts[j];
          step.factor = Rational(static_cast<long>(ts.size())) * F;
          for (std::size_t i = 0; i < ts.size(); ++i) {
            if (i != j) step.premises.emplace_back(ts[i], Relation::Le, F * ts[j]);
            step.premises.emplace_back(constant(0), Relation::Le, ts[i]);
          }
          found = true;
        } else {
          if (!proves(S, ts[j], r, F, opts.boxes_per_check)) continue;
          step.rule = Rule::DenominatorLeadingTerm;
          step.after = ts[j];
          step.factor = 1;
          for (std::size_t i = 0; i < ts.size(); ++i)
            if (i != j) step.premises.emplace_back(constant(0), Relation::Le, ts[i]);
          step.premises.emplace_back(S, Relation::Le, F * ts[j]);
          found = true;
        }
      }
      if (found) break;
    }
    if (!found)
      throw SimplifierError("NoDominantTerm", S.key(), "no term of " + S.key() + " dominates the sum on the region");
    cur = replace_subexpr(cur, S, step.factor * step.after);
    rb.steps.push_back(std::move(step));
  }
  auto [k, rest] = split_coefficient(cur);
  rb.factor = k;
  rb.bound = rest;
  return rb;
}

namespace {

bool premise_holds(const Constraint& c, const Region& r, std::size_t boxes) {
  switch (c.rel) {
    case Relation::Le:
    case Relation::Lt:
      if (c.lhs.is_const(0)) return nonnegative(c.rhs, r, boxes);
      return proves(c.lhs, c.rhs, r, 1, boxes);
    case Relation::Ge:
    case Relation::Gt:
      if (c.rhs.is_const(0)) return nonnegative(c.lhs, r, boxes);
      return proves(c.rhs, c.lhs, r, 1, boxes);
    case Relation::Eq:
      return normalize(c.difference()).is_const(0);
  }
  return false;
}

ReplayResult fail(std::size_t i, std::string why) { return ReplayResult{false, i, std::move(why)}; }

// Extra structural check for each rule; empty string when fine.
std::string check_rule(const JustificationStep& st, const Region& r) {
  switch (st.rule) {
    case Rule::NumeratorTermCount: {
      if (st.before.kind() != Kind::Sum) return "the site is not a sum";
      auto ts = terms_of(st.before);
      std::size_t j = ts.size();
      for (std::size_t i = 0; i < ts.size(); ++i)
        if (ts[i] == st.after) j = i;
      if (j == ts.size()) return "the kept term is not a term of the sum";
      Rational F = st.factor / Rational(static_cast<long>(ts.size()));
      for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!nonnegative(ts[i], r, 300)) return "term " + ts[i].key() + " is not shown nonnegative";
        if (i != j && !proves(ts[i], ts[j], r, F, 1500))
          return "term " + ts[i].key() + " is not shown to be at most " + to_string(F) + " times the kept term";
      }
      return "";
    }
    case Rule::DenominatorLeadingTerm:
    case Rule::PositivityDrop: {
      if (st.factor != 1) return "a dropping rule cannot carry a factor";
      auto all = term_keys(st.before);
      for (const auto& k : term_keys(st.after)) {
        auto it = all.find(k);
        if (it == all.end()) return "the kept part is not made of terms of the sum";
        all.erase(it);
      }
      for (const auto& t : terms_of(st.before))
        if (all.count(t.key()) && !nonnegative(t, r, 300)) return "dropped term " + t.key() + " is not shown nonnegative";
      return "";
    }
    case Rule::ConstantAbsorb:
      if (normalize(st.before) != normalize(st.factor * st.after)) return "the site is not the stated multiple";
      return "";
    case Rule::MonotoneSubstitution: {
      if (st.premises.empty()) return "missing threshold premise";
      const Constraint& c = st.premises.front();
      bool in_region = false;
      for (const auto& rc : r.constraints()) in_region = in_region || rc == c;
      if (!in_region || !c.lhs.is_var() || depends_on(c.rhs, c.lhs.name())) return "threshold premise is not a region constraint";
      const std::string& v = c.lhs.name();
      if (normalize(substitute(st.before, v, c.rhs)) != normalize(st.factor * st.after))
        return "the replacement is not the substituted site";
      bool upper = c.rel == Relation::Le || c.rel == Relation::Lt;
      // Upper threshold with an upper bound on the site needs nondecreasing.
      int need = upper == (st.polarity > 0) ? 1 : -1;
      Threshold t;
      t.var = v;
      t.upper = upper;
      t.bound = c.rhs;
      if (monotone_along(st.before, t, r) != need) return "monotonicity in " + v + " is not shown";
      return "";
    }
  }
  return "unknown rule";
}

int rule_direction(Rule r) {
  switch (r) {
    case Rule::NumeratorTermCount: return 1;
    case Rule::DenominatorLeadingTerm:
    case Rule::PositivityDrop: return -1;
    default: return 0;
  }
}

}  // namespace

ReplayResult replay(const RegimeBound& rb, std::size_t spot_checks) {
  Expr cur = normalize(rb.source);
  for (std::size_t i = 0; i < rb.steps.size(); ++i) {
    const auto& st = rb.steps[i];
    auto ps = occurrence_polarities(cur, st.before);
    if (ps.empty()) return fail(i, "the site " + st.before.key() + " does not occur");
    for (int p : ps)
      if (p != st.polarity) return fail(i, "the site occurs with polarity " + std::to_string(p));
    int dir = rule_direction(st.rule);
    if (dir != 0 && dir != st.polarity)
      return fail(i, to_string(st.rule) + (dir > 0 ? " bounds from above" : " bounds from below") +
                         " but the site needs the opposite direction");
    if (auto why = check_rule(st, rb.region); !why.empty()) return fail(i, why);
    for (const auto& c : st.premises)
      if (!premise_holds(c, rb.region, 1500)) return fail(i, "premise " + c.key() + " is not proved");
    cur = replace_subexpr(cur, st.before, st.factor * st.after);
  }
  if (normalize(cur) != normalize(rb.factor * rb.bound))
    return fail(rb.steps.size(), "the steps end at " + normalize(cur).key() + ", not at the stated bound");

  RegionSampler sampler(rb.region, 0xb0b);
  for (std::size_t k = 0; k < spot_checks; ++k) {
    auto a = sampler.sample();
    if (!a) break;
    try {
      double lhs = evaluate(rb.source, *a);
      double rhs = to_double(rb.factor) * evaluate(rb.bound, *a);
      if (lhs > rhs + 1e-9 * std::fabs(rhs) + 1e-300) return fail(rb.steps.size(), "numeric spot check failed");
    } catch (const DomainError&) {
    }
  }
  return ReplayResult{true, rb.steps.size(), ""};
}

std::string serialize(const RegimeBound& rb) {
  Json steps = Json::array();
  for (const auto& s : rb.steps) {
    Json prem = Json::array();
    for (const auto& c : s.premises) prem.push_back(to_json(c));
    steps.push_back({{"rule", to_string(s.rule)},
                     {"before", s.before.key()},
                     {"after", s.after.key()},
                     {"factor", to_string(s.factor)},
                     {"polarity", s.polarity},
                     {"premises", prem}});
  }
  Json j = {{"source", rb.source.key()},
            {"region", to_json(rb.region)},
            {"bound", rb.bound.key()},
            {"factor", to_string(rb.factor)},
            {"steps", steps}};
  return j.dump();
}

RegimeBound deserialize_bound(const std::string& text) {
  Json j = Json::parse(text);
  RegimeBound rb;
  rb.source = parse_sexpr(j.at("source").get<std::string>());
  rb.region = region_from_json(j.at("region"));
  rb.bound = parse_sexpr(j.at("bound").get<std::string>());
  rb.factor = parse_rational(j.at("factor").get<std::string>());
  for (const auto& s : j.at("steps")) {
    JustificationStep st;
    auto rule = rule_from_string(s.at("rule").get<std::string>());
    if (!rule) throw ExprError("unknown rule " + s.at("rule").get<std::string>());
    st.rule = *rule;
    st.before = parse_sexpr(s.at("before").get<std::string>());
    st.after = parse_sexpr(s.at("after").get<std::string>());
    st.factor = parse_rational(s.at("factor").get<std::string>());
    st.polarity = s.at("polarity").get<int>();
    for (const auto& c : s.at("premises")) st.premises.push_back(constraint_from_json(c));
    rb.steps.push_back(std::move(st));
  }
  return rb;
}

}  // namespace decomp
