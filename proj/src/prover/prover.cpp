#include "decomp/prover.hpp"

#include "decomp/calculus.hpp"
#include "decomp/problem.hpp"

#include <cmath>
#include <set>

namespace decomp {

std::string to_string(AttemptStatus s) {
  switch (s) {
    case AttemptStatus::Proved: return "proved";
    case AttemptStatus::Refuted: return "refuted";
    case AttemptStatus::Unknown: return "unknown";
  }
  return "?";
}

GridSpec GridSpec::standard() {
  GridSpec g;
  for (long c = 1; c <= 8192; c *= 2) g.values.emplace_back(c);
  g.values.emplace_back(10000);
  return g;
}

GridSpec GridSpec::single(const Rational& c) {
  GridSpec g;
  g.values.push_back(c);
  return g;
}

namespace {

bool positive_on(const Expr& e, const Region& r) {
  if (e.kind() == Kind::Exp) return true;
  if (e.is_const()) return e.value() > 0;
  Interval iv = region_enclosure(e, r);
  return !iv.partial && iv.lo > 0;
}

bool nonnegative_on(const Expr& e, const Region& r, std::size_t boxes) {
  Interval iv = region_enclosure(e, r);
  if (!iv.partial && iv.lo >= 0) return true;
  BoxProofOptions o;
  o.max_boxes = boxes;
  o.search_counterexamples = false;
  return prove_nonnegative(e, r, o).outcome == BoxOutcome::Proved;
}

// Box of single-variable bounds of r, with the range of t.var widened to
// everything a substitution along t can pass through.
Region substitution_box(const Region& r, const Threshold& t) {
  Interval reach = region_enclosure(t.bound, r);
  std::vector<Constraint> cs;
  for (const auto& [v, b] : direct_bounds(r)) {
    double lo = b.lo, hi = b.hi;
    if (v == t.var) {
      if (t.upper) hi = reach.partial ? Interval::inf : std::max(hi, reach.hi);
      else lo = reach.partial ? -Interval::inf : std::min(lo, reach.lo);
    }
    if (std::isfinite(lo)) cs.emplace_back(var(v), Relation::Ge, constant(from_double(lo)));
    if (std::isfinite(hi)) cs.emplace_back(var(v), Relation::Le, constant(from_double(hi)));
  }
  return Region(r.vars(), cs);
}

}  // namespace

int monotone_along(const Expr& e, const Threshold& t, const Region& r) {
  Expr d = differentiate(e, t.var);
  if (d.is_const()) return d.value() >= 0 ? 1 : -1;
  Region box = substitution_box(r, t);
  if (nonnegative_on(d, box, 300)) return 1;
  if (nonnegative_on(-d, box, 300)) return -1;
  return 0;
}

namespace {

std::string show(const Expr& e) { return render_latex(e); }

std::string show_threshold(const Threshold& t) {
  return t.var + (t.upper ? (t.strict ? " < " : " \\leq ") : (t.strict ? " > " : " \\geq ")) + show(t.bound);
}

struct Residual {
  std::string strategy;
  std::vector<ProofStep> steps;
  Expr H;
  Region region;
};

struct SideChain {
  Expr value;
  std::vector<ProofStep> steps;
};

// Applies every threshold along which `e` can be pushed in the wanted
// direction (raise for f, lower for g).
SideChain substitute_side(const Expr& e, const Region& r, const std::vector<Threshold>& ths, bool raise,
                          const char* side) {
  SideChain out{e, {}};
  for (const auto& t : ths) {
    if (t.bound.is_const() || !depends_on(out.value, t.var)) continue;
    int m = monotone_along(out.value, t, r);
    // Raising f along v <= u needs f nondecreasing; lowering g needs g nonincreasing.
    int want = (t.upper == raise) ? 1 : -1;
    if (m != want) continue;
    Expr next = expand(substitute(out.value, t.var, t.bound), 64);
    out.steps.push_back({"MonotoneSubstitution", std::string(side) + (m > 0 ? " nondecreasing" : " nonincreasing") +
                                                     " in " + t.var + " and " + show_threshold(t) + ": " +
                                                     show(out.value) + " \\to " + show(next)});
    out.value = next;
  }
  return out;
}

struct Homogeneous {
  Expr f, g;
  Region region;
  std::string top;
};

std::optional<Homogeneous> homogeneous_reduction(const Expr& f, const Expr& g, const Region& r, const Rational& C) {
  auto df = homogeneous_degree(f), dg = homogeneous_degree(g);
  if (!df || !dg || *df != *dg || *df <= 0) return std::nullopt;
  std::set<std::string> vs = free_vars(f);
  for (const auto& v : free_vars(g)) vs.insert(v);
  if (vs.size() < 2) return std::nullopt;
  auto db = direct_bounds(r);
  for (const auto& v : vs)
    if (db[v].lo < 0) return std::nullopt;

  // below[w] = variables known to be <= w through single-variable orderings.
  std::map<std::string, std::set<std::string>> below;
  std::vector<std::pair<std::string, std::string>> orderings;  // (small, large)
  for (const auto& t : thresholds(r)) {
    if (!t.bound.is_var()) continue;
    std::string small = t.upper ? t.var : t.bound.name();
    std::string large = t.upper ? t.bound.name() : t.var;
    orderings.emplace_back(small, large);
    below[large].insert(small);
  }
  for (int round = 0; round < 4; ++round)
    for (auto& [w, s] : below) {
      std::set<std::string> add;
      for (const auto& u : s)
        if (below.count(u)) add.insert(below[u].begin(), below[u].end());
      s.insert(add.begin(), add.end());
    }
  std::string top;
  for (const auto& w : vs) {
    bool all = true;
    for (const auto& u : vs)
      if (u != w && !below[w].count(u)) all = false;
    if (all) {
      top = w;
      break;
    }
  }
  if (top.empty()) return std::nullopt;

  // All variables vanish together when the top one does; check that point.
  Assignment zero;
  for (const auto& v : r.var_names()) zero[v] = 0.0;
  try {
    double fz = evaluate(f, zero), gz = evaluate(g, zero);
    if (fz > to_double(C) * gz) return std::nullopt;
  } catch (const DomainError&) {
  }

  Homogeneous h;
  h.top = top;
  h.f = substitute(f, top, constant(1));
  h.g = substitute(g, top, constant(1));
  std::vector<VarDecl> decls;
  std::vector<Constraint> cs;
  for (const auto& d : r.vars()) {
    if (d.name == top || !vs.count(d.name)) continue;
    decls.push_back(d);
    cs.emplace_back(var(d.name), Relation::Ge, constant(0));
    cs.emplace_back(var(d.name), Relation::Le, constant(1));
  }
  for (const auto& [a, b] : orderings)
    if (a != top && b != top && vs.count(a) && vs.count(b)) cs.emplace_back(var(a), Relation::Le, var(b));
  h.region = Region(decls, cs);
  return h;
}

std::vector<Residual> residuals(const Expr& f, const Expr& g, const Region& r, const Rational& C) {
  std::vector<Residual> out;
  Expr cC = constant(C);
  Expr H0 = expand(cC * g - f, 64);
  out.push_back({"direct", {}, H0, r});

  if (auto h = homogeneous_reduction(f, g, r, C)) {
    out.push_back({"homogeneous",
                   {{"HomogeneousScaling", "both sides homogeneous of equal degree, every variable \\leq " + h->top +
                                               ": set " + h->top + " = 1"}},
                   expand(cC * h->g - h->f, 64),
                   h->region});
  }

  auto ths = thresholds(r);

  // Push the difference H along thresholds where it is monotone.
  {
    Expr cur = H0;
    std::vector<ProofStep> steps;
    for (const auto& t : ths) {
      if (t.bound.is_const() || !depends_on(cur, t.var)) continue;
      int m = monotone_along(cur, t, r);
      if (m != (t.upper ? -1 : 1)) continue;
      Expr next = expand(substitute(cur, t.var, t.bound), 64);
      steps.push_back({"MonotoneSubstitution", std::string("difference ") + (m > 0 ? "nondecreasing" : "nonincreasing") +
                                                   " in " + t.var + " and " + show_threshold(t)});
      cur = next;
      out.push_back({"substitute-difference", steps, cur, r});
    }
  }

  SideChain fs = substitute_side(f, r, ths, true, "f");
  SideChain gs = substitute_side(g, r, ths, false, "g");
  auto combine = [&](const SideChain& a, const SideChain& b, const char* name) {
    std::vector<ProofStep> steps = a.steps;
    steps.insert(steps.end(), b.steps.begin(), b.steps.end());
    out.push_back({name, steps, expand(cC * b.value - a.value, 64), r});
  };
  SideChain f0{f, {}}, g0{g, {}};
  if (!fs.steps.empty()) combine(fs, g0, "substitute-lhs");
  if (!gs.steps.empty()) combine(f0, gs, "substitute-rhs");
  if (!fs.steps.empty() && !gs.steps.empty()) combine(fs, gs, "substitute-both");

  auto gterms = terms_of(g);
  if (gterms.size() >= 2 && gterms.size() <= 6) {
    for (std::size_t i = 0; i < gterms.size(); ++i) {
      if (split_coefficient(gterms[i]).first <= 0) continue;
      bool rest_ok = true;
      for (std::size_t j = 0; j < gterms.size() && rest_ok; ++j)
        if (j != i) rest_ok = nonnegative_on(gterms[j], r, 200);
      if (!rest_ok) continue;
      ProofStep drop{"PositivityDrop", "remaining terms of " + show(g) + " are nonnegative: keep " + show(gterms[i])};
      out.push_back({"drop", {drop}, expand(cC * gterms[i] - f, 64), r});
      if (!fs.steps.empty()) {
        std::vector<ProofStep> steps = fs.steps;
        steps.push_back(drop);
        out.push_back({"substitute-lhs-drop", steps, expand(cC * gterms[i] - fs.value, 64), r});
      }
    }
  }

  std::vector<Residual> unique;
  std::set<std::string> seen;
  for (auto& res : out)
    if (seen.insert(res.H.key() + res.region.key()).second) unique.push_back(std::move(res));
  return unique;
}

Expr expand_logs_rec(const Expr& e, const Region& r) {
  switch (e.kind()) {
    case Kind::Const:
    case Kind::Var:
      return e;
    case Kind::Log: {
      Expr a = expand_logs_rec(e.arg(), r);
      if (a.kind() == Kind::Product) {
        bool ok = true;
        for (const auto& f : a.children()) ok = ok && positive_on(f, r);
        if (ok) {
          std::vector<Expr> parts;
          for (const auto& f : a.children()) parts.push_back(expand_logs_rec(log(f), r));
          return sum(std::move(parts));
        }
      }
      if (a.kind() == Kind::Power && positive_on(a.base(), r))
        return a.exponent() * expand_logs_rec(log(a.base()), r);
      return log(a);
    }
    default: {
      std::vector<Expr> ch;
      for (const auto& c : e.children()) ch.push_back(expand_logs_rec(c, r));
      switch (e.kind()) {
        case Kind::Sum: return sum(std::move(ch));
        case Kind::Product: return product(std::move(ch));
        case Kind::Power: return power(ch[0], e.exponent());
        case Kind::Exp: return exp(ch[0]);
        default: return e;
      }
    }
  }
}

}  // namespace

Expr expand_logs(const Expr& e, const Region& r) { return expand_logs_rec(e, r); }

std::optional<Rational> homogeneous_degree(const Expr& e) {
  switch (e.kind()) {
    case Kind::Const:
      if (e.value() == 0) return std::nullopt;
      return Rational(0);
    case Kind::Var:
      return Rational(1);
    case Kind::Sum: {
      std::optional<Rational> d;
      for (const auto& t : e.children()) {
        auto dt = homogeneous_degree(t);
        if (!dt || (d && *d != *dt)) return std::nullopt;
        d = dt;
      }
      return d;
    }
    case Kind::Product: {
      Rational total = 0;
      for (const auto& f : e.children()) {
        auto df = homogeneous_degree(f);
        if (!df) return std::nullopt;
        total += *df;
      }
      return total;
    }
    case Kind::Power: {
      auto db = homogeneous_degree(e.base());
      if (!db) return std::nullopt;
      return *db * e.exponent();
    }
    case Kind::Log:
    case Kind::Exp:
      if (free_vars(e).empty()) return Rational(0);
      return std::nullopt;
  }
  return std::nullopt;
}

ProveAttempt prove_piece(const Expr& f_in, const Expr& g_in, const Region& r, const Rational& C,
                         const ProverOptions& opts, std::size_t* budget) {
  ProveAttempt out;
  Expr f = expand_logs(normalize(f_in), r);
  Expr g = expand_logs(normalize(g_in), r);
  BoxProofOptions bo;
  bo.max_boxes = opts.boxes_per_attempt;
  std::vector<std::string> notes;
  for (const auto& res : residuals(f, g, r, C)) {
    if (budget && *budget == 0) {
      notes.push_back("shared box budget exhausted");
      break;
    }
    bo.search_counterexamples = true;
    auto br = prove_nonnegative(res.H, res.region, bo, budget);
    out.boxes += br.boxes;
    if (br.outcome == BoxOutcome::Proved) {
      out.status = AttemptStatus::Proved;
      out.cert.C = C;
      out.cert.strategy = res.strategy;
      out.cert.steps = res.steps;
      out.cert.steps.push_back({"BranchAndBound", "residual \\geq 0 verified on " + std::to_string(br.boxes) + " boxes"});
      out.cert.residual = res.H;
      out.cert.residual_region = res.region;
      out.cert.boxes = out.boxes;
      return out;
    }
    if (br.outcome == BoxOutcome::Counterexample && res.strategy == "direct") {
      out.status = AttemptStatus::Refuted;
      out.witness = br.witness;
      out.reason = "f > C g at a feasible point";
      return out;
    }
    notes.push_back(res.strategy + ": " + to_string(br.outcome) + (br.note.empty() ? "" : " (" + br.note + ")"));
  }
  out.status = AttemptStatus::Unknown;
  for (const auto& n : notes) out.reason += (out.reason.empty() ? "" : "; ") + n;
  return out;
}

PieceResult grid_search(const Expr& f, const Expr& g, const Region& r, const GridSpec& grid, const ProverOptions& opts) {
  PieceResult out;
  std::size_t budget = opts.total_boxes;
  for (const auto& C : grid.values) {
    auto a = prove_piece(f, g, r, C, opts, &budget);
    out.boxes += a.boxes;
    out.attempts.push_back({C, a.status, a.reason});
    if (a.status == AttemptStatus::Proved) {
      out.proved = true;
      out.C = C;
      out.cert = a.cert;
      return out;
    }
    if (budget == 0) {
      out.reason = "box budget exhausted at C = " + to_string(C);
      return out;
    }
  }
  out.reason = "no grid constant up to " + to_string(grid.max()) + " could be proved";
  return out;
}

}  // namespace decomp
