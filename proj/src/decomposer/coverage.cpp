#include "decomp/decomposer.hpp"

#include "decomp/calculus.hpp"
#include "decomp/falsify.hpp"
#include "decomp/prover.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace decomp {

std::string to_string(CoverStatus s) {
  switch (s) {
    case CoverStatus::ProvedCover: return "ProvedCover";
    case CoverStatus::SampledCover: return "SampledCover";
    case CoverStatus::NotCover: return "NotCover";
  }
  return "?";
}

std::string Decomposition::describe() const {
  std::ostringstream os;
  if (is_ladder()) {
    os << "ladder [";
    const auto& l = breakpoints().ladder;
    for (std::size_t i = 0; i < l.size(); ++i) os << (i ? ", " : "") << render_latex(l[i]);
    os << "]";
    return os.str();
  }
  os << "cover k=" << cover().pieces.size();
  return os.str();
}

namespace {

// Constraints of piece that the parent domain does not already contain.
std::vector<Constraint> extras(const Region& piece, const Region& parent) {
  std::set<std::string> base;
  for (const auto& c : parent.constraints()) base.insert(c.key());
  std::vector<Constraint> out;
  for (const auto& c : piece.constraints())
    if (!base.count(c.key())) out.push_back(c);
  return out;
}

bool implies_parent(const Region& piece, const Region& parent) {
  std::set<std::string> have;
  for (const auto& c : piece.constraints()) have.insert(c.key());
  return std::all_of(parent.constraints().begin(), parent.constraints().end(),
                     [&](const Constraint& c) { return have.count(c.key()) > 0; });
}

bool complementary(const Constraint& a, const Constraint& b) {
  if (a.rel == Relation::Eq || b.rel == Relation::Eq) return false;
  Constraint n1(a.lhs, negate(a.rel), a.rhs);
  Constraint n2(a.rhs, flip(negate(a.rel)), a.lhs);
  return b == n1 || b == n2;
}

// Non-strict a <= b between two variables, as (a, b).
std::optional<std::pair<std::string, std::string>> var_order(const Constraint& c) {
  if (!c.lhs.is_var() || !c.rhs.is_var()) return std::nullopt;
  if (c.rel == Relation::Le) return std::make_pair(c.lhs.name(), c.rhs.name());
  if (c.rel == Relation::Ge) return std::make_pair(c.rhs.name(), c.lhs.name());
  return std::nullopt;
}

bool is_ordering_cover(const std::vector<std::vector<Constraint>>& ex) {
  if (ex.empty()) return false;
  std::size_t n = ex.front().size() + 1;
  std::set<std::vector<std::string>> perms;
  std::set<std::string> universe;
  for (const auto& cs : ex) {
    if (cs.size() + 1 != n) return false;
    std::map<std::string, std::string> next;
    std::set<std::string> has_prev, vars;
    for (const auto& c : cs) {
      auto o = var_order(c);
      if (!o || next.count(o->first) || has_prev.count(o->second)) return false;
      next[o->first] = o->second;
      has_prev.insert(o->second);
      vars.insert(o->first);
      vars.insert(o->second);
    }
    if (vars.size() != n) return false;
    std::string head;
    for (const auto& v : vars)
      if (!has_prev.count(v)) head = v;
    std::vector<std::string> chain{head};
    while (next.count(chain.back())) chain.push_back(next[chain.back()]);
    if (chain.size() != n) return false;
    if (universe.empty()) universe = vars;
    if (vars != universe) return false;
    perms.insert(chain);
  }
  std::size_t fact = 1;
  for (std::size_t i = 2; i <= n; ++i) fact *= i;
  return perms.size() == fact;
}

bool is_max_cover(const std::vector<std::vector<Constraint>>& ex) {
  std::size_t n = ex.size();
  if (n < 2) return false;
  std::set<std::string> tops, universe;
  for (const auto& cs : ex) {
    if (cs.size() + 1 != n) return false;
    std::string top;
    std::set<std::string> vars;
    for (const auto& c : cs) {
      auto o = var_order(c);
      if (!o) return false;
      if (!top.empty() && o->second != top) return false;
      top = o->second;
      vars.insert(o->first);
    }
    vars.insert(top);
    if (vars.size() != n) return false;
    if (universe.empty()) universe = vars;
    if (vars != universe) return false;
    tops.insert(top);
  }
  return tops.size() == n;
}

std::string structural_cover(const RegionCover& c, const Region& parent) {
  for (const auto& piece : c.pieces)
    if (!implies_parent(piece, parent)) return "";
  std::vector<std::vector<Constraint>> ex;
  for (const auto& piece : c.pieces) ex.push_back(extras(piece, parent));
  for (const auto& cs : ex)
    if (cs.empty()) return "a piece equals the whole domain";
  if (ex.size() == 2 && ex[0].size() == 1 && ex[1].size() == 1 && complementary(ex[0][0], ex[1][0]))
    return "complementary threshold pair";
  if (is_ordering_cover(ex)) return "every ordering of the variables";
  if (is_max_cover(ex)) return "every choice of largest variable";
  return "";
}

CoverageReport sample_cover(const Region& domain, const std::vector<Region>& pieces, const CoverOptions& opts) {
  CoverageReport rep;
  rep.status = CoverStatus::SampledCover;
  RegionSampler sampler(domain, opts.seed);
  for (std::size_t i = 0; i < opts.samples; ++i) {
    auto a = sampler.sample();
    if (!a) continue;
    ++rep.samples;
    bool covered = std::any_of(pieces.begin(), pieces.end(), [&](const Region& r) { return satisfies(r, *a); });
    if (covered) continue;
    if (rep.uncovered++ == 0) rep.witness = *a;
  }
  if (rep.uncovered > 0) {
    rep.status = CoverStatus::NotCover;
    rep.reason = std::to_string(rep.uncovered) + " of " + std::to_string(rep.samples) + " sampled points lie in no piece";
  } else if (rep.samples == 0) {
    rep.reason = "no point of the domain was sampled";
  } else {
    rep.reason = "all " + std::to_string(rep.samples) + " sampled points are covered";
  }
  return rep;
}

CoverageReport ladder_cover(const SeriesProblem& p, const Breakpoints& b, const CoverOptions& opts) {
  CoverageReport rep;
  const auto& l = b.ladder;
  std::set<std::string> keys;
  for (const auto& x : l) {
    if (!keys.insert(x.key()).second) {
      rep.reason = "breakpoint " + render_latex(x) + " appears twice";
      return rep;
    }
    for (const auto& v : free_vars(x)) {
      if (!p.params.declares(v)) {
        rep.reason = "breakpoint " + render_latex(x) + " uses " + v + ", which is not a parameter";
        return rep;
      }
    }
  }
  ProverOptions po;
  po.boxes_per_attempt = 2000;
  po.total_boxes = 10000;
  bool proved = true;
  for (std::size_t i = 0; i + 1 < l.size() && proved; ++i)
    proved = prove_piece(l[i], l[i + 1], p.params, 1, po).status == AttemptStatus::Proved;
  if (proved) {
    rep.status = CoverStatus::ProvedCover;
    rep.reason = l.size() < 2 ? "at most one breakpoint" : "breakpoints are nondecreasing on the parameter region";
    return rep;
  }
  rep.status = CoverStatus::SampledCover;
  auto names = p.params.var_names();
  RegionSampler sampler(p.params, opts.seed);
  for (std::size_t s = 0; s < opts.samples; ++s) {
    auto a = names.empty() ? std::optional<Assignment>(Assignment{}) : sampler.sample();
    if (!a) continue;
    ++rep.samples;
    for (std::size_t i = 0; i + 1 < l.size(); ++i) {
      try {
        if (evaluate(l[i], *a) <= evaluate(l[i + 1], *a)) continue;
      } catch (const DomainError&) {
      }
      if (rep.uncovered++ == 0) rep.witness = *a;
      break;
    }
    if (names.empty()) break;
  }
  if (rep.uncovered > 0) {
    rep.status = CoverStatus::NotCover;
    rep.reason = "the ladder decreases at a sampled parameter point";
  } else {
    rep.reason = "the ladder is nondecreasing at every sampled parameter point";
  }
  return rep;
}

}  // namespace

CoverageReport validate_cover(const ProblemStatement& p, const Decomposition& d, const CoverOptions& opts) {
  if (p.is_series() != d.is_ladder()) {
    CoverageReport rep;
    rep.reason = "decomposition kind does not match the problem";
    return rep;
  }
  if (d.is_ladder()) return ladder_cover(p.series(), d.breakpoints(), opts);
  const Region& domain = p.inequality().region;
  const auto& pieces = d.cover().pieces;
  if (pieces.empty()) {
    CoverageReport rep;
    rep.reason = "no pieces";
    return rep;
  }
  std::string why = structural_cover(d.cover(), domain);
  if (!why.empty()) {
    CoverageReport rep;
    rep.status = CoverStatus::ProvedCover;
    rep.reason = why;
    return rep;
  }
  return sample_cover(domain, pieces, opts);
}

}  // namespace decomp
