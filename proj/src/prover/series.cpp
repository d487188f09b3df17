#include "decomp/series.hpp"

#include "decomp/bnb.hpp"
#include "decomp/calculus.hpp"

namespace decomp {

namespace {

struct Monomial {
  Expr coef;  // free of the index
  Rational k;
};

Monomial as_monomial(const Expr& e, const std::string& index) {
  Monomial out{constant(1), 0};
  bool seen = false;
  std::vector<Expr> rest;
  for (const auto& f : factors_of(e)) {
    if (!depends_on(f, index)) {
      rest.push_back(f);
      continue;
    }
    if (seen) throw SeriesError("NotMonomial", "the bound " + e.key() + " has several index factors");
    seen = true;
    if (f.is_var()) out.k = 1;
    else if (f.kind() == Kind::Power && f.base().is_var()) out.k = f.exponent();
    else throw SeriesError("NotMonomial", "the bound " + e.key() + " is not a power of the index");
  }
  out.coef = product(rest);
  return out;
}

// Antiderivative of t^k.
Expr antiderivative(const Rational& k, const Expr& t) {
  if (k == -1) return log(t);
  return constant(Rational(1) / (k + 1)) * power(t, k + 1);
}

Region with_index(const Region& params, const std::string& index, std::vector<Constraint> extra) {
  std::vector<VarDecl> vars = params.vars();
  vars.push_back({index, VarRole::Index});
  std::vector<Constraint> cs = params.constraints();
  cs.insert(cs.end(), extra.begin(), extra.end());
  return Region(vars, cs);
}

void grade(SegmentResult& s, const Expr& target, const SeriesOptions& opts) {
  if (!opts.verify) {
    s.reason = "not verified";
    return;
  }
  s.piece = grid_search(s.sum_bound, target, s.claim_region, opts.grid, opts.prover);
  s.proved = s.piece.proved;
  s.C = s.piece.C;
  if (!s.proved) s.reason = s.piece.reason;
}

}  // namespace

Expr bound_segment_sum(const RegimeBound& rb, const std::string& index, const Expr& a, const std::optional<Expr>& b,
                       const Region& params) {
  Monomial mono = as_monomial(rb.bound, index);
  Expr K = constant(rb.factor);
  if (mono.k < 0) {
    Interval lo = region_enclosure(a, params);
    if (lo.partial || !(lo.lo > 0))
      throw SeriesError("NonMonotoneBound", "a decreasing bound needs a positive segment start");
    if (!b) {
      if (mono.k >= -1) throw SeriesError("DivergentTail", "the tail bound d^" + to_string(mono.k) + " is not summable");
      return normalize(K * mono.coef * (power(a, mono.k) - antiderivative(mono.k, a)));
    }
    return normalize(K * mono.coef * (power(a, mono.k) + antiderivative(mono.k, *b) - antiderivative(mono.k, a)));
  }
  if (!b) throw SeriesError("DivergentTail", "the tail bound d^" + to_string(mono.k) + " is not summable");
  if (mono.k > 0) {
    Interval lo = region_enclosure(a, params);
    if (lo.partial || lo.lo < 0)
      throw SeriesError("NonMonotoneBound", "an increasing bound needs a nonnegative segment start");
  }
  return normalize(K * mono.coef * (antiderivative(mono.k, *b + constant(1)) - antiderivative(mono.k, a)));
}

std::optional<Expr> geometric_sum(const SeriesProblem& p) {
  const std::string& n = p.index;
  std::vector<Expr> rest;
  std::optional<Expr> L;
  for (const auto& f : factors_of(p.summand)) {
    if (!depends_on(f, n)) {
      rest.push_back(f);
      continue;
    }
    if (L || f.kind() != Kind::Exp) return std::nullopt;
    L = f.arg();
  }
  if (!L) return std::nullopt;
  Expr alpha = differentiate(*L, n);
  if (depends_on(alpha, n)) return std::nullopt;
  Interval ratio = region_enclosure(exp(alpha), p.params);
  if (ratio.partial || !(ratio.hi < 1)) return std::nullopt;
  Expr beta = normalize(*L - alpha * var(n));
  Expr first = exp(alpha * constant(p.start) + beta);
  return normalize(product(rest) * first / (constant(1) - exp(alpha)));
}

SeriesResult prove_series(const SeriesProblem& p, const std::vector<Expr>& ladder, const SeriesOptions& opts) {
  SeriesResult out;
  const std::string& n = p.index;
  Expr start = constant(p.start);

  auto finish = [&]() {
    out.proved = !out.segments.empty();
    out.C = 0;
    for (std::size_t i = 0; i < out.segments.size(); ++i) {
      const auto& s = out.segments[i];
      if (!s.proved) {
        out.proved = false;
        if (out.reason.empty()) out.reason = "segment " + std::to_string(i) + ": " + s.reason;
      }
      out.C += s.C;
    }
    return out;
  };

  if (auto g = geometric_sum(p)) {
    SegmentResult s;
    s.kind = "geometric";
    s.start = start;
    s.region = with_index(p.params, n, {Constraint(var(n), Relation::Ge, start)});
    s.sum_bound = *g;
    s.claim_region = p.params;
    grade(s, p.target, opts);
    out.segments.push_back(std::move(s));
    return finish();
  }

  SegmentResult head;
  head.kind = "head";
  head.start = start;
  head.end = start + constant(1);
  head.region = with_index(p.params, n, {Constraint(var(n), Relation::Eq, start)});
  head.sum_bound = substitute(p.summand, n, start);
  head.claim_region = p.params;
  grade(head, p.target, opts);
  out.segments.push_back(std::move(head));

  std::vector<Expr> ends{start + constant(1)};
  ends.insert(ends.end(), ladder.begin(), ladder.end());
  SimplifierOptions so = opts.simplifier;
  so.focus = n;
  for (std::size_t i = 0; i < ends.size(); ++i) {
    SegmentResult s;
    s.kind = "segment";
    s.start = ends[i];
    if (i + 1 < ends.size()) s.end = ends[i + 1];
    std::vector<Constraint> range{Constraint(var(n), Relation::Ge, start + constant(1)),
                                  Constraint(var(n), Relation::Ge, s.start)};
    if (i == 0) range.pop_back();
    if (s.end) range.emplace_back(var(n), Relation::Le, *s.end);
    s.region = with_index(p.params, n, range);
    s.claim_region = p.params;
    if (s.end) s.claim_region.add(Constraint(s.start, Relation::Le, *s.end));
    try {
      s.regime = dominate_bound(p.summand, s.region, so);
      s.sum_bound = bound_segment_sum(*s.regime, n, s.start, s.end, s.claim_region);
    } catch (const SimplifierError& e) {
      s.reason = e.code + " at " + e.subexpr;
      out.segments.push_back(std::move(s));
      continue;
    } catch (const SeriesError& e) {
      s.reason = e.code + ": " + e.what();
      out.segments.push_back(std::move(s));
      continue;
    }
    grade(s, p.target, opts);
    out.segments.push_back(std::move(s));
  }
  return finish();
}

}  // namespace decomp
