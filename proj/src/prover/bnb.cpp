#include "decomp/bnb.hpp"

#include "decomp/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>

namespace decomp {

std::string to_string(BoxOutcome o) {
  switch (o) {
    case BoxOutcome::Proved: return "proved";
    case BoxOutcome::Counterexample: return "counterexample";
    case BoxOutcome::Exhausted: return "exhausted";
    case BoxOutcome::Stuck: return "stuck";
  }
  return "?";
}

namespace {

using Box = std::vector<Interval>;
constexpr double kInf = Interval::inf;

enum class Sign { NonNeg, NonPos, Unknown };

Sign sign_of(const Interval& iv) {
  if (iv.partial) return Sign::Unknown;
  if (iv.lo >= 0) return Sign::NonNeg;
  if (iv.hi <= 0) return Sign::NonPos;
  return Sign::Unknown;
}

// Strict positivity of a product on a box, factor by factor: exponentials are
// always positive and a power is positive when its base is, so an unbounded
// side such as x^-2 on [4, inf] does not spoil the test.
class PositivityTest {
 public:
  PositivityTest(const Expr& e, const std::vector<std::string>& order) {
    for (const auto& f : factors_of(e)) {
      if (f.kind() == Kind::Exp) continue;
      if (f.is_const()) {
        if (f.value() <= 0) never_ = true;
        continue;
      }
      const Expr& base = f.kind() == Kind::Power ? f.base() : f;
      checks_.emplace_back(base, order);
    }
  }

  bool holds(const Box& box) const {
    if (never_) return false;
    for (const auto& p : checks_) {
      Interval iv = p.eval(box);
      if (iv.partial || !(iv.lo > 0)) return false;
    }
    return true;
  }

 private:
  std::vector<Program> checks_;
  bool never_ = false;
};

// Decides the sign of an expression D on a box, directly or through D / s for
// a sign-definite term s of D.
struct SignTest {
  Program direct;
  struct Divided {
    Program quotient;
    PositivityTest pos;
    PositivityTest neg;
  };
  std::vector<Divided> divided;  // D / s for the terms s of D

  SignTest(const Expr& d, const std::vector<std::string>& order) : direct(d, order) {
    auto ts = terms_of(d);
    if (ts.size() < 2) return;
    for (std::size_t i = 0; i < ts.size() && i < 4; ++i) {
      if (ts[i].is_const()) continue;
      Expr q = expand(d / ts[i], 64);
      divided.push_back({Program(q, order), PositivityTest(ts[i], order), PositivityTest(-ts[i], order)});
    }
  }

  Sign decide(const Box& box) const {
    Sign s = sign_of(direct.eval(box));
    if (s != Sign::Unknown) return s;
    for (const auto& dv : divided) {
      bool pos = dv.pos.holds(box);
      bool neg = !pos && dv.neg.holds(box);
      if (!pos && !neg) continue;
      Sign qs = sign_of(dv.quotient.eval(box));
      if (qs == Sign::Unknown) continue;
      if (neg) qs = qs == Sign::NonNeg ? Sign::NonPos : Sign::NonNeg;
      return qs;
    }
    return Sign::Unknown;
  }
};

// One term coef * mono of a candidate.
class Term {
 public:
  Term(Rational coef, Expr mono, const std::vector<std::string>& order)
      : coef_(std::move(coef)), coef_iv_(Interval::of(coef_)), mono_(std::move(mono)), prog_(mono_, order),
        order_(&order), positive_(mono_, order) {
    for (std::size_t i = 0; i < order.size(); ++i)
      if (depends_on(mono_, order[i])) vars_.push_back(static_cast<int>(i));
    log_tests_.resize(vars_.size());
    plain_tests_.resize(vars_.size());
  }

  const std::vector<int>& vars() const { return vars_; }

  // Lower bound of coef * mono over the box; nullopt on domain trouble. Vars
  // whose monotonicity could not be decided are appended to `unknown`.
  std::optional<double> lower(const Box& box, std::vector<int>& unknown) const {
    Interval naive = prog_.eval(box);
    if (naive.partial) return std::nullopt;
    bool want_min = coef_ > 0;
    double bound = want_min ? naive.lo : naive.hi;
    if (!vars_.empty() && !(naive.is_point())) {
      Box pinned = box;
      bool any = false;
      bool use_log = positive_.holds(box);
      for (std::size_t k = 0; k < vars_.size(); ++k) {
        int v = vars_[k];
        const Interval& vi = box[v];
        if (vi.is_point()) continue;
        Sign s = test(k, use_log).decide(box);
        if (s == Sign::Unknown) {
          unknown.push_back(v);
          continue;
        }
        // Minimum sits at lo for nondecreasing terms, maximum at hi.
        bool at_lo = (s == Sign::NonNeg) == want_min;
        double c = at_lo ? vi.lo : vi.hi;
        if (!std::isfinite(c)) continue;
        pinned[v] = Interval::point(c);
        any = true;
      }
      if (any) {
        Interval corner = prog_.eval(pinned);
        if (!corner.partial) bound = want_min ? std::max(bound, corner.lo) : std::min(bound, corner.hi);
      }
    }
    Interval scaled = coef_iv_ * Interval(bound, bound);
    if (std::isnan(scaled.lo)) return std::nullopt;
    return scaled.lo;
  }

 private:
  const SignTest& test(std::size_t k, bool use_log) const {
    auto& slot = use_log ? log_tests_[k] : plain_tests_[k];
    if (!slot) {
      const std::string& v = (*order_)[vars_[k]];
      Expr d;
      if (use_log) {
        std::vector<Expr> parts;
        for (const auto& f : factors_of(mono_))
          if (depends_on(f, v)) parts.push_back(differentiate(f, v) / f);
        d = sum(std::move(parts));
      } else {
        d = differentiate(mono_, v);
      }
      slot = std::make_unique<SignTest>(d, *order_);
    }
    return *slot;
  }

  Rational coef_;
  Interval coef_iv_;
  Expr mono_;
  Program prog_;
  const std::vector<std::string>* order_;
  PositivityTest positive_;
  std::vector<int> vars_;
  mutable std::vector<std::unique_ptr<SignTest>> log_tests_;
  mutable std::vector<std::unique_ptr<SignTest>> plain_tests_;
};

struct Candidate {
  std::optional<Program> divisor;
  std::vector<Term> terms;

  Candidate(const Expr& body, std::optional<Expr> div, const std::vector<std::string>& order, bool whole = false) {
    if (div) divisor.emplace(*div, order);
    if (whole) {
      terms.emplace_back(Rational(1), body, order);
      return;
    }
    for (const auto& t : terms_of(body)) {
      auto [c, m] = split_coefficient(t);
      terms.emplace_back(c, m, order);
    }
  }

  std::optional<double> lower(const Box& box, std::vector<int>& unknown) const {
    if (divisor) {
      Interval d = divisor->eval(box);
      if (d.partial || !(d.lo >= 0)) return std::nullopt;
    }
    double acc = 0;
    for (const auto& t : terms) {
      auto l = t.lower(box, unknown);
      if (!l) return std::nullopt;
      acc = add_down(acc, *l);
      if (acc == -kInf) return acc;
    }
    return acc;
  }
};

struct CompiledConstraint {
  Program diff;
  Relation rel;
};

struct CompiledThreshold {
  int var;
  bool upper;
  Program bound;
};

bool definitely_violated(const Interval& d, Relation rel) {
  if (d.partial) return false;
  switch (rel) {
    case Relation::Le: return d.lo > 0;
    case Relation::Lt: return d.lo >= 0;
    case Relation::Ge: return d.hi < 0;
    case Relation::Gt: return d.hi <= 0;
    case Relation::Eq: return d.lo > 0 || d.hi < 0;
  }
  return false;
}

bool definitely_holds(const Interval& d, Relation rel) {
  if (d.partial) return false;
  switch (rel) {
    case Relation::Le: return d.hi <= 0;
    case Relation::Lt: return d.hi < 0;
    case Relation::Ge: return d.lo >= 0;
    case Relation::Gt: return d.lo > 0;
    case Relation::Eq: return d.lo == 0 && d.hi == 0;
  }
  return false;
}

double split_point(const Interval& iv) {
  double lo = iv.lo, hi = iv.hi;
  if (lo == -kInf && hi == kInf) return 0.0;
  if (hi == kInf) {
    if (lo >= 1) return lo * 4;
    if (lo >= 0) return lo + 1;
    return 0.0;
  }
  if (lo == -kInf) {
    if (hi <= -1) return hi * 4;
    if (hi <= 0) return hi - 1;
    return 0.0;
  }
  if (lo > 0 && hi > 4 * lo) return std::sqrt(lo) * std::sqrt(hi);
  if (hi < 0 && lo < 4 * hi) return -std::sqrt(-lo) * std::sqrt(-hi);
  return lo + (hi - lo) / 2;
}

bool splittable(const Interval& iv) {
  if (iv.is_point()) return false;
  if (std::isfinite(iv.lo) && std::isfinite(iv.hi)) {
    double scale = std::max({1.0, std::fabs(iv.lo), std::fabs(iv.hi)});
    if (iv.hi - iv.lo < 1e-10 * scale) return false;
  }
  double m = split_point(iv);
  return m > iv.lo && m < iv.hi;
}

double width_measure(const Interval& iv) {
  if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) return kInf;
  double base = std::max(1.0, std::min(std::fabs(iv.lo), std::fabs(iv.hi)));
  return (iv.hi - iv.lo) / base;
}

class Engine {
 public:
  Engine(const Expr& H, const Region& r) : region_(r), order_(r.var_names()) {
    for (const auto& v : free_vars(H))
      if (!r.declares(v)) throw ExprError("variable '" + v + "' is not declared by the region");
    H_ = expand(H, 64);
    h_prog_ = Program(H_, order_);
    for (std::size_t i = 0; i < order_.size(); ++i)
      if (depends_on(H_, order_[i])) h_vars_.push_back(static_cast<int>(i));

    candidates_.emplace_back(H_, std::nullopt, order_);
    for (const auto& t : terms_of(H_)) {
      auto [c, m] = split_coefficient(t);
      if (c <= 0 || m.is_const()) continue;
      if (candidates_.size() > 6) break;
      candidates_.emplace_back(expand(H_ / m, 64), m, order_);
    }
    // Cleared denominators: H = (H * D) / D with D a sum raised to a negative
    // power, so ratios such as x / (1 + x) lose their inf * 0 products.
    std::vector<Expr> denominators;
    for (const auto& t : terms_of(H_))
      for (const auto& f : factors_of(t))
        if (f.kind() == Kind::Power && f.exponent() < 0 && f.base().kind() == Kind::Sum &&
            std::find(denominators.begin(), denominators.end(), f.base()) == denominators.end())
          denominators.push_back(f.base());
    for (const auto& d : denominators) {
      if (denominators.size() > 3) break;
      std::vector<Expr> cleared;
      for (const auto& t : terms_of(H_)) cleared.push_back(expand(t * d, 64));
      candidates_.emplace_back(expand(sum(std::move(cleared)), 64), power(d, Rational(-1)), order_);
    }
    // H as a single term: its corner bound captures minima that sit exactly
    // on the boundary, where the termwise bounds cannot reach zero.
    if (H_.kind() == Kind::Sum) candidates_.emplace_back(H_, std::nullopt, order_, true);

    for (const auto& c : r.constraints()) constraints_.push_back({Program(c.difference(), order_), c.rel});
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < order_.size(); ++i) index[order_[i]] = static_cast<int>(i);
    for (const auto& t : thresholds(r)) {
      if (t.bound.is_const()) continue;
      thresholds_.push_back({index.at(t.var), t.upper, Program(t.bound, order_)});
    }

    auto db = direct_bounds(r);
    root_.resize(order_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) {
      auto it = db.find(order_[i]);
      root_[i] = it == db.end() ? Interval::entire() : Interval(it->second.lo, it->second.hi);
    }
  }

  BoxProofResult run(const BoxProofOptions& opts, std::size_t* budget) {
    BoxProofResult res;
    if (H_.is_const()) {
      res.outcome = H_.value() >= 0 ? BoxOutcome::Proved : BoxOutcome::Exhausted;
      res.note = H_.value() >= 0 ? "nonnegative constant" : "negative constant";
      if (H_.value() < 0 && opts.search_counterexamples) {
        Box b = root_;
        if (contract(b)) {
          auto w = probe(b, true);
          if (w) {
            res.outcome = BoxOutcome::Counterexample;
            res.witness = *w;
          }
        }
      }
      return res;
    }
    std::vector<Box> stack{root_};
    while (!stack.empty()) {
      if (res.boxes >= opts.max_boxes || (budget && *budget == 0)) {
        res.outcome = BoxOutcome::Exhausted;
        res.note = "box budget exhausted with " + std::to_string(stack.size()) + " open boxes";
        return res;
      }
      Box box = std::move(stack.back());
      stack.pop_back();
      ++res.boxes;
      if (budget) --*budget;
      if (!contract(box)) continue;

      std::vector<int> unknown;
      bool done = false;
      for (const auto& cand : candidates_) {
        auto lb = cand.lower(box, unknown);
        if (lb && *lb >= 0) {
          done = true;
          break;
        }
      }
      if (done) continue;

      if (opts.search_counterexamples) {
        if (auto w = probe(box, false)) {
          res.outcome = BoxOutcome::Counterexample;
          res.witness = *w;
          res.note = "H < 0 at a feasible point";
          return res;
        }
      }

      int v = choose_split(box, unknown);
      if (v < 0) {
        res.outcome = BoxOutcome::Stuck;
        res.note = "box cannot be split further: " + describe(box);
        return res;
      }
      double m = split_point(box[v]);
      Box left = box, right = box;
      left[v].hi = m;
      right[v].lo = m;
      stack.push_back(std::move(right));
      stack.push_back(std::move(left));
    }
    res.outcome = BoxOutcome::Proved;
    return res;
  }

 private:
  // Narrows the box through thresholds; false when it is infeasible.
  bool contract(Box& box) const {
    for (int round = 0; round < 2; ++round) {
      for (const auto& t : thresholds_) {
        Interval b = t.bound.eval(box);
        if (b.partial) continue;
        Interval& vi = box[t.var];
        if (t.upper) {
          if (b.hi < vi.hi) vi.hi = b.hi;
        } else if (b.lo > vi.lo) {
          vi.lo = b.lo;
        }
        if (vi.lo > vi.hi) return false;
      }
    }
    for (const auto& c : constraints_)
      if (definitely_violated(c.diff.eval(box), c.rel)) return false;
    return true;
  }

  // Tries the box midpoint and its lower corner, each also pulled into the
  // coupled constraints through the thresholds.
  std::optional<Assignment> probe(const Box& box, bool any_sign) const {
    std::vector<double> mid(box.size()), corner(box.size());
    for (std::size_t i = 0; i < box.size(); ++i) {
      mid[i] = box[i].is_point() ? box[i].lo : split_point(box[i]);
      corner[i] = std::isfinite(box[i].lo) ? box[i].lo : mid[i];
    }
    for (const auto* start : {&mid, &corner}) {
      std::vector<double> p = *start;
      if (auto a = check_point(p, any_sign)) return a;
      if (thresholds_.empty()) continue;
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& t : thresholds_) {
          double b = t.bound.eval(p);
          if (!std::isfinite(b)) continue;
          double nudge = std::max(std::fabs(b) * 1e-12, 1e-300);
          if (t.upper && p[t.var] > b) p[t.var] = b - nudge;
          if (!t.upper && p[t.var] < b) p[t.var] = b + nudge;
        }
      }
      if (auto a = check_point(p, any_sign)) return a;
    }
    return std::nullopt;
  }

  std::optional<Assignment> check_point(const std::vector<double>& p, bool any_sign) const {
    std::vector<Interval> pt(p.size());
    Assignment a;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!std::isfinite(p[i])) return std::nullopt;
      pt[i] = Interval::point(p[i]);
      a[order_[i]] = p[i];
    }
    for (const auto& c : constraints_)
      if (!definitely_holds(c.diff.eval(pt), c.rel)) return std::nullopt;
    Interval h = h_prog_.eval(pt);
    if (h.partial) return std::nullopt;
    if (any_sign || h.hi < 0) return a;
    return std::nullopt;
  }

  int choose_split(const Box& box, const std::vector<int>& unknown) const {
    auto best_of = [&](const std::vector<int>& vs) {
      int best = -1;
      double bw = -1;
      for (int v : vs) {
        if (!splittable(box[v])) continue;
        double w = width_measure(box[v]);
        if (w > bw) {
          bw = w;
          best = v;
        }
      }
      return best;
    };
    int v = best_of(unknown);
    if (v < 0) v = best_of(h_vars_);
    return v;
  }

  std::string describe(const Box& box) const {
    std::string s;
    for (std::size_t i = 0; i < box.size(); ++i) {
      if (!s.empty()) s += ", ";
      s += order_[i] + " in [" + std::to_string(box[i].lo) + ", " + std::to_string(box[i].hi) + "]";
    }
    return s;
  }

  const Region& region_;
  std::vector<std::string> order_;
  Expr H_;
  Program h_prog_;
  std::vector<int> h_vars_;
  std::vector<Candidate> candidates_;
  std::vector<CompiledConstraint> constraints_;
  std::vector<CompiledThreshold> thresholds_;
  Box root_;
};

}  // namespace

BoxProofResult prove_nonnegative(const Expr& H, const Region& r, const BoxProofOptions& opts, std::size_t* budget) {
  Engine engine(normalize(H), r);
  return engine.run(opts, budget);
}

bool certainly_satisfies(const Region& r, const Assignment& a) {
  std::map<std::string, Interval> box;
  for (const auto& v : r.var_names()) {
    auto it = a.find(v);
    if (it == a.end()) return false;
    box[v] = Interval::point(it->second);
  }
  for (const auto& c : r.constraints())
    if (!definitely_holds(eval_interval(c.difference(), box), c.rel)) return false;
  return true;
}

Interval region_enclosure(const Expr& e, const Region& r) {
  auto db = direct_bounds(r);
  std::map<std::string, Interval> box;
  for (const auto& v : free_vars(e)) {
    auto it = db.find(v);
    box[v] = it == db.end() ? Interval::entire() : Interval(it->second.lo, it->second.hi);
  }
  return eval_interval(e, box);
}

}  // namespace decomp
