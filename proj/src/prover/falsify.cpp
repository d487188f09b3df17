#include "decomp/falsify.hpp"

#include "decomp/bnb.hpp"
#include "decomp/calculus.hpp"
#include "decomp/interval.hpp"

#include <algorithm>
#include <cmath>

namespace decomp {

RegionSampler::RegionSampler(const Region& r, std::uint64_t seed)
    : region_(r), order_(r.var_names()), bounds_(direct_bounds(r)), rng_(seed) {
  for (const auto& t : thresholds(r))
    if (!t.bound.is_const()) thresholds_.push_back(t);
}

double RegionSampler::draw(double lo, double hi) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto logu = [&](double a, double b) { return std::pow(10.0, a + (b - a) * unit(rng_)); };
  bool lo_fin = std::isfinite(lo), hi_fin = std::isfinite(hi);
  if (!lo_fin && !hi_fin) {
    double mag = logu(-3, 6);
    return unit(rng_) < 0.5 ? -mag : mag;
  }
  if (lo_fin && !hi_fin) return lo + logu(-6, 6);
  if (!lo_fin) return hi - logu(-6, 6);
  double w = hi - lo;
  if (w <= 0) return lo;
  double t = logu(-6, 0);
  return unit(rng_) < 0.5 ? lo + w * t : hi - w * t;
}

std::optional<Assignment> RegionSampler::sample(int tries) {
  for (int k = 0; k < tries; ++k) {
    std::vector<std::string> order = order_;
    if ((attempt_++) % 2 == 1) std::reverse(order.begin(), order.end());
    Assignment a;
    bool ok = true;
    for (const auto& v : order) {
      auto it = bounds_.find(v);
      double lo = it == bounds_.end() ? -Interval::inf : it->second.lo;
      double hi = it == bounds_.end() ? Interval::inf : it->second.hi;
      for (const auto& t : thresholds_) {
        if (t.var != v) continue;
        bool ready = true;
        for (const auto& u : free_vars(t.bound)) ready = ready && a.count(u);
        if (!ready) continue;
        try {
          double b = evaluate(t.bound, a);
          if (std::isnan(b)) continue;
          if (t.upper) hi = std::min(hi, b);
          else lo = std::max(lo, b);
        } catch (const DomainError&) {
        }
      }
      if (lo > hi) {
        ok = false;
        break;
      }
      a[v] = draw(lo, hi);
    }
    if (ok && satisfies(region_, a)) return a;
  }
  return std::nullopt;
}

namespace {

std::vector<double> point_of(const Assignment& a, const std::vector<std::string>& order) {
  std::vector<double> p;
  for (const auto& v : order) p.push_back(a.at(v));
  return p;
}

// Local search over single-coordinate moves; `score` returns -inf for
// infeasible points.
template <class Score>
Assignment ascend(Assignment a, double& best, std::size_t rounds, const std::vector<std::string>& order,
                  Score&& score, double stop_above) {
  static const double factors[] = {2.0, 0.5, 10.0, 0.1, 1.1, 1.0 / 1.1};
  for (std::size_t round = 0; round < rounds && best <= stop_above; ++round) {
    bool improved = false;
    for (const auto& v : order) {
      double x = a[v];
      std::vector<double> moves;
      for (double f : factors) moves.push_back(x * f);
      moves.push_back(x + 1);
      moves.push_back(x - 1);
      for (double m : moves) {
        if (m == x || !std::isfinite(m)) continue;
        Assignment b = a;
        b[v] = m;
        double s = score(b);
        if (s > best) {
          best = s;
          a = std::move(b);
          improved = true;
          break;
        }
      }
    }
    if (!improved) break;
  }
  return a;
}

}  // namespace

std::optional<Counterexample> falsify(const Expr& f, const Expr& g, const Region& r, const FalsifyOptions& opts) {
  auto order = r.var_names();
  Program pf(f, order), pg(g, order);
  Program ph(constant(opts.C) * g - f, order);
  double C = to_double(opts.C);

  auto score = [&](const Assignment& a) {
    if (!satisfies(r, a)) return -Interval::inf;
    auto p = point_of(a, order);
    double fv = pf.eval(p), gv = pg.eval(p);
    if (std::isnan(fv) || std::isnan(gv)) return -Interval::inf;
    if (gv > 0) return fv / gv;
    return fv > 0 ? Interval::inf : -Interval::inf;
  };
  auto verify = [&](const Assignment& a) -> std::optional<Counterexample> {
    if (!certainly_satisfies(r, a)) return std::nullopt;
    std::vector<Interval> box;
    for (const auto& v : order) box.push_back(Interval::point(a.at(v)));
    Interval h = ph.eval(box);
    if (h.partial || !(h.hi < 0)) return std::nullopt;
    auto p = point_of(a, order);
    return Counterexample{a, pf.eval(p), pg.eval(p), opts.C, 0};
  };

  RegionSampler sampler(r, opts.seed);
  std::vector<std::pair<double, Assignment>> top;
  for (std::size_t i = 0; i < opts.samples; ++i) {
    auto a = sampler.sample();
    if (!a) continue;
    double s = score(*a);
    if (s > C) {
      if (auto cex = verify(*a)) return cex;
    }
    top.emplace_back(s, *a);
    if (top.size() > 64) {
      std::sort(top.begin(), top.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
      top.resize(8);
    }
  }
  std::sort(top.begin(), top.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  if (top.size() > 8) top.resize(8);
  for (auto& [s, a] : top) {
    double best = s;
    Assignment end = ascend(a, best, opts.ascent_rounds, order, score, C * 1.01);
    if (best > C) {
      if (auto cex = verify(end)) return cex;
    }
  }
  return std::nullopt;
}

std::optional<Counterexample> falsify_series(const SeriesProblem& p, const FalsifyOptions& opts) {
  auto order = p.params.var_names();
  std::vector<std::string> with_index = order;
  with_index.push_back(p.index);
  Program term(p.summand, with_index), target(p.target, order);
  double C = to_double(opts.C);
  long max_terms = opts.max_terms;

  // Partial sum in double arithmetic with the number of terms used.
  auto partial = [&](const Assignment& a, long& used) {
    std::vector<double> pt = point_of(a, order);
    pt.push_back(0);
    double t_target = target.eval(point_of(a, order));
    double acc = 0;
    used = 0;
    for (long d = p.start; d < p.start + max_terms; ++d) {
      pt.back() = static_cast<double>(d);
      double t = term.eval(pt);
      if (std::isnan(t)) return std::nan("");
      acc += t;
      used = d - p.start + 1;
      if (acc > C * t_target * 1.01) break;
      if (used >= 64 && t * static_cast<double>(d) < 1e-9 * acc) break;
    }
    return acc;
  };
  auto score = [&](const Assignment& a) {
    if (!satisfies(p.params, a)) return -Interval::inf;
    double t_target = target.eval(point_of(a, order));
    if (std::isnan(t_target)) return -Interval::inf;
    long used;
    double s = partial(a, used);
    if (std::isnan(s)) return -Interval::inf;
    if (t_target <= 0) return s > 0 ? Interval::inf : -Interval::inf;
    return s / t_target;
  };
  auto verify = [&](const Assignment& a) -> std::optional<Counterexample> {
    if (!certainly_satisfies(p.params, a)) return std::nullopt;
    long used;
    partial(a, used);
    std::vector<Interval> box;
    for (const auto& v : order) box.push_back(Interval::point(a.at(v)));
    Interval t_target = target.eval(box);
    box.push_back(Interval(static_cast<double>(p.start + used), Interval::inf));
    Interval tail = term.eval(box);
    if (tail.partial || tail.lo < 0) return std::nullopt;
    double acc_lo = 0;
    for (long d = p.start; d < p.start + used; ++d) {
      box.back() = Interval::point(static_cast<double>(d));
      Interval t = term.eval(box);
      if (t.partial) return std::nullopt;
      acc_lo = add_down(acc_lo, t.lo);
    }
    Interval rhs = Interval::of(opts.C) * t_target;
    if (rhs.partial || !(acc_lo > rhs.hi)) return std::nullopt;
    Assignment point = a;
    return Counterexample{point, acc_lo, t_target.hi, opts.C, used};
  };

  RegionSampler sampler(p.params, opts.seed);
  std::vector<std::pair<double, Assignment>> top;
  std::size_t n = order.empty() ? 1 : opts.series_samples;
  for (std::size_t i = 0; i < n; ++i) {
    auto a = order.empty() ? std::optional<Assignment>(Assignment{}) : sampler.sample();
    if (!a) continue;
    double s = score(*a);
    if (s > C) {
      if (auto cex = verify(*a)) return cex;
    }
    top.emplace_back(s, *a);
  }
  std::sort(top.begin(), top.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  if (top.size() > 4) top.resize(4);
  if (order.empty()) return std::nullopt;
  for (auto& [s, a] : top) {
    double best = s;
    Assignment end = ascend(a, best, std::min<std::size_t>(opts.ascent_rounds, 40), order, score, C * 1.01);
    if (best > C) {
      if (auto cex = verify(end)) return cex;
    }
  }
  return std::nullopt;
}

}  // namespace decomp
