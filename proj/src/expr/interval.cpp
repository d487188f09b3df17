#include "decomp/interval.hpp"

#include <algorithm>
#include <climits>
#include <cmath>

namespace decomp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMax = std::numeric_limits<double>::max();
constexpr double kTiny = 1e-290;

double next_down(double x) { return std::nextafter(x, -kInf); }
double next_up(double x) { return std::nextafter(x, kInf); }

double widen_down(double x, int ulps) {
  for (int i = 0; i < ulps; ++i) x = next_down(x);
  return x;
}
double widen_up(double x, int ulps) {
  for (int i = 0; i < ulps; ++i) x = next_up(x);
  return x;
}

}  // namespace

double add_down(double a, double b) {
  double s = a + b;
  if (std::isnan(s)) return -kInf;
  if (std::isinf(s)) {
    if (std::isfinite(a) && std::isfinite(b)) return s > 0 ? kMax : -kInf;
    return s;
  }
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  return err < 0 ? next_down(s) : s;
}

double add_up(double a, double b) {
  double s = a + b;
  if (std::isnan(s)) return kInf;
  if (std::isinf(s)) {
    if (std::isfinite(a) && std::isfinite(b)) return s < 0 ? -kMax : kInf;
    return s;
  }
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  return err > 0 ? next_up(s) : s;
}

namespace {

// Product with 0 * inf = 0 and a rounding direction (-1 down, +1 up).
double mul_dir(double a, double b, int dir) {
  if (a == 0.0 || b == 0.0) return 0.0;
  double p = a * b;
  if (std::isinf(p)) {
    if (std::isfinite(a) && std::isfinite(b)) {
      if (dir < 0) return p > 0 ? kMax : -kInf;
      return p < 0 ? -kMax : kInf;
    }
    return p;
  }
  if (std::fabs(p) < kTiny) return dir < 0 ? next_down(p) : next_up(p);
  double err = std::fma(a, b, -p);
  if (dir < 0) return err < 0 ? next_down(p) : p;
  return err > 0 ? next_up(p) : p;
}

// Quotient for b != 0 with finite/inf conventions; NaN for inf/inf.
double div_dir(double a, double b, int dir) {
  if (a == 0.0) return 0.0;
  if (std::isinf(b)) return std::isinf(a) ? std::nan("") : 0.0;
  double r = a / b;
  if (std::isinf(r)) {
    if (std::isfinite(a)) {
      if (dir < 0) return r > 0 ? kMax : -kInf;
      return r < 0 ? -kMax : kInf;
    }
    return r;
  }
  if (std::fabs(r) < kTiny) return dir < 0 ? next_down(r) : next_up(r);
  double rem = std::fma(-r, b, a);
  if (rem == 0.0) return r;
  bool true_greater = (rem > 0) == (b > 0);
  if (dir < 0) return true_greater ? r : next_down(r);
  return true_greater ? next_up(r) : r;
}

}  // namespace

double mul_down(double a, double b) { return mul_dir(a, b, -1); }
double mul_up(double a, double b) { return mul_dir(a, b, 1); }

Interval Interval::of(const Rational& q) {
  double d = to_double(q);
  if (std::isfinite(d) && from_double(d) == q) return point(d);
  if (std::isinf(d)) return d > 0 ? Interval(kMax, kInf) : Interval(-kInf, -kMax);
  return {next_down(d), next_up(d)};
}

Interval operator+(const Interval& a, const Interval& b) {
  return {add_down(a.lo, b.lo), add_up(a.hi, b.hi), a.partial || b.partial};
}

Interval operator-(const Interval& a) { return {-a.hi, -a.lo, a.partial}; }

Interval operator-(const Interval& a, const Interval& b) { return a + (-b); }

Interval operator*(const Interval& a, const Interval& b) {
  bool p = a.partial || b.partial;
  if ((a.lo == 0.0 && a.hi == 0.0) || (b.lo == 0.0 && b.hi == 0.0)) return {0.0, 0.0, p};
  double lo = kInf, hi = -kInf;
  for (double x : {a.lo, a.hi})
    for (double y : {b.lo, b.hi}) {
      lo = std::min(lo, mul_down(x, y));
      hi = std::max(hi, mul_up(x, y));
    }
  return {lo, hi, p};
}

Interval operator/(const Interval& a, const Interval& b) {
  bool p = a.partial || b.partial;
  if (b.lo == 0.0 && b.hi == 0.0) return Interval::entire(true);
  if (b.lo < 0.0 && b.hi > 0.0) return Interval::entire(true);
  Interval d = b;
  if (d.lo == 0.0) {
    p = true;
    d.lo = std::numeric_limits<double>::denorm_min();
  } else if (d.hi == 0.0) {
    p = true;
    d.hi = -std::numeric_limits<double>::denorm_min();
  }
  double lo = kInf, hi = -kInf;
  bool any = false;
  for (double x : {a.lo, a.hi})
    for (double y : {d.lo, d.hi}) {
      double l = div_dir(x, y, -1), h = div_dir(x, y, 1);
      if (std::isnan(l) || std::isnan(h)) continue;
      any = true;
      lo = std::min(lo, l);
      hi = std::max(hi, h);
    }
  if (!any) return Interval::entire(p);
  // A divisor touching zero makes the quotient unbounded on that side.
  if (b.lo == 0.0 || b.hi == 0.0) {
    if (a.hi > 0.0) (b.lo == 0.0 ? hi : lo) = b.lo == 0.0 ? kInf : -kInf;
    if (a.lo < 0.0) (b.lo == 0.0 ? lo : hi) = b.lo == 0.0 ? -kInf : kInf;
  }
  return {lo, hi, p};
}

namespace {

double ipow_nonneg(double x, long n, int dir) {
  double r = 1.0;
  for (long i = 0; i < n; ++i) r = mul_dir(r, x, dir);
  return r;
}

double rpow_dir(double x, const Rational& p, double pd, int dir) {
  if (x == 0.0) return pd > 0 ? 0.0 : kInf;
  if (x == 1.0) return 1.0;
  if (std::isinf(x)) return pd > 0 ? kInf : 0.0;
  double r;
  if (p == Rational(1, 2)) {
    r = std::sqrt(x);
    double err = std::fma(r, r, -x);
    if (err == 0.0) return r;
    bool true_greater = err < 0;
    if (dir < 0) return true_greater ? r : next_down(r);
    return true_greater ? next_up(r) : r;
  }
  r = std::pow(x, pd);
  if (dir < 0) {
    if (std::isinf(r)) return kMax;
    return std::max(0.0, widen_down(r, 2));
  }
  return widen_up(r, 2);
}

}  // namespace

Interval ipow(const Interval& a, const Rational& p) {
  if (is_integer(p)) {
    long n = num(p).convert_to<long>();
    if (n == 0) return {1.0, 1.0, a.partial};
    if (n < 0) {
      Interval r = ipow(a, Rational(-n));
      return Interval(1.0, 1.0) / r;
    }
    auto up = [&](double x) { return ipow_nonneg(x, n, 1); };
    auto dn = [&](double x) { return ipow_nonneg(x, n, -1); };
    if (a.lo >= 0.0) return {dn(a.lo), up(a.hi), a.partial};
    if (n % 2 == 1) {
      double lo = a.lo < 0 ? -up(-a.lo) : dn(a.lo);
      double hi = a.hi < 0 ? -dn(-a.hi) : up(a.hi);
      return {lo, hi, a.partial};
    }
    if (a.hi <= 0.0) return {dn(-a.hi), up(-a.lo), a.partial};
    return {0.0, std::max(up(-a.lo), up(a.hi)), a.partial};
  }
  double pd = to_double(p);
  bool partial = a.partial;
  if (a.hi < 0.0) return Interval::entire(true);
  double lo = a.lo;
  if (lo < 0.0) {
    partial = true;
    lo = 0.0;
  }
  if (pd > 0) return {rpow_dir(lo, p, pd, -1), rpow_dir(a.hi, p, pd, 1), partial};
  if (lo == 0.0) partial = true;
  return {rpow_dir(a.hi, p, pd, -1), rpow_dir(lo, p, pd, 1), partial};
}

Interval ilog(const Interval& a) {
  if (a.hi <= 0.0) return Interval::entire(true);
  bool partial = a.partial;
  double lo;
  if (a.lo <= 0.0) {
    partial = true;
    lo = -kInf;
  } else if (a.lo == 1.0) {
    lo = 0.0;
  } else if (std::isinf(a.lo)) {
    lo = kMax;
  } else {
    lo = widen_down(std::log(a.lo), 2);
  }
  double hi;
  if (a.hi == 1.0) {
    hi = 0.0;
  } else if (std::isinf(a.hi)) {
    hi = kInf;
  } else {
    hi = widen_up(std::log(a.hi), 2);
  }
  return {lo, hi, partial};
}

Interval iexp(const Interval& a) {
  double lo, hi;
  if (a.lo == 0.0) {
    lo = 1.0;
  } else if (a.lo == -kInf) {
    lo = 0.0;
  } else {
    lo = std::exp(a.lo);
    lo = std::isinf(lo) ? kMax : std::max(0.0, widen_down(lo, 2));
  }
  if (a.hi == 0.0) {
    hi = 1.0;
  } else if (a.hi == -kInf) {
    hi = 0.0;
  } else {
    hi = widen_up(std::exp(a.hi), 2);
  }
  return {lo, hi, a.partial};
}

Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi), a.partial || b.partial};
}

Interval intersect(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi), a.partial || b.partial};
}

Program::Program(const Expr& e, const std::vector<std::string>& var_order) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < var_order.size(); ++i) index[var_order[i]] = static_cast<int>(i);
  compile(e, index, 1);
}

void Program::compile(const Expr& e, const std::map<std::string, int>& index, std::size_t depth) {
  max_stack_ = std::max(max_stack_, depth);
  switch (e.kind()) {
    case Kind::Const:
      consts_.push_back(Interval::of(e.value()));
      const_values_.push_back(to_double(e.value()));
      ops_.push_back({Op::Const, static_cast<int>(consts_.size() - 1)});
      return;
    case Kind::Var: {
      auto it = index.find(e.name());
      if (it == index.end()) throw ExprError("program: unbound variable " + e.name());
      ops_.push_back({Op::Var, it->second});
      return;
    }
    case Kind::Sum:
    case Kind::Product: {
      std::size_t d = depth;
      for (const auto& c : e.children()) compile(c, index, d++);
      ops_.push_back({e.kind() == Kind::Sum ? Op::Sum : Op::Prod,
                      static_cast<int>(e.children().size())});
      return;
    }
    case Kind::Power:
      compile(e.base(), index, depth);
      exponents_.push_back(e.exponent());
      exponent_values_.push_back(to_double(e.exponent()));
      int_exponents_.push_back(is_integer(e.exponent()) ? num(e.exponent()).convert_to<long>()
                                                        : LONG_MIN);
      ops_.push_back({Op::Pow, static_cast<int>(exponents_.size() - 1)});
      return;
    case Kind::Log:
      compile(e.arg(), index, depth);
      ops_.push_back({Op::Log, 0});
      return;
    case Kind::Exp:
      compile(e.arg(), index, depth);
      ops_.push_back({Op::Exp, 0});
      return;
  }
}

Interval Program::eval(const std::vector<Interval>& box) const {
  std::vector<Interval> st;
  st.reserve(max_stack_ + 1);
  for (const auto& in : ops_) {
    switch (in.op) {
      case Op::Const:
        st.push_back(consts_[static_cast<std::size_t>(in.arg)]);
        break;
      case Op::Var:
        st.push_back(box[static_cast<std::size_t>(in.arg)]);
        break;
      case Op::Sum:
      case Op::Prod: {
        std::size_t n = static_cast<std::size_t>(in.arg);
        std::size_t base = st.size() - n;
        Interval acc = st[base];
        for (std::size_t i = base + 1; i < st.size(); ++i)
          acc = in.op == Op::Sum ? acc + st[i] : acc * st[i];
        st.resize(base);
        st.push_back(acc);
        break;
      }
      case Op::Pow:
        st.back() = ipow(st.back(), exponents_[static_cast<std::size_t>(in.arg)]);
        break;
      case Op::Log:
        st.back() = ilog(st.back());
        break;
      case Op::Exp:
        st.back() = iexp(st.back());
        break;
    }
  }
  return st.back();
}

double Program::eval(const std::vector<double>& point) const {
  std::vector<double> st;
  st.reserve(max_stack_ + 1);
  for (const auto& in : ops_) {
    switch (in.op) {
      case Op::Const:
        st.push_back(const_values_[static_cast<std::size_t>(in.arg)]);
        break;
      case Op::Var:
        st.push_back(point[static_cast<std::size_t>(in.arg)]);
        break;
      case Op::Sum:
      case Op::Prod: {
        std::size_t n = static_cast<std::size_t>(in.arg);
        std::size_t base = st.size() - n;
        double acc = st[base];
        for (std::size_t i = base + 1; i < st.size(); ++i)
          acc = in.op == Op::Sum ? acc + st[i] : acc * st[i];
        st.resize(base);
        st.push_back(acc);
        break;
      }
      case Op::Pow: {
        auto k = static_cast<std::size_t>(in.arg);
        double b = st.back();
        if (int_exponents_[k] != LONG_MIN) {
          if (b == 0.0 && int_exponents_[k] < 0) {
            st.back() = std::nan("");
          } else {
            st.back() = std::pow(b, static_cast<double>(int_exponents_[k]));
          }
        } else if (b < 0.0 || (b == 0.0 && exponent_values_[k] < 0)) {
          st.back() = std::nan("");
        } else {
          st.back() = std::pow(b, exponent_values_[k]);
        }
        break;
      }
      case Op::Log:
        st.back() = st.back() > 0.0 ? std::log(st.back()) : std::nan("");
        break;
      case Op::Exp:
        st.back() = std::exp(st.back());
        break;
    }
  }
  return st.back();
}

Interval eval_interval(const Expr& e, const std::map<std::string, Interval>& box) {
  std::vector<std::string> names;
  std::vector<Interval> values;
  for (const auto& [k, v] : box) {
    names.push_back(k);
    values.push_back(v);
  }
  return Program(e, names).eval(values);
}

}  // namespace decomp
