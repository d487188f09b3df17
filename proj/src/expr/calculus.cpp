#include "decomp/calculus.hpp"

#include "decomp/interval.hpp"

#include <cmath>
#include <optional>

namespace decomp {

namespace {

// Rationals that grow beyond this many bits are demoted to doubles.
constexpr unsigned kMaxExactBits = 4096;

struct Value {
  std::optional<Rational> exact;
  double approx = 0.0;
};

unsigned bit_size(const Rational& q) {
  BigInt n = abs(num(q));
  BigInt d = den(q);
  unsigned a = n == 0 ? 0 : static_cast<unsigned>(boost::multiprecision::msb(n));
  unsigned b = static_cast<unsigned>(boost::multiprecision::msb(d));
  return a + b;
}

Value exact_value(Rational q) {
  if (bit_size(q) > kMaxExactBits) return {std::nullopt, to_double(q)};
  double d = to_double(q);
  return {std::move(q), d};
}

Value approx_value(double d) {
  if (std::isnan(d)) throw DomainError("indeterminate value");
  return {std::nullopt, d};
}

Value eval(const Expr& e, const Assignment& a) {
  switch (e.kind()) {
    case Kind::Const:
      return exact_value(e.value());
    case Kind::Var: {
      auto it = a.find(e.name());
      if (it == a.end()) throw ExprError("no value for variable " + e.name());
      if (!std::isfinite(it->second)) throw DomainError("non-finite value for " + e.name());
      return {from_double(it->second), it->second};
    }
    case Kind::Sum: {
      std::vector<Value> vs;
      bool all_exact = true;
      for (const auto& c : e.children()) {
        vs.push_back(eval(c, a));
        all_exact = all_exact && vs.back().exact.has_value();
      }
      if (all_exact) {
        Rational s = 0;
        for (const auto& v : vs) s += *v.exact;
        return exact_value(std::move(s));
      }
      double s = 0.0;
      for (const auto& v : vs) s += v.approx;
      return approx_value(s);
    }
    case Kind::Product: {
      std::vector<Value> vs;
      bool all_exact = true;
      for (const auto& c : e.children()) {
        vs.push_back(eval(c, a));
        if (vs.back().exact && *vs.back().exact == 0) return {Rational(0), 0.0};
        all_exact = all_exact && vs.back().exact.has_value();
      }
      if (all_exact) {
        Rational p = 1;
        for (const auto& v : vs) p *= *v.exact;
        return exact_value(std::move(p));
      }
      double p = 1.0;
      for (const auto& v : vs) {
        if (v.approx == 0.0) return {std::nullopt, 0.0};
        p *= v.approx;
      }
      return approx_value(p);
    }
    case Kind::Power: {
      Value b = eval(e.base(), a);
      const Rational& p = e.exponent();
      bool integral = is_integer(p);
      if (b.exact) {
        const Rational& q = *b.exact;
        if (q == 0 && p < 0) throw DomainError("zero raised to a negative power");
        if (q < 0 && !integral) throw DomainError("fractional power of a negative number");
        if (integral) {
          long n = num(p).convert_to<long>();
          if (bit_size(q) * static_cast<unsigned>(std::labs(n)) <= kMaxExactBits)
            return exact_value(pow_int(q, n));
        } else {
          Rational root;
          long d = den(p).convert_to<long>();
          long n = num(p).convert_to<long>();
          if (exact_root(q, d, root) && bit_size(root) * static_cast<unsigned>(std::labs(n)) <= kMaxExactBits)
            return exact_value(pow_int(root, n));
        }
      }
      double x = b.approx;
      double pd = to_double(p);
      if (x == 0.0 && pd < 0) throw DomainError("zero raised to a negative power");
      if (x < 0.0 && !integral) throw DomainError("fractional power of a negative number");
      if (p == Rational(1, 2)) return approx_value(std::sqrt(x));
      return approx_value(std::pow(x, pd));
    }
    case Kind::Log: {
      Value v = eval(e.arg(), a);
      if (v.exact ? *v.exact <= 0 : v.approx <= 0.0) throw DomainError("log of a non-positive number");
      if (v.exact && *v.exact == 1) return {Rational(0), 0.0};
      return approx_value(std::log(v.approx));
    }
    case Kind::Exp: {
      Value v = eval(e.arg(), a);
      if (v.exact && *v.exact == 0) return {Rational(1), 1.0};
      return approx_value(std::exp(v.approx));
    }
  }
  throw ExprError("unknown node kind");
}

}  // namespace

double evaluate(const Expr& e, const Assignment& a) { return eval(e, a).approx; }

std::optional<Rational> evaluate_exact(const Expr& e, const Assignment& a) {
  try {
    return eval(e, a).exact;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

Expr differentiate(const Expr& e, const std::string& v) {
  if (!depends_on(e, v)) return constant(0);
  switch (e.kind()) {
    case Kind::Const:
      return constant(0);
    case Kind::Var:
      return constant(e.name() == v ? 1 : 0);
    case Kind::Sum: {
      std::vector<Expr> terms;
      for (const auto& c : e.children()) terms.push_back(differentiate(c, v));
      return sum(terms);
    }
    case Kind::Product: {
      const auto& cs = e.children();
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < cs.size(); ++i) {
        if (!depends_on(cs[i], v)) continue;
        std::vector<Expr> fs;
        for (std::size_t j = 0; j < cs.size(); ++j) fs.push_back(j == i ? differentiate(cs[i], v) : cs[j]);
        terms.push_back(product(fs));
      }
      return sum(terms);
    }
    case Kind::Power: {
      const Rational& p = e.exponent();
      return product({constant(p), power(e.base(), p - 1), differentiate(e.base(), v)});
    }
    case Kind::Log:
      return differentiate(e.arg(), v) / e.arg();
    case Kind::Exp:
      return e * differentiate(e.arg(), v);
  }
  throw ExprError("unknown node kind");
}

std::string to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::Increasing: return "increasing";
    case Monotonicity::Decreasing: return "decreasing";
    case Monotonicity::Constant: return "constant";
    case Monotonicity::Unknown: return "unknown";
  }
  return "unknown";
}

namespace {

enum class Sign { NonNeg, NonPos, Positive, Negative, Unknown };

Monotonicity reverse(Monotonicity m) {
  if (m == Monotonicity::Increasing) return Monotonicity::Decreasing;
  if (m == Monotonicity::Decreasing) return Monotonicity::Increasing;
  return m;
}

class MonotonicityAnalyzer {
 public:
  MonotonicityAnalyzer(const std::string& v, const Region& r) : v_(v) {
    for (const auto& [name, b] : direct_bounds(r)) box_[name] = Interval(b.lo, b.hi);
  }

  Monotonicity run(const Expr& e) const {
    if (!depends_on(e, v_)) return Monotonicity::Constant;
    switch (e.kind()) {
      case Kind::Const:
        return Monotonicity::Constant;
      case Kind::Var:
        return Monotonicity::Increasing;
      case Kind::Sum: {
        bool inc = true, dec = true;
        for (const auto& c : e.children()) {
          Monotonicity m = run(c);
          if (m == Monotonicity::Unknown) return m;
          inc = inc && m != Monotonicity::Decreasing;
          dec = dec && m != Monotonicity::Increasing;
        }
        return inc ? Monotonicity::Increasing : dec ? Monotonicity::Decreasing : Monotonicity::Unknown;
      }
      case Kind::Product: {
        bool negate_all = false;
        bool inc = true, dec = true;
        for (const auto& c : e.children()) {
          Sign s = sign(c);
          Monotonicity m = run(c);
          if (m == Monotonicity::Unknown || s == Sign::Unknown) return Monotonicity::Unknown;
          if (s == Sign::NonPos || s == Sign::Negative) {
            negate_all = !negate_all;
            m = reverse(m);
          }
          inc = inc && m != Monotonicity::Decreasing;
          dec = dec && m != Monotonicity::Increasing;
        }
        Monotonicity m = inc ? Monotonicity::Increasing : dec ? Monotonicity::Decreasing : Monotonicity::Unknown;
        return negate_all ? reverse(m) : m;
      }
      case Kind::Power: {
        Monotonicity mb = run(e.base());
        if (mb == Monotonicity::Unknown) return mb;
        const Rational& p = e.exponent();
        Sign s = sign(e.base());
        bool odd = is_integer(p) && num(p) % 2 != 0;
        if (p > 0) {
          if (s == Sign::NonNeg || s == Sign::Positive || odd) return mb;
          if (s == Sign::NonPos || s == Sign::Negative) return reverse(mb);
          return Monotonicity::Unknown;
        }
        if (s == Sign::Positive) return reverse(mb);
        if (s == Sign::Negative && odd) return reverse(mb);
        if (s == Sign::Negative && is_integer(p)) return mb;
        return Monotonicity::Unknown;
      }
      case Kind::Log: {
        Sign s = sign(e.arg());
        return s == Sign::Positive ? run(e.arg()) : Monotonicity::Unknown;
      }
      case Kind::Exp:
        return run(e.arg());
    }
    return Monotonicity::Unknown;
  }

 private:
  Sign sign(const Expr& e) const {
    if (e.is_const()) {
      if (e.value() > 0) return Sign::Positive;
      if (e.value() < 0) return Sign::Negative;
      return Sign::NonNeg;
    }
    Interval iv;
    try {
      iv = eval_interval(e, box_);
    } catch (const ExprError&) {
      return Sign::Unknown;
    }
    if (iv.partial) return Sign::Unknown;
    if (iv.lo > 0.0) return Sign::Positive;
    if (iv.lo >= 0.0) return Sign::NonNeg;
    if (iv.hi < 0.0) return Sign::Negative;
    if (iv.hi <= 0.0) return Sign::NonPos;
    return Sign::Unknown;
  }

  std::string v_;
  std::map<std::string, Interval> box_;
};

}  // namespace

Monotonicity structural_monotonicity(const Expr& e, const std::string& v, const Region& r) {
  return MonotonicityAnalyzer(v, r).run(e);
}

}  // namespace decomp
