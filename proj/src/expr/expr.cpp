#include "decomp/expr.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

namespace decomp {

namespace {

std::string make_key(Kind kind, const Rational& value, const std::string& name,
                     const std::vector<Expr>& children) {
  switch (kind) {
    case Kind::Const:
      return to_string(value);
    case Kind::Var:
      return name;
    case Kind::Sum:
    case Kind::Product: {
      std::string s = kind == Kind::Sum ? "(+" : "(*";
      for (const auto& c : children) {
        s += ' ';
        s += c.key();
      }
      s += ')';
      return s;
    }
    case Kind::Power:
      return "(^ " + children[0].key() + " " + to_string(value) + ")";
    case Kind::Log:
      return "(log " + children[0].key() + ")";
    case Kind::Exp:
      return "(exp " + children[0].key() + ")";
  }
  return {};
}

Expr make(Kind kind, Rational value, std::string name, std::vector<Expr> children) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->value = std::move(value);
  n->name = std::move(name);
  n->children = std::move(children);
  n->key = make_key(n->kind, n->value, n->name, n->children);
  n->size = 1;
  for (const auto& c : n->children) n->size += c.size();
  return Expr(std::move(n));
}

void sort_children(std::vector<Expr>& xs) { std::sort(xs.begin(), xs.end()); }

}  // namespace

Expr::Expr() : Expr(constant(0)) {}

bool operator<(const Expr& a, const Expr& b) {
  bool ac = a.is_const(), bc = b.is_const();
  if (ac != bc) return ac;
  if (ac && bc) return a.value() < b.value();
  return a.key() < b.key();
}

namespace raw {
Expr sum(std::vector<Expr> children) { return make(Kind::Sum, 0, {}, std::move(children)); }
Expr product(std::vector<Expr> children) {
  return make(Kind::Product, 0, {}, std::move(children));
}
Expr power(Expr base, Rational exponent) {
  return make(Kind::Power, std::move(exponent), {}, {std::move(base)});
}
Expr log(Expr arg) { return make(Kind::Log, 0, {}, {std::move(arg)}); }
Expr exp(Expr arg) { return make(Kind::Exp, 0, {}, {std::move(arg)}); }
}  // namespace raw

Expr constant(const Rational& q) { return make(Kind::Const, q, {}, {}); }
Expr constant(long v) { return constant(Rational(v)); }
Expr var(const std::string& name) { return make(Kind::Var, 0, name, {}); }

std::pair<Rational, Expr> split_coefficient(const Expr& term) {
  if (term.is_const()) return {term.value(), constant(1)};
  if (term.kind() == Kind::Product && term.child(0).is_const()) {
    const auto& ch = term.children();
    if (ch.size() == 2) return {ch[0].value(), ch[1]};
    return {ch[0].value(), make(Kind::Product, 0, {}, {ch.begin() + 1, ch.end()})};
  }
  return {Rational(1), term};
}

namespace {

Expr scale_term(const Rational& coef, const Expr& rest) {
  if (rest.is_const()) return constant(coef * rest.value());
  if (coef == 1) return rest;
  std::vector<Expr> xs{constant(coef)};
  if (rest.kind() == Kind::Product) {
    xs.insert(xs.end(), rest.children().begin(), rest.children().end());
  } else {
    xs.push_back(rest);
  }
  return make(Kind::Product, 0, {}, std::move(xs));
}

void collect_sum(const Expr& e, Rational& c, std::map<std::string, std::pair<Rational, Expr>>& terms) {
  if (e.kind() == Kind::Sum) {
    for (const auto& ch : e.children()) collect_sum(ch, c, terms);
    return;
  }
  if (e.is_const()) {
    c += e.value();
    return;
  }
  auto [coef, rest] = split_coefficient(e);
  auto it = terms.find(rest.key());
  if (it == terms.end()) {
    terms.emplace(rest.key(), std::make_pair(coef, rest));
  } else {
    it->second.first += coef;
  }
}

Expr product_impl(std::vector<Expr> xs, int depth);

}  // namespace

Expr sum(std::vector<Expr> children) {
  Rational c = 0;
  std::map<std::string, std::pair<Rational, Expr>> terms;
  for (const auto& ch : children) collect_sum(ch, c, terms);
  std::vector<Expr> out;
  for (auto& [k, t] : terms) {
    if (t.first != 0) out.push_back(scale_term(t.first, t.second));
  }
  // Terms of the form c*(a + b) can reintroduce constants; they are left as is.
  if (c != 0) out.push_back(constant(c));
  if (out.empty()) return constant(0);
  if (out.size() == 1) return out[0];
  sort_children(out);
  return make(Kind::Sum, 0, {}, std::move(out));
}

namespace {

void collect_product(const Expr& e, Rational& c,
                     std::map<std::string, std::pair<Expr, Rational>>& bases,
                     std::vector<Expr>& exp_args) {
  switch (e.kind()) {
    case Kind::Product:
      for (const auto& ch : e.children()) collect_product(ch, c, bases, exp_args);
      return;
    case Kind::Const:
      c *= e.value();
      return;
    case Kind::Exp:
      exp_args.push_back(e.arg());
      return;
    case Kind::Power: {
      auto it = bases.find(e.base().key());
      if (it == bases.end()) {
        bases.emplace(e.base().key(), std::make_pair(e.base(), e.exponent()));
      } else {
        it->second.second += e.exponent();
      }
      return;
    }
    default: {
      auto it = bases.find(e.key());
      if (it == bases.end()) {
        bases.emplace(e.key(), std::make_pair(e, Rational(1)));
      } else {
        it->second.second += 1;
      }
      return;
    }
  }
}

Expr product_impl(std::vector<Expr> xs, int depth) {
  Rational c = 1;
  std::map<std::string, std::pair<Expr, Rational>> bases;
  std::vector<Expr> exp_args;
  for (const auto& x : xs) collect_product(x, c, bases, exp_args);
  if (c == 0) return constant(0);
  std::vector<Expr> factors;
  bool again = false;
  for (auto& [k, bp] : bases) {
    if (bp.second == 0) continue;
    Expr f = power(bp.first, bp.second);
    if (f.is_const()) {
      c *= f.value();
      continue;
    }
    if (f.kind() == Kind::Product || f.kind() == Kind::Exp) again = true;
    factors.push_back(f);
  }
  if (!exp_args.empty()) {
    Expr f = exp(sum(exp_args));
    if (f.is_const()) {
      c *= f.value();
    } else {
      if (f.kind() != Kind::Exp) again = true;
      factors.push_back(f);
    }
  }
  if (again && depth < 8) {
    factors.push_back(constant(c));
    return product_impl(std::move(factors), depth + 1);
  }
  if (factors.empty()) return constant(c);
  if (c == 1 && factors.size() == 1) return factors[0];
  sort_children(factors);
  if (c != 1) factors.insert(factors.begin(), constant(c));
  return make(Kind::Product, 0, {}, std::move(factors));
}

}  // namespace

Expr product(std::vector<Expr> children) { return product_impl(std::move(children), 0); }

Expr power(const Expr& base, const Rational& p) {
  if (p == 0) return constant(1);
  if (p == 1) return base;
  switch (base.kind()) {
    case Kind::Const: {
      const Rational& q = base.value();
      if (is_integer(p)) {
        if (q == 0 && p < 0) return raw::power(base, p);
        return constant(pow_int(q, num(p).convert_to<long>()));
      }
      if (q >= 0 && !(q == 0 && p < 0)) {
        Rational root;
        if (exact_root(q, den(p).convert_to<long>(), root))
          return constant(pow_int(root, num(p).convert_to<long>()));
      }
      return raw::power(base, p);
    }
    case Kind::Power:
      if (is_integer(p)) return power(base.base(), base.exponent() * p);
      return raw::power(base, p);
    case Kind::Exp:
      return exp(product({constant(p), base.arg()}));
    case Kind::Product:
      if (is_integer(p)) {
        std::vector<Expr> xs;
        for (const auto& f : base.children()) xs.push_back(power(f, p));
        return product(std::move(xs));
      }
      return raw::power(base, p);
    default:
      return raw::power(base, p);
  }
}

Expr log(const Expr& arg) {
  if (arg.is_const(1)) return constant(0);
  if (arg.kind() == Kind::Exp) return arg.arg();
  return raw::log(arg);
}

Expr exp(const Expr& arg) {
  if (arg.is_const(0)) return constant(1);
  if (arg.kind() == Kind::Log) return arg.arg();
  if (arg.kind() == Kind::Product && arg.children().size() == 2 && arg.child(0).is_const() &&
      arg.child(1).kind() == Kind::Log) {
    return power(arg.child(1).arg(), arg.child(0).value());
  }
  return raw::exp(arg);
}

Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return sum({a, product({constant(-1), b})}); }
Expr operator-(const Expr& a) { return product({constant(-1), a}); }
Expr operator*(const Expr& a, const Expr& b) { return product({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return product({a, power(b, -1)}); }
Expr operator*(const Rational& q, const Expr& b) { return product({constant(q), b}); }

Expr normalize(const Expr& e) {
  switch (e.kind()) {
    case Kind::Const:
    case Kind::Var:
      return e;
    case Kind::Sum: {
      std::vector<Expr> xs;
      for (const auto& c : e.children()) xs.push_back(normalize(c));
      return sum(std::move(xs));
    }
    case Kind::Product: {
      std::vector<Expr> xs;
      for (const auto& c : e.children()) xs.push_back(normalize(c));
      return product(std::move(xs));
    }
    case Kind::Power:
      return power(normalize(e.base()), e.exponent());
    case Kind::Log:
      return log(normalize(e.arg()));
    case Kind::Exp:
      return exp(normalize(e.arg()));
  }
  return e;
}

namespace {

template <class Leaf>
Expr rebuild(const Expr& e, const Leaf& leaf) {
  if (auto r = leaf(e)) return *r;
  switch (e.kind()) {
    case Kind::Const:
    case Kind::Var:
      return e;
    case Kind::Sum:
    case Kind::Product: {
      std::vector<Expr> xs;
      for (const auto& c : e.children()) xs.push_back(rebuild(c, leaf));
      return e.kind() == Kind::Sum ? sum(std::move(xs)) : product(std::move(xs));
    }
    case Kind::Power:
      return power(rebuild(e.base(), leaf), e.exponent());
    case Kind::Log:
      return log(rebuild(e.arg(), leaf));
    case Kind::Exp:
      return exp(rebuild(e.arg(), leaf));
  }
  return e;
}

}  // namespace

Expr substitute(const Expr& e, const std::map<std::string, Expr>& replacements) {
  return rebuild(e, [&](const Expr& x) -> std::optional<Expr> {
    if (x.is_var()) {
      auto it = replacements.find(x.name());
      if (it != replacements.end()) return it->second;
    }
    return std::nullopt;
  });
}

Expr substitute(const Expr& e, const std::string& name, const Expr& replacement) {
  return substitute(e, std::map<std::string, Expr>{{name, replacement}});
}

Expr replace_subexpr(const Expr& e, const Expr& target, const Expr& replacement) {
  return rebuild(e, [&](const Expr& x) -> std::optional<Expr> {
    if (x == target) return replacement;
    return std::nullopt;
  });
}

namespace {
void collect_vars(const Expr& e, std::set<std::string>& out) {
  if (e.is_var()) out.insert(e.name());
  for (const auto& c : e.children()) collect_vars(c, out);
}
}  // namespace

std::set<std::string> free_vars(const Expr& e) {
  std::set<std::string> out;
  collect_vars(e, out);
  return out;
}

bool depends_on(const Expr& e, const std::string& v) {
  if (e.is_var()) return e.name() == v;
  for (const auto& c : e.children())
    if (depends_on(c, v)) return true;
  return false;
}

std::vector<Expr> terms_of(const Expr& e) {
  if (e.kind() == Kind::Sum) return e.children();
  return {e};
}

std::vector<Expr> factors_of(const Expr& e) {
  if (e.kind() == Kind::Product) return e.children();
  return {e};
}

namespace {

std::vector<Expr> expand_terms(const Expr& e, std::size_t max_terms, bool& overflow);

std::vector<Expr> multiply_out(const std::vector<Expr>& a, const std::vector<Expr>& b,
                               std::size_t max_terms, bool& overflow) {
  if (a.size() * b.size() > max_terms) {
    overflow = true;
    return {};
  }
  std::vector<Expr> out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a)
    for (const auto& y : b) out.push_back(product({x, y}));
  return terms_of(sum(out));
}

std::vector<Expr> expand_terms(const Expr& e, std::size_t max_terms, bool& overflow) {
  switch (e.kind()) {
    case Kind::Sum: {
      std::vector<Expr> out;
      for (const auto& c : e.children()) {
        auto t = expand_terms(c, max_terms, overflow);
        if (overflow) return {};
        out.insert(out.end(), t.begin(), t.end());
      }
      return terms_of(sum(out));
    }
    case Kind::Product: {
      std::vector<Expr> acc{constant(1)};
      for (const auto& c : e.children()) {
        auto t = expand_terms(c, max_terms, overflow);
        if (overflow) return {};
        acc = multiply_out(acc, t, max_terms, overflow);
        if (overflow) return {};
      }
      return acc;
    }
    case Kind::Power: {
      Expr b = e.base();
      const Rational& p = e.exponent();
      if (b.kind() == Kind::Sum && is_integer(p) && p > 1 && p <= 12) {
        auto base_terms = expand_terms(b, max_terms, overflow);
        if (overflow) return {};
        std::vector<Expr> acc{constant(1)};
        long n = num(p).convert_to<long>();
        for (long i = 0; i < n; ++i) {
          acc = multiply_out(acc, base_terms, max_terms, overflow);
          if (overflow) return {};
        }
        return acc;
      }
      return {power(expand(b, max_terms), p)};
    }
    case Kind::Log:
      return {log(expand(e.arg(), max_terms))};
    case Kind::Exp:
      return {exp(expand(e.arg(), max_terms))};
    default:
      return {e};
  }
}

}  // namespace

Expr expand(const Expr& e, std::size_t max_terms) {
  bool overflow = false;
  auto t = expand_terms(e, max_terms, overflow);
  if (overflow) return e;
  return sum(t);
}

namespace {

struct SexprReader {
  const std::string& s;
  std::size_t pos = 0;

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  std::string atom() {
    skip();
    std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '(' &&
           s[pos] != ')')
      ++pos;
    if (start == pos) throw ExprError("s-expression: expected atom at " + std::to_string(pos));
    return s.substr(start, pos - start);
  }

  Expr read() {
    skip();
    if (pos >= s.size()) throw ExprError("s-expression: unexpected end");
    if (s[pos] != '(') {
      std::string a = atom();
      char c0 = a[0];
      if (std::isdigit(static_cast<unsigned char>(c0)) ||
          (c0 == '-' && a.size() > 1 && std::isdigit(static_cast<unsigned char>(a[1]))))
        return constant(parse_rational(a));
      return var(a);
    }
    ++pos;
    std::string op = atom();
    std::vector<Expr> xs;
    Rational exponent;
    for (;;) {
      skip();
      if (pos >= s.size()) throw ExprError("s-expression: unbalanced parentheses");
      if (s[pos] == ')') {
        ++pos;
        break;
      }
      if (op == "^" && xs.size() == 1) {
        exponent = parse_rational(atom());
        continue;
      }
      xs.push_back(read());
    }
    if (op == "+") return raw::sum(std::move(xs));
    if (op == "*") return raw::product(std::move(xs));
    if (op == "^" && xs.size() == 1) return raw::power(xs[0], exponent);
    if (op == "log" && xs.size() == 1) return raw::log(xs[0]);
    if (op == "exp" && xs.size() == 1) return raw::exp(xs[0]);
    throw ExprError("s-expression: bad operator '" + op + "'");
  }
};

}  // namespace

Expr parse_sexpr(const std::string& text) {
  SexprReader r{text};
  Expr e = r.read();
  r.skip();
  if (r.pos != text.size()) throw ExprError("s-expression: trailing input");
  return e;
}

}  // namespace decomp
