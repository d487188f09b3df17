#include "decomp/problem.hpp"

namespace decomp {

namespace {

std::string render_rational(const Rational& q) {
  if (is_integer(q)) return to_string(q);
  std::string sign = q < 0 ? "-" : "";
  return sign + "\\frac{" + BigInt(abs(num(q))).str() + "}{" + den(q).str() + "}";
}

std::string render_var(const std::string& name) {
  auto us = name.find('_');
  if (us == std::string::npos) return name;
  return name.substr(0, us) + "_{" + name.substr(us + 1) + "}";
}

std::string paren(const std::string& s) { return "\\left(" + s + "\\right)"; }

std::string render(const Expr& e);

// Renders a factor so that it binds tighter than \cdot.
std::string render_factor(const Expr& e) {
  if (e.kind() == Kind::Sum) return paren(render(e));
  if (e.is_const() && (e.value() < 0 || !is_integer(e.value()))) return paren(render(e));
  return render(e);
}

std::string render_base(const Expr& e) {
  switch (e.kind()) {
    case Kind::Var:
      return render_var(e.name());
    case Kind::Const:
      if (is_integer(e.value()) && e.value() >= 0) return render_rational(e.value());
      return paren(render(e));
    default:
      return paren(render(e));
  }
}

std::string render_product_body(const Rational& coef, const Expr& rest) {
  std::string out;
  if (coef != 1) out = render_factor(constant(coef));
  for (const auto& f : factors_of(rest)) {
    if (f.is_const(1)) continue;
    if (!out.empty()) out += " \\cdot ";
    out += render_factor(f);
  }
  return out.empty() ? "1" : out;
}

std::string render(const Expr& e) {
  switch (e.kind()) {
    case Kind::Const:
      return render_rational(e.value());
    case Kind::Var:
      return render_var(e.name());
    case Kind::Sum: {
      std::string out;
      bool first = true;
      for (const auto& t : e.children()) {
        auto [coef, rest] = split_coefficient(t);
        bool negative = coef < 0;
        std::string body = render_product_body(negative ? Rational(-coef) : coef, rest);
        if (first) {
          out = (negative ? "-" : "") + body;
        } else {
          out += negative ? " - " : " + ";
          out += body;
        }
        first = false;
      }
      return out;
    }
    case Kind::Product: {
      auto [coef, rest] = split_coefficient(e);
      if (coef < 0) return "-" + render_product_body(Rational(-coef), rest);
      return render_product_body(coef, rest);
    }
    case Kind::Power:
      return render_base(e.base()) + "^{" + render_rational(e.exponent()) + "}";
    case Kind::Log:
      return "\\log" + paren(render(e.arg()));
    case Kind::Exp:
      return "e^{" + render(e.arg()) + "}";
  }
  return "?";
}

std::string render_relation(Relation r) {
  switch (r) {
    case Relation::Le: return "\\leq";
    case Relation::Lt: return "<";
    case Relation::Ge: return "\\geq";
    case Relation::Gt: return ">";
    case Relation::Eq: return "=";
  }
  return "?";
}

}  // namespace

std::string render_latex(const Expr& e) { return render(e); }

std::string render_latex(const Constraint& c) {
  return render(c.lhs) + " " + render_relation(c.rel) + " " + render(c.rhs);
}

std::string render_canonical(const ProblemStatement& p) {
  std::string out;
  if (!p.label.empty()) out = p.label + " := ";
  const Region* region;
  if (p.is_series()) {
    const auto& s = p.series();
    out += "\\sum_{" + render_var(s.index) + "=" + std::to_string(s.start) + "}^{\\infty} " + render(s.summand) +
           " \\ll " + render(s.target);
    region = &s.params;
  } else {
    const auto& q = p.inequality();
    out += render(q.lhs) + " \\ll " + render(q.rhs);
    region = &q.region;
  }
  for (const auto& c : region->constraints()) out += ", " + render_latex(c);
  return out;
}

std::string problem_key(const ProblemStatement& p) {
  std::string out = "(problem \"" + p.label + "\" ";
  const Region* region;
  if (p.is_series()) {
    const auto& s = p.series();
    out += "(series " + s.index + " " + std::to_string(s.start) + " " + s.summand.key() + " " + s.target.key() + ")";
    region = &s.params;
  } else {
    const auto& q = p.inequality();
    out += "(ll " + q.lhs.key() + " " + q.rhs.key() + ")";
    region = &q.region;
  }
  out += " (vars";
  for (const auto& v : region->vars()) out += " " + v.name;
  out += ")";
  for (const auto& c : region->constraints()) out += " " + c.key();
  return out + ")";
}

}  // namespace decomp
