#include "decomp/problem.hpp"

#include "decomp/bnb.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace decomp {

namespace {

const std::set<std::string> kKeywords = {"is", "for", "where", "with", "when", "and", "that", "show", "prove", "all", "if"};
const std::set<std::string> kSeparatorWords = {"where", "for", "with", "when", "and", "if"};

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

struct Operand {
  Expr value;
  bool euler = false;  // a bare `e`, which only becomes exp(1) when not raised to a power
  Expr get() const { return euler ? exp(constant(1)) : value; }
};

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  std::map<std::string, std::size_t> first_use;
  /// Bases raised to non-constant exponents, checked for positivity once the
  /// side conditions are known.
  std::vector<std::pair<Expr, std::size_t>> variable_bases;

  [[noreturn]] void fail(const std::string& code, const std::string& message, std::size_t at) const {
    throw ParseError(Diagnostic{at, code, message, Severity::Error});
  }
  [[noreturn]] void syntax(const std::string& message) const { fail("SyntaxError", message, pos_); }

  std::size_t pos() const { return pos_; }
  void set_pos(std::size_t p) { pos_ = p; }
  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }

  void skip_ws() {
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '~' || c == '$') {
        ++pos_;
        continue;
      }
      if (c == '\\' && pos_ + 1 < s_.size()) {
        char n = s_[pos_ + 1];
        if (n == ',' || n == ';' || n == '!' || n == ':' || n == ' ') {
          pos_ += 2;
          continue;
        }
        std::string cmd = peek_command();
        if (cmd == "displaystyle" || cmd == "limits" || cmd == "nolimits") {
          pos_ += cmd.size() + 1;
          continue;
        }
      }
      break;
    }
  }

  std::string peek_command() const {
    if (pos_ >= s_.size() || s_[pos_] != '\\') return {};
    std::size_t e = pos_ + 1;
    while (e < s_.size() && is_letter(s_[e])) ++e;
    if (e == pos_ + 1 && e < s_.size()) return std::string(1, s_[e]);
    return s_.substr(pos_ + 1, e - pos_ - 1);
  }

  bool accept_command(const std::string& name) {
    skip_ws();
    if (peek_command() != name) return false;
    pos_ += name.size() + 1;
    return true;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) syntax(std::string("expected '") + c + "'");
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  /// A keyword word (two or more letters) at the cursor, bounded by non-letters.
  std::string peek_word() {
    skip_ws();
    std::size_t e = pos_;
    while (e < s_.size() && is_letter(s_[e])) ++e;
    if (e - pos_ < 2) return {};
    std::string w = s_.substr(pos_, e - pos_);
    std::string lower = w;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return kKeywords.count(lower) ? lower : std::string{};
  }

  bool accept_word(const std::string& w) {
    if (peek_word() != w) return false;
    pos_ += w.size();
    return true;
  }

  /// `\text{...}` holding a separator word; returns true when consumed.
  bool accept_text_separator() {
    skip_ws();
    std::size_t save = pos_;
    if (!accept_command("text") && !accept_command("mbox") && !accept_command("textrm")) return false;
    if (!accept('{')) {
      pos_ = save;
      return false;
    }
    std::size_t close = s_.find('}', pos_);
    if (close == std::string::npos) syntax("unterminated \\text");
    std::string body = s_.substr(pos_, close - pos_);
    body.erase(0, body.find_first_not_of(" \t"));
    body.erase(body.find_last_not_of(" \t") + 1);
    std::transform(body.begin(), body.end(), body.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!kSeparatorWords.count(body) && body != "for all" && !body.empty()) {
      fail("UnsupportedConstruct", "unsupported text '" + body + "'", save);
    }
    pos_ = close + 1;
    return true;
  }

  bool accept_separator() {
    bool any = false;
    while (true) {
      if (accept(',') || accept(';') || accept_command("quad") || accept_command("qquad") ||
          accept_text_separator()) {
        any = true;
        continue;
      }
      std::string w = peek_word();
      if (kSeparatorWords.count(w) || w == "all") {
        pos_ += w.size();
        any = true;
        continue;
      }
      return any;
    }
  }

  // ---- relations -------------------------------------------------------

  std::optional<Relation> accept_relation() {
    skip_ws();
    if (pos_ >= s_.size()) return std::nullopt;
    char c = s_[pos_];
    if (c == '<' || c == '>') {
      bool eq = pos_ + 1 < s_.size() && s_[pos_ + 1] == '=';
      pos_ += eq ? 2 : 1;
      if (c == '<') return eq ? Relation::Le : Relation::Lt;
      return eq ? Relation::Ge : Relation::Gt;
    }
    if (c == '=') {
      ++pos_;
      return Relation::Eq;
    }
    std::string cmd = peek_command();
    static const std::map<std::string, Relation> rels = {
        {"leq", Relation::Le}, {"le", Relation::Le}, {"leqslant", Relation::Le}, {"lt", Relation::Lt},
        {"geq", Relation::Ge}, {"ge", Relation::Ge}, {"geqslant", Relation::Ge}, {"gt", Relation::Gt}};
    auto it = rels.find(cmd);
    if (it == rels.end()) return std::nullopt;
    pos_ += cmd.size() + 1;
    return it->second;
  }

  // ---- expressions -----------------------------------------------------

  Expr expression() {
    skip_ws();
    std::vector<Expr> terms;
    bool negative = false;
    if (accept('-')) negative = true;
    else accept('+');
    Expr t = term();
    terms.push_back(negative ? -t : t);
    while (true) {
      if (accept('+')) {
        terms.push_back(term());
      } else if (peek() == '-' ) {
        ++pos_;
        terms.push_back(-term());
      } else {
        break;
      }
    }
    return sum(terms);
  }

  Expr term() {
    std::vector<Expr> factors{factor()};
    while (true) {
      skip_ws();
      if (accept('*') || accept_command("cdot") || accept_command("times")) {
        factors.push_back(factor());
      } else if (accept('/')) {
        factors.push_back(power(factor(), -1));
      } else if (starts_operand()) {
        factors.push_back(factor());
      } else {
        break;
      }
    }
    return product(factors);
  }

  bool starts_operand() {
    skip_ws();
    if (pos_ >= s_.size()) return false;
    char c = s_[pos_];
    if (is_digit(c) || c == '(' || c == '{' || c == '|') return true;
    if (is_letter(c)) return peek_word().empty();
    if (c == '\\') {
      static const std::set<std::string> stops = {
          "ll", "lesssim", "leq", "le", "leqslant", "lt", "geq", "ge", "geqslant", "gt", "cdot", "times",
          "right", "quad", "qquad", "text", "mbox", "textrm", "bigr", "Bigr", "biggr", "Biggr", "infty",
          "sum", "in"};
      return !stops.count(peek_command());
    }
    return false;
  }

  Expr factor() {
    std::size_t start = pos_;
    Operand base = operand();
    skip_ws();
    if (accept('^')) {
      Expr ex = exponent();
      return raise(base, ex, start);
    }
    if (peek() == '!') fail("UnsupportedConstruct", "factorial is not supported", pos_);
    return base.get();
  }

  Expr raise(const Operand& base, const Expr& ex, std::size_t at) {
    if (base.euler) return exp(ex);
    if (ex.is_const()) return power(base.value, ex.value());
    if (base.value.is_const() && base.value.value() <= 0)
      fail("UnsupportedConstruct", "a non-constant exponent needs a positive base", at);
    if (!base.value.is_const()) variable_bases.emplace_back(base.value, at);
    return exp(ex * log(base.value));
  }

  Expr exponent() {
    skip_ws();
    if (pos_ >= s_.size()) syntax("missing exponent");
    char c = s_[pos_];
    if (c == '{') {
      ++pos_;
      Expr e = expression();
      expect('}');
      return e;
    }
    if (is_digit(c)) {
      ++pos_;
      return constant(c - '0');
    }
    if (c == '-') {
      ++pos_;
      return -exponent();
    }
    if (is_letter(c)) {
      Operand o = letter_operand(false);
      return o.get();
    }
    if (c == '(' ) {
      ++pos_;
      Expr e = expression();
      expect(')');
      return e;
    }
    if (c == '\\') {
      std::string cmd = peek_command();
      if (cmd == "frac" || cmd == "dfrac" || cmd == "tfrac") return operand().get();
      fail("UnsupportedConstruct", "unsupported exponent \\" + cmd, pos_);
    }
    syntax("malformed exponent");
  }

  Operand letter_operand(bool allow_subscript) {
    std::size_t at = pos_;
    char c = s_[pos_++];
    std::string name(1, c);
    if (allow_subscript && pos_ < s_.size() && s_[pos_] == '_') {
      ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '{') {
        std::size_t close = s_.find('}', pos_);
        if (close == std::string::npos) syntax("unterminated subscript");
        std::string sub = s_.substr(pos_ + 1, close - pos_ - 1);
        if (sub.empty() || !std::all_of(sub.begin(), sub.end(), [](char ch) { return std::isalnum(static_cast<unsigned char>(ch)); }))
          fail("UnsupportedConstruct", "subscripts must be alphanumeric", pos_);
        name += "_" + sub;
        pos_ = close + 1;
      } else if (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) {
        name += "_" + std::string(1, s_[pos_++]);
      } else {
        syntax("malformed subscript");
      }
    }
    if (name == "e") return {constant(1), true};
    first_use.emplace(name, at);
    return {var(name), false};
  }

  Expr group(char open, char close) {
    expect(open);
    Expr e = expression();
    expect(close);
    return e;
  }

  Expr braced() { return group('{', '}'); }

  /// Argument of \log or \exp: a parenthesized group or a single factor.
  Expr function_argument() {
    skip_ws();
    std::string cmd = peek_command();
    if (peek() == '(' || cmd == "left" || cmd == "bigl" || cmd == "Bigl" || cmd == "big" || cmd == "Big") {
      return operand().get();
    }
    if (peek() == '{') return braced();
    return factor();
  }

  Operand operand() {
    skip_ws();
    if (pos_ >= s_.size()) syntax("unexpected end of input");
    std::size_t at = pos_;
    char c = s_[pos_];
    if (is_digit(c) || c == '.') {
      std::size_t e = pos_;
      while (e < s_.size() && is_digit(s_[e])) ++e;
      if (e < s_.size() && s_[e] == '.' && e + 1 < s_.size() && is_digit(s_[e + 1])) {
        ++e;
        while (e < s_.size() && is_digit(s_[e])) ++e;
      }
      if (e == pos_) syntax("malformed number");
      std::string digits = s_.substr(pos_, e - pos_);
      pos_ = e;
      return {constant(parse_rational(digits))};
    }
    if (is_letter(c)) return letter_operand(true);
    if (c == '(') return {group('(', ')')};
    if (c == '{') return {braced()};
    if (c == '|') fail("UnsupportedConstruct", "absolute values are not supported", at);
    if (c != '\\') syntax(std::string("unexpected '") + c + "'");

    std::string cmd = peek_command();
    pos_ += cmd.size() + 1;
    if (cmd == "left" || cmd == "bigl" || cmd == "Bigl" || cmd == "biggl" || cmd == "Biggl" || cmd == "big" ||
        cmd == "Big") {
      skip_ws();
      char open = pos_ < s_.size() ? s_[pos_] : '\0';
      char close_ch;
      if (open == '(') close_ch = ')';
      else if (open == '[') close_ch = ']';
      else fail("UnsupportedConstruct", "unsupported delimiter after \\" + cmd, pos_);
      ++pos_;
      Expr e = expression();
      skip_ws();
      std::string r = peek_command();
      if (r == "right" || r == "bigr" || r == "Bigr" || r == "biggr" || r == "Biggr" || r == "big" || r == "Big")
        pos_ += r.size() + 1;
      expect(close_ch);
      return {e};
    }
    if (cmd == "frac" || cmd == "dfrac" || cmd == "tfrac") {
      Expr n = braced();
      Expr d = braced();
      return {n / d};
    }
    if (cmd == "sqrt") {
      Rational p(1, 2);
      skip_ws();
      if (accept('[')) {
        Expr idx = expression();
        expect(']');
        if (!idx.is_const() || !is_integer(idx.value()) || idx.value() < 2)
          fail("UnsupportedConstruct", "root index must be an integer >= 2", at);
        p = Rational(1) / idx.value();
      }
      return {power(braced(), p)};
    }
    if (cmd == "log" || cmd == "ln") {
      skip_ws();
      std::optional<Expr> pw;
      if (accept('^')) pw = exponent();
      Expr arg = function_argument();
      Expr l = log(arg);
      if (pw) {
        if (!pw->is_const()) fail("UnsupportedConstruct", "powers of log must be constant", at);
        l = power(l, pw->value());
      }
      return {l};
    }
    if (cmd == "exp") return {exp(function_argument())};
    if (cmd == "mathrm" || cmd == "mathit") {
      skip_ws();
      if (s_.compare(pos_, 3, "{e}") == 0) {
        pos_ += 3;
        return {constant(1), true};
      }
      fail("UnsupportedConstruct", "unsupported \\" + cmd, at);
    }
    fail("UnsupportedConstruct", "unsupported construct \\" + cmd, at);
  }

  // ---- constraints -----------------------------------------------------

  /// Parses one comma-free constraint chain or a bare variable (returned via
  /// `pending` for lists like `x, y \geq 1`).
  void constraint_item(std::vector<Constraint>& out, std::vector<Expr>& pending) {
    std::size_t at = pos_;
    Expr first = expression();
    std::vector<std::pair<Relation, Expr>> chain;
    while (auto rel = accept_relation()) chain.emplace_back(*rel, expression());
    if (chain.empty()) {
      if (!first.is_var()) fail("SyntaxError", "expected a relation in constraint", at);
      pending.push_back(first);
      return;
    }
    if (!pending.empty()) {
      if (chain.size() != 1) fail("SyntaxError", "a variable list must be followed by a single relation", at);
      for (const auto& v : pending) out.emplace_back(v, chain.front().first, chain.front().second);
      pending.clear();
    }
    Expr lhs = first;
    for (const auto& [rel, rhs] : chain) {
      out.emplace_back(lhs, rel, rhs);
      lhs = rhs;
    }
  }

  std::vector<Constraint> constraint_list() {
    std::vector<Constraint> out;
    std::vector<Expr> pending;
    while (!at_end()) {
      constraint_item(out, pending);
      if (at_end()) break;
      if (!accept_separator()) syntax("expected ',' between constraints");
    }
    if (!pending.empty()) fail("SyntaxError", "variable list without a relation", s_.size());
    return out;
  }

  const std::string& text() const { return s_; }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

struct ParsedParts {
  bool series = false;
  std::string index;
  long start = 0;
  Expr lhs, rhs;
  std::vector<Constraint> constraints;
  std::size_t index_pos = 0;
};

void parse_series_header(Parser& p, ParsedParts& out) {
  if (!p.accept('_')) p.syntax("expected _{index=start} after \\sum");
  p.expect('{');
  p.skip_ws();
  std::size_t at = p.pos();
  Expr idx = p.expression();
  if (!idx.is_var()) p.fail("UnsupportedConstruct", "summation index must be a variable", at);
  out.index = idx.name();
  out.index_pos = at;
  p.expect('=');
  p.skip_ws();
  at = p.pos();
  Expr st = p.expression();
  if (!st.is_const() || !is_integer(st.value()) || st.value() < 0)
    p.fail("UnsupportedConstruct", "summation start must be a nonnegative integer", at);
  out.start = num(st.value()).convert_to<long>();
  p.expect('}');
  if (!p.accept('^')) p.syntax("expected ^{\\infty}");
  bool braced = p.accept('{');
  if (!p.accept_command("infty")) p.fail("UnsupportedConstruct", "only infinite sums are supported", p.pos());
  if (braced) p.expect('}');
}

ParsedParts parse_parts(Parser& p) {
  ParsedParts out;
  // Natural-language templates.
  if (p.accept_word("prove")) {
    p.accept_word("that");
  } else if (p.accept_word("show")) {
    p.accept_word("that");
  }
  p.skip_ws();
  if (p.accept_command("sum")) {
    out.series = true;
    parse_series_header(p, out);
  }
  out.lhs = p.expression();
  p.skip_ws();
  std::size_t rel_at = p.pos();
  bool big_o = false;
  if (p.accept_command("ll") || p.accept_command("lesssim")) {
    big_o = false;
  } else if (p.accept('=') || p.accept_word("is")) {
    big_o = true;
  } else {
    std::string cmd = p.peek_command();
    if (!cmd.empty()) p.fail("UnsupportedConstruct", "unsupported relation \\" + cmd, rel_at);
    p.fail("SyntaxError", "expected \\ll or = O(...)", rel_at);
  }
  if (big_o) {
    p.skip_ws();
    if (p.accept_command("mathcal")) {
      p.expect('{');
      if (p.peek() != 'O') p.syntax("expected O");
      p.set_pos(p.pos() + 1);
      p.expect('}');
    } else if (p.peek() == 'O') {
      p.set_pos(p.pos() + 1);
    } else {
      p.fail("SyntaxError", "expected O(...)", p.pos());
    }
    p.skip_ws();
    if (p.accept_command("left")) {
      p.expect('(');
      out.rhs = p.expression();
      p.accept_command("right");
      p.expect(')');
    } else {
      p.expect('(');
      out.rhs = p.expression();
      p.expect(')');
    }
  } else {
    out.rhs = p.expression();
  }
  if (p.at_end()) return out;
  if (!p.accept_separator()) p.syntax("expected ',' or 'where' before the side conditions");
  out.constraints = p.constraint_list();
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n$");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n$.");
  return s.substr(b, e - b + 1);
}

}  // namespace

Expr parse_expression(const std::string& text) {
  Parser p(text);
  Expr e = p.expression();
  if (!p.at_end()) p.syntax("unexpected trailing input");
  return e;
}

std::vector<Constraint> parse_constraints(const std::string& text) {
  Parser p(text);
  return p.constraint_list();
}

ParseResult parse_problem(const std::string& raw_text, const ParseOptions& opts) {
  ParseResult result;
  std::string label;
  std::string text = raw_text;
  std::size_t offset = 0;
  auto def = text.find(":=");
  if (def != std::string::npos) {
    label = trim(text.substr(0, def));
    offset = def + 2;
  }
  // Keep offsets relative to the original input by blanking the prefix.
  std::string body = std::string(offset, ' ') + text.substr(offset);
  while (!body.empty() && (body.back() == '.' || std::isspace(static_cast<unsigned char>(body.back())) || body.back() == '$'))
    body.pop_back();
  Parser p(body);
  ParsedParts parts;
  try {
    parts = parse_parts(p);
  } catch (const ParseError& e) {
    result.diagnostics.push_back(e.diag);
    return result;
  }
  auto error = [&](std::size_t at, const std::string& code, const std::string& msg) {
    result.diagnostics.push_back(Diagnostic{at, code, msg, Severity::Error});
  };
  if (parts.rhs.is_const(0)) error(0, "InvalidProblem", "the right-hand side is identically zero");

  std::set<std::string> names = free_vars(parts.lhs);
  for (const auto& v : free_vars(parts.rhs)) names.insert(v);
  for (const auto& c : parts.constraints)
    for (const auto& v : c.vars()) names.insert(v);

  std::set<std::string> constrained;
  for (const auto& c : parts.constraints)
    for (const auto& v : c.vars()) constrained.insert(v);

  if (parts.series) {
    if (!depends_on(parts.lhs, parts.index))
      error(parts.index_pos, "InvalidProblem", "the summation index does not appear in the summand");
    if (depends_on(parts.rhs, parts.index))
      error(parts.index_pos, "InvalidProblem", "the bound may not depend on the summation index");
    for (const auto& c : parts.constraints)
      if (c.vars().count(parts.index))
        error(parts.index_pos, "InvalidProblem", "side conditions may not mention the summation index");
    names.erase(parts.index);
  }
  if (!opts.allow_unconstrained) {
    for (const auto& v : names) {
      if (constrained.count(v)) continue;
      auto it = p.first_use.find(v);
      error(it == p.first_use.end() ? 0 : it->second, "AmbiguousDomain",
            "variable " + v + " has no constraint; add one or allow unconstrained reals explicitly");
    }
  }
  if (!result.diagnostics.empty()) return result;

  std::vector<VarDecl> decls;
  for (const auto& v : names) decls.push_back({v, VarRole::Real});
  Region region(decls, parts.constraints);
  auto bounds = direct_bounds(region);
  for (const auto& [base, at] : p.variable_bases) {
    Interval iv = region_enclosure(base, region);
    bool positive = !iv.partial && iv.lo > 0;
    if (base.is_var()) {
      const auto& b = bounds[base.name()];
      positive = positive || (b.lo == 0 && b.lo_strict);
    }
    if (!positive)
      error(at, "UnsupportedConstruct", "a non-constant exponent needs a base that the side conditions keep positive");
  }
  if (!result.diagnostics.empty()) return result;
  ProblemStatement ps;
  ps.label = label;
  if (parts.series) {
    ps.body = SeriesProblem{parts.lhs, parts.index, parts.start, region, parts.rhs};
  } else {
    ps.body = InequalityProblem{parts.lhs, parts.rhs, region};
  }
  result.problem = std::move(ps);
  return result;
}

}  // namespace decomp
