#pragma once

#include "decomp/expr.hpp"
#include "decomp/region.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace decomp {

/// f << g on a region.
struct InequalityProblem {
  Expr lhs;
  Expr rhs;
  Region region;
};

/// sum_{index = start}^{infinity} summand << target, uniformly over params.
struct SeriesProblem {
  Expr summand;
  std::string index;
  long start = 0;
  Region params;
  Expr target;
};

struct ProblemStatement {
  std::variant<InequalityProblem, SeriesProblem> body;
  /// Optional "S(h,m)" style name given with ":=".
  std::string label;

  bool is_series() const { return std::holds_alternative<SeriesProblem>(body); }
  const InequalityProblem& inequality() const { return std::get<InequalityProblem>(body); }
  const SeriesProblem& series() const { return std::get<SeriesProblem>(body); }
};

enum class Severity { Error, Warning };

struct Diagnostic {
  std::size_t position = 0;  // byte offset into the input
  std::string code;          // UnsupportedConstruct, AmbiguousDomain, SyntaxError, InvalidProblem
  std::string message;
  Severity severity = Severity::Error;
};

struct ParseOptions {
  /// Lets variables without any constraint range over all reals.
  bool allow_unconstrained = false;
};

struct ParseResult {
  std::optional<ProblemStatement> problem;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return problem.has_value(); }
};

ParseResult parse_problem(const std::string& text, const ParseOptions& opts = {});

/// Thrown by the expression-level helpers below.
class ParseError : public std::runtime_error {
 public:
  ParseError(Diagnostic d) : std::runtime_error(d.message), diag(std::move(d)) {}
  Diagnostic diag;
};

/// A single LaTeX expression, normalized.
Expr parse_expression(const std::string& text);

/// A comma-separated constraint list; chains such as `0 \leq y \leq 2\log x`
/// expand into several constraints.
std::vector<Constraint> parse_constraints(const std::string& text);

std::string render_latex(const Expr& e);
std::string render_latex(const Constraint& c);
std::string render_canonical(const ProblemStatement& p);

/// Structural identity key: equal keys mean equal problems.
std::string problem_key(const ProblemStatement& p);

/// One problem file of the corpus.
struct CorpusEntry {
  std::string id;
  std::string statement;
  std::string expected;  // "proved", "disproved" or empty
  std::vector<std::string> tags;
  bool allow_unconstrained = false;
};

/// Reads the `key: value` text format.
CorpusEntry parse_corpus_entry(const std::string& text);
std::string render_corpus_entry(const CorpusEntry& e);
/// Loads every *.problem file in dir, sorted by id.
std::vector<CorpusEntry> load_corpus(const std::string& dir);
std::optional<CorpusEntry> find_problem(const std::vector<CorpusEntry>& corpus, const std::string& id);

}  // namespace decomp
