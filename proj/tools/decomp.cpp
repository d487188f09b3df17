// Command-line front end: prove, series, falsify, bench, record-fixtures,
// golden and serve.

#include "decomp/orchestrator.hpp"
#include "decomp/server.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace decomp;
namespace fs = std::filesystem;

namespace {

constexpr int kOperationalError = 3;
constexpr int kBenchMismatch = 4;

struct Common {
  std::string problems_dir;
  std::string stmt;
  std::string grid_max;
  std::string backend = "builtin";
  std::string order = "heuristic-first";
  std::string replay;
  bool json = false;
  bool quiet = false;
};

std::string default_problems_dir() {
  if (fs::is_directory("problems")) return "problems";
  return std::string(DECOMP_SOURCE_DIR) + "/problems";
}

class OperationalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunConfig make_config(const Common& c) {
  RunConfig cfg;
  cfg.order = proposer_order_from_string(c.order);
  cfg.backend = backend_mode_from_string(c.backend);
  if (!c.grid_max.empty()) cfg.grid = doubling_grid(parse_rational(c.grid_max));
  cfg.llm = proposer_config_from_env();
  cfg.cas = cas_config_from_env();
  if (!c.replay.empty()) {
    cfg.replay = true;
    cfg.replay_path = c.replay;
  }
  cfg.validate();
  return cfg;
}

std::vector<CorpusEntry> corpus(const Common& c) {
  std::string dir = c.problems_dir.empty() ? default_problems_dir() : c.problems_dir;
  if (!fs::is_directory(dir)) throw OperationalError("problem directory " + dir + " not found");
  return load_corpus(dir);
}

struct Loaded {
  std::string id;
  ProblemStatement problem;
  std::string expected;
};

Loaded load_problem(const Common& c, const std::string& id) {
  Loaded out;
  std::string text;
  bool unconstrained = false;
  if (!c.stmt.empty()) {
    text = c.stmt;
    out.id = "inline";
  } else {
    if (id.empty()) throw OperationalError("give a problem id or --stmt");
    auto e = find_problem(corpus(c), id);
    if (!e) throw OperationalError("unknown problem id '" + id + "'");
    text = e->statement;
    unconstrained = e->allow_unconstrained;
    out.id = e->id;
    out.expected = e->expected;
  }
  ParseOptions po;
  po.allow_unconstrained = unconstrained;
  auto r = parse_problem(text, po);
  if (!r.ok()) {
    std::ostringstream os;
    os << "cannot parse the statement:";
    for (const auto& d : r.diagnostics) os << "\n  at " << d.position << ": " << d.code << ": " << d.message;
    throw OperationalError(os.str());
  }
  out.problem = *r.problem;
  return out;
}

void print_counterexample(const Counterexample& cx) {
  std::cout << "Counterexample:";
  for (const auto& [k, v] : cx.point) std::cout << " " << k << " = " << std::setprecision(12) << v;
  std::cout << "\n  lhs = " << cx.lhs << ", rhs = " << cx.rhs << ", lhs > " << to_string(cx.C) << " * rhs";
  if (cx.terms) std::cout << " after " << cx.terms << " terms";
  std::cout << "\n";
}

int report(const RunRecord& r, const Common& c) {
  if (c.json) {
    std::cout << to_json(r).dump(2) << "\n";
    return exit_code(r.verdict.status);
  }
  if (!c.quiet) std::cout << certificate_text(r);
  for (const auto& w : r.warnings) std::cout << "warning: " << w << "\n";
  for (const auto& e : r.errors) std::cout << "note: " << e << "\n";
  switch (r.verdict.status) {
    case VerdictStatus::Proved:
      std::cout << "Proof verified (C = " << to_string(r.verdict.C) << ")\n";
      break;
    case VerdictStatus::Disproved:
      print_counterexample(*r.verdict.counterexample);
      std::cout << "Disproved\n";
      break;
    case VerdictStatus::Unknown:
      std::cout << "Unknown\n";
      for (const auto& why : r.verdict.reasons) std::cout << "  " << why << "\n";
      break;
  }
  return exit_code(r.verdict.status);
}

int cmd_prove(const Common& c, const std::string& id, bool want_series) {
  Loaded l = load_problem(c, id);
  if (want_series != l.problem.is_series())
    throw OperationalError(want_series ? "'" + l.id + "' is not a series problem; use prove"
                                       : "'" + l.id + "' is a series problem; use series");
  return report(prove_pipeline(l.problem, make_config(c), l.id), c);
}

int cmd_falsify(const Common& c, const std::string& id) {
  Loaded l = load_problem(c, id);
  RunConfig cfg = make_config(c);
  FalsifyOptions fo;
  fo.C = cfg.grid.max();
  const auto& p = l.problem;
  auto cx = p.is_series() ? falsify_series(p.series(), fo)
                          : falsify(p.inequality().lhs, p.inequality().rhs, p.inequality().region, fo);
  if (cx) {
    print_counterexample(*cx);
    return exit_code(VerdictStatus::Disproved);
  }
  std::cout << "No counterexample found at C = " << to_string(fo.C) << "\n";
  return exit_code(VerdictStatus::Unknown);
}

bool has_tag(const CorpusEntry& e, const std::string& tag) {
  if (tag == "all") return true;
  return std::find(e.tags.begin(), e.tags.end(), tag) != e.tags.end() || e.id == tag;
}

int cmd_bench(const Common& c, const std::string& tag, const std::string& out_path) {
  RunConfig cfg = make_config(c);
  Json results = Json::array();
  std::size_t mismatches = 0, incidents = 0, count = 0;
  auto t0 = std::chrono::steady_clock::now();
  std::cout << std::left << std::setw(34) << "problem" << std::setw(11) << "expected" << std::setw(11) << "verdict"
            << std::setw(8) << "C" << std::setw(9) << "backend" << "time (s)\n";
  for (const auto& e : corpus(c)) {
    if (!has_tag(e, tag)) continue;
    ++count;
    ParseOptions po;
    po.allow_unconstrained = e.allow_unconstrained;
    auto parsed = parse_problem(e.statement, po);
    std::string verdict = "ParseError", C = "-";
    double secs = 0;
    bool incident = false;
    if (parsed.ok()) {
      RunRecord r = prove_pipeline(*parsed.problem, cfg, e.id);
      verdict = to_string(r.verdict.status);
      if (r.verdict.status == VerdictStatus::Proved) C = to_string(r.verdict.C);
      secs = r.wall_seconds;
      incident = r.soundness_incident;
    }
    std::string expected = e.expected.empty() ? "-" : e.expected;
    bool ok = e.expected.empty() || (e.expected == "proved" && verdict == "Proved") ||
              (e.expected == "disproved" && verdict == "Disproved") || (e.expected == "unknown" && verdict == "Unknown");
    if (!ok) ++mismatches;
    if (incident) ++incidents;
    std::cout << std::left << std::setw(34) << e.id << std::setw(11) << expected << std::setw(11) << verdict
              << std::setw(8) << C << std::setw(9) << to_string(cfg.backend) << std::fixed << std::setprecision(2)
              << secs << (ok ? "" : "  MISMATCH") << (incident ? "  SOUNDNESS" : "") << "\n";
    std::cout.unsetf(std::ios::floatfield);
    results.push_back({{"id", e.id},
                       {"expected", e.expected},
                       {"verdict", verdict},
                       {"C", C},
                       {"backend", to_string(cfg.backend)},
                       {"seconds", secs},
                       {"matches", ok},
                       {"soundness_incident", incident}});
  }
  double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << count << " problems, " << mismatches << " mismatches, " << incidents << " soundness incidents, "
            << std::fixed << std::setprecision(1) << total << " s\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << Json{{"schema_version", kSchemaVersion}, {"tag", tag}, {"total_seconds", total}, {"results", results}}.dump(2)
        << "\n";
  }
  return mismatches || incidents ? kBenchMismatch : 0;
}

// Answers prompts with hand-written replies keyed by problem id.
class AnswerBook : public Transport {
 public:
  explicit AnswerBook(std::string reply) : reply_(std::move(reply)) {}
  Json send(const Json&) override {
    return {{"choices", Json::array({{{"message", {{"role", "assistant"}, {"content", reply_}}}}})}};
  }

 private:
  std::string reply_;
};

int cmd_record(const Common& c, const std::string& answers_path, const std::string& out_path) {
  RunConfig cfg = make_config(c);
  std::map<std::string, std::string> answers;
  if (!answers_path.empty()) {
    std::ifstream in(answers_path);
    if (!in) throw OperationalError("cannot read " + answers_path);
    for (std::string line; std::getline(in, line);) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      Json j = Json::parse(line);
      answers[j.at("id").get<std::string>()] = j.at("reply").get<std::string>();
    }
  } else if (cfg.llm.endpoint.empty()) {
    throw OperationalError("give --answers or set DECOMP_LLM_ENDPOINT");
  }
  fs::remove(out_path);
  std::size_t recorded = 0;
  for (const auto& e : corpus(c)) {
    std::unique_ptr<Transport> inner;
    if (!answers_path.empty()) {
      auto it = answers.find(e.id);
      if (it == answers.end()) continue;
      inner = std::make_unique<AnswerBook>(it->second);
    } else {
      inner = std::make_unique<HttpTransport>(cfg.llm.endpoint, cfg.llm.api_key, cfg.llm.timeout_seconds);
    }
    ParseOptions po;
    po.allow_unconstrained = e.allow_unconstrained;
    auto parsed = parse_problem(e.statement, po);
    if (!parsed.ok()) continue;
    RecordingTransport rec(*inner, out_path);
    try {
      llm_propose(*parsed.problem, cfg.llm, rec);
      ++recorded;
      std::cout << "recorded " << e.id << "\n";
    } catch (const DecomposerError& ex) {
      std::cout << "failed " << e.id << ": " << ex.code << ": " << ex.what() << "\n";
    }
  }
  std::cout << recorded << " problems recorded to " << out_path << "\n";
  return 0;
}

int cmd_golden(const Common& c, const std::string& dir, bool write) {
  RunConfig cfg = make_config(c);
  std::size_t differ = 0, total = 0;
  if (write) fs::create_directories(dir);
  for (const auto& e : corpus(c)) {
    for (const auto& g : golden_queries(e, cfg)) {
      ++total;
      fs::path path = fs::path(dir) / g.file;
      if (write) {
        std::ofstream(path) << g.text;
        continue;
      }
      std::ifstream in(path);
      std::stringstream ss;
      ss << in.rdbuf();
      if (!in || ss.str() != g.text) {
        ++differ;
        std::cout << "differs: " << g.file << "\n";
      }
    }
  }
  std::cout << total << " queries" << (write ? " written to " + dir : ", " + std::to_string(differ) + " differ") << "\n";
  return differ ? kBenchMismatch : 0;
}

ApiServer* g_server = nullptr;

int cmd_serve(const Common& c, const std::string& host, int port, const std::string& runs_dir) {
  ServerConfig sc;
  sc.problems_dir = c.problems_dir.empty() ? default_problems_dir() : c.problems_dir;
  sc.runs_dir = runs_dir;
  sc.base = make_config(c);
  ApiServer server(sc);
  for (const auto& id : server.load_mismatches())
    std::cerr << "warning: stored verdict of " << id << " differs from its recomputed verdict\n";
  if (!server.bind(host, port)) throw OperationalError("cannot bind " + host + ":" + std::to_string(port));
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << "listening on http://" << host << ":" << port << std::endl;
  server.serve();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymptotic inequality prover"};
  app.fallthrough();
  app.require_subcommand(1);
  Common c;
  app.add_option("--problems", c.problems_dir, "Directory of *.problem files");
  app.add_option("--grid-max", c.grid_max, "Largest constant tried (doubling grid)");
  app.add_option("--backend", c.backend, "builtin, cas or both")->check(CLI::IsMember({"builtin", "cas", "both"}));
  app.add_option("--order", c.order, "heuristic-first, llm-first, llm-only or heuristic-only")
      ->check(CLI::IsMember({"heuristic-first", "llm-first", "llm-only", "heuristic-only"}));
  app.add_option("--replay", c.replay, "Answer model prompts from this JSONL fixture file");
  app.add_flag("--json", c.json, "Print the run record as JSON");
  app.add_flag("--quiet", c.quiet, "Omit the certificate");

  std::string id;
  auto* prove = app.add_subcommand("prove", "Prove an inequality problem");
  prove->add_option("id", id, "Problem id");
  prove->add_option("--stmt", c.stmt, "Statement text instead of an id");
  auto* series = app.add_subcommand("series", "Prove a series problem");
  series->add_option("id", id, "Problem id");
  series->add_option("--stmt", c.stmt, "Statement text instead of an id");
  auto* falsify_cmd = app.add_subcommand("falsify", "Search for a counterexample");
  falsify_cmd->add_option("id", id, "Problem id");
  falsify_cmd->add_option("--stmt", c.stmt, "Statement text instead of an id");

  std::string tag = "all", bench_out;
  auto* bench = app.add_subcommand("bench", "Run the corpus and print a results table");
  bench->add_option("tag", tag, "Corpus tag, problem id or all");
  bench->add_option("--out", bench_out, "Write machine-readable results here");

  std::string answers, fixtures_out = "fixtures/llm_replay.jsonl";
  auto* record = app.add_subcommand("record-fixtures", "Capture model replies for replay");
  record->add_option("--answers", answers, "JSONL of {id, reply} to record instead of a live model");
  record->add_option("--out", fixtures_out, "Fixture file to write");

  std::string golden_dir = std::string(DECOMP_SOURCE_DIR) + "/tests/golden/corpus";
  bool golden_write = false;
  auto* golden = app.add_subcommand("golden", "Check or rewrite the CAS query golden files");
  golden->add_option("--dir", golden_dir, "Golden directory");
  golden->add_flag("--write", golden_write, "Rewrite instead of checking");

  std::string host = "127.0.0.1", runs_dir = ".decomp-runs";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the JSON API");
  serve->add_option("--host", host, "Address to bind");
  serve->add_option("--port", port, "Port");
  serve->add_option("--runs", runs_dir, "Directory for finished run records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kOperationalError;
  }
  try {
    if (*prove) return cmd_prove(c, id, false);
    if (*series) return cmd_prove(c, id, true);
    if (*falsify_cmd) return cmd_falsify(c, id);
    if (*bench) return cmd_bench(c, tag, bench_out);
    if (*record) return cmd_record(c, answers, fixtures_out);
    if (*golden) return cmd_golden(c, golden_dir, golden_write);
    if (*serve) return cmd_serve(c, host, port, runs_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOperationalError;
  }
  return kOperationalError;
}
