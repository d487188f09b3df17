#include "decomp/cas.hpp"

#include "decomp/hash.hpp"
#include "decomp/json_io.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

extern char** environ;

namespace decomp {

namespace fs = std::filesystem;

std::string mathematica_symbol(const std::string& var) {
  static const std::set<std::string> reserved{"C", "D", "E", "I", "K", "N", "O"};
  std::string out;
  for (char c : var)
    if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(c);
  if (out.empty() || reserved.count(out) || std::isdigit(static_cast<unsigned char>(out[0]))) out = "v" + out;
  return out;
}

namespace {

std::string rational_text(const Rational& q) {
  if (is_integer(q)) return q < 0 ? "(" + to_string(q) + ")" : to_string(q);
  return "(" + to_string(q) + ")";
}

int rank(const Expr& f) {
  switch (f.kind()) {
    case Kind::Const: return 0;
    case Kind::Var: return 1;
    case Kind::Power: return f.base().kind() == Kind::Var ? 1 : 2;
    case Kind::Sum: return 2;
    default: return 3;
  }
}

std::string factor_text(const Expr& f) {
  std::string s = render_mathematica(f);
  return f.kind() == Kind::Sum ? "(" + s + ")" : s;
}

std::string product_text(const std::vector<Expr>& factors) {
  std::vector<Expr> fs = factors;
  std::stable_sort(fs.begin(), fs.end(), [](const Expr& a, const Expr& b) { return rank(a) < rank(b); });
  std::string out;
  for (const auto& f : fs) out += (out.empty() ? "" : "*") + factor_text(f);
  return out;
}

}  // namespace

std::string render_mathematica(const Expr& e) {
  switch (e.kind()) {
    case Kind::Const: return rational_text(e.value());
    case Kind::Var: return mathematica_symbol(e.name());
    case Kind::Log: return "Log[" + render_mathematica(e.arg()) + "]";
    case Kind::Exp: return "Exp[" + render_mathematica(e.arg()) + "]";
    case Kind::Power: {
      const Expr& b = e.base();
      std::string base = b.kind() == Kind::Var || b.kind() == Kind::Log || b.kind() == Kind::Exp
                             ? render_mathematica(b)
                             : "(" + render_mathematica(b) + ")";
      const Rational& k = e.exponent();
      return base + "^" + (is_integer(k) && k > 0 ? to_string(k) : "(" + to_string(k) + ")");
    }
    case Kind::Product: return product_text(e.children());
    case Kind::Sum: {
      std::string out;
      std::vector<Expr> terms = e.children();
      std::stable_partition(terms.begin(), terms.end(), [](const Expr& t) { return split_coefficient(t).first > 0; });
      for (const auto& t : terms) {
        auto [coef, rest] = split_coefficient(t);
        bool neg = coef < 0;
        Rational mag = neg ? Rational(-coef) : coef;
        std::string body;
        if (rest.is_const()) body = to_string(mag);
        else {
          std::vector<Expr> fs;
          if (mag != 1) fs.push_back(constant(mag));
          for (const auto& f : factors_of(rest)) fs.push_back(f);
          body = product_text(fs);
        }
        if (out.empty()) out = (neg ? "-" : "") + body;
        else out += (neg ? " - " : " + ") + body;
      }
      return out;
    }
  }
  throw UnrenderableExpr("cannot render " + e.key());
}

std::string render_mathematica(const Constraint& c) {
  const char* op = "<=";
  switch (c.rel) {
    case Relation::Le: op = "<="; break;
    case Relation::Lt: op = "<"; break;
    case Relation::Ge: op = ">="; break;
    case Relation::Gt: op = ">"; break;
    case Relation::Eq: op = "=="; break;
  }
  return render_mathematica(c.lhs) + " " + op + " " + render_mathematica(c.rhs);
}

ResolveQuery build_resolve_query(const Expr& f, const Expr& g, const Region& r, const Rational& C,
                                 int timeout_seconds) {
  ResolveQuery q;
  q.vars = r.var_names();
  q.domain = r.constraints();
  q.f = f;
  q.g = g;
  q.C = C;
  q.timeout_seconds = timeout_seconds;
  for (const auto& v : free_vars(f))
    if (!r.declares(v)) throw UnrenderableExpr("variable " + v + " is not declared");
  for (const auto& v : free_vars(g))
    if (!r.declares(v)) throw UnrenderableExpr("variable " + v + " is not declared");
  std::string vars;
  for (const auto& v : q.vars) vars += (vars.empty() ? "" : ", ") + mathematica_symbol(v);
  std::string dom;
  for (const auto& c : q.domain) dom += (dom.empty() ? "" : " && ") + render_mathematica(c);
  std::string gt = render_mathematica(g);
  if (g.kind() == Kind::Sum) gt = "(" + gt + ")";
  std::string body = render_mathematica(f) + " <= " + rational_text(C) + "*" + gt;
  if (!dom.empty()) body = "Implies[" + dom + ", " + body + "]";
  q.text = "Resolve[ForAll[{" + vars + "}, " + body + "], " + q.theory + "]";
  return q;
}

std::string to_string(ResolveStatus s) {
  switch (s) {
    case ResolveStatus::True: return "True";
    case ResolveStatus::False: return "False";
    case ResolveStatus::Other: return "Other";
  }
  return "?";
}

ResolveStatus classify_reply(const std::string& raw) {
  std::istringstream in(raw);
  std::string tok, all;
  int n = 0;
  while (in >> tok) {
    all = tok;
    ++n;
  }
  if (n != 1) return ResolveStatus::Other;
  if (all == "True") return ResolveStatus::True;
  if (all == "False") return ResolveStatus::False;
  return ResolveStatus::Other;
}

CasConfig cas_config_from_env() {
  CasConfig cfg;
  if (const char* w = std::getenv("WOLFRAMSCRIPT")) cfg.executable = w;
  if (cfg.executable.empty()) {
    std::ifstream in(".env");
    std::string line;
    while (std::getline(in, line))
      if (line.rfind("WOLFRAMSCRIPT=", 0) == 0) cfg.executable = line.substr(14);
  }
  const char* c = std::getenv("DECOMP_CAS_CACHE");
  cfg.cache_dir = c ? c : ".decomp-cache/cas";
  return cfg;
}

ProcessResult run_process(const std::vector<std::string>& argv, int timeout_seconds) {
  ProcessResult res;
  auto start = std::chrono::steady_clock::now();
  int fds[2];
  if (pipe(fds) != 0) throw std::runtime_error("pipe failed");
  posix_spawn_file_actions_t fa;
  posix_spawn_file_actions_init(&fa);
  posix_spawn_file_actions_adddup2(&fa, fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&fa, fds[0]);
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid;
  int rc = posix_spawn(&pid, argv[0].c_str(), &fa, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&fa);
  close(fds[1]);
  if (rc != 0) {
    close(fds[0]);
    throw CasUnavailable("cannot start " + argv[0]);
  }
  auto deadline = start + std::chrono::seconds(timeout_seconds);
  char buf[4096];
  for (;;) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      res.timed_out = true;
      kill(pid, SIGKILL);
      break;
    }
    pollfd p{fds[0], POLLIN, 0};
    int pr = poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (pr < 0) break;
    if (pr == 0) continue;
    ssize_t n = read(fds[0], buf, sizeof buf);
    if (n <= 0) break;
    res.out.append(buf, static_cast<std::size_t>(n));
  }
  close(fds[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (!res.timed_out) res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  res.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

CasBridge::CasBridge(CasConfig cfg) : cfg_(std::move(cfg)), slots_(std::clamp(cfg_.max_concurrent, 1, 64)) {}

bool CasBridge::available() const {
  return !cfg_.executable.empty() && access(cfg_.executable.c_str(), X_OK) == 0;
}

ResolveReply CasBridge::run(const ResolveQuery& q) {
  if (!available()) throw CasUnavailable("ExecutableMissing: " + (cfg_.executable.empty() ? "not configured" : cfg_.executable));
  fs::path cache_file;
  bool caching = cfg_.use_cache && !cfg_.cache_dir.empty();
  if (caching) {
    cache_file = fs::path(cfg_.cache_dir) / (sha256_hex(q.text) + ".json");
    std::ifstream in(cache_file);
    if (in) {
      try {
        Json j = Json::parse(in);
        if (j.at("query").get<std::string>() == q.text) {
          ResolveReply r;
          r.raw = j.at("raw").get<std::string>();
          r.status = classify_reply(r.raw);
          r.exit_code = j.value("exit_code", 0);
          if (r.exit_code != 0) r.status = ResolveStatus::Other;
          r.elapsed = j.value("elapsed", 0.0);
          r.cached = true;
          return r;
        }
      } catch (const std::exception&) {
      }
    }
  }
  slots_.acquire();
  ProcessResult pr;
  try {
    ++spawns_;
    pr = run_process({cfg_.executable, "-code", q.text}, q.timeout_seconds);
  } catch (...) {
    slots_.release();
    throw;
  }
  slots_.release();
  ResolveReply r;
  r.raw = pr.out;
  r.elapsed = pr.elapsed;
  r.timed_out = pr.timed_out;
  r.exit_code = pr.exit_code;
  r.status = pr.timed_out || pr.exit_code != 0 ? ResolveStatus::Other : classify_reply(pr.out);
  if (caching && !pr.timed_out) {
    std::lock_guard<std::mutex> lock(cache_mu_);
    fs::create_directories(cfg_.cache_dir);
    fs::path tmp = cache_file;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      out << Json{{"query", q.text}, {"raw", r.raw}, {"exit_code", r.exit_code}, {"elapsed", r.elapsed}}.dump(2);
    }
    fs::rename(tmp, cache_file);
  }
  return r;
}

CasPieceResult cas_grid_search(CasBridge& cas, const Expr& f, const Expr& g, const Region& r, const GridSpec& grid,
                               int timeout_seconds) {
  CasPieceResult out;
  if (!cas.available()) {
    out.available = false;
    out.reason = "CAS unavailable";
    return out;
  }
  for (const auto& C : grid.values) {
    ResolveReply rep = cas.run(build_resolve_query(f, g, r, C, timeout_seconds));
    out.replies.emplace_back(C, rep);
    if (rep.status == ResolveStatus::True) {
      out.proved = true;
      out.C = C;
      return out;
    }
    if (rep.status == ResolveStatus::Other) {
      out.reason = rep.timed_out ? "timeout at C = " + to_string(C) : "unrecognized reply at C = " + to_string(C);
      return out;
    }
  }
  out.reason = "False for every grid constant";
  return out;
}

}  // namespace decomp
