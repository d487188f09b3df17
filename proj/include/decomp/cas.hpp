#pragma once

// Quantifier-elimination queries for an external computer algebra system,
// run as a subprocess with a timeout and a content-addressed disk cache.

#include "decomp/prover.hpp"
#include "decomp/region.hpp"

#include <atomic>
#include <memory>
#include <mutex>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

namespace decomp {

class UnrenderableExpr : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string render_mathematica(const Expr& e);
std::string render_mathematica(const Constraint& c);
std::string mathematica_symbol(const std::string& var);

struct ResolveQuery {
  std::vector<std::string> vars;
  std::vector<Constraint> domain;
  Expr f, g;
  Rational C = 1;
  std::string theory = "Reals";
  int timeout_seconds = 60;
  std::string text;
};

/// Resolve[ForAll[{vars}, Implies[domain, f <= C*(g)]], Reals].
ResolveQuery build_resolve_query(const Expr& f, const Expr& g, const Region& r, const Rational& C,
                                 int timeout_seconds = 60);

enum class ResolveStatus { True, False, Other };
std::string to_string(ResolveStatus s);

struct ResolveReply {
  ResolveStatus status = ResolveStatus::Other;
  std::string raw;
  double elapsed = 0;
  bool cached = false;
  bool timed_out = false;
  int exit_code = 0;
};

/// True or False only when the trimmed output is exactly that token.
ResolveStatus classify_reply(const std::string& raw);

struct CasConfig {
  std::string executable;  // empty: unavailable
  std::string cache_dir;   // empty: no cache
  bool use_cache = true;
  int max_concurrent = 2;
};

/// WOLFRAMSCRIPT names the executable (also read from `.env`);
/// DECOMP_CAS_CACHE the cache directory (default .decomp-cache/cas).
CasConfig cas_config_from_env();

class CasUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CasBridge {
 public:
  explicit CasBridge(CasConfig cfg);

  /// The executable exists and is runnable.
  bool available() const;
  /// Throws CasUnavailable (ExecutableMissing).
  ResolveReply run(const ResolveQuery& q);
  std::size_t spawns() const { return spawns_.load(); }
  const CasConfig& config() const { return cfg_; }

 private:
  CasConfig cfg_;
  std::counting_semaphore<64> slots_;
  std::mutex cache_mu_;
  std::atomic<std::size_t> spawns_{0};
};

struct CasPieceResult {
  bool available = true;
  bool proved = false;
  Rational C = 0;
  std::vector<std::pair<Rational, ResolveReply>> replies;
  std::string reason;
};

/// Grid search with one query per constant; False only moves to the next C.
CasPieceResult cas_grid_search(CasBridge& cas, const Expr& f, const Expr& g, const Region& r,
                               const GridSpec& grid = GridSpec::standard(), int timeout_seconds = 60);

/// Output of running argv with the given deadline.
struct ProcessResult {
  std::string out;
  int exit_code = 0;
  bool timed_out = false;
  double elapsed = 0;
};
ProcessResult run_process(const std::vector<std::string>& argv, int timeout_seconds);

}  // namespace decomp
