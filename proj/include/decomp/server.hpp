#pragma once

// Local JSON API over the problem store and the run pipeline.
//
//   POST /problems                   statement text -> parsed problem and id
//   GET  /corpus                     problems shipped with the repository
//   POST /runs                       problem id and config -> run id (async)
//   GET  /runs/{id}                  the run record, updated while it runs
//   PUT  /runs/{id}/decomposition    edited decomposition -> new run
//
// Every body carries "schema_version".

#include "decomp/orchestrator.hpp"
#include "decomp/problem.hpp"

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace decomp {

struct ServerConfig {
  std::string problems_dir;  // corpus; empty for none
  std::string runs_dir;      // finished records as <problem id>.jsonl; empty for none
  RunConfig base;            // request configs are applied on top of this
};

struct StoredProblem {
  std::string id;
  std::string statement;
  ProblemStatement problem;
  bool from_corpus = false;
  std::string expected;
  std::vector<std::string> tags;
};

class ApiServer {
 public:
  explicit ApiServer(ServerConfig cfg);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds to host on a free port and returns it.
  int bind_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  /// Serves until stop(); blocking.
  void serve();
  void stop();
  /// Blocks until no run is in flight.
  void wait_idle();

  /// Records loaded from runs_dir whose stored verdict differs from the
  /// recomputed one.
  const std::vector<std::string>& load_mismatches() const { return mismatches_; }

 private:
  struct Response {
    int status = 200;
    Json body;
  };
  Response post_problem(const std::string& body);
  Response get_corpus();
  Response post_run(const std::string& body);
  Response get_run(const std::string& id);
  Response put_decomposition(const std::string& id, const std::string& body);

  std::string start_run(const StoredProblem& p, const RunConfig& cfg, const std::string& forked_from);
  void persist(const RunRecord& r);
  void load_runs();
  void routes();

  ServerConfig cfg_;
  std::unique_ptr<httplib::Server> http_;
  std::mutex mu_;
  std::condition_variable idle_cv_;
  std::map<std::string, StoredProblem> problems_;
  std::map<std::string, RunRecord> runs_;
  std::map<std::string, std::unique_ptr<std::mutex>> store_locks_;
  std::vector<std::thread> workers_;
  std::size_t active_ = 0;
  std::size_t next_run_ = 1;
  std::vector<std::string> mismatches_;
};

/// Fields a request config may not set: they name executables, files or
/// endpoints on the server's machine.
bool is_server_only_field(const std::string& key);

/// Store identifier of a parsed problem, stable across processes.
std::string problem_id_for(const ProblemStatement& p);

}  // namespace decomp
