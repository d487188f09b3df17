#include "doctest.h"

#include "decomp/server.hpp"

#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

using namespace decomp;
namespace fs = std::filesystem;

namespace {

const char* kFenchel = "x y \\ll x\\log x + e^y, x \\geq 1, y \\geq 0";

fs::path scratch(const std::string& name) {
  fs::path p = fs::path(DECOMP_SOURCE_DIR) / "build" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// A server on a free local port, serving on a background thread.
struct Running {
  explicit Running(ServerConfig cfg) : server(std::move(cfg)) {
    port = server.bind_any_port();
    thread = std::thread([this] { server.serve(); });
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(30);
  }
  ~Running() {
    server.wait_idle();
    server.stop();
    thread.join();
  }
  Json call(const std::string& method, const std::string& path, const Json& body, int& status) {
    httplib::Result res = method == "GET"    ? client->Get(path)
                          : method == "POST" ? client->Post(path, body.dump(), "application/json")
                                             : client->Put(path, body.dump(), "application/json");
    REQUIRE(res);
    status = res->status;
    CHECK(res->get_header_value("Content-Type") == "application/json");
    Json j = Json::parse(res->body);
    CHECK(j.at("schema_version") == kSchemaVersion);
    return j;
  }
  Json wait_finished(const std::string& run) {
    for (int i = 0; i < 600; ++i) {
      int status = 0;
      Json j = call("GET", "/runs/" + run, {}, status);
      REQUIRE(status == 200);
      if (j["state"] == "finished") return j;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    FAIL("run did not finish");
    return {};
  }
  ApiServer server;
  int port = 0;
  std::thread thread;
  std::unique_ptr<httplib::Client> client;
};

ServerConfig config_with_corpus(const std::string& tag) {
  fs::path dir = scratch("server_" + tag);
  fs::create_directories(dir / "problems");
  std::ofstream(dir / "problems" / "question_fenchel_young.problem")
      << "id: question_fenchel_young\nstatement: " << kFenchel << "\nexpected: proved\ntags: case-study\n";
  std::ofstream(dir / "problems" / "question_x_squared.problem")
      << "id: question_x_squared\nstatement: x^2 \\ll x, x \\geq 1\nexpected: disproved\n";
  ServerConfig cfg;
  cfg.problems_dir = (dir / "problems").string();
  cfg.runs_dir = (dir / "runs").string();
  cfg.base.order = ProposerOrder::HeuristicOnly;
  return cfg;
}

}  // namespace

TEST_CASE("problems are parsed into canonical form or rejected with diagnostics") {
  Running s(config_with_corpus("problems"));
  int status = 0;
  Json j = s.call("POST", "/problems", {{"statement", kFenchel}}, status);
  CHECK(status == 200);
  CHECK(j["kind"] == "inequality");
  CHECK(j["canonical"].get<std::string>().find("\\ll") != std::string::npos);
  CHECK(j["variables"] == Json::array({"x", "y"}));
  Json again = s.call("POST", "/problems", {{"statement", j["canonical"]}}, status);
  CHECK(again["id"] == j["id"]);

  j = s.call("POST", "/problems", {{"statement", "\\sin x \\ll 1, x \\geq 0"}}, status);
  CHECK(status == 400);
  CHECK(j["error"] == "ParseError");
  REQUIRE(j["diagnostics"].size() >= 1);
  CHECK(j["diagnostics"][0]["code"] == "UnsupportedConstruct");

  s.call("POST", "/problems", Json{{"text", 1}}, status);
  CHECK(status == 400);
}

TEST_CASE("the corpus is listed") {
  Running s(config_with_corpus("corpus"));
  int status = 0;
  Json j = s.call("GET", "/corpus", {}, status);
  CHECK(status == 200);
  REQUIRE(j["problems"].size() == 2);
  CHECK(j["problems"][0]["id"] == "question_fenchel_young");
  CHECK(j["problems"][0]["expected"] == "proved");
}

TEST_CASE("a run goes from pending to a proved record with piece results") {
  Running s(config_with_corpus("run"));
  int status = 0;
  Json j = s.call("POST", "/runs", {{"problem_id", "question_fenchel_young"}}, status);
  CHECK(status == 202);
  CHECK(j["state"] == "pending");
  Json rec = s.wait_finished(j["run_id"]);
  CHECK(rec["verdict"]["status"] == "Proved");
  CHECK(rec["verdict"]["C"] == "2");
  REQUIRE(rec["pieces"].size() == 2);
  for (const auto& p : rec["pieces"]) CHECK(p["status"] == "Proved");
  CHECK(rec["coverage"]["status"] == "ProvedCover");
  CHECK(run_record_from_json(rec).verdict.status == VerdictStatus::Proved);

  Json bad = s.call("POST", "/runs", {{"problem_id", "question_fenchel_young"}, {"config", {{"backend", "maple"}}}},
                    status);
  CHECK(status == 400);
  CHECK(bad["error"] == "BadConfig");
  s.call("POST", "/runs", {{"problem_id", "question_fenchel_young"}, {"config", {{"cas_executable", "/bin/sh"}}}},
         status);
  CHECK(status == 400);
  s.call("POST", "/runs", {{"problem_id", "nope"}}, status);
  CHECK(status == 404);
  s.call("GET", "/runs/run-999999", {}, status);
  CHECK(status == 404);
  s.call("GET", "/nowhere", {}, status);
  CHECK(status == 404);
}

TEST_CASE("editing a finished run needs a fork and surfaces a gapped cover") {
  Running s(config_with_corpus("edit"));
  int status = 0;
  Json j = s.call("POST", "/runs", {{"problem_id", "question_fenchel_young"}}, status);
  std::string run = j["run_id"];
  s.wait_finished(run);
  Json edit{{"decomposition", "y \\leq \\log x\ny > 2\\log x"}};
  Json conflict = s.call("PUT", "/runs/" + run + "/decomposition", edit, status);
  CHECK(status == 409);
  CHECK(conflict["error"] == "RunFinished");

  edit["fork"] = true;
  Json forked = s.call("PUT", "/runs/" + run + "/decomposition", edit, status);
  CHECK(status == 202);
  CHECK(forked["forked_from"] == run);
  CHECK(forked["run_id"] != run);
  Json rec = s.wait_finished(forked["run_id"]);
  CHECK(rec["coverage"]["status"] == "NotCover");
  CHECK(rec["coverage"]["witness"].is_object());
  CHECK(rec["verdict"]["status"] == "Unknown");
  bool warned = false;
  for (const auto& w : rec["warnings"]) warned = warned || w.get<std::string>().find("not a cover") != std::string::npos;
  CHECK(warned);

  s.call("PUT", "/runs/" + run + "/decomposition", Json{{"decomposition", "z \\leq 1"}, {"fork", true}}, status);
  CHECK(status == 400);
}

TEST_CASE("finished records persist and re-aggregate on reload") {
  ServerConfig cfg = config_with_corpus("persist");
  std::string first;
  {
    Running s(cfg);
    int status = 0;
    first = s.call("POST", "/runs", {{"problem_id", "question_fenchel_young"}}, status)["run_id"];
    s.call("POST", "/runs", {{"problem_id", "question_x_squared"}}, status);
    s.server.wait_idle();
  }
  Running again(cfg);
  CHECK(again.server.load_mismatches().empty());
  int status = 0;
  Json rec = again.call("GET", "/runs/" + first, {}, status);
  CHECK(status == 200);
  CHECK(rec["verdict"]["status"] == "Proved");
  Json next = again.call("POST", "/runs", {{"problem_id", "question_x_squared"}}, status);
  CHECK(next["run_id"] == "run-000003");
  Json disproved = again.wait_finished(next["run_id"]);
  CHECK(disproved["verdict"]["status"] == "Disproved");
  CHECK(disproved["verdict"]["counterexample"]["point"].contains("x"));
}
