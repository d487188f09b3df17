#include "decomp/server.hpp"

#include "decomp/hash.hpp"

#include <httplib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

namespace decomp {

namespace fs = std::filesystem;

namespace {

Json error_body(const std::string& code, const std::string& message) {
  return {{"schema_version", kSchemaVersion}, {"error", code}, {"message", message}};
}

Json diagnostics_json(const std::vector<Diagnostic>& ds) {
  Json out = Json::array();
  for (const auto& d : ds)
    out.push_back({{"position", d.position},
                   {"code", d.code},
                   {"message", d.message},
                   {"severity", d.severity == Severity::Error ? "error" : "warning"}});
  return out;
}

Json problem_json(const StoredProblem& p) {
  const Region& r = p.problem.is_series() ? p.problem.series().params : p.problem.inequality().region;
  Json vars = Json::array();
  for (const auto& v : r.var_names()) vars.push_back(v);
  Json j{{"schema_version", kSchemaVersion},
         {"id", p.id},
         {"statement", p.statement},
         {"canonical", render_canonical(p.problem)},
         {"kind", p.problem.is_series() ? "series" : "inequality"},
         {"variables", vars},
         {"from_corpus", p.from_corpus}};
  if (p.problem.is_series()) j["index"] = p.problem.series().index;
  if (!p.expected.empty()) j["expected"] = p.expected;
  if (!p.tags.empty()) j["tags"] = p.tags;
  return j;
}

std::optional<Json> parse_body(const std::string& body) {
  try {
    Json j = Json::parse(body.empty() ? "{}" : body);
    if (!j.is_object()) return std::nullopt;
    return j;
  } catch (const Json::exception&) {
    return std::nullopt;
  }
}

std::string safe_file_name(const std::string& id) {
  std::string out;
  for (char c : id) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ? c : '_');
  return out;
}

}  // namespace

bool is_server_only_field(const std::string& key) {
  static const std::set<std::string> fields{"cas_executable", "replay_path", "llm_endpoint"};
  return fields.count(key) > 0;
}

std::string problem_id_for(const ProblemStatement& p) { return "p_" + sha256_hex(problem_key(p)).substr(0, 12); }

ApiServer::ApiServer(ServerConfig cfg) : cfg_(std::move(cfg)), http_(std::make_unique<httplib::Server>()) {
  if (!cfg_.problems_dir.empty()) {
    for (const auto& e : load_corpus(cfg_.problems_dir)) {
      ParseOptions po;
      po.allow_unconstrained = e.allow_unconstrained;
      auto r = parse_problem(e.statement, po);
      if (!r.ok()) continue;
      problems_[e.id] = StoredProblem{e.id, e.statement, *r.problem, true, e.expected, e.tags};
    }
  }
  load_runs();
  routes();
}

ApiServer::~ApiServer() {
  stop();
  std::vector<std::thread> ws;
  {
    std::lock_guard<std::mutex> lock(mu_);
    ws.swap(workers_);
  }
  for (auto& w : ws)
    if (w.joinable()) w.join();
}

int ApiServer::bind_any_port(const std::string& host) { return http_->bind_to_any_port(host); }
bool ApiServer::bind(const std::string& host, int port) { return http_->bind_to_port(host, port); }
void ApiServer::serve() { http_->listen_after_bind(); }
void ApiServer::stop() { http_->stop(); }

void ApiServer::wait_idle() {
  std::unique_lock<std::mutex> lock(mu_);
  idle_cv_.wait(lock, [&] { return active_ == 0; });
}

void ApiServer::routes() {
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(2), "application/json");
  };
  http_->Post("/problems", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, post_problem(req.body));
  });
  http_->Get("/corpus", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, get_corpus()); });
  http_->Post("/runs", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, post_run(req.body));
  });
  http_->Get(R"(/runs/([A-Za-z0-9_-]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_run(req.matches[1]));
  });
  http_->Put(R"(/runs/([A-Za-z0-9_-]+)/decomposition)",
             [this, reply](const httplib::Request& req, httplib::Response& res) {
               reply(res, put_decomposition(req.matches[1], req.body));
             });
  http_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    std::string code = res.status == 404 ? "NotFound" : "HttpError";
    res.set_content(error_body(code, "HTTP " + std::to_string(res.status)).dump(2), "application/json");
  });
  http_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(error_body("InternalError", what).dump(2), "application/json");
  });
}

ApiServer::Response ApiServer::post_problem(const std::string& body) {
  auto j = parse_body(body);
  if (!j || !j->contains("statement") || !(*j)["statement"].is_string())
    return {400, error_body("BadRequest", "expected {\"statement\": \"...\"}")};
  std::string text = (*j)["statement"].get<std::string>();
  ParseOptions po;
  po.allow_unconstrained = j->value("allow_unconstrained", false);
  auto r = parse_problem(text, po);
  if (!r.ok()) {
    Json e = error_body("ParseError", r.diagnostics.empty() ? "parse failed" : r.diagnostics.front().message);
    e["diagnostics"] = diagnostics_json(r.diagnostics);
    return {400, e};
  }
  StoredProblem p{problem_id_for(*r.problem), text, *r.problem, false, "", {}};
  {
    std::lock_guard<std::mutex> lock(mu_);
    problems_.emplace(p.id, p);
  }
  Json out = problem_json(p);
  out["diagnostics"] = diagnostics_json(r.diagnostics);
  return {200, out};
}

ApiServer::Response ApiServer::get_corpus() {
  Json list = Json::array();
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& [id, p] : problems_) {
    if (!p.from_corpus) continue;
    Json e = problem_json(p);
    e.erase("schema_version");
    list.push_back(e);
  }
  return {200, {{"schema_version", kSchemaVersion}, {"problems", list}}};
}

ApiServer::Response ApiServer::post_run(const std::string& body) {
  auto j = parse_body(body);
  if (!j || !j->contains("problem_id") || !(*j)["problem_id"].is_string())
    return {400, error_body("BadRequest", "expected {\"problem_id\": \"...\", \"config\": {...}}")};
  Json config = j->value("config", Json::object());
  if (!config.is_object()) return {400, error_body("BadConfig", "config must be an object")};
  for (const auto& [k, v] : config.items())
    if (is_server_only_field(k)) return {400, error_body("BadConfig", "'" + k + "' cannot be set through the API")};
  RunConfig rc;
  try {
    rc = run_config_from_json(config, cfg_.base);
  } catch (const ConfigError& e) {
    return {400, error_body("BadConfig", e.what())};
  }
  StoredProblem p;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = problems_.find((*j)["problem_id"].get<std::string>());
    if (it == problems_.end()) return {404, error_body("UnknownProblem", "no problem with that id")};
    p = it->second;
  }
  std::string id = start_run(p, rc, "");
  return {202, {{"schema_version", kSchemaVersion}, {"run_id", id}, {"state", "pending"}, {"problem_id", p.id}}};
}

ApiServer::Response ApiServer::get_run(const std::string& id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = runs_.find(id);
  if (it == runs_.end()) return {404, error_body("UnknownRun", "no run with that id")};
  return {200, to_json(it->second)};
}

ApiServer::Response ApiServer::put_decomposition(const std::string& id, const std::string& body) {
  auto j = parse_body(body);
  if (!j || !j->contains("decomposition") || !(*j)["decomposition"].is_string())
    return {400, error_body("BadRequest", "expected {\"decomposition\": \"...\"}")};
  bool fork = j->value("fork", false);
  RunConfig rc;
  StoredProblem p;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = runs_.find(id);
    if (it == runs_.end()) return {404, error_body("UnknownRun", "no run with that id")};
    if (it->second.state == "finished" && !fork)
      return {409, error_body("RunFinished", "finished runs are immutable; resend with \"fork\": true")};
    auto pit = problems_.find(it->second.problem_id);
    if (pit == problems_.end()) return {404, error_body("UnknownProblem", "the run's problem is no longer stored")};
    p = pit->second;
    rc = it->second.config;
  }
  std::string text = (*j)["decomposition"].get<std::string>();
  try {
    parse_decomposition_text(p.problem, text);
  } catch (const DecomposerError& e) {
    return {400, error_body(e.code, e.what())};
  }
  rc.decomposition = text;
  std::string nid = start_run(p, rc, id);
  return {202, {{"schema_version", kSchemaVersion}, {"run_id", nid}, {"state", "pending"}, {"forked_from", id}}};
}

std::string ApiServer::start_run(const StoredProblem& p, const RunConfig& cfg, const std::string& forked_from) {
  std::lock_guard<std::mutex> lock(mu_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%06zu", next_run_++);
  std::string id = buf;
  RunRecord pending;
  pending.run_id = id;
  pending.problem_id = p.id;
  pending.statement = render_canonical(p.problem);
  pending.series = p.problem.is_series();
  pending.config = cfg;
  pending.state = "pending";
  pending.started = utc_now();
  if (!forked_from.empty()) pending.warnings.push_back("forked from " + forked_from);
  runs_[id] = pending;
  ++active_;
  workers_.emplace_back([this, p, cfg, id, forked_from] {
    PipelineHooks hooks;
    hooks.progress = [&](const RunRecord& snap) {
      std::lock_guard<std::mutex> l(mu_);
      RunRecord r = snap;
      r.run_id = id;
      if (!forked_from.empty()) r.warnings.insert(r.warnings.begin(), "forked from " + forked_from);
      runs_[id] = r;
    };
    RunRecord done;
    try {
      done = prove_pipeline(p.problem, cfg, p.id, hooks);
    } catch (const std::exception& e) {
      {
        std::lock_guard<std::mutex> l(mu_);
        done = runs_[id];
      }
      done.errors.push_back(std::string("pipeline: ") + e.what());
      done.state = "finished";
      done.finished = utc_now();
    }
    done.run_id = id;
    if (!forked_from.empty()) done.warnings.insert(done.warnings.begin(), "forked from " + forked_from);
    persist(done);
    {
      std::lock_guard<std::mutex> l(mu_);
      runs_[id] = done;
      --active_;
    }
    idle_cv_.notify_all();
  });
  return id;
}

void ApiServer::persist(const RunRecord& r) {
  if (cfg_.runs_dir.empty()) return;
  std::mutex* m;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto& slot = store_locks_[r.problem_id];
    if (!slot) slot = std::make_unique<std::mutex>();
    m = slot.get();
  }
  std::lock_guard<std::mutex> lock(*m);
  fs::create_directories(cfg_.runs_dir);
  std::ofstream out(fs::path(cfg_.runs_dir) / (safe_file_name(r.problem_id) + ".jsonl"), std::ios::app);
  out << to_json(r).dump() << "\n";
}

void ApiServer::load_runs() {
  if (cfg_.runs_dir.empty() || !fs::is_directory(cfg_.runs_dir)) return;
  std::size_t highest = 0;
  for (const auto& f : fs::directory_iterator(cfg_.runs_dir)) {
    if (f.path().extension() != ".jsonl") continue;
    std::ifstream in(f.path());
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      RunRecord r = run_record_from_json(Json::parse(line));
      Verdict v = aggregate(r);
      if (v.status != r.verdict.status || v.C != r.verdict.C) mismatches_.push_back(r.run_id);
      std::size_t n = 0;
      if (std::sscanf(r.run_id.c_str(), "run-%zu", &n) == 1) highest = std::max(highest, n);
      runs_[r.run_id] = std::move(r);
    }
  }
  next_run_ = highest + 1;
}

}  // namespace decomp
