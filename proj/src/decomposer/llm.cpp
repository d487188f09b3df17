#include "decomp/llm.hpp"

#include "decomp/hash.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <regex>
#include <set>
#include <sstream>

namespace decomp {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> reply_lines(const std::string& text) {
  static const std::regex bullet(R"(^(?:[-*]|\d+[.)])\s+)");
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.rfind("```", 0) == 0) continue;
    line = std::regex_replace(line, bullet, "");
    if (line.size() >= 2 && line.front() == '$' && line.back() == '$') line = trim(line.substr(1, line.size() - 2));
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

[[noreturn]] void malformed(const std::string& why) { throw DecomposerError("MalformedReply", why); }

std::string now_utc() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Decomposition parse_decomposition_text(const ProblemStatement& p, const std::string& text) {
  auto lines = reply_lines(text);
  if (lines.empty()) malformed("the reply is empty");
  if (p.is_series()) {
    const auto& s = p.series();
    Breakpoints b;
    for (const auto& line : lines) {
      Expr e;
      try {
        e = parse_expression(line);
      } catch (const std::exception& ex) {
        malformed("breakpoint '" + line + "' does not parse: " + ex.what());
      }
      for (const auto& v : free_vars(e))
        if (!s.params.declares(v) || v == s.index) malformed("breakpoint '" + line + "' uses " + v + ", which is not a parameter");
      b.ladder.push_back(e);
    }
    return {b, "llm"};
  }
  const auto& q = p.inequality();
  RegionCover cover;
  for (const auto& line : lines) {
    std::vector<Constraint> cs;
    try {
      cs = parse_constraints(line);
    } catch (const std::exception& ex) {
      malformed("piece '" + line + "' does not parse: " + ex.what());
    }
    if (cs.empty()) malformed("piece '" + line + "' has no constraints");
    for (const auto& c : cs)
      for (const auto& v : c.vars())
        if (!q.region.declares(v)) malformed("piece '" + line + "' uses undeclared variable " + v);
    cover.pieces.push_back(q.region.with(cs));
  }
  return {cover, "llm"};
}

std::string render_decomposition_text(const ProblemStatement& p, const Decomposition& d) {
  std::string out;
  if (d.is_ladder()) {
    for (const auto& x : d.breakpoints().ladder) out += render_latex(x) + "\n";
    return out;
  }
  std::set<std::string> base;
  for (const auto& c : p.inequality().region.constraints()) base.insert(c.key());
  for (const auto& piece : d.cover().pieces) {
    std::string line;
    for (const auto& c : piece.constraints()) {
      if (base.count(c.key())) continue;
      line += (line.empty() ? "" : ", ") + render_latex(c);
    }
    out += line + "\n";
  }
  return out;
}

ProposerConfig proposer_config_from_env() {
  ProposerConfig cfg;
  std::map<std::string, std::string> dotenv;
  std::ifstream in(".env");
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos || line.rfind('#', 0) == 0) continue;
    std::string v = trim(line.substr(eq + 1));
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
    dotenv[trim(line.substr(0, eq))] = v;
  }
  auto get = [&](const char* name) -> std::string {
    if (const char* v = std::getenv(name)) return v;
    auto it = dotenv.find(name);
    return it == dotenv.end() ? "" : it->second;
  };
  cfg.endpoint = get("DECOMP_LLM_ENDPOINT");
  if (auto m = get("DECOMP_LLM_MODEL"); !m.empty()) cfg.model = m;
  cfg.api_key = get("DECOMP_LLM_API_KEY");
  return cfg;
}

std::atomic<std::size_t> HttpTransport::sent_{0};

HttpTransport::HttpTransport(std::string endpoint, std::string api_key, int timeout_seconds)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_(timeout_seconds) {}

std::size_t HttpTransport::requests_sent() { return sent_.load(); }

Json HttpTransport::send(const Json& request) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint_, m, url)) throw DecomposerError("ProviderError", "bad endpoint URL '" + endpoint_ + "'");
  std::string path = m[2].matched ? m[2].str() : "/";
  httplib::Client cli(m[1].str());
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  ++sent_;
  auto res = cli.Post(path, headers, request.dump(), "application/json");
  if (!res) throw DecomposerError("ProviderError", "request failed: " + httplib::to_string(res.error()));
  if (res->status / 100 != 2)
    throw DecomposerError("ProviderError", "provider answered HTTP " + std::to_string(res->status));
  try {
    return Json::parse(res->body);
  } catch (const std::exception& e) {
    throw DecomposerError("ProviderError", std::string("reply is not JSON: ") + e.what());
  }
}

std::string request_key(const Json& request) { return sha256_hex(request.dump()); }

ReplayTransport::ReplayTransport(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DecomposerError("FixtureMiss", "cannot open replay file " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    Json j = Json::parse(line);
    records_.emplace_back(j.at("request"), j.at("response"));
  }
}

Json ReplayTransport::send(const Json& request) {
  for (const auto& [req, resp] : records_)
    if (req == request) return resp;
  throw DecomposerError("FixtureMiss", "no recorded reply for request " + request_key(request));
}

RecordingTransport::RecordingTransport(Transport& inner, const std::string& path)
    : inner_(inner), out_(path, std::ios::app) {
  if (!out_) throw DecomposerError("ProviderError", "cannot write " + path);
}

Json RecordingTransport::send(const Json& request) {
  Json response = inner_.send(request);
  std::lock_guard<std::mutex> lock(mu_);
  out_ << Json{{"key", request_key(request)}, {"request", request}, {"response", response}}.dump() << "\n";
  out_.flush();
  return response;
}

std::string render_prompt(const std::string& tmpl, const ProblemStatement& p) {
  std::string vars;
  const Region& r = p.is_series() ? p.series().params : p.inequality().region;
  for (const auto& v : r.var_names()) vars += (vars.empty() ? "" : ", ") + v;
  if (p.is_series()) vars += (vars.empty() ? "" : ", ") + std::string("index ") + p.series().index;
  std::string out = tmpl;
  auto fill = [&](const std::string& key, const std::string& value) {
    for (std::size_t at; (at = out.find(key)) != std::string::npos;) out.replace(at, key.size(), value);
  };
  fill("{{kind}}", p.is_series() ? "series" : "inequality");
  fill("{{problem}}", render_canonical(p));
  fill("{{variables}}", vars);
  return out;
}

Json build_request(const ProposerConfig& cfg, const std::string& prompt) {
  return {{"model", cfg.model}, {"temperature", 0}, {"messages", Json::array({{{"role", "user"}, {"content", prompt}}})}};
}

std::string reply_text(const Json& response) {
  if (response.contains("choices") && !response["choices"].empty()) {
    const auto& c = response["choices"][0];
    if (c.contains("message") && c["message"].contains("content")) return c["message"]["content"].get<std::string>();
    if (c.contains("text")) return c["text"].get<std::string>();
  }
  for (const char* k : {"content", "reply", "text"})
    if (response.contains(k) && response[k].is_string()) return response[k].get<std::string>();
  throw DecomposerError("MalformedReply", "provider reply has no text content");
}

Json to_json(const PromptTranscript& t, const ProblemStatement& p) {
  Json j{{"prompt", t.prompt}, {"reply", t.reply}, {"model", t.model}, {"timestamp", t.timestamp}};
  if (t.parsed) {
    j["parsed"] = render_decomposition_text(p, *t.parsed);
  } else {
    j["parsed"] = nullptr;
  }
  if (!t.error.empty()) j["error"] = t.error;
  return j;
}

LlmProposal llm_propose(const ProblemStatement& p, const ProposerConfig& cfg, Transport& transport) {
  std::string tmpl = cfg.prompt_template.empty() ? builtin_prompt_template() : cfg.prompt_template;
  std::string base = render_prompt(tmpl, p);
  std::string prompt = base;
  std::vector<PromptTranscript> log;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    PromptTranscript t;
    t.prompt = prompt;
    t.model = cfg.model;
    t.timestamp = now_utc();
    try {
      t.reply = reply_text(transport.send(build_request(cfg, prompt)));
      Decomposition d = parse_decomposition_text(p, t.reply);
      // The parsed form must survive a render and re-parse unchanged.
      Decomposition again = parse_decomposition_text(p, render_decomposition_text(p, d));
      if (render_decomposition_text(p, again) != render_decomposition_text(p, d))
        throw DecomposerError("MalformedReply", "reply does not re-parse to the same decomposition");
      t.parsed = d;
      log.push_back(t);
      return {d, log};
    } catch (const DecomposerError& e) {
      t.error = e.what();
      log.push_back(t);
      if (e.code != "MalformedReply") throw LlmError(e.code, e.what(), log);
      prompt = base + "\n\nYour previous reply could not be used (" + std::string(e.what()) +
               "). Answer again following <output_format> exactly.";
    }
  }
  throw LlmError("MalformedReply", "no usable reply after " + std::to_string(cfg.max_retries + 1) + " attempts", log);
}

}  // namespace decomp
