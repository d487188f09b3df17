#pragma once

// Model-backed decomposition proposals. The proposer talks to a provider only
// through a Transport, so tests and replays never touch the network.

#include "decomp/decomposer.hpp"
#include "decomp/json_io.hpp"

#include <atomic>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace decomp {

struct ProposerConfig {
  std::string endpoint;  // chat-completions style URL
  std::string model = "default";
  std::string api_key;
  int max_retries = 2;  // re-prompts after a malformed reply
  int timeout_seconds = 60;
  std::string prompt_template;  // empty: the built-in template
};

/// Reads DECOMP_LLM_ENDPOINT, DECOMP_LLM_MODEL and DECOMP_LLM_API_KEY, then a
/// `.env` file in the working directory for any still unset.
ProposerConfig proposer_config_from_env();

class Transport {
 public:
  virtual ~Transport() = default;
  /// Sends one request body and returns the provider's JSON reply. Throws
  /// DecomposerError (ProviderError, FixtureMiss).
  virtual Json send(const Json& request) = 0;
};

class HttpTransport : public Transport {
 public:
  HttpTransport(std::string endpoint, std::string api_key, int timeout_seconds = 60);
  Json send(const Json& request) override;
  /// Requests issued by every HttpTransport in this process.
  static std::size_t requests_sent();

 private:
  std::string endpoint_, api_key_;
  int timeout_;
  static std::atomic<std::size_t> sent_;
};

/// Answers from a JSONL file of {"key", "request", "response"} records.
class ReplayTransport : public Transport {
 public:
  explicit ReplayTransport(const std::string& path);
  Json send(const Json& request) override;
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<std::pair<Json, Json>> records_;
};

/// Forwards to another transport and appends every exchange to a JSONL file.
class RecordingTransport : public Transport {
 public:
  RecordingTransport(Transport& inner, const std::string& path);
  Json send(const Json& request) override;

 private:
  Transport& inner_;
  std::ofstream out_;
  std::mutex mu_;
};

/// Stable identity of a request body.
std::string request_key(const Json& request);

struct PromptTranscript {
  std::string prompt;
  std::string reply;
  std::optional<Decomposition> parsed;
  std::string model;
  std::string timestamp;  // UTC, ISO 8601
  std::string error;      // parse failure of this reply, if any
};

Json to_json(const PromptTranscript& t, const ProblemStatement& p);

const char* builtin_prompt_template();
std::string render_prompt(const std::string& tmpl, const ProblemStatement& p);
Json build_request(const ProposerConfig& cfg, const std::string& prompt);
/// Text content of a provider reply.
std::string reply_text(const Json& response);

struct LlmProposal {
  Decomposition decomposition;
  std::vector<PromptTranscript> transcripts;
};

class LlmError : public DecomposerError {
 public:
  LlmError(std::string code, const std::string& message, std::vector<PromptTranscript> t)
      : DecomposerError(std::move(code), message), transcripts(std::move(t)) {}
  std::vector<PromptTranscript> transcripts;
};

/// Prompts for a decomposition, re-prompting up to cfg.max_retries times on
/// a malformed reply. Throws LlmError (MalformedReply, ProviderError,
/// FixtureMiss).
LlmProposal llm_propose(const ProblemStatement& p, const ProposerConfig& cfg, Transport& transport);

}  // namespace decomp
