#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace trajagent {

struct ChatMessage {
  enum class Role { kSystem, kUser, kAssistant };
  Role role = Role::kUser;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

std::string_view to_string(ChatMessage::Role role);

struct LlmParams {
  std::string model = "gpt-4o-mini";
  double temperature = 0.2;
  int max_tokens = 2048;
  double timeout_s = 60.0;
  int retry_count = 3;       // total attempts for retryable failures
  double backoff_s = 0.5;    // first retry delay, doubled each time
};

// One completion call. `context` carries the structured inputs the prompt
// was rendered from; the stub backend answers from it.
struct ChatRequest {
  std::string template_name;
  nlohmann::json context = nlohmann::json::object();
  std::vector<ChatMessage> messages;
};

struct CallRecord {
  std::string backend;
  std::string template_name;
  std::vector<ChatMessage> messages;
  std::string reply;
  std::string error;
  double latency_s = 0.0;
  int attempts = 0;
  bool network = false;
};

nlohmann::json to_json(const CallRecord& r);

// Thread-safe request/reply log, optionally mirrored to a JSON-lines file.
class CallLog {
 public:
  explicit CallLog(std::string path = {}) : path_(std::move(path)) {}

  void set_path(std::string path);
  void append(CallRecord record);
  std::vector<CallRecord> records() const;
  std::size_t size() const;
  std::size_t network_calls() const;

 private:
  mutable std::mutex mu_;
  std::string path_;
  std::vector<CallRecord> records_;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string name() const = 0;
  virtual bool uses_network() const = 0;
  // `attempts` receives the number of tries made.
  virtual std::string complete(const ChatRequest& req, const LlmParams& params, int* attempts) = 0;
};

// Deterministic reply table keyed by template name. Scripted replies, when
// queued for a template, are served first in order.
class StubPolicy {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;

  void set(std::string template_name, Handler handler);
  void script(const std::string& template_name, std::vector<std::string> replies);
  bool has(std::string_view template_name) const;
  // Throws Error(kStubMiss).
  std::string reply(const ChatRequest& req);

 private:
  std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
  std::map<std::string, Handler, std::less<>> handlers_;
  std::map<std::string, std::deque<std::string>, std::less<>> scripted_;
};

// Policies for every engine template: keyword task understanding, canned
// Firstly/Then/Lastly thoughts, hill-climbing DA/PO actions, reflection
// notes and a heuristic next-location predictor.
StubPolicy default_stub_policy();

class StubBackend : public ChatBackend {
 public:
  explicit StubBackend(StubPolicy policy = default_stub_policy()) : policy_(std::move(policy)) {}
  std::string name() const override { return "stub"; }
  bool uses_network() const override { return false; }
  std::string complete(const ChatRequest& req, const LlmParams& params, int* attempts) override;
  StubPolicy& policy() { return policy_; }

 private:
  StubPolicy policy_;
};

// Chat-completions endpoint: POST <base_url>/chat/completions.
class HttpBackend : public ChatBackend {
 public:
  HttpBackend(std::string base_url, std::string api_key);
  // TRAJAGENT_LLM_BASE_URL and TRAJAGENT_LLM_API_KEY.
  static std::unique_ptr<HttpBackend> from_env();

  std::string name() const override { return "http"; }
  bool uses_network() const override { return true; }
  // Throws Error(kHttpStatus) for non-retryable statuses and
  // Error(kExhaustedRetries) once retry_count attempts have failed.
  std::string complete(const ChatRequest& req, const LlmParams& params, int* attempts) override;

  static nlohmann::json request_body(const ChatRequest& req, const LlmParams& params);
  // First choice text; throws Error(kLlmFailure) on an unexpected shape.
  static std::string reply_text(const nlohmann::json& body);

 private:
  std::string origin_;  // scheme://host[:port]
  std::string prefix_;  // path under the origin, no trailing slash
  std::string api_key_;
};

// Backend plus parameters plus log.
class LlmClient {
 public:
  LlmClient(std::shared_ptr<ChatBackend> backend, LlmParams params = {},
            std::shared_ptr<CallLog> log = std::make_shared<CallLog>());

  // Throws Error(kValidationFailure) for empty messages and propagates
  // backend errors after logging them.
  std::string complete(const ChatRequest& req);

  ChatBackend& backend() { return *backend_; }
  const LlmParams& params() const { return params_; }
  LlmParams& params() { return params_; }
  CallLog& log() { return *log_; }
  std::shared_ptr<CallLog> log_ptr() const { return log_; }

 private:
  std::shared_ptr<ChatBackend> backend_;
  LlmParams params_;
  std::shared_ptr<CallLog> log_;
};

// "stub" or "http" (configured from the environment, including
// TRAJAGENT_LLM_MODEL). Throws Error(kValidationError) for other names.
LlmClient make_client(std::string_view backend, std::shared_ptr<CallLog> log = std::make_shared<CallLog>());

}  // namespace trajagent
