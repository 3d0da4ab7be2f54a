#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "trajagent/error.hpp"
#include "trajagent/llm.hpp"

namespace trajagent {

using nlohmann::json;

HttpBackend::HttpBackend(std::string base_url, std::string api_key) : api_key_(std::move(api_key)) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kValidationError, "base url '" + base_url + "' lacks a scheme");
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  origin_ = base_url.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

std::unique_ptr<HttpBackend> HttpBackend::from_env() {
  const char* base = std::getenv("TRAJAGENT_LLM_BASE_URL");
  const char* key = std::getenv("TRAJAGENT_LLM_API_KEY");
  if (!base || !*base) throw Error(ErrorCode::kLlmFailure, "TRAJAGENT_LLM_BASE_URL is not set");
  return std::make_unique<HttpBackend>(base, key ? key : "");
}

json HttpBackend::request_body(const ChatRequest& req, const LlmParams& params) {
  json messages = json::array();
  for (const auto& m : req.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  return json{{"model", params.model},
              {"messages", messages},
              {"temperature", params.temperature},
              {"max_tokens", params.max_tokens}};
}

std::string HttpBackend::reply_text(const json& body) {
  try {
    const auto& content = body.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
  } catch (const json::exception&) {
  }
  throw Error(ErrorCode::kLlmFailure, "unexpected completion shape");
}

std::string HttpBackend::complete(const ChatRequest& req, const LlmParams& params, int* attempts) {
  httplib::Client client(origin_);
  const auto whole = std::chrono::duration<double>(params.timeout_s);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(whole);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(whole - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const std::string body = request_body(req, params).dump();
  const int max_attempts = std::max(1, params.retry_count);
  double delay = params.backoff_s;
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempts) *attempts = attempt;
    auto res = client.Post(prefix_ + "/chat/completions", headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      json parsed;
      try {
        parsed = json::parse(res->body);
      } catch (const json::exception&) {
        throw Error(ErrorCode::kLlmFailure, "completion body is not JSON");
      }
      return reply_text(parsed);
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      throw Error(ErrorCode::kHttpStatus, std::to_string(res->status));
    }
    if (attempt < max_attempts && delay > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      delay *= 2;
    }
  }
  throw Error(ErrorCode::kExhaustedRetries, std::to_string(max_attempts) + " attempt(s), last: " + last_error);
}

}  // namespace trajagent
