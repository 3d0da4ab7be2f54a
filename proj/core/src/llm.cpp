#include "trajagent/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>

#include "trajagent/error.hpp"
#include "trajagent/util.hpp"

namespace trajagent {

using nlohmann::json;

std::string_view to_string(ChatMessage::Role role) {
  switch (role) {
    case ChatMessage::Role::kSystem: return "system";
    case ChatMessage::Role::kUser: return "user";
    case ChatMessage::Role::kAssistant: return "assistant";
  }
  return "user";
}

json to_json(const CallRecord& r) {
  json messages = json::array();
  for (const auto& m : r.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  json j{{"backend", r.backend},         {"template", r.template_name}, {"messages", messages},
         {"reply", r.reply},             {"latency_s", r.latency_s},    {"attempts", r.attempts},
         {"network", r.network}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

void CallLog::set_path(std::string path) {
  std::lock_guard lock(mu_);
  path_ = std::move(path);
}

void CallLog::append(CallRecord record) {
  std::lock_guard lock(mu_);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << to_json(record).dump() << '\n';
  }
  records_.push_back(std::move(record));
}

std::vector<CallRecord> CallLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t CallLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::size_t CallLog::network_calls() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& r : records_) n += r.network ? 1 : 0;
  return n;
}

void StubPolicy::set(std::string template_name, Handler handler) {
  std::lock_guard lock(*mu_);
  handlers_[std::move(template_name)] = std::move(handler);
}

void StubPolicy::script(const std::string& template_name, std::vector<std::string> replies) {
  std::lock_guard lock(*mu_);
  auto& q = scripted_[template_name];
  for (auto& r : replies) q.push_back(std::move(r));
}

bool StubPolicy::has(std::string_view template_name) const {
  std::lock_guard lock(*mu_);
  return handlers_.find(template_name) != handlers_.end();
}

std::string StubPolicy::reply(const ChatRequest& req) {
  Handler handler;
  {
    std::lock_guard lock(*mu_);
    if (auto q = scripted_.find(req.template_name); q != scripted_.end() && !q->second.empty()) {
      std::string r = std::move(q->second.front());
      q->second.pop_front();
      return r;
    }
    auto it = handlers_.find(req.template_name);
    if (it == handlers_.end()) throw Error(ErrorCode::kStubMiss, "no stub policy for template '" + req.template_name + "'");
    handler = it->second;
  }
  return handler(req);
}

std::string StubBackend::complete(const ChatRequest& req, const LlmParams&, int* attempts) {
  if (attempts) *attempts = 1;
  return policy_.reply(req);
}

LlmClient::LlmClient(std::shared_ptr<ChatBackend> backend, LlmParams params, std::shared_ptr<CallLog> log)
    : backend_(std::move(backend)), params_(std::move(params)), log_(std::move(log)) {
  if (!backend_) throw Error(ErrorCode::kValidationError, "llm client needs a backend");
  if (!log_) log_ = std::make_shared<CallLog>();
  if (params_.temperature < 0) throw Error(ErrorCode::kValidationError, "temperature must be >= 0");
  if (params_.retry_count < 0) throw Error(ErrorCode::kValidationError, "retry_count must be >= 0");
}

std::string LlmClient::complete(const ChatRequest& req) {
  if (req.messages.empty()) throw Error(ErrorCode::kValidationFailure, "no messages to send");
  for (const auto& m : req.messages) {
    if (m.content.empty()) throw Error(ErrorCode::kValidationFailure, "empty message content");
  }
  CallRecord rec;
  rec.backend = backend_->name();
  rec.template_name = req.template_name;
  rec.messages = req.messages;
  rec.network = backend_->uses_network();
  const auto start = std::chrono::steady_clock::now();
  try {
    rec.reply = backend_->complete(req, params_, &rec.attempts);
  } catch (const Error& e) {
    rec.error = e.what();
    rec.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log_->append(std::move(rec));
    throw;
  }
  rec.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string reply = rec.reply;
  log_->append(std::move(rec));
  return reply;
}

LlmClient make_client(std::string_view backend, std::shared_ptr<CallLog> log) {
  if (backend == "stub") return LlmClient(std::make_shared<StubBackend>(), LlmParams{"stub"}, std::move(log));
  if (backend == "http") {
    LlmParams params;
    if (const char* model = std::getenv("TRAJAGENT_LLM_MODEL"); model && *model) params.model = model;
    return LlmClient(std::shared_ptr<ChatBackend>(HttpBackend::from_env()), params, std::move(log));
  }
  throw Error(ErrorCode::kValidationError, "unknown backend '" + std::string(backend) + "' (stub|http)");
}

}  // namespace trajagent
