#include "gem/llm_client.hpp"

#include <chrono>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace gem {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// StubLlmClient
// ---------------------------------------------------------------------------

StubLlmClient::StubLlmClient(const std::string& fixture_path, std::string model)
    : model_(std::move(model)) {
  std::ifstream in(fixture_path);
  if (!in) throw std::runtime_error("cannot open stub LLM fixture: " + fixture_path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson j = ojson::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("response"))
      throw std::runtime_error("stub fixture " + fixture_path + " line " +
                               std::to_string(line_no) +
                               ": expected {\"id\", \"response\"}");
    responses_[j["id"].get<std::string>()] = j["response"].get<std::string>();
  }
}

StubLlmClient::StubLlmClient(std::map<std::string, std::string> responses, std::string model)
    : responses_(std::move(responses)), model_(std::move(model)) {}

LlmResponse StubLlmClient::complete(const LlmRequest& request) {
  calls_.fetch_add(1);
  auto it = responses_.find(request.entity_id);
  if (it == responses_.end())
    return {false, "", "no fixture response for entity '" + request.entity_id + "'"};
  return {true, it->second, ""};
}

// ---------------------------------------------------------------------------
// HttpLlmClient
// ---------------------------------------------------------------------------

HttpLlmClient::HttpLlmClient(HttpLlmOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty())
    throw std::invalid_argument("HttpLlmClient: endpoint not configured");
  // split scheme://host[:port] from the path
  size_t scheme = options_.endpoint.find("://");
  size_t path_start = scheme == std::string::npos
                          ? options_.endpoint.find('/')
                          : options_.endpoint.find('/', scheme + 3);
  if (path_start == std::string::npos) {
    host_base_ = options_.endpoint;
    path_ = "/v1/chat/completions";
  } else {
    host_base_ = options_.endpoint.substr(0, path_start);
    path_ = options_.endpoint.substr(path_start);
  }
}

void HttpLlmClient::rate_limit() {
  if (options_.min_interval_ms <= 0) return;
  std::lock_guard<std::mutex> lock(interval_mutex_);
  const long long now = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now().time_since_epoch())
                            .count();
  const long long wait = last_call_ms_ + options_.min_interval_ms - now;
  if (wait > 0) std::this_thread::sleep_for(std::chrono::milliseconds(wait));
  last_call_ms_ = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now().time_since_epoch())
                      .count();
}

LlmResponse HttpLlmClient::complete(const LlmRequest& request) {
  ojson body;
  body["model"] = options_.model;
  body["temperature"] = options_.temperature;
  auto& messages = body["messages"];
  messages = ojson::array();
  for (const auto& m : request.messages) {
    ojson jm;
    jm["role"] = m.role;
    jm["content"] = m.content;
    messages.push_back(std::move(jm));
  }
  const std::string payload = body.dump();

  std::string last_error = "no attempts made";
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(
          std::chrono::milliseconds(options_.backoff_base_ms * (1LL << (attempt - 1))));
    rate_limit();

    httplib::Client client(host_base_);
    client.set_read_timeout(options_.timeout_seconds, 0);
    client.set_connection_timeout(options_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!options_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + options_.api_key);

    calls_.fetch_add(1);
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    ojson j = ojson::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
      last_error = "malformed completion response";
      continue;
    }
    const auto& choice = j["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content")) {
      last_error = "completion response lacks message content";
      continue;
    }
    return {true, choice["message"]["content"].get<std::string>(), ""};
  }
  return {false, "", last_error};
}

}  // namespace gem
