#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace gem {

struct LlmMessage {
  std::string role;
  std::string content;
};

struct LlmRequest {
  std::string entity_id;  // used by the stub client to look up fixtures
  std::vector<LlmMessage> messages;
};

struct LlmResponse {
  bool ok = false;
  std::string content;
  std::string error;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual LlmResponse complete(const LlmRequest& request) = 0;
  virtual std::string model_name() const = 0;
  // Completed upstream calls (fixture lookups / HTTP round trips); cache hits
  // never reach the client.
  virtual long call_count() const = 0;
};

// Offline client reading canned responses from a JSON-lines fixture file:
// {"id": "<entity id>", "response": "<raw text>"}. Thread-safe.
class StubLlmClient : public LlmClient {
 public:
  explicit StubLlmClient(const std::string& fixture_path, std::string model = "stub");
  // In-memory variant for tests.
  explicit StubLlmClient(std::map<std::string, std::string> responses,
                         std::string model = "stub");

  LlmResponse complete(const LlmRequest& request) override;
  std::string model_name() const override { return model_; }
  long call_count() const override { return calls_.load(); }

 private:
  std::map<std::string, std::string> responses_;
  std::string model_;
  std::atomic<long> calls_{0};
};

struct HttpLlmOptions {
  std::string endpoint;  // http://host[:port]/v1/chat/completions
  std::string api_key;
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;  // deterministic augmentation
  int max_attempts = 3;
  int backoff_base_ms = 250;
  int min_interval_ms = 0;  // simple rate limit between calls
  int timeout_seconds = 60;
};

// Chat-completions client with bounded retries, exponential backoff and an
// optional minimum interval between calls.
class HttpLlmClient : public LlmClient {
 public:
  explicit HttpLlmClient(HttpLlmOptions options);

  LlmResponse complete(const LlmRequest& request) override;
  std::string model_name() const override { return options_.model; }
  long call_count() const override { return calls_.load(); }

 private:
  void rate_limit();

  HttpLlmOptions options_;
  std::string host_base_;  // scheme://host:port
  std::string path_;
  std::atomic<long> calls_{0};
  std::mutex interval_mutex_;
  long long last_call_ms_ = 0;
};

}  // namespace gem
