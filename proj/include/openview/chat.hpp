#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

#include "openview/jsonl.hpp"
#include "openview/prompts.hpp"

namespace openview {

// Retryable backend failure (rate limit, 5xx, dropped connection).
class TransientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-retryable transport failure, or retries exhausted.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The backend refused to answer.
class ContentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChatMessage {
  Role role = Role::user;
  std::string text;
  std::vector<std::string> png_images;  // encoded PNG bytes
};

inline std::string as_payload(const std::vector<std::uint8_t>& bytes) { return {bytes.begin(), bytes.end()}; }

struct DecodingParams {
  std::optional<double> temperature;
  std::optional<int> max_tokens;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  DecodingParams params;
  std::string trace_id;
};

struct ModelResponse {
  std::string text;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
  double latency_ms = 0.0;
};

// Builds a request from rendered template messages; images go on the last
// user message.
ChatRequest make_request(std::string model, const std::vector<RenderedMessage>& messages,
                         std::vector<std::string> png_images = {}, DecodingParams params = {},
                         std::string trace_id = {});

// Canonical form used for hashing and the replay log. Images are recorded by
// SHA-256, the trace id is left out.
json canonical_request(const ChatRequest& req);
std::string request_hash(const ChatRequest& req);
void check_request(const ChatRequest& req);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ModelResponse complete(const ChatRequest& req) = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

class MockBackend : public ChatBackend {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;

  explicit MockBackend(Handler handler);
  // Keyed by the text of the last user message.
  explicit MockBackend(std::map<std::string, std::string> canned);

  ModelResponse complete(const ChatRequest& req) override;
  [[nodiscard]] std::string name() const override { return "mock"; }

 private:
  Handler handler_;
};

// Serves responses from a replay log written by Gateway.
class ReplayBackend : public ChatBackend {
 public:
  explicit ReplayBackend(const std::filesystem::path& log);
  ModelResponse complete(const ChatRequest& req) override;
  [[nodiscard]] std::string name() const override { return "replay"; }
  [[nodiscard]] std::size_t size() const { return by_hash_.size(); }

 private:
  std::map<std::string, ModelResponse> by_hash_;
};

struct GatewayOptions {
  int max_retries = 3;
  std::vector<std::chrono::milliseconds> backoff = {std::chrono::seconds(1), std::chrono::seconds(4),
                                                     std::chrono::seconds(16)};
  int max_in_flight = 8;
  std::optional<std::filesystem::path> replay_log;
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

class Gateway {
 public:
  explicit Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions opts = {});

  // Thread-safe. Trailing whitespace is the only change made to the text.
  ModelResponse chat(const ChatRequest& req);

  [[nodiscard]] std::uint64_t calls() const { return calls_.load(); }
  [[nodiscard]] std::uint64_t retries() const { return retries_.load(); }
  [[nodiscard]] int max_in_flight() const { return opts_.max_in_flight; }
  [[nodiscard]] int peak_in_flight() const { return peak_.load(); }
  [[nodiscard]] ChatBackend& backend() { return *backend_; }

 private:
  std::shared_ptr<ChatBackend> backend_;
  GatewayOptions opts_;
  std::counting_semaphore<> slots_;
  std::unique_ptr<JsonlWriter> log_;
  std::atomic<std::uint64_t> calls_{0};
  std::atomic<std::uint64_t> retries_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

struct HttpBackendOptions {
  std::string base_url;  // e.g. https://host/v1
  std::string api_key;
  int timeout_s = 300;
};

// OpenAI-compatible chat-completions client.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendOptions opts);
  // Reads OPENVIEW_<ROLE>_ENDPOINT / OPENVIEW_<ROLE>_API_KEY, falling back to
  // OPENVIEW_ENDPOINT / OPENVIEW_API_KEY.
  static HttpBackendOptions options_from_env(const std::string& role);

  ModelResponse complete(const ChatRequest& req) override;
  [[nodiscard]] std::string name() const override { return "http"; }

  static json wire_request(const ChatRequest& req);
  // Extracts choices[0].message.content; throws ContentError on refusals.
  static ModelResponse parse_wire_response(const std::string& body);

 private:
  HttpBackendOptions opts_;
  std::string scheme_host_;
  std::string path_prefix_;
};

}  // namespace openview
