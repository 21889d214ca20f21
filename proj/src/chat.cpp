#include "openview/chat.hpp"

#include <thread>

#include "openview/hashing.hpp"

namespace openview {

namespace fs = std::filesystem;

ChatRequest make_request(std::string model, const std::vector<RenderedMessage>& messages,
                         std::vector<std::string> png_images, DecodingParams params, std::string trace_id) {
  ChatRequest req;
  req.model = std::move(model);
  req.params = params;
  req.trace_id = std::move(trace_id);
  for (const auto& m : messages) req.messages.push_back({m.role, m.content, {}});
  if (!png_images.empty()) {
    for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
      if (it->role == Role::user) {
        it->png_images = std::move(png_images);
        return req;
      }
    }
    req.messages.push_back({Role::user, "", std::move(png_images)});
  }
  return req;
}

json canonical_request(const ChatRequest& req) {
  json msgs = json::array();
  for (const auto& m : req.messages) {
    json images = json::array();
    for (const auto& img : m.png_images) images.push_back(sha256_hex(img));
    msgs.push_back({{"role", to_string(m.role)}, {"text", m.text}, {"images", images}});
  }
  json params = json::object();
  if (req.params.temperature) params["temperature"] = *req.params.temperature;
  if (req.params.max_tokens) params["max_tokens"] = *req.params.max_tokens;
  return {{"model", req.model}, {"messages", msgs}, {"params", params}};
}

std::string request_hash(const ChatRequest& req) { return sha256_hex(canonical_request(req).dump()); }

void check_request(const ChatRequest& req) {
  if (req.messages.empty()) throw ConfigError("chat request has no messages");
  for (std::size_t i = 1; i < req.messages.size(); ++i) {
    if (req.messages[i].role == Role::system) throw ConfigError("system message must come first");
  }
}

MockBackend::MockBackend(Handler handler) : handler_(std::move(handler)) {}

MockBackend::MockBackend(std::map<std::string, std::string> canned)
    : handler_([canned = std::move(canned)](const ChatRequest& req) -> std::string {
        for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
          if (it->role != Role::user) continue;
          const auto hit = canned.find(it->text);
          if (hit != canned.end()) return hit->second;
          break;
        }
        throw ContentError("mock: no canned response");
      }) {}

ModelResponse MockBackend::complete(const ChatRequest& req) {
  ModelResponse r;
  r.text = handler_(req);
  return r;
}

ReplayBackend::ReplayBackend(const fs::path& log) {
  for (const auto& rec : read_jsonl(log)) {
    ModelResponse r;
    const auto& resp = rec.at("response");
    r.text = resp.at("text").get<std::string>();
    if (resp.contains("prompt_tokens") && !resp["prompt_tokens"].is_null()) r.prompt_tokens = resp["prompt_tokens"];
    if (resp.contains("completion_tokens") && !resp["completion_tokens"].is_null())
      r.completion_tokens = resp["completion_tokens"];
    // Later entries win, matching a log appended to across runs.
    by_hash_[rec.at("request_hash").get<std::string>()] = std::move(r);
  }
}

ModelResponse ReplayBackend::complete(const ChatRequest& req) {
  const auto it = by_hash_.find(request_hash(req));
  if (it == by_hash_.end()) throw TransportError("replay: no logged response for request " + request_hash(req));
  return it->second;
}

namespace {

void rstrip(std::string& s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\n' || s.back() == '\r' || s.back() == '\t')) s.pop_back();
}

struct SlotGuard {
  std::counting_semaphore<>& sem;
  std::atomic<int>& in_flight;
  SlotGuard(std::counting_semaphore<>& s, std::atomic<int>& n, std::atomic<int>& peak) : sem(s), in_flight(n) {
    sem.acquire();
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
  }
  ~SlotGuard() {
    --in_flight;
    sem.release();
  }
};

}  // namespace

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions opts)
    : backend_(std::move(backend)), opts_(std::move(opts)), slots_(std::max(1, opts_.max_in_flight)) {
  if (!backend_) throw ConfigError("gateway needs a backend");
  if (opts_.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (opts_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (!opts_.sleep) opts_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (opts_.replay_log) log_ = std::make_unique<JsonlWriter>(*opts_.replay_log);
}

ModelResponse Gateway::chat(const ChatRequest& req) {
  check_request(req);
  ++calls_;
  ModelResponse resp;
  std::string last_error;
  bool ok = false;
  for (int attempt = 0; attempt <= opts_.max_retries; ++attempt) {
    if (attempt > 0) {
      ++retries_;
      const auto& b = opts_.backoff;
      if (!b.empty()) opts_.sleep(b[std::min<std::size_t>(attempt - 1, b.size() - 1)]);
    }
    try {
      SlotGuard guard(slots_, in_flight_, peak_);
      const auto t0 = std::chrono::steady_clock::now();
      resp = backend_->complete(req);
      resp.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      ok = true;
      break;
    } catch (const TransientError& e) {
      last_error = e.what();
    }
  }
  if (!ok) {
    throw TransportError(backend_->name() + ": retries exhausted after " + std::to_string(opts_.max_retries + 1) +
                         " attempts: " + last_error);
  }
  rstrip(resp.text);
  if (log_) {
    json r = {{"text", resp.text}, {"latency_ms", resp.latency_ms}};
    r["prompt_tokens"] = resp.prompt_tokens ? json(*resp.prompt_tokens) : json(nullptr);
    r["completion_tokens"] = resp.completion_tokens ? json(*resp.completion_tokens) : json(nullptr);
    log_->append({{"trace_id", req.trace_id},
                  {"request_hash", request_hash(req)},
                  {"backend", backend_->name()},
                  {"request", canonical_request(req)},
                  {"response", r}});
  }
  return resp;
}

}  // namespace openview
