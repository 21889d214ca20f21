#include <httplib.h>

#include <cstdlib>

#include "openview/chat.hpp"
#include "openview/hashing.hpp"

namespace openview {

namespace {

std::string env_or(const std::string& name, const std::string& fallback) {
  const char* v = std::getenv(name.c_str());
  return v && *v ? std::string(v) : fallback;
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendOptions opts) : opts_(std::move(opts)) {
  const std::string& url = opts_.base_url;
  const auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos) throw ConfigError("backend endpoint must be an http(s) URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

HttpBackendOptions HttpBackend::options_from_env(const std::string& role) {
  HttpBackendOptions o;
  const std::string r = upper(role);
  o.base_url = env_or("OPENVIEW_" + r + "_ENDPOINT", env_or("OPENVIEW_ENDPOINT", ""));
  o.api_key = env_or("OPENVIEW_" + r + "_API_KEY", env_or("OPENVIEW_API_KEY", ""));
  if (o.base_url.empty()) throw ConfigError("no endpoint configured for role " + role + " (set OPENVIEW_ENDPOINT)");
  return o;
}

json HttpBackend::wire_request(const ChatRequest& req) {
  json msgs = json::array();
  for (const auto& m : req.messages) {
    if (m.png_images.empty()) {
      msgs.push_back({{"role", to_string(m.role)}, {"content", m.text}});
      continue;
    }
    json parts = json::array();
    if (!m.text.empty()) parts.push_back({{"type", "text"}, {"text", m.text}});
    for (const auto& img : m.png_images) {
      parts.push_back({{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(img)}}}});
    }
    msgs.push_back({{"role", to_string(m.role)}, {"content", parts}});
  }
  json body = {{"model", req.model}, {"messages", msgs}};
  if (req.params.temperature) body["temperature"] = *req.params.temperature;
  if (req.params.max_tokens) body["max_tokens"] = *req.params.max_tokens;
  return body;
}

ModelResponse HttpBackend::parse_wire_response(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string("malformed completion body: ") + e.what());
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty())
    throw TransportError("completion has no choices");
  const json& choice = doc["choices"][0];
  const json& msg = choice.value("message", json::object());
  if (choice.value("finish_reason", "") == "content_filter") throw ContentError("backend refused: content_filter");
  if (msg.contains("refusal") && msg["refusal"].is_string()) throw ContentError("backend refused: " + msg["refusal"].get<std::string>());
  if (!msg.contains("content") || !msg["content"].is_string()) throw ContentError("completion has no text content");
  ModelResponse r;
  r.text = msg["content"].get<std::string>();
  if (doc.contains("usage") && doc["usage"].is_object()) {
    const json& u = doc["usage"];
    if (u.contains("prompt_tokens") && u["prompt_tokens"].is_number_integer()) r.prompt_tokens = u["prompt_tokens"];
    if (u.contains("completion_tokens") && u["completion_tokens"].is_number_integer())
      r.completion_tokens = u["completion_tokens"];
  }
  return r;
}

ModelResponse HttpBackend::complete(const ChatRequest& req) {
  httplib::Client cli(scheme_host_);
  cli.set_connection_timeout(30);
  cli.set_read_timeout(opts_.timeout_s);
  cli.set_write_timeout(opts_.timeout_s);
  httplib::Headers headers;
  if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);
  auto res = cli.Post(path_prefix_ + "/chat/completions", headers, wire_request(req).dump(), "application/json");
  if (!res) throw TransientError("http: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) throw TransientError("http status " + std::to_string(res->status));
  if (res->status >= 400) {
    if (res->body.find("content_filter") != std::string::npos || res->body.find("content_policy") != std::string::npos)
      throw ContentError("backend refused: " + res->body.substr(0, 200));
    throw TransportError("http status " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  return parse_wire_response(res->body);
}

}  // namespace openview
