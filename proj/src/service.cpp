#include "openview/service.hpp"

#include <httplib.h>

#include "openview/assembly.hpp"
#include "openview/chat.hpp"
#include "openview/hashing.hpp"
#include "openview/json_repair.hpp"
#include "openview/media.hpp"

namespace openview {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kGrammarSystem =
    "You check English grammar and fluency in multiple-choice questions. "
    "Return a JSON array of strings, one suggested rephrasing per problem found. "
    "Return [] when the text needs no change. Do not alter meaning.";

std::string view_hash(const ViewSpec& v) { return sha256_hex(view_to_json(v).dump()).substr(0, 12); }

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg,
                const std::vector<std::string>& details = {}) {
  json body = {{"error", msg}};
  if (!details.empty()) body["details"] = details;
  send_json(res, status, body);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ReviewError(400, std::string("malformed JSON body: ") + e.what());
  }
}

json summary(const Proposal& p, const ReviewState& s) {
  return {{"id", p.id},
          {"task_type", to_string(p.task)},
          {"question", p.question},
          {"status", to_string(s.status)},
          {"round", s.round},
          {"awaiting_cross_review", s.awaiting_cross_review()}};
}

std::optional<std::string> bearer(const httplib::Request& req) {
  const std::string h = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (h.size() <= prefix.size() || h.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
  return h.substr(prefix.size());
}

}  // namespace

std::string preview_reference(const std::string& proposal_id, const ViewSpec& view) {
  return "/proposals/" + proposal_id + "/preview.png?v=" + view_hash(view);
}

ReviewService::ReviewService(ReviewStore& store, const CorpusStore& corpus, ServiceOptions opts)
    : store_(store), corpus_(corpus), opts_(std::move(opts)), server_(std::make_unique<httplib::Server>()) {
  if (fs::exists(corpus_.records_path())) {
    for (auto& r : corpus_.load()) records_.emplace(r.id, std::move(r));
  }
  routes();
}

ReviewService::~ReviewService() { stop(); }

int ReviewService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

bool ReviewService::serve(const std::string& host, int port) { return server_->listen(host, port); }

void ReviewService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::shared_ptr<const Panorama> ReviewService::panorama(const std::string& panorama_id) {
  std::lock_guard lock(cache_mu_);
  if (const auto it = panoramas_.find(panorama_id); it != panoramas_.end()) return it->second;
  const auto rec = records_.find(panorama_id);
  if (rec == records_.end()) throw ReviewError(404, "no panorama " + panorama_id);
  auto pano = std::make_shared<const Panorama>(corpus_.load_panorama(rec->second));
  panoramas_[panorama_id] = pano;
  return pano;
}

std::vector<std::uint8_t> ReviewService::preview_png(const std::string& proposal_id) {
  const auto [p, state] = store_.get(proposal_id);
  const std::string key = proposal_id + "@" + view_hash(p.view);
  {
    std::lock_guard lock(cache_mu_);
    if (const auto it = previews_.find(key); it != previews_.end()) return it->second;
  }
  const auto pano = panorama(p.provenance.panorama_id);
  ViewSpec v = p.view;
  v.roll = 0.0;
  auto png = encode_png(render_view(pano->pixels, v, opts_.preview_long_edge));
  std::lock_guard lock(cache_mu_);
  previews_[key] = png;
  return png;
}

void ReviewService::routes() {
  auto& s = *server_;

  s.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    if (req.path == "/health") return httplib::Server::HandlerResponse::Unhandled;
    const auto tok = bearer(req);
    if (!tok || !opts_.tokens.count(*tok)) {
      send_error(res, 401, "missing or unknown bearer token");
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const ReviewError& e) {
      send_error(res, e.http_status(), e.what(), e.details());
    } catch (const AssemblyError& e) {
      json body = {{"error", e.what()}, {"constraint", e.constraint()}};
      send_json(res, 422, body);
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    } catch (...) {
      send_error(res, 500, "unknown error");
    }
  });

  auto reviewer = [this](const httplib::Request& req) { return opts_.tokens.at(*bearer(req)); };

  s.Get("/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });

  s.Get(R"(/panoramas/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto rec = records_.find(id);
    if (rec == records_.end()) throw ReviewError(404, "no panorama " + id);
    res.set_content(read_text_file(corpus_.root() / rec->second.storage_path), "image/png");
  });

  s.Get("/proposals", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<ReviewStatus> status;
    if (req.has_param("status")) status = parse_review_status(req.get_param_value("status"));
    json list = json::array();
    for (const auto& [p, st] : store_.list(status)) list.push_back(summary(p, st));
    send_json(res, 200, {{"proposals", list}});
  });

  s.Get(R"(/proposals/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto [p, st] = store_.get(req.matches[1]);
    send_json(res, 200,
              {{"proposal", to_json(p)}, {"review", to_json(st)}, {"preview", preview_reference(p.id, p.view)}});
  });

  s.Put(R"(/proposals/([^/]+)/view)", [this, reviewer](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const json body = parse_body(req);
    const ViewSpec next = parse_view_edit(body.contains("view") ? body["view"] : body, store_.get(id).first.view);
    const bool changed = store_.update_view(id, next, reviewer(req));
    const auto [p, st] = store_.get(id);
    send_json(res, 200, {{"changed", changed}, {"preview", preview_reference(id, p.view)}, {"review", to_json(st)}});
  });

  s.Put(R"(/proposals/([^/]+)/fields)", [this, reviewer](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const json body = parse_body(req);
    const ReviewState st = store_.update_fields(id, body.contains("fields") ? body["fields"] : body, reviewer(req));
    send_json(res, 200, {{"proposal", to_json(store_.get(id).first)}, {"review", to_json(st)}});
  });

  s.Post(R"(/proposals/([^/]+)/verdict)", [this, reviewer](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const json body = parse_body(req);
    if (!body.contains("verdict") || !body["verdict"].is_string()) throw ReviewError(422, "verdict is required");
    const VerdictKind v = parse_verdict_kind(body["verdict"].get<std::string>());
    const ReviewState st = store_.record_verdict(id, reviewer(req), v, body.value("edits", json()));
    send_json(res, 200, {{"review", to_json(st)}});
  });

  s.Get(R"(/proposals/([^/]+)/preview\.png)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto png = preview_png(req.matches[1]);
    res.set_content(std::string(png.begin(), png.end()), "image/png");
    res.set_header("ETag", "\"" + sha256_hex(std::span<const std::uint8_t>(png)).substr(0, 16) + "\"");
  });

  s.Post(R"(/proposals/([^/]+)/grammar)", [this](const httplib::Request& req, httplib::Response& res) {
    if (!opts_.grammar) throw ReviewError(501, "grammar check is not configured");
    const auto [p, st] = store_.get(req.matches[1]);
    std::string text = "Question: " + p.question;
    for (int i = 0; i < 5; ++i) text += "\nOption " + std::string(1, kOptionLetters[i]) + ": " + p.options[i];
    const std::string trace = "grammar/" + p.id;
    const ChatRequest creq = make_request(
        opts_.grammar_model, {{Role::system, std::string(kGrammarSystem)}, {Role::user, text}}, {},
        DecodingParams{0.0, std::nullopt}, trace);
    const auto out = parse_json_with_repair(opts_.grammar->chat(creq).text, schemas::kStringArray,
                                            {opts_.grammar, opts_.grammar_model, trace});
    send_json(res, 200, {{"suggestions", out.value}, {"applied", false}});
  });

  s.Post("/benchmark/assemble", [this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const BalanceSpec spec = balance_spec_from_json(body);
    AugmentationPolicy policy = opts_.augmentation;
    policy.copies = body.value("copies", policy.copies);
    policy.shuffle = body.value("shuffle", policy.shuffle);
    policy.jitter_max_deg = body.value("jitter_max_deg", policy.jitter_max_deg);
    policy.seed = body.value("seed", policy.seed);
    try {
      check_policy(policy);
    } catch (const ConfigError& e) {
      throw ReviewError(422, e.what());
    }
    std::vector<Proposal> pool;
    for (const auto& p : store_.accepted()) {
      for (auto& v : augment(p, policy)) pool.push_back(std::move(v));
    }
    std::map<std::string, SceneLabel> scenes;
    for (const auto& [id, r] : records_)
      if (r.scene) scenes[id] = *r.scene;
    const AssemblyReport rep = assemble_benchmark(pool, spec, scenes);
    std::vector<json> lines;
    for (const auto& item : rep.items) lines.push_back(to_json(item));
    fs::create_directories(opts_.benchmark_dir);
    const fs::path out = opts_.benchmark_dir / "benchmark.jsonl";
    write_jsonl(out, lines);
    json letters = json::object();
    for (const auto& [k, v] : rep.letters) letters[std::string(1, k)] = v;
    send_json(res, 200,
              {{"count", rep.items.size()},
               {"letters", letters},
               {"letter_spread", rep.letter_spread()},
               {"scenes", rep.scenes},
               {"contextual", rep.contextual},
               {"directional", rep.directional},
               {"pool", pool.size()},
               {"path", out.string()}});
  });
}

}  // namespace openview
