#include "openview/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "openview/errors.hpp"

namespace openview {

namespace fs = std::filesystem;

namespace {

class TomlLine {
 public:
  TomlLine(std::string_view text, int line) : s_(text), line_(line) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
  }

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }
  [[nodiscard]] bool at_end() {
    skip_ws();
    return i_ >= s_.size() || s_[i_] == '#';
  }
  [[nodiscard]] char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }

  std::string key() {
    skip_ws();
    if (peek() == '"') return basic_string();
    const std::size_t b = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '-')) ++i_;
    if (b == i_) fail("expected a key");
    return std::string(s_.substr(b, i_ - b));
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{key()};
    skip_ws();
    while (peek() == '.') {
      ++i_;
      parts.push_back(key());
      skip_ws();
    }
    return parts;
  }

  json value() {
    skip_ws();
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (s_.substr(i_, 4) == "true") {
      i_ += 4;
      return true;
    }
    if (s_.substr(i_, 5) == "false") {
      i_ += 5;
      return false;
    }
    return number();
  }

 private:
  std::string basic_string() {
    ++i_;
    std::string out;
    while (i_ < s_.size() && s_[i_] != '"') {
      char c = s_[i_++];
      if (c == '\\') {
        if (i_ >= s_.size()) fail("unterminated escape");
        const char e = s_[i_++];
        switch (e) {
          case 'n':
            c = '\n';
            break;
          case 't':
            c = '\t';
            break;
          case '"':
          case '\\':
            c = e;
            break;
          default:
            fail(std::string("unsupported escape \\") + e);
        }
      }
      out += c;
    }
    if (i_ >= s_.size()) fail("unterminated string");
    ++i_;
    return out;
  }

  std::string literal_string() {
    ++i_;
    const auto end = s_.find('\'', i_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(s_.substr(i_, end - i_));
    i_ = end + 1;
    return out;
  }

  json array() {
    ++i_;
    json arr = json::array();
    skip_ws();
    if (peek() == ']') {
      ++i_;
      return arr;
    }
    while (true) {
      arr.push_back(value());
      skip_ws();
      if (peek() == ',') {
        ++i_;
        skip_ws();
        if (peek() == ']') {
          ++i_;
          return arr;
        }
        continue;
      }
      if (peek() == ']') {
        ++i_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  json number() {
    const std::size_t b = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '+' || s_[i_] == '-' ||
                              s_[i_] == '.' || s_[i_] == '_'))
      ++i_;
    std::string tok;
    for (char c : s_.substr(b, i_ - b))
      if (c != '_') tok += c;
    if (tok.empty()) fail("expected a value");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    char* end = nullptr;
    if (is_float) {
      const double d = std::strtod(tok.c_str(), &end);
      if (*end) fail("bad number '" + tok + "'");
      return d;
    }
    const long long v = std::strtoll(tok.c_str(), &end, 10);
    if (*end) fail("bad value '" + tok + "'");
    return v;
  }

  std::string_view s_;
  std::size_t i_ = 0;
  int line_;
};

json* descend(json& root, const std::vector<std::string>& path, TomlLine& line) {
  json* node = &root;
  for (const auto& p : path) {
    json& next = (*node)[p];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) line.fail("'" + p + "' is not a table");
    node = &next;
  }
  return node;
}

}  // namespace

json parse_toml_subset(std::string_view text) {
  json root = json::object();
  json* table = &root;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    TomlLine line(raw, line_no);
    if (line.at_end()) continue;
    if (line.peek() == '[') {
      line.expect('[');
      if (line.peek() == '[') line.fail("arrays of tables are not supported");
      const auto path = line.dotted_key();
      line.expect(']');
      if (!line.at_end()) line.fail("trailing characters after table header");
      table = descend(root, path, line);
      continue;
    }
    auto path = line.dotted_key();
    line.expect('=');
    json v = line.value();
    if (!line.at_end()) line.fail("trailing characters after value");
    const std::string last = path.back();
    path.pop_back();
    json* target = descend(*table, path, line);
    if (target->contains(last)) line.fail("duplicate key '" + last + "'");
    (*target)[last] = std::move(v);
  }
  return root;
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ingest:
      return "ingest";
    case Stage::filter:
      return "filter";
    case Stage::analyze:
      return "analyze";
    case Stage::generate:
      return "generate";
    case Stage::refine:
      return "refine";
  }
  return "ingest";
}

Stage parse_stage(std::string_view s) {
  for (Stage st : kAllStages)
    if (to_string(st) == s) return st;
  throw ConfigError("unknown stage: " + std::string(s));
}

std::set<Stage> parse_stages(std::string_view list) {
  std::set<Stage> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    std::string_view item = list.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item == "all") {
      out.insert(kAllStages.begin(), kAllStages.end());
    } else if (!item.empty()) {
      out.insert(parse_stage(item));
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("no stages selected");
  return out;
}

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::mock:
      return "mock";
    case BackendKind::http:
      return "http";
    case BackendKind::replay:
      return "replay";
  }
  return "mock";
}

BackendKind parse_backend_kind(std::string_view s) {
  for (auto k : {BackendKind::mock, BackendKind::http, BackendKind::replay})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown backend: " + std::string(s) + " (mock, http, replay)");
}

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

namespace {

template <typename T>
void read(const json& t, const char* key, T& out) {
  if (!t.is_object() || !t.contains(key)) return;
  try {
    out = t[key].get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void read_path(const json& t, const char* key, fs::path& out, const fs::path& base) {
  std::string s;
  read(t, key, s);
  if (s.empty()) return;
  fs::path p(s);
  out = p.is_relative() && !base.empty() ? base / p : p;
}

const json& table(const json& doc, const char* name) {
  static const json empty = json::object();
  return doc.contains(name) && doc[name].is_object() ? doc[name] : empty;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

PipelineConfig config_from_json(const json& doc, const fs::path& base_dir) {
  PipelineConfig cfg;
  const json& paths = table(doc, "paths");
  read_path(paths, "corpus_root", cfg.corpus_root, base_dir);
  read_path(paths, "output_root", cfg.output_root, base_dir);
  read_path(paths, "manifest", cfg.manifest, base_dir);

  const json& backend = table(doc, "backend");
  std::string kind = "mock";
  read(backend, "kind", kind);
  cfg.backend = parse_backend_kind(kind);
  read_path(backend, "replay_log", cfg.replay_log, base_dir);
  read(backend, "record", cfg.record_log);
  read(backend, "max_in_flight", cfg.max_in_flight);
  read(backend, "max_retries", cfg.max_retries);

  const json& roles = table(doc, "roles");
  for (auto role : kRoles) {
    RoleConfig rc;
    rc.model = std::string(role);
    const json& t = roles.contains(std::string(role)) ? roles[std::string(role)] : json::object();
    read(t, "model", rc.model);
    read(t, "endpoint", rc.endpoint);
    read(t, "api_key", rc.api_key);
    cfg.roles[std::string(role)] = rc;
  }

  const json& run = table(doc, "run");
  read(run, "seed", cfg.seed);
  if (run.contains("stages")) {
    std::string joined;
    const json& st = run["stages"];
    if (st.is_string()) {
      joined = st.get<std::string>();
    } else if (st.is_array()) {
      for (const auto& s : st) joined += (joined.empty() ? "" : ",") + s.get<std::string>();
    } else {
      throw ConfigError("run.stages must be a string or an array");
    }
    cfg.stages = parse_stages(joined);
  }
  read(run, "k", cfg.k);
  std::string tasks = "both";
  read(run, "tasks", tasks);
  if (tasks == "both") {
    cfg.tasks = TaskPlan::both;
  } else if (tasks == "alternate") {
    cfg.tasks = TaskPlan::alternate;
  } else {
    throw ConfigError("run.tasks must be \"both\" or \"alternate\"");
  }
  read(run, "concurrency", cfg.concurrency);

  const json& render = table(doc, "render");
  read(render, "filter_long_edge", cfg.filter_long_edge);
  read(render, "patch_long_edge", cfg.patch_long_edge);
  read(render, "generator_long_edge", cfg.generator_long_edge);
  read(render, "view_long_edge", cfg.view_long_edge);
  read(render, "preview_long_edge", cfg.preview_long_edge);

  const json& aug = table(doc, "augmentation");
  read(aug, "shuffle", cfg.augmentation.shuffle);
  read(aug, "jitter_max_deg", cfg.augmentation.jitter_max_deg);
  read(aug, "copies", cfg.augmentation.copies);
  cfg.augmentation.seed = cfg.seed;
  read(aug, "seed", cfg.augmentation.seed);

  const json& bal = table(doc, "balance");
  read(bal, "target", cfg.balance.target);
  read(bal, "letter_tolerance", cfg.balance.letter_tolerance);
  if (bal.contains("scene_tolerance")) {
    int t = 0;
    read(bal, "scene_tolerance", t);
    cfg.balance.scene_tolerance = t;
  }
  cfg.balance.seed = cfg.seed;
  read(bal, "seed", cfg.balance.seed);

  const json& mock = table(doc, "mock");
  cfg.mock.seed = cfg.seed;
  read(mock, "seed", cfg.mock.seed);
  read(mock, "low_confidence_period", cfg.mock.low_confidence_period);
  read(mock, "invalid_fov_period", cfg.mock.invalid_fov_period);
  read(mock, "invalid_image_period", cfg.mock.invalid_image_period);
  read(mock, "sloppy_json", cfg.mock.sloppy_json);

  const json& service = table(doc, "service");
  read(service, "host", cfg.listen_host);
  read(service, "port", cfg.listen_port);
  if (service.contains("tokens")) {
    for (const auto& [tok, who] : service["tokens"].items()) {
      if (!who.is_string()) throw ConfigError("service.tokens values must be reviewer names");
      cfg.tokens[tok] = who.get<std::string>();
    }
  }
  return cfg;
}

void apply_env_overrides(PipelineConfig& cfg, const EnvLookup& env) {
  if (auto v = env("OPENVIEW_CORPUS_ROOT")) cfg.corpus_root = *v;
  if (auto v = env("OPENVIEW_OUTPUT_ROOT")) cfg.output_root = *v;
  if (auto v = env("OPENVIEW_SEED")) {
    const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), cfg.seed);
    if (ec != std::errc{} || end != v->data() + v->size() || v->empty())
      throw ConfigError("OPENVIEW_SEED must be an unsigned integer");
  }
  if (auto v = env("OPENVIEW_BACKEND")) cfg.backend = parse_backend_kind(*v);
  const auto shared_endpoint = env("OPENVIEW_ENDPOINT");
  const auto shared_key = env("OPENVIEW_API_KEY");
  for (auto role : kRoles) {
    RoleConfig& rc = cfg.roles[std::string(role)];
    if (rc.model.empty()) rc.model = std::string(role);
    const std::string prefix = "OPENVIEW_" + upper(role) + "_";
    if (auto v = env(prefix + "MODEL")) rc.model = *v;
    if (auto v = env(prefix + "ENDPOINT")) {
      rc.endpoint = *v;
    } else if (rc.endpoint.empty() && shared_endpoint) {
      rc.endpoint = *shared_endpoint;
    }
    if (auto v = env(prefix + "API_KEY")) {
      rc.api_key = *v;
    } else if (rc.api_key.empty() && shared_key) {
      rc.api_key = *shared_key;
    }
  }
  if (auto v = env("OPENVIEW_REVIEW_TOKENS")) {
    std::string_view s = *v;
    while (!s.empty()) {
      const auto comma = s.find(',');
      const std::string_view item = s.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size())
        throw ConfigError("OPENVIEW_REVIEW_TOKENS entries must be token=reviewer");
      cfg.tokens[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
      if (comma == std::string_view::npos) break;
      s.remove_prefix(comma + 1);
    }
  }
  if (auto v = env("OPENVIEW_LISTEN")) {
    const auto colon = v->rfind(':');
    if (colon == std::string::npos) throw ConfigError("OPENVIEW_LISTEN must be host:port");
    cfg.listen_host = v->substr(0, colon);
    cfg.listen_port = std::stoi(v->substr(colon + 1));
  }
}

void check_config(const PipelineConfig& cfg) {
  if (cfg.k < 1) throw ConfigError("run.k must be >= 1");
  if (cfg.concurrency < 1) throw ConfigError("run.concurrency must be >= 1");
  if (cfg.max_in_flight < 1) throw ConfigError("backend.max_in_flight must be >= 1");
  if (cfg.max_retries < 0) throw ConfigError("backend.max_retries must be >= 0");
  for (int edge : {cfg.filter_long_edge, cfg.patch_long_edge, cfg.generator_long_edge, cfg.view_long_edge,
                   cfg.preview_long_edge}) {
    if (edge < 8) throw ConfigError("render edges must be >= 8 pixels");
  }
  check_policy(cfg.augmentation);
  if (cfg.backend == BackendKind::replay && cfg.replay_log.empty())
    throw ConfigError("backend.replay_log is required for the replay backend");
  if (cfg.backend == BackendKind::http) {
    for (auto role : kRoles) {
      const auto it = cfg.roles.find(std::string(role));
      if (it == cfg.roles.end() || it->second.endpoint.empty())
        throw ConfigError("no endpoint for role " + std::string(role) + " (set OPENVIEW_" + upper(role) +
                          "_ENDPOINT or roles." + std::string(role) + ".endpoint)");
    }
  }
  if (cfg.listen_port < 0 || cfg.listen_port > 65535) throw ConfigError("service.port out of range");
}

PipelineConfig load_config(const fs::path& path, const EnvLookup& env) {
  PipelineConfig cfg;
  if (path.empty()) {
    cfg = config_from_json(json::object());
  } else {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    cfg = config_from_json(parse_toml_subset(read_text_file(path)), path.parent_path());
  }
  apply_env_overrides(cfg, env);
  check_config(cfg);
  return cfg;
}

json to_json(const PipelineConfig& cfg) {
  json roles = json::object();
  for (const auto& [name, rc] : cfg.roles) roles[name] = {{"model", rc.model}, {"endpoint", rc.endpoint}};
  json stages = json::array();
  for (Stage s : cfg.stages) stages.push_back(to_string(s));
  return {{"corpus_root", cfg.corpus_root.string()},
          {"output_root", cfg.output_root.string()},
          {"manifest", cfg.manifest.string()},
          {"backend", to_string(cfg.backend)},
          {"roles", roles},
          {"seed", cfg.seed},
          {"stages", stages},
          {"k", cfg.k},
          {"tasks", cfg.tasks == TaskPlan::both ? "both" : "alternate"},
          {"concurrency", cfg.concurrency},
          {"render",
           {{"filter_long_edge", cfg.filter_long_edge},
            {"patch_long_edge", cfg.patch_long_edge},
            {"generator_long_edge", cfg.generator_long_edge},
            {"view_long_edge", cfg.view_long_edge}}},
          {"augmentation",
           {{"shuffle", cfg.augmentation.shuffle},
            {"jitter_max_deg", cfg.augmentation.jitter_max_deg},
            {"copies", cfg.augmentation.copies},
            {"seed", cfg.augmentation.seed}}},
          {"balance", to_json(cfg.balance)}};
}

std::string model_for(const PipelineConfig& cfg, const std::string& role) {
  const auto it = cfg.roles.find(role);
  return it == cfg.roles.end() || it->second.model.empty() ? role : it->second.model;
}

std::unique_ptr<Gateway> make_gateway(const PipelineConfig& cfg, const std::string& role) {
  std::shared_ptr<ChatBackend> backend;
  switch (cfg.backend) {
    case BackendKind::mock:
      backend = make_mock_backend(cfg.mock);
      break;
    case BackendKind::replay:
      backend = std::make_shared<ReplayBackend>(cfg.replay_log);
      break;
    case BackendKind::http: {
      const RoleConfig& rc = cfg.roles.at(role);
      backend = std::make_shared<HttpBackend>(HttpBackendOptions{rc.endpoint, rc.api_key, 300});
      break;
    }
  }
  GatewayOptions opts;
  opts.max_in_flight = cfg.max_in_flight;
  opts.max_retries = cfg.max_retries;
  if (cfg.record_log) opts.replay_log = cfg.output_root / "logs" / (role + ".jsonl");
  return std::make_unique<Gateway>(std::move(backend), opts);
}

}  // namespace openview
