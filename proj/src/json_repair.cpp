#include "openview/json_repair.hpp"

#include <cctype>
#include <regex>

namespace openview {

void SchemaRegistry::add(std::string id, SchemaValidator v) { validators_[std::move(id)] = std::move(v); }

bool SchemaRegistry::contains(std::string_view id) const { return validators_.find(id) != validators_.end(); }

const SchemaValidator& SchemaRegistry::get(std::string_view id) const {
  const auto it = validators_.find(id);
  if (it == validators_.end()) throw ConfigError("unknown schema: " + std::string(id));
  return it->second;
}

std::optional<bool> parse_loose_bool(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s == "true" || s == "True") return true;
    if (s == "false" || s == "False") return false;
  }
  return std::nullopt;
}

namespace {

void require_string(const json& obj, const char* key, std::vector<std::string>& errs) {
  if (!obj.contains(key)) {
    errs.push_back(std::string("missing field \"") + key + "\"");
  } else if (!obj[key].is_string()) {
    errs.push_back(std::string("field \"") + key + "\" must be a string");
  }
}

void require_string_array(const json& obj, const char* key, std::vector<std::string>& errs) {
  if (!obj.contains(key)) {
    errs.push_back(std::string("missing field \"") + key + "\"");
    return;
  }
  const json& a = obj[key];
  if (!a.is_array()) {
    errs.push_back(std::string("field \"") + key + "\" must be a list");
    return;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_string()) errs.push_back(std::string("\"") + key + "\"[" + std::to_string(i) + "] must be a string");
  }
}

std::vector<std::string> validate_filter(const json& v) {
  std::vector<std::string> errs;
  if (!v.is_object()) return {"expected a JSON object"};
  for (const char* k : {"format", "informative"}) {
    require_string(v, k, errs);
    if (v.contains(k) && v[k].is_string() && v[k] != "valid" && v[k] != "invalid")
      errs.push_back(std::string("field \"") + k + "\" must be \"valid\" or \"invalid\"");
  }
  require_string(v, "format_reason", errs);
  require_string(v, "informative_reason", errs);
  return errs;
}

std::vector<std::string> validate_patch(const json& v) {
  std::vector<std::string> errs;
  if (!v.is_object()) return {"expected a JSON object"};
  require_string(v, "caption", errs);
  require_string_array(v, "objects", errs);
  require_string_array(v, "spatial_facts", errs);
  return errs;
}

std::vector<std::string> validate_summary(const json& v) {
  std::vector<std::string> errs;
  if (!v.is_object()) return {"expected a JSON object"};
  require_string(v, "summary", errs);
  require_string(v, "label", errs);
  if (!v.contains("outdoor")) {
    errs.emplace_back("missing field \"outdoor\"");
  } else if (!parse_loose_bool(v["outdoor"])) {
    errs.emplace_back("field \"outdoor\" must be True or False");
  }
  return errs;
}

std::vector<std::string> validate_proposal_list(const json& v) {
  if (!v.is_array()) return {"expected a JSON list"};
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_object()) return {"element " + std::to_string(i) + " must be an object"};
  }
  return {};
}

std::vector<std::string> validate_string_array(const json& v) {
  if (!v.is_array()) return {"expected a JSON list"};
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) return {"element " + std::to_string(i) + " must be a string"};
  }
  return {};
}

// Tolerant tokenizer/parser used by local_repair.

enum class Tok { LBrace, RBrace, LBrack, RBrack, Colon, Comma, String, Scalar, End };

struct Token {
  Tok kind;
  std::string text;
};

bool closes_string(std::string_view s, std::size_t after) {
  while (after < s.size() && std::isspace(static_cast<unsigned char>(s[after]))) ++after;
  if (after >= s.size()) return true;
  const char c = s[after];
  return c == ',' || c == ':' || c == ']' || c == '}';
}

void append_utf8(std::string& out, unsigned cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::size_t read_string(std::string_view s, std::size_t i, std::string& out) {
  const char q = s[i++];
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\\' && i + 1 < s.size()) {
      const char e = s[i + 1];
      switch (e) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'u':
          if (i + 5 < s.size()) {
            try {
              append_utf8(out, static_cast<unsigned>(std::stoul(std::string(s.substr(i + 2, 4)), nullptr, 16)));
              i += 6;
              continue;
            } catch (const std::exception&) {
            }
          }
          out.push_back('u');
          break;
        default: out.push_back(e); break;
      }
      i += 2;
      continue;
    }
    if (c == q && closes_string(s, i + 1)) return i + 1;
    out.push_back(c);
    ++i;
  }
  return i;
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> toks;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    switch (c) {
      case '{': toks.push_back({Tok::LBrace, {}}); ++i; continue;
      case '}': toks.push_back({Tok::RBrace, {}}); ++i; continue;
      case '[': toks.push_back({Tok::LBrack, {}}); ++i; continue;
      case ']': toks.push_back({Tok::RBrack, {}}); ++i; continue;
      case ':': toks.push_back({Tok::Colon, {}}); ++i; continue;
      case ',': toks.push_back({Tok::Comma, {}}); ++i; continue;
      default: break;
    }
    if (c == '"' || c == '\'') {
      Token t{Tok::String, {}};
      i = read_string(s, i, t.text);
      toks.push_back(std::move(t));
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && std::string_view("{}[]:,\"").find(s[j]) == std::string_view::npos)
      ++j;
    toks.push_back({Tok::Scalar, std::string(s.substr(i, j - i))});
    i = j;
  }
  toks.push_back({Tok::End, {}});
  return toks;
}

json scalar_value(const std::string& t) {
  if (t == "true" || t == "True") return true;
  if (t == "false" || t == "False") return false;
  if (t == "null" || t == "None") return nullptr;
  try {
    json v = json::parse(t);
    if (v.is_number()) return v;
  } catch (const json::parse_error&) {
  }
  return t;
}

class TolerantParser {
 public:
  explicit TolerantParser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  json parse() { return value(); }

 private:
  const Token& peek() const { return toks_[pos_]; }
  void next() {
    if (toks_[pos_].kind != Tok::End) ++pos_;
  }

  json value() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::LBrace: next(); return object();
      case Tok::LBrack: next(); return array();
      case Tok::String: { json v = t.text; next(); return v; }
      case Tok::Scalar: { json v = scalar_value(t.text); next(); return v; }
      default: return nullptr;
    }
  }

  json array() {
    json out = json::array();
    for (;;) {
      while (peek().kind == Tok::Comma || peek().kind == Tok::Colon) next();
      const Tok k = peek().kind;
      if (k == Tok::RBrack) {
        next();
        return out;
      }
      if (k == Tok::RBrace || k == Tok::End) return out;
      json v = value();
      if (peek().kind == Tok::Colon && v.is_string()) {
        // "Car":"moving" inside a list becomes "Car: moving".
        next();
        json w = value();
        v = v.get<std::string>() + ": " + (w.is_string() ? w.get<std::string>() : w.dump());
      }
      out.push_back(std::move(v));
    }
  }

  json object() {
    json out = json::object();
    for (;;) {
      while (peek().kind == Tok::Comma || peek().kind == Tok::Colon) next();
      const Tok k = peek().kind;
      if (k == Tok::RBrace) {
        next();
        return out;
      }
      if (k == Tok::RBrack || k == Tok::End) return out;
      if (k != Tok::String && k != Tok::Scalar) {
        value();
        continue;
      }
      std::string key = peek().text;
      next();
      if (peek().kind != Tok::Colon) {
        out[key] = nullptr;
        continue;
      }
      next();
      out[key] = value();
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

const std::regex& url_pattern() {
  static const std::regex re(R"((https?|ftp)://[^\s"'<>\]\)]+|www\.[^\s"'<>\]\)]+)");
  return re;
}

std::string clean_string(const std::string& s) {
  std::string out = std::regex_replace(s, url_pattern(), "");
  for (std::size_t p = out.find("''"); p != std::string::npos; p = out.find("''", p + 1)) out.replace(p, 2, "'");
  if (out.size() != s.size()) {
    // Collapse runs of spaces left behind by removed URLs.
    std::string squeezed;
    for (char c : out) {
      if (c == ' ' && !squeezed.empty() && squeezed.back() == ' ') continue;
      squeezed.push_back(c);
    }
    while (!squeezed.empty() && squeezed.back() == ' ') squeezed.pop_back();
    while (!squeezed.empty() && squeezed.front() == ' ') squeezed.erase(squeezed.begin());
    out = std::move(squeezed);
  }
  return out;
}

void clean_strings(json& v) {
  if (v.is_string()) {
    v = clean_string(v.get<std::string>());
  } else if (v.is_array()) {
    for (auto& e : v) clean_strings(e);
  } else if (v.is_object()) {
    json out = json::object();
    for (auto& [k, e] : v.items()) {
      clean_strings(e);
      out[clean_string(k)] = std::move(e);
    }
    v = std::move(out);
  }
}

std::optional<json> parse_strict(std::string_view text, std::string* error = nullptr) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    if (error) *error = e.what();
    return std::nullopt;
  }
}

std::string join(const std::vector<std::string>& errs) {
  std::string out;
  for (const auto& e : errs) {
    if (!out.empty()) out += "; ";
    out += e;
  }
  return out;
}

}  // namespace

const SchemaRegistry& SchemaRegistry::builtin() {
  static const SchemaRegistry reg = [] {
    SchemaRegistry r;
    r.add(std::string(schemas::kFilterVerdict), validate_filter);
    r.add(std::string(schemas::kPatchAnalysis), validate_patch);
    r.add(std::string(schemas::kPanoramaSummary), validate_summary);
    r.add(std::string(schemas::kProposalList), validate_proposal_list);
    r.add(std::string(schemas::kStringArray), validate_string_array);
    return r;
  }();
  return reg;
}

ParseFailure::ParseFailure(std::vector<std::string> errors)
    : std::runtime_error("unrepairable model output: " + join(errors)), errors_(std::move(errors)) {}

std::string strip_code_fences(std::string_view raw) {
  const auto open = raw.find("```");
  if (open == std::string_view::npos) return std::string(raw);
  auto body_start = raw.find('\n', open);
  if (body_start == std::string_view::npos) return std::string(raw.substr(open + 3));
  ++body_start;
  const auto close = raw.find("```", body_start);
  return std::string(raw.substr(body_start, close == std::string_view::npos ? std::string_view::npos : close - body_start));
}

std::optional<json> local_repair(std::string_view raw) {
  const std::string text = strip_code_fences(raw);
  const auto start = text.find_first_of("[{");
  if (start == std::string::npos) return std::nullopt;
  const char open = text[start];
  const auto stop = text.find_last_of(open == '[' ? ']' : '}');
  const std::string_view body = stop != std::string::npos && stop > start
                                    ? std::string_view(text).substr(start, stop - start + 1)
                                    : std::string_view(text).substr(start);
  json v;
  if (auto strict = parse_strict(body)) {
    v = std::move(*strict);
  } else {
    v = TolerantParser(tokenize(body)).parse();
  }
  clean_strings(v);
  return v;
}

RepairOutcome parse_json_with_repair(std::string_view raw, std::string_view schema_id, const CorrectorConfig& corrector,
                                     int max_attempts, const SchemaRegistry& registry) {
  const SchemaValidator& validate = registry.get(schema_id);
  RepairOutcome out;

  auto try_text = [&](std::string_view text, bool allow_direct) -> bool {
    if (allow_direct) {
      const std::string unfenced = strip_code_fences(text);
      std::string parse_error;
      if (auto v = parse_strict(unfenced, &parse_error)) {
        auto errs = validate(*v);
        if (errs.empty()) {
          out.value = std::move(*v);
          return true;
        }
        for (auto& e : errs) out.errors.push_back(std::move(e));
      } else {
        out.errors.push_back(std::move(parse_error));
      }
    }
    if (auto v = local_repair(text)) {
      auto errs = validate(*v);
      if (errs.empty()) {
        out.value = std::move(*v);
        out.repaired = true;
        return true;
      }
      for (auto& e : errs) out.errors.push_back("after repair: " + e);
    } else {
      out.errors.emplace_back("no JSON value found");
    }
    return false;
  };

  if (try_text(raw, true)) {
    out.repaired = out.repaired || strip_code_fences(raw) != raw;
    return out;
  }
  std::string current(raw);
  for (int attempt = 1; corrector.gateway && attempt <= max_attempts; ++attempt) {
    const auto messages = render_template(templates::kFormatCorrector,
                                          {{"raw_content", current}, {"error_msg", out.errors.back()}});
    ChatRequest req = make_request(corrector.model, messages, {}, DecodingParams{0.0, std::nullopt},
                                   corrector.trace_id + "/repair-" + std::to_string(attempt));
    ++out.model_calls;
    current = corrector.gateway->chat(req).text;
    if (try_text(current, true)) {
      out.repaired = true;
      return out;
    }
  }
  throw ParseFailure(out.errors);
}

}  // namespace openview
