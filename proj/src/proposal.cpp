#include "openview/proposal.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <regex>

#include "openview/errors.hpp"
#include "openview/hashing.hpp"

namespace openview {

std::string_view to_string(TaskType t) { return t == TaskType::contextual ? "contextual" : "directional"; }

TaskType parse_task_type(std::string_view s) {
  if (s == "contextual") return TaskType::contextual;
  if (s == "directional") return TaskType::directional;
  throw ConfigError("unknown task type: " + std::string(s));
}

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const char* const kOptionKeys[5] = {"option_a", "option_b", "option_c", "option_d", "option_e"};
const char* const kReasonKeys[5] = {"option_a_reasoning", "option_b_reasoning", "option_c_reasoning",
                                    "option_d_reasoning", "option_e_reasoning"};

std::string required_text(const json& raw, const char* key) {
  if (!raw.contains(key)) throw ProposalRejected(key, "missing");
  const json& v = raw[key];
  if (!v.is_string()) throw ProposalRejected(key, "must be a string");
  std::string s = trim(v.get<std::string>());
  if (s.empty()) throw ProposalRejected(key, "empty");
  return s;
}

double required_number(const json& raw, const char* key) {
  if (!raw.contains(key)) throw ProposalRejected(key, "missing");
  const json& v = raw[key];
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = trim(v.get<std::string>());
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (!s.empty() && end == s.c_str() + s.size() && std::isfinite(d)) return d;
  }
  throw ProposalRejected(key, "must be a number, got " + v.dump());
}

std::string format_number(double d) {
  json j = d;
  return j.dump();
}

}  // namespace

std::string proposal_id(std::string_view panorama_id, TaskType task, std::string_view question) {
  std::string key(panorama_id);
  key += '\n';
  key += to_string(task);
  key += '\n';
  key += question;
  return sha256_hex(key).substr(0, 16);
}

std::optional<char> normalize_answer(std::string_view answer, const std::array<std::string, 5>& options) {
  std::string a = trim(answer);
  while (a.size() >= 2 && ((a.front() == '"' && a.back() == '"') || (a.front() == '\'' && a.back() == '\''))) {
    a = trim(std::string_view(a).substr(1, a.size() - 2));
  }
  if (a.empty()) return std::nullopt;
  const std::string la = lower(a);
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (!options[i].empty() && lower(trim(options[i])) == la) return kOptionLetters[i];
  }
  static const std::regex key_form(R"(^option[\s_\-]*\(?([a-e])\)?$)", std::regex::icase);
  static const std::regex letter_form(R"(^\(?([A-Ea-e])\)?(?:$|[.:)]\s*.*$|\s+-\s+.*$))");
  static const std::regex prefixed(R"(^(?:option|answer)[\s_\-:]*\(?([A-Ea-e])\)?(?:$|[.:)\s].*$))", std::regex::icase);
  std::smatch m;
  if (std::regex_match(a, m, key_form) || std::regex_match(a, m, letter_form) || std::regex_match(a, m, prefixed)) {
    return static_cast<char>(std::toupper(static_cast<unsigned char>(m[1].str()[0])));
  }
  return std::nullopt;
}

bool is_interference_option(std::string_view text) {
  const std::string low = lower(text);
  for (const char* cue : {"none of", "all of", "both", "neither", "either", "none", "all the above",
                          "cannot be determined", "not enough information", "not possible to determine"}) {
    if (low.find(cue) != std::string::npos) return true;
  }
  static const std::regex letter_ref(R"((^|[^A-Za-z])[A-D]([^A-Za-z]|$))");
  return std::regex_search(std::string(text), letter_ref);
}

Proposal validate_proposal(const json& raw, TaskType task) {
  if (!raw.is_object()) throw ProposalRejected("proposal", "must be a JSON object");
  Proposal p;
  p.task = task;
  p.view_reasoning = required_text(raw, "view_reasoning");

  const double u = required_number(raw, "u_norm");
  const double v = required_number(raw, "v_norm");
  if (u < 0.0 || u > 1.0) throw ProposalRejected("u_norm", format_number(u) + " outside [0,1]");
  if (v < 0.0 || v > 1.0) throw ProposalRejected("v_norm", format_number(v) + " outside [0,1]");
  const char* fov_key = raw.contains("diag_fov") ? "diag_fov" : "diag_FoV";
  const double fov = required_number(raw, fov_key);
  if (fov < kProposalFov.min_deg || fov > kProposalFov.max_deg)
    throw ProposalRejected(fov_key, format_number(fov) + " outside [40,100]");
  const std::string aspect = required_text(raw, "aspect_ratio");
  const auto ar = parse_aspect_ratio(aspect);
  if (!ar) throw ProposalRejected("aspect_ratio", "\"" + aspect + "\" not in {4:3, 3:4, 3:2, 2:3, 16:9, 9:16, 1:1}");
  p.view = ViewSpec{u, v, fov, *ar, 0.0};

  p.question_reasoning = required_text(raw, "question_reasoning");
  p.question = required_text(raw, "question");
  for (int i = 0; i < 5; ++i) p.options[i] = required_text(raw, kOptionKeys[i]);
  if (!is_interference_option(p.options[4]))
    throw ProposalRejected("option_e", "\"" + p.options[4] + "\" is not an interference option");

  if (!raw.contains("answer")) throw ProposalRejected("answer", "missing");
  const json& ans = raw["answer"];
  if (!ans.is_string()) throw ProposalRejected("answer", "must be a string");
  const auto letter = normalize_answer(ans.get<std::string>(), p.options);
  if (!letter) throw ProposalRejected("answer", "cannot resolve \"" + ans.get<std::string>() + "\" to an option");
  p.answer = *letter;

  for (int i = 0; i < 5; ++i) p.rationales[i] = required_text(raw, kReasonKeys[i]);
  p.conclusion = required_text(raw, "conclusion_reasoning");

  const double conf = required_number(raw, "confidence_score");
  if (conf != std::floor(conf)) throw ProposalRejected("confidence_score", "must be an integer");
  if (conf < 1 || conf > 3) throw ProposalRejected("confidence_score", format_number(conf) + " outside [1,3]");
  p.confidence = static_cast<int>(conf);
  return p;
}

void check_proposal(const Proposal& p) {
  check_view_spec(p.view);
  if (p.answer < 'A' || p.answer > 'E') throw DomainError("answer must be A-E");
  if (p.confidence < 1 || p.confidence > 3) throw DomainError("confidence must be 1-3");
  for (const auto& o : p.options) {
    if (o.empty()) throw DomainError("empty option");
  }
}

json to_json(const Proposal& p) {
  json options = json::object();
  json rationales = json::object();
  for (int i = 0; i < 5; ++i) {
    const std::string key(1, kOptionLetters[i]);
    options[key] = p.options[i];
    rationales[key] = p.rationales[i];
  }
  json prov = {{"panorama_id", p.provenance.panorama_id},
               {"generator_version", p.provenance.generator_version},
               {"seed", p.provenance.seed},
               {"variant", p.provenance.variant}};
  if (!p.provenance.parent_id.empty()) {
    prov["parent_id"] = p.provenance.parent_id;
    prov["jitter_yaw"] = p.provenance.jitter_yaw;
    prov["jitter_pitch"] = p.provenance.jitter_pitch;
  }
  if (p.provenance.permutation) prov["permutation"] = *p.provenance.permutation;
  json j = {{"id", p.id},
            {"task_type", to_string(p.task)},
            {"view",
             {{"u_norm", p.view.u_norm},
              {"v_norm", p.view.v_norm},
              {"diag_fov", p.view.diag_fov},
              {"aspect_ratio", to_string(p.view.aspect)},
              {"roll", 0.0}}},
            {"view_reasoning", p.view_reasoning},
            {"question_reasoning", p.question_reasoning},
            {"question", p.question},
            {"options", options},
            {"answer", std::string(1, p.answer)},
            {"option_rationales", rationales},
            {"conclusion", p.conclusion},
            {"confidence", p.confidence},
            {"provenance", prov}};
  if (p.neighbor_patch) j["neighbor_patch"] = *p.neighbor_patch;
  if (!p.view_image.empty()) j["view_image"] = p.view_image;
  return j;
}

Proposal proposal_from_json(const json& j) {
  Proposal p;
  p.id = j.at("id").get<std::string>();
  p.task = parse_task_type(j.at("task_type").get<std::string>());
  const json& v = j.at("view");
  const auto ar = parse_aspect_ratio(v.at("aspect_ratio").get<std::string>());
  if (!ar) throw ConfigError("stored proposal has bad aspect ratio");
  p.view = ViewSpec{v.at("u_norm").get<double>(), v.at("v_norm").get<double>(), v.at("diag_fov").get<double>(), *ar,
                    0.0};
  p.view_reasoning = j.value("view_reasoning", "");
  p.question_reasoning = j.value("question_reasoning", "");
  p.question = j.at("question").get<std::string>();
  for (int i = 0; i < 5; ++i) {
    const std::string key(1, kOptionLetters[i]);
    p.options[i] = j.at("options").at(key).get<std::string>();
    p.rationales[i] = j.at("option_rationales").at(key).get<std::string>();
  }
  const std::string ans = j.at("answer").get<std::string>();
  if (ans.size() != 1 || ans[0] < 'A' || ans[0] > 'E') throw ConfigError("stored proposal has bad answer");
  p.answer = ans[0];
  p.conclusion = j.value("conclusion", "");
  p.confidence = j.at("confidence").get<int>();
  const json& prov = j.at("provenance");
  p.provenance.panorama_id = prov.value("panorama_id", "");
  p.provenance.generator_version = prov.value("generator_version", "");
  p.provenance.seed = prov.value("seed", std::uint64_t{0});
  p.provenance.variant = prov.value("variant", 0);
  p.provenance.parent_id = prov.value("parent_id", "");
  p.provenance.jitter_yaw = prov.value("jitter_yaw", 0.0);
  p.provenance.jitter_pitch = prov.value("jitter_pitch", 0.0);
  if (prov.contains("permutation")) p.provenance.permutation = prov["permutation"].get<std::array<int, 4>>();
  if (j.contains("neighbor_patch")) p.neighbor_patch = j["neighbor_patch"].get<int>();
  p.view_image = j.value("view_image", "");
  return p;
}

}  // namespace openview
