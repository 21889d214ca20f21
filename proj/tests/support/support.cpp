#include "support.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "openview/jsonl.hpp"
#include "openview/media.hpp"
#include "openview/random.hpp"

namespace fs = std::filesystem;

namespace openview::testing {

namespace {
std::atomic<int> g_counter{0};
}

TempDir::TempDir(const std::string& tag) {
  const auto base = fs::temp_directory_path();
  for (;;) {
    path_ = base / (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(g_counter++));
    if (fs::create_directories(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path reference_document() { return OPENVIEW_REFERENCE_DOC; }

ImageF analytic_panorama(int width, int height, const std::function<std::array<float, 3>(const Vec3&)>& f) {
  ImageF img(width, height);
  for (int j = 0; j < height; ++j) {
    const double pitch = 90.0 - (j + 0.5) / height * 180.0;
    for (int i = 0; i < width; ++i) {
      const double yaw = (i + 0.5) / width * 360.0 - 180.0;
      const double cp = std::cos(pitch * kDegToRad);
      const Vec3 d{cp * std::sin(yaw * kDegToRad), std::sin(pitch * kDegToRad), cp * std::cos(yaw * kDegToRad)};
      const auto v = f(d);
      float* px = img.at(i, j);
      px[0] = v[0];
      px[1] = v[1];
      px[2] = v[2];
    }
  }
  return img;
}

Image synthetic_panorama(int width, int height, std::uint64_t seed) {
  Image img(width, height);
  Rng rng(seed);
  const int base_r = static_cast<int>(rng.below(200));
  const int base_g = static_cast<int>(rng.below(200));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      auto* px = img.at(x, y);
      px[0] = static_cast<std::uint8_t>((base_r + x * 255 / width) % 256);
      px[1] = static_cast<std::uint8_t>((base_g + y * 255 / height) % 256);
      px[2] = static_cast<std::uint8_t>(rng.below(256));
    }
  }
  return img;
}

fs::path write_image_corpus(const fs::path& dir, int count, int width, std::uint64_t seed) {
  fs::create_directories(dir / "images");
  json entries = json::array();
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "pano_%03d.png", i);
    write_png(dir / "images" / name, synthetic_panorama(width, width / 2, seed * 1000 + i));
    entries.push_back({{"dataset", "synthetic"}, {"kind", "image"}, {"path", std::string("images/") + name}});
  }
  const fs::path manifest = dir / "manifest.json";
  write_json_file(manifest, {{"entries", entries}});
  return manifest;
}

Proposal make_proposal(const std::string& id, TaskType task, char answer, std::string panorama_id) {
  Proposal p;
  p.id = id;
  p.task = task;
  p.view = ViewSpec{0.4, 0.5, 70.0, AspectRatio::k4x3, 0.0};
  p.view_reasoning = "the doorway frames the corridor";
  p.question_reasoning = "the corridor continues past the frame";
  p.question = task == TaskType::contextual ? "Which object would most likely appear outside of this view? (" + id + ")"
                                            : "If you turn left about 40°, what would you see first? (" + id + ")";
  p.options = {"a bench", "a vending machine", "a ticket gate", "a fountain", "None of the above"};
  p.answer = answer;
  p.rationales = {"benches line the wall", "no power outlets are visible", "the floor markings lead to gates",
                  "the space is indoors", "one option is supported"};
  p.conclusion = "the floor markings point to gates";
  p.confidence = 3;
  p.provenance.panorama_id = std::move(panorama_id);
  p.provenance.generator_version = "test";
  return p;
}

json raw_proposal_json(char answer, double diag_fov, int confidence) {
  return {{"view_reasoning", "the kiosk anchors the plaza"},
          {"u_norm", 0.25},
          {"v_norm", 0.55},
          {"diag_fov", diag_fov},
          {"aspect_ratio", "4:3"},
          {"question_reasoning", "the walkway leads out of frame"},
          {"question", "Which object would most likely appear outside of this view?"},
          {"option_a", "a bus stop"},
          {"option_b", "a newspaper stand"},
          {"option_c", "a ski lift"},
          {"option_d", "a hospital bed"},
          {"option_e", "Both A and B"},
          {"answer", std::string(1, answer)},
          {"option_a_reasoning", "the road edge is visible"},
          {"option_b_reasoning", "kiosks cluster on plazas"},
          {"option_c_reasoning", "no slopes are visible"},
          {"option_d_reasoning", "the scene is outdoors"},
          {"option_e_reasoning", "needs both A and B"},
          {"conclusion_reasoning", "plaza kiosks suggest a newspaper stand"},
          {"confidence_score", confidence}};
}

// Appendix rendering. Each source line becomes one output line:
// \textbf/\texttt are unwrapped, \item[-] becomes "- " indented four spaces
// per nesting level, math keeps only \in and ^\circ, ``x'' becomes "x",
// verbatim is copied as is. Headings naming a PROMPT start a new part.

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
  return s;
}

bool starts_with(const std::string& s, const std::string& p) { return s.compare(0, p.size(), p) == 0; }

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) s.replace(pos, from.size(), to);
}

// Removes \cmd{...} wrappers, keeping the argument. Escaped braces inside
// the argument do not count.
std::string unwrap(std::string s, const std::string& cmd) {
  const std::string open = "\\" + cmd + "{";
  for (auto pos = s.find(open); pos != std::string::npos; pos = s.find(open)) {
    std::size_t i = pos + open.size();
    int depth = 1;
    for (; i < s.size(); ++i) {
      if (s[i] == '\\' && i + 1 < s.size()) {
        ++i;
        continue;
      }
      if (s[i] == '{') ++depth;
      if (s[i] == '}' && --depth == 0) break;
    }
    if (i >= s.size()) throw std::runtime_error("unbalanced \\" + cmd);
    s = s.substr(0, pos) + s.substr(pos + open.size(), i - pos - open.size()) + s.substr(i + 1);
  }
  return s;
}

// Control word followed by optional spaces, which TeX swallows.
void replace_word(std::string& s, const std::string& word, const std::string& to) {
  for (auto pos = s.find(word); pos != std::string::npos; pos = s.find(word, pos + to.size())) {
    std::size_t end = pos + word.size();
    while (end < s.size() && s[end] == ' ') ++end;
    s.replace(pos, end - pos, to);
  }
}

std::string inline_text(std::string s) {
  // Trailing line break with optional spacing argument.
  s = rtrim(s);
  if (s.size() >= 2 && s.back() == ']') {
    const auto lb = s.rfind("\\\\[");
    if (lb != std::string::npos && lb + 3 < s.size() && s.find(']', lb) == s.size() - 1) s.erase(lb);
  }
  s = rtrim(s);
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "\\\\") == 0) s.erase(s.size() - 2);

  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '$') {
      const auto close = s.find('$', i + 1);
      std::string math = s.substr(i + 1, close - i - 1);
      replace_all(math, "^\\circ", "°");
      replace_all(math, "\\in", "∈");
      out += trim(math);
      i = close;
    } else {
      out += s[i];
    }
  }
  s = out;
  s = unwrap(s, "textbf");
  s = unwrap(s, "texttt");
  replace_word(s, "\\textless", "<");
  replace_word(s, "\\textgreater", ">");
  replace_all(s, "~", " ");
  for (const char* esc : {"\\_", "\\#", "\\{", "\\}", "\\%"}) replace_all(s, esc, std::string(1, esc[1]));

  out.clear();
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.compare(i, 2, "``") == 0) {
      out += '"';
      quoted = true;
      ++i;
    } else if (quoted && s.compare(i, 2, "''") == 0) {
      out += '"';
      quoted = false;
      ++i;
    } else if (quoted && s[i] == '"') {
      out += '"';
      quoted = false;
    } else if (s[i] == '`') {
      out += '\'';
    } else {
      out += s[i];
    }
  }
  return rtrim(out);
}

std::optional<std::string> heading(const std::string& line) {
  std::string t = line;
  if (starts_with(t, "\\hspace{-2mm}")) t = t.substr(13);
  if (!starts_with(t, "\\textbf{")) return std::nullopt;
  const auto close = t.find('}');
  const std::string label = t.substr(8, close - 8);
  if (label.find("PROMPT") == std::string::npos) return std::nullopt;
  for (char c : label) {
    if (!(std::isupper(static_cast<unsigned char>(c)) || c == ' ')) return std::nullopt;
  }
  return label;
}

struct RawPart {
  std::optional<Role> role;
  std::vector<std::string> lines;
};

std::vector<AppendixPart> render_box(const std::vector<std::string>& lines) {
  std::vector<RawPart> parts;
  int depth = 0;
  bool verbatim = false;
  auto current = [&]() -> RawPart& {
    if (parts.empty()) parts.push_back({});
    return parts.back();
  };
  for (const auto& raw : lines) {
    if (verbatim) {
      if (starts_with(raw, "\\end{verbatim}")) {
        verbatim = false;
      } else {
        current().lines.push_back(raw);
      }
      continue;
    }
    const std::string t = trim(raw);
    if (const auto h = heading(t)) {
      parts.push_back({h->find("USER") != std::string::npos ? Role::user : Role::system, {}});
      continue;
    }
    if (t == "\\begin{verbatim}") {
      verbatim = true;
    } else if (t == "\\begin{itemize}") {
      ++depth;
    } else if (t == "\\end{itemize}") {
      --depth;
    } else if (starts_with(t, "\\vspace")) {
      current().lines.emplace_back();
    } else if (starts_with(t, "\\item[-]")) {
      current().lines.push_back(std::string(4 * (depth - 1), ' ') + "- " + inline_text(trim(t.substr(8))));
    } else {
      current().lines.push_back(inline_text(t));
    }
  }

  std::vector<AppendixPart> out;
  for (const auto& p : parts) {
    std::string text;
    int blanks = 0;
    for (const auto& l : p.lines) {
      if (l.empty()) {
        ++blanks;
        continue;
      }
      if (!text.empty()) text += blanks ? "\n\n" : "\n";
      blanks = 0;
      text += l;
    }
    if (text.empty()) continue;
    // Headless boxes continue the previous box; flagged with role assistant.
    out.push_back({p.role.value_or(Role::assistant), text});
  }
  return out;
}

}  // namespace

std::map<std::string, std::vector<AppendixPart>> appendix_prompts(const fs::path& doc) {
  std::ifstream in(doc);
  if (!in) throw std::runtime_error("cannot open " + doc.string());
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);

  std::map<std::string, std::vector<AppendixPart>> boxes;
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    const std::string prefix = "\\label{tab:prompt_";
    if (!starts_with(lines[i], prefix) || !starts_with(lines[i + 1], "\\begin{tcolorbox}")) continue;
    const std::string label = lines[i].substr(11, lines[i].find('}') - 11);
    std::vector<std::string> body;
    std::size_t j = i + 2;
    for (; j < lines.size() && !starts_with(lines[j], "\\end{tcolorbox}"); ++j) body.push_back(lines[j]);
    boxes[label] = render_box(body);
    i = j;
  }
  return boxes;
}

std::map<std::string, std::vector<AppendixPart>> expected_templates(const fs::path& doc) {
  auto boxes = appendix_prompts(doc);
  std::map<std::string, std::vector<AppendixPart>> out;
  const std::pair<const char*, const char*> direct[] = {
      {"stage1-filter", "prompt_stage1_filter"},     {"stage2-patch", "prompt_stage2_caption"},
      {"stage2-summary", "prompt_stage2_summary"},   {"stage3-contextual", "prompt_stage3_contextual"},
      {"stage3-directional", "prompt_stage3_directional"}, {"stage3-user", "prompt_stage3_user"},
      {"stage4-format", "prompt_stage4"},            {"bench-inference", "prompt_inference"},
      {"bench-judge", "prompt_eval"},                {"caption-loop", "prompt_outpainting"},
  };
  for (const auto& [name, label] : direct) {
    if (boxes.count(label)) out[name] = boxes[label];
  }
  // The base system prompt is split over two boxes.
  const auto& p1 = boxes["prompt_stage3_part1"];
  const auto& p2 = boxes["prompt_stage3_part2"];
  if (p1.size() == 1 && p2.size() == 1) out["stage3-base"] = {{Role::system, p1[0].text + "\n" + p2[0].text}};
  return out;
}

std::vector<double> results_row(const fs::path& doc, const std::string& model) {
  std::ifstream in(doc);
  for (std::string l; std::getline(in, l);) {
    const std::string t = trim(l);
    if (!starts_with(t, "\\quad " + model) || t.find('&') == std::string::npos) continue;
    std::vector<double> values;
    std::stringstream ss(t);
    std::string cell;
    int index = 0;
    while (std::getline(ss, cell, '&')) {
      if (index++ < 2) continue;  // name, rank
      cell = unwrap(cell, "textbf");
      if (const auto cc = cell.find("\\cellcolor{"); cc != std::string::npos) cell.erase(cc, cell.find('}', cc) - cc + 1);
      replace_all(cell, "\\\\", "");
      values.push_back(std::stod(trim(cell)));
    }
    return values;
  }
  throw std::runtime_error("no results row for " + model);
}

}  // namespace openview::testing
