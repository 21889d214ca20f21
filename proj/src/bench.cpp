#include "openview/bench.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "openview/errors.hpp"
#include "openview/jsonl.hpp"
#include "openview/media.hpp"
#include "openview/parallel.hpp"

namespace openview {

namespace fs = std::filesystem;

json to_json(const BenchmarkItem& item) {
  return {{"id", item.id}, {"proposal", to_json(item.proposal)}, {"image_path", item.image_path}};
}

BenchmarkItem benchmark_item_from_json(const json& j) {
  BenchmarkItem item;
  item.id = j.at("id").get<std::string>();
  item.proposal = proposal_from_json(j.at("proposal"));
  item.image_path = j.value("image_path", "");
  return item;
}

std::string format_options(const Proposal& p) {
  std::string out;
  for (int i = 0; i < 5; ++i) {
    if (i) out += '\n';
    out += kOptionLetters[i];
    out += ". ";
    out += p.options[i];
  }
  return out;
}

std::string ground_truth_rationale(const Proposal& p) {
  std::string out = "Correct option: ";
  out += p.answer;
  out += ". ";
  out += p.correct_text();
  for (int i = 0; i < 5; ++i) {
    out += '\n';
    out += kOptionLetters[i];
    out += ": ";
    out += p.rationales[i];
  }
  out += "\nConclusion: ";
  out += p.conclusion;
  return out;
}

std::vector<RenderedMessage> build_inference_prompt(const BenchmarkItem& item) {
  return render_template(templates::kInference,
                         {{"question", item.proposal.question}, {"options", format_options(item.proposal)}});
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Body of the last <answer> tag; an unclosed final tag runs to the end.
std::optional<std::string> last_answer_tag(std::string_view text) {
  const std::string low = lower(text);
  const auto open = low.rfind("<answer>");
  if (open == std::string::npos) return std::nullopt;
  const auto body = open + 8;
  const auto close = low.find("</answer>", body);
  return std::string(text.substr(body, close == std::string::npos ? std::string_view::npos : close - body));
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::optional<char> extract_choice(std::string_view response) {
  try {
    const auto body = last_answer_tag(response);
    if (!body) return std::nullopt;
    const std::string& s = *body;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const char c = s[i];
      if (c < 'A' || c > 'E') continue;
      if ((i == 0 || !is_alnum(s[i - 1])) && (i + 1 == s.size() || !is_alnum(s[i + 1]))) return c;
    }
    std::string t = lower(s);
    auto strip = [&t](std::string_view chars) {
      while (!t.empty() && chars.find(t.front()) != std::string_view::npos) t.erase(t.begin());
      while (!t.empty() && chars.find(t.back()) != std::string_view::npos) t.pop_back();
    };
    strip(" \t\r\n()[].:*\"'");
    if (t.rfind("option", 0) == 0) t.erase(0, 6);
    strip(" \t\r\n()[].:*_\"'");
    if (t.size() == 1 && t[0] >= 'a' && t[0] <= 'e') return static_cast<char>(std::toupper(t[0]));
  } catch (...) {
  }
  return std::nullopt;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::yes:
      return "yes";
    case Verdict::no:
      return "no";
    case Verdict::not_judged:
      return "not-judged";
  }
  return "not-judged";
}

Verdict parse_verdict_name(std::string_view s) {
  if (s == "yes") return Verdict::yes;
  if (s == "no") return Verdict::no;
  if (s == "not-judged") return Verdict::not_judged;
  throw ConfigError("unknown verdict: " + std::string(s));
}

std::optional<bool> parse_judge_verdict(std::string_view text) {
  const auto body = last_answer_tag(text);
  if (!body) return std::nullopt;
  std::string t = lower(*body);
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
  if (!t.empty() && t.back() == '.') t.pop_back();
  if (t == "yes") return true;
  if (t == "no") return false;
  return std::nullopt;
}

json to_json(const EvalRecord& r) {
  return {{"item_id", r.item_id},
          {"model_id", r.model_id},
          {"raw_response", r.raw_response},
          {"choice", r.choice ? json(std::string(1, *r.choice)) : json(nullptr)},
          {"choice_correct", r.choice_correct},
          {"rationale_verdict", to_string(r.rationale)},
          {"judge_raw", r.judge_raw}};
}

EvalRecord eval_record_from_json(const json& j) {
  EvalRecord r;
  r.item_id = j.at("item_id").get<std::string>();
  r.model_id = j.value("model_id", "");
  r.raw_response = j.value("raw_response", "");
  if (j.contains("choice") && j["choice"].is_string() && !j["choice"].get<std::string>().empty())
    r.choice = j["choice"].get<std::string>()[0];
  r.choice_correct = j.value("choice_correct", false);
  r.rationale = parse_verdict_name(j.value("rationale_verdict", "not-judged"));
  r.judge_raw = j.value("judge_raw", "");
  if (r.rationale != Verdict::not_judged && !r.choice_correct)
    throw ConfigError("record " + r.item_id + ": rationale verdict on an incorrect choice");
  return r;
}

Verdict judge_rationale(Gateway& judge, const BenchmarkItem& item, std::string_view response, const JudgeOptions& opts,
                        std::string* raw_out) {
  const auto messages = render_template(templates::kJudge, {{"question", item.proposal.question},
                                                            {"options", format_options(item.proposal)},
                                                            {"answer_rationale", ground_truth_rationale(item.proposal)},
                                                            {"response", std::string(response)}});
  for (int attempt = 0; attempt <= opts.retries; ++attempt) {
    const std::string trace = "judge/" + item.id + "/" + std::to_string(attempt);
    const ChatRequest req = make_request(opts.model, messages, {}, DecodingParams{0.0, std::nullopt}, trace);
    const ModelResponse resp = judge.chat(req);
    if (raw_out) *raw_out = resp.text;
    if (const auto v = parse_judge_verdict(resp.text)) return *v ? Verdict::yes : Verdict::no;
  }
  return Verdict::no;
}

std::vector<EvalRecord> run_inference(Gateway& candidate, const std::vector<BenchmarkItem>& items,
                                      const std::string& image_root, const InferenceOptions& opts) {
  return parallel_map(items.size(), opts.threads, [&](std::size_t i) {
    const BenchmarkItem& item = items[i];
    fs::path img = item.image_path;
    if (img.is_relative()) img = fs::path(image_root) / img;
    ChatRequest req = make_request(opts.model, build_inference_prompt(item), {read_text_file(img)}, opts.params,
                                   "infer/" + item.id);
    EvalRecord r;
    r.item_id = item.id;
    r.model_id = opts.model;
    try {
      r.raw_response = candidate.chat(req).text;
    } catch (const ContentError& e) {
      r.raw_response = std::string("[refused] ") + e.what();
    }
    r.choice = extract_choice(r.raw_response);
    r.choice_correct = r.choice && *r.choice == item.answer();
    return r;
  });
}

void run_judging(Gateway& judge, const std::vector<BenchmarkItem>& items, std::vector<EvalRecord>& records,
                 const JudgeOptions& opts, int threads) {
  std::map<std::string, const BenchmarkItem*> by_id;
  for (const auto& it : items) by_id[it.id] = &it;
  parallel_for(records.size(), threads, [&](std::size_t i) {
    EvalRecord& r = records[i];
    if (!r.choice_correct) {
      r.rationale = Verdict::not_judged;
      return;
    }
    const auto it = by_id.find(r.item_id);
    if (it == by_id.end()) throw ConfigError("record for unknown item " + r.item_id);
    r.rationale = judge_rationale(judge, *it->second, r.raw_response, opts, &r.judge_raw);
  });
}

namespace {

void finish(SplitMetrics& m) {
  m.choice_acc = m.total ? static_cast<double>(m.correct) / m.total : 0.0;
  const int judged = m.rationale_yes + m.rationale_no;
  m.rationale_undefined = judged == 0;
  m.rationale_acc = judged ? static_cast<double>(m.rationale_yes) / judged : 0.0;
  m.joint_acc = m.total ? static_cast<double>(m.joint) / m.total : 0.0;
}

void add(SplitMetrics& m, const EvalRecord& r) {
  ++m.total;
  if (!r.choice_correct) return;
  ++m.correct;
  if (r.rationale == Verdict::yes) {
    ++m.rationale_yes;
    ++m.joint;
  } else if (r.rationale == Verdict::no) {
    ++m.rationale_no;
  }
}

json to_json(const SplitMetrics& m) {
  return {{"total", m.total},
          {"correct", m.correct},
          {"rationale_yes", m.rationale_yes},
          {"rationale_no", m.rationale_no},
          {"joint", m.joint},
          {"choice_acc", m.choice_acc},
          {"rationale_acc", m.rationale_acc},
          {"joint_acc", m.joint_acc},
          {"rationale_undefined", m.rationale_undefined}};
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%6.2f", 100.0 * v);
  return buf;
}

}  // namespace

MetricsReport compute_metrics(const std::vector<EvalRecord>& records, const std::vector<BenchmarkItem>& items) {
  if (records.empty()) throw ConfigError("no evaluation records");
  std::map<std::string, TaskType> task_of;
  for (const auto& it : items) task_of[it.id] = it.task();
  MetricsReport rep;
  rep.model_id = records.front().model_id;
  std::map<std::string, int> seen;
  for (const auto& r : records) {
    const auto it = task_of.find(r.item_id);
    if (it == task_of.end()) throw ConfigError("record for unknown item " + r.item_id);
    if (++seen[r.item_id] > 1) throw ConfigError("more than one record for item " + r.item_id);
    add(it->second == TaskType::contextual ? rep.contextual : rep.directional, r);
    add(rep.overall, r);
  }
  finish(rep.contextual);
  finish(rep.directional);
  finish(rep.overall);
  return rep;
}

json to_json(const MetricsReport& r) {
  return {{"model_id", r.model_id},
          {"contextual", to_json(r.contextual)},
          {"directional", to_json(r.directional)},
          {"overall", to_json(r.overall)}};
}

std::string format_metrics_table(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << "Model                | Contextual              | Directional             | Overall\n";
  os << "                     | Choice Ratnl.  Joint    | Choice Ratnl.  Joint    | Choice Ratnl.  Joint\n";
  for (const auto& r : reports) {
    std::string name = r.model_id.substr(0, 20);
    name.resize(20, ' ');
    os << name;
    for (const SplitMetrics* m : {&r.contextual, &r.directional, &r.overall}) {
      os << " | " << pct(m->choice_acc) << ' ' << pct(m->rationale_acc) << (m->rationale_undefined ? '*' : ' ') << ' '
         << pct(m->joint_acc);
    }
    os << '\n';
  }
  bool flagged = false;
  for (const auto& r : reports)
    flagged = flagged || r.contextual.rationale_undefined || r.directional.rationale_undefined || r.overall.rationale_undefined;
  if (flagged) os << "* rationale accuracy undefined (no correct choices), shown as 0\n";
  return os.str();
}

CaptionParseFailure::CaptionParseFailure(std::vector<std::string> missing)
    : std::runtime_error([&] {
        std::string msg = "caption loop output is missing tags:";
        for (const auto& m : missing) msg += " <" + m + ">";
        return msg;
      }()),
      missing_(std::move(missing)) {}

std::array<std::string, kCaptionLoopViews> parse_caption_loop(std::string_view text) {
  std::array<std::string, kCaptionLoopViews> out;
  std::vector<std::string> missing;
  const std::string low = lower(text);
  for (int i = 0; i < kCaptionLoopViews; ++i) {
    const std::string tag = i == 0 ? "current_view" : "view_" + std::to_string(i);
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    const auto a = low.find(open);
    const auto b = a == std::string::npos ? std::string::npos : low.find(close, a + open.size());
    if (b == std::string::npos) {
      missing.push_back(tag);
      continue;
    }
    std::string body(text.substr(a + open.size(), b - a - open.size()));
    const auto first = body.find_first_not_of(" \t\r\n");
    const auto last = body.find_last_not_of(" \t\r\n");
    out[i] = first == std::string::npos ? "" : body.substr(first, last - first + 1);
  }
  if (!missing.empty()) throw CaptionParseFailure(std::move(missing));
  return out;
}

ViewSpec caption_start_view(double u_norm, double v_norm, AspectRatio aspect) {
  return ViewSpec{u_norm, v_norm, diag_fov_for_horizontal(kCaptionLoopHfovDeg, aspect), aspect, 0.0};
}

std::vector<ViewSpec> caption_loop_views(const ViewSpec& start) {
  std::vector<ViewSpec> views;
  views.push_back(start);
  for (int i = 1; i < kCaptionLoopViews; ++i) views.push_back(apply_rotation(start, i * kCaptionLoopStepDeg, 0.0));
  return views;
}

CaptionLoopResult caption_view_loop(Gateway& gw, const Panorama& pano, const ViewSpec& start, const std::string& model,
                                    int long_edge) {
  check_view_spec(start, kRenderableFov);
  const Image view = render_view(pano.pixels, start, long_edge);
  ChatRequest req = make_request(model, render_template(templates::kCaptionLoop, {}), {as_payload(encode_png(view))},
                                 {}, "caption-loop/" + pano.id);
  CaptionLoopResult r;
  r.start = start;
  r.descriptions = parse_caption_loop(gw.chat(req).text);
  for (int i = 0; i < kCaptionLoopViews; ++i) r.yaw_offsets[i] = i * kCaptionLoopStepDeg;
  r.total_rotation = kCaptionLoopViews * kCaptionLoopStepDeg;
  return r;
}

}  // namespace openview
