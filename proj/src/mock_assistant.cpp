#include "openview/mock_assistant.hpp"

#include <array>
#include <regex>

#include "openview/json_repair.hpp"
#include "openview/proposal.hpp"
#include "openview/random.hpp"
#include "openview/scene.hpp"

namespace openview {

namespace {

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

std::string_view system_text(const ChatRequest& req) {
  for (const auto& m : req.messages)
    if (m.role == Role::system) return m.text;
  return {};
}

std::string_view user_text(const ChatRequest& req) {
  for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it)
    if (it->role == Role::user) return it->text;
  return {};
}

std::uint64_t content_hash(const ChatRequest& req) {
  std::uint64_t h = fnv1a(req.model);
  for (const auto& m : req.messages) {
    h = fnv1a(m.text, h);
    for (const auto& img : m.png_images) h = fnv1a(img, h);
  }
  return h;
}

std::uint64_t image_hash(const ChatRequest& req) {
  std::uint64_t h = fnv1a("");
  for (const auto& m : req.messages)
    for (const auto& img : m.png_images) h = fnv1a(img, h);
  return h;
}

std::string emit(const json& j, bool sloppy) {
  std::string s = j.dump(2);
  if (!sloppy) return s;
  // Trailing comma before the outermost closer, inside a fence.
  s.insert(s.size() - 1, ",");
  return "```json\n" + s + "\n```";
}

struct OptionSet {
  std::array<const char*, 4> options;
};

constexpr std::array<OptionSet, 4> kContextualSets = {{
    {{"Benches, planters, and a fountain", "Ski poles, snow boots, and a sled", "Laptop, projector, and whiteboard",
      "Pots, pans, and oven mitts"}},
    {{"A parked bicycle", "A hospital bed", "A grand piano", "A kayak on a rack"}},
    {{"People queuing at a counter", "Cattle grazing", "Students taking an exam", "Surfers waiting for waves"}},
    {{"Street lamps along a path", "Stalactites overhead", "Rows of lab benches", "Hay bales stacked high"}},
}};

constexpr std::array<OptionSet, 4> kDirectionalSets = {{
    {{"A continuation of the building facade", "An open sky with no structures", "A dense forest edge",
      "A body of water"}},
    {{"A row of parked cars", "A staircase going down", "A reception desk", "A mountain ridge"}},
    {{"The ceiling with light fixtures", "A tiled floor", "A wall-mounted screen", "A window facing a street"}},
    {{"A pedestrian crossing", "A garden hedge", "A bus shelter", "A loading dock"}},
}};

constexpr std::array<const char*, 4> kInterference = {"Both A and C", "None of the above", "All of the above",
                                                      "Both B and D"};

constexpr std::array<const char*, 4> kContextualStems = {
    "Which of the following would most likely appear outside of this view?",
    "In this scenario, which item would be most plausible nearby?",
    "Given the view, which activity would be most likely to occur close by?",
    "Which of the following would be least surprising to find just out of frame?",
};

constexpr std::array<const char*, 4> kRotations = {
    "turn left about 40°", "turn right about 60° and tilt up slightly", "tilt down slightly", "rotate right 90°"};

json make_proposal(Rng& rng, TaskType task, int index, const MockAssistantOptions& opts) {
  const auto& set = (task == TaskType::contextual ? kContextualSets : kDirectionalSets)[index % 4];
  json p;
  const double u = rng.uniform(0.05, 0.95);
  const double v = rng.uniform(0.3, 0.7);
  double fov = rng.uniform(40.0, 100.0);
  if (opts.invalid_fov_period > 0 && (index + 1) % opts.invalid_fov_period == 0) fov = 120.0;
  static constexpr std::array<const char*, 7> aspects = {"4:3", "3:4", "3:2", "2:3", "16:9", "9:16", "1:1"};
  p["view_reasoning"] = "The chosen region shows layout cues that continue beyond the frame.";
  p["u_norm"] = u;
  p["v_norm"] = v;
  p["diag_fov"] = fov;
  p["aspect_ratio"] = aspects[rng.below(aspects.size())];
  p["question_reasoning"] = "The visible context constrains what lies outside; the options differ in plausibility.";
  std::string question;
  if (task == TaskType::contextual) {
    question = kContextualStems[index % 4];
  } else {
    question = std::string("If you ") + kRotations[index % 4] + ", what would most likely come into view first?";
  }
  if (index >= 4) question += " (" + std::to_string(index / 4 + 1) + ")";
  p["question"] = question;
  const char* letters = "abcde";
  for (int i = 0; i < 4; ++i) p[std::string("option_") + letters[i]] = set.options[i];
  p["option_e"] = kInterference[rng.below(kInterference.size())];
  const int ans = static_cast<int>(rng.below(5));
  // Alternate the answer spelling between a letter and the option text.
  if (index % 2 == 0) {
    p["answer"] = std::string(1, static_cast<char>('A' + ans));
  } else {
    p["answer"] = p[std::string("option_") + letters[ans]];
  }
  for (int i = 0; i < 5; ++i) {
    p[std::string("option_") + letters[i] + "_reasoning"] =
        i == ans ? "Consistent with the cues in the view." : "Less consistent with the visible evidence.";
  }
  p["conclusion_reasoning"] = "The selected option best matches the visible context; the others conflict with it.";
  int conf = 3;
  if (opts.low_confidence_period > 0 && (index + 1) % opts.low_confidence_period == 0) conf = 2;
  p["confidence_score"] = conf;
  return p;
}

std::string patch_reply(bool sloppy) {
  const json j = {{"caption", "A small plaza with benches and a kiosk by a walkway."},
                  {"objects",
                   {"red bench on the left", "green bench at the bottom-left", "kiosk in the center",
                    "trees at the top-right and right", "sign at the top"}},
                  {"spatial_facts",
                   {"red bench (left) faces kiosk (center)", "green bench (bottom-left) faces kiosk (center)",
                    "trees (top-right, right) behind kiosk (center)", "sign (top) above kiosk (center)"}}};
  return emit(j, sloppy);
}

std::string corrector_reply(std::string_view user) {
  constexpr std::string_view head = "Raw message: ";
  std::string_view raw = user;
  if (starts_with(raw, head)) raw.remove_prefix(head.size());
  const auto err = raw.rfind("\nError message: ");
  if (err != std::string_view::npos) raw = raw.substr(0, err);
  if (const auto fixed = local_repair(raw)) return fixed->dump();
  return std::string(raw);
}

std::string caption_loop_reply(Rng& rng) {
  static constexpr std::array<const char*, 8> tags = {"current_view", "view_1", "view_2", "view_3",
                                                      "view_4",       "view_5", "view_6", "view_7"};
  std::string out;
  for (int i = 0; i < 8; ++i) {
    out += "<" + std::string(tags[i]) + "> ";
    out += "View " + std::to_string(i) + " at " + std::to_string(45 * i) + " degrees shows surface detail " +
           std::to_string(rng.below(100)) + ". ";
    out += "</" + std::string(tags[i]) + ">\n";
  }
  return out;
}

}  // namespace

MockBackend::Handler make_mock_assistant(MockAssistantOptions opts) {
  return [opts](const ChatRequest& req) -> std::string {
    const std::string_view sys = system_text(req);
    const std::string_view user = user_text(req);
    Rng rng(mix_seed(opts.seed, "", content_hash(req)));

    if (starts_with(sys, "You are a helpful panorama checking assistant.")) {
      const bool bad = opts.invalid_image_period > 0 &&
                       image_hash(req) % static_cast<std::uint64_t>(opts.invalid_image_period) == 0;
      const json j = {{"format_reason", "Equirectangular layout with continuous horizon."},
                      {"format", "valid"},
                      {"informative_reason", bad ? "Large watermark overlay." : "Clear scene content."},
                      {"informative", bad ? "invalid" : "valid"}};
      return emit(j, opts.sloppy_json);
    }
    if (starts_with(sys, "You are a precise visual analyzer.")) return patch_reply(opts.sloppy_json);
    if (starts_with(sys, "You are a professional panorama summarizer.")) {
      const SceneLabel label = kAllSceneLabels[rng.below(kAllSceneLabels.size())];
      const json j = {{"summary", "An open public space with seating and paths around a central kiosk."},
                      {"label", to_string(label)},
                      {"outdoor", rng.below(2) ? "True" : "False"}};
      return emit(j, opts.sloppy_json);
    }
    if (starts_with(sys, "You are a professional Multi-Choice VQA Designer.")) {
      static const std::regex count_re(R"(Generate (\d+) VQAs)");
      std::cmatch m;
      const std::string u(user);
      int k = 1;
      if (std::regex_search(u.c_str(), m, count_re)) k = std::stoi(m[1].str());
      const TaskType task =
          sys.find("Question type: Directional question") != std::string_view::npos ? TaskType::directional
                                                                                     : TaskType::contextual;
      json list = json::array();
      for (int i = 0; i < k; ++i) list.push_back(make_proposal(rng, task, i, opts));
      return emit(list, opts.sloppy_json);
    }
    if (starts_with(sys, "You are a strict JSON format corrector.")) return corrector_reply(user);
    if (starts_with(user, "You are a rigorous evaluator")) return "<answer>Yes</answer>";
    if (starts_with(user, "Instructions:\nExamine the provided image and generate detailed descriptions"))
      return caption_loop_reply(rng);
    if (starts_with(user, "Question: ")) {
      const char letter = opts.candidate_fixed_letter ? opts.candidate_fixed_letter
                                                      : static_cast<char>('A' + rng.below(5));
      return "Each option was weighed against the visible cues.\n<answer>" + std::string(1, letter) + "</answer>";
    }
    throw ContentError("mock assistant: unrecognised prompt");
  };
}

std::shared_ptr<MockBackend> make_mock_backend(MockAssistantOptions opts) {
  return std::make_shared<MockBackend>(make_mock_assistant(opts));
}

}  // namespace openview
