#include "openview/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "openview/scene.hpp"

namespace openview {

namespace {

constexpr std::string_view kFilterSystem = R"PROMPT(You are a helpful panorama checking assistant.)PROMPT";

constexpr std::string_view kFilterUser = R"PROMPT(Examine the given image and judge if it is a suitable panorama source.

Validation criteria:
- format: The image must be a 360° panorama with Equirectangular Projection (ERP). Mark invalid if:
    - The image looks like non-ERP panoramic format. (e.g., flat perspective, dual fisheye, cube-map, cylindrical, little planet, or any projection other than ERP)
- informative: The image must contain clear, meaningful scene content without obstructions. Mark invalid if:
    - The image contains any watermark, logo, text, or overlay, regardless of size or placement.
    - The image shows compression artifacts, stitching errors, severe motion blur, or pixelation.
    - The scene is too dark, obscured, or lacks visible detail (e.g., low-light/night scenes with little visibility).
    - The content is almost empty or uniform (e.g., mostly blank sky, solid color areas).
    - The image is rendered from a virtual environment.

Task constraints:
- Give concise reasons for both judgments.
- A distortion is acceptable only if it follows ERP format.
- Be strict: if there is any doubt about ERP format or informativeness, mark invalid.
- Your response MUST follow the output schema in English.

Output schema
{
    "format_reason": "<short reason within 20 words>",
    "format": "valid" | "invalid",
    "informative_reason": "<short reason within 20 words>",
    "informative": "valid" | "invalid"
})PROMPT";

constexpr std::string_view kPatchSystem = R"PROMPT(You are a precise visual analyzer. Examine the image and produce a structured, factual description.

Task constraints:
- Describe ONLY what is visible; no external knowledge or speculation.
- Be objective and accurate; nouns for objects, short phrases for relations.
- Your response MUST follow the output schema in English.

Object locations (must use one of these 9 tokens):
top-left, top, top-right, left, center, right, bottom-left, bottom, bottom-right.
- If an object spans areas, record all the areas it covers.
- If multiple same instances exist, group them together with a plural noun (e.g., "benches") and do not repeat the same object name in the list.

Output schema
{
    "caption": "<scene description>",
    "objects": ["<object_noun> in/at/on <location_token>", ...],
    "spatial_facts": ["<relation using object names and positions>", ...]
}

Notes
- Each item in "objects" is a string: "<object> in/at/on <location>".
- If no objects or relations are visible, return "objects": [], "spatial_facts": [].
- Keep spatial facts concrete (e.g., "bench (left) faces kiosk (center)", "sign (top) above kiosk (center)").

Example output
{
    "caption": "A small plaza with benches and a kiosk by a walkway...",
    "objects": [
        "red bench on the left",
        "green bench at the bottom-left",
        "kiosk in the center",
        "trees at the top-right and right",
        "sign at the top"
    ],
    "spatial_facts": [
        "red bench (left) faces kiosk (center)",
        "green bench (bottom-left) faces kiosk (center)",
        "trees (top-right, right) behind kiosk (center)",
        "sign (top) above kiosk (center)"
    ]
})PROMPT";

constexpr std::string_view kPatchUser = R"PROMPT(Analyze this image and provide a detailed visual analysis.)PROMPT";

constexpr std::string_view kSummarySystem = R"PROMPT(You are a professional panorama summarizer. Your task is to provide a concise, comprehensive overview and high-level understanding of the entire panorama, assign a scene label and check whether the scene is an outdoor scene.

You will be given:
- A list of 0-roll perspective-projected views of the panorama, each with:
    - uv_norm: normalized (u,v) coordinates on the panorama, indicating the center of the view.
    - diag_FoV: diagonal field of view in degrees.
    - aspect_ratio: the view’s width-to-height ratio.
    - neighbor views: the neighbor views of the view.
    - visual analysis: visible objects with location in the view and spatial facts.

Task constraints:
- Provide a concise and high-level summary that captures the essence of the panorama.
- Emphasize the main environment, setting, and key spatial relationships.
- Avoid excessive detail that obscures the main scene understanding.
- Assign exactly one label from: {scene_labels_str}
- Check the label with the definition above.
- Check whether the scene is an outdoor scene.
- Your response *MUST* follow the output schema in English.

Output schema
{
    "summary": "A concise, comprehensive overview and high-level understanding
    of the entire panorama scene",
    "label": "The label of the scene, *MUST* be one of the label above."
    "outdoor": "Whether the panorama is an outdoor scene, *MUST* be True or 
    False."
})PROMPT";

constexpr std::string_view kSummaryUser = R"PROMPT(Check the list of perspective-projected views of a panorama and the visual analysis of each view as detailed references.
Visual analysis: {list_of_analyses})PROMPT";

constexpr std::string_view kGeneratorBase = R"PROMPT(You are a professional Multi-Choice VQA Designer. You will be given:
- A panorama image in 2:1 aspect ratio.
- A summary and the category of the scene.
- A list of 0-roll perspective-projected views of the panorama, each with:
    - uv_norm: normalized (u,v) coordinates on the panorama, indicating the center of the view.
    - diag_FoV: diagonal field of view in degrees.
    - aspect_ratio: the view’s width-to-height ratio.
    - neighbor views: the neighbor views of the view.
    - visual analysis: visible objects with location in the view and spatial facts.

Overall objectives:
- The core goal is to test the user’s diverse knowledge and reasoning ability about what lies beyond the directly visible content of the chosen view, and what is possible to observe from out of view.
- Questions must require inference about out-of-view functions, context, spatial relations, temporal cues, causal dependencies or commonsense implications.
- The full panorama is provided only as design context: it allows you, the question designer, to understand the overall scene in order to craft out-of-view reasoning questions.
- You will design several multi-choice QA pairs with different perspective-projected views from the panorama. The user will see only this selected view when answering the questions, not the panorama.
- Each question should encourage reasoning that connects visible evidence in the view with what is likely outside of it, avoiding trivial tasks such as object detection, counting, or describing what is directly seen.
- The QA must be challenging, informative, and non-trivial: answering correctly should require bridging in-view cues with out-of-view reasoning rather than relying on surface-level observation.
- Your response MUST follow the output schema in English.

Your design workflow must follow three explicit reasoning steps:

### Step 1 - View Reasoning
- First, review the full panorama image along with its summary and scene category to understand the global context. Then, frame an appropriate perspective-projected view location from anywhere on the panorama for question design.
- Choose u_norm and v_norm ∈ [0,1] to specify the center of the selected view based on your reasoning.
- Choose a diag_FoV ∈ [40,100] and an aspect_ratio ∈ {4:3, 3:4, 3:2, 2:3, 16:9, 9:16, 1:1} to best frame the reasoning target.
- Selection should maximize the potential to design a challenging, reasoning-based VQA.
- Consider:
    - Question potential: select a region whose visible cues best support reasoning about out-of-view context, relations, or commonsense implications rather than simple recognition or localization.
    - View diversity: avoid redundant or trivial viewpoints; sample positions as diverse as possible and avoid regions dominated by artifacts (e.g., bottom camera rig or tripod).
    - Evidence sufficiency: ensure the chosen view provides enough contextual cues to justify the reasoning required in the planned question.
    - FoV use: Adjust the field of view according to the size and distance of the main object/subject. Use narrow FoV ∈ [40°-70°] to constrain information and highlight decisive details for reasoning, especially for distant or small objects. Use wide FoV ∈ [70°-100°] when nearby or large elements require more surrounding context to remain interpretable. Always aim to provide limited but sufficient visual evidence that forces deeper reasoning, rather than making the answer obvious.
    - Aspect ratio: landscape (16:9, 4:3, 3:2) for wide settings; portrait (3:4, 2:3, 9:16) for tall/narrow contexts; 1:1 for balanced or centered views. Be cautious with tall ratios that might expose upper/lower adjacent view content; maintain perspective consistency.
- Output the justification before the parameters as "view_reasoning", then provide "u_norm", "v_norm", "diag_FoV", "aspect_ratio".

### Step 2 - Question Reasoning
- Design an out-of-view multi-choice question based on the chosen view, taking into account the adjusted FoV and aspect ratio from Step 1.
- Question design: Inspect the selected view region carefully, and use the corresponding analysis from the view list as reference when constructing the question.
- Option design: Provide exactly five options (option_a to option_e).
    - option_a to option_d: must be plausible, mutually exclusive, and non-trivial distractors or candidates.
    - option_e: a fixed interference option with a logical relation to the others (e.g., "None of the above", "All of the above", "Both A and C"). This must sometimes serve as the correct answer.
    - All options should be concise and avoid absurdity, correctness must depend on reasoning with the chosen view + commonsense.
- Reason explicitly about:
    - View-Question fit: why this view enables the question; what cues support the intended inference.
    - Option design: how the one correct option is truly defensible among the four distractors.
    - Reasoning demand: how the question forces integration of visible cues with commonsense/contextual knowledge for out-of-view reasoning, rather than simple recognition or counting.
- No leakage: do not reference knowledge that is not in the chosen view but from the panorama; all reasoning must be legitimate from the chosen view’s context.
- Make challenge: frame the stem as brief and general (e.g., "In this scenario...", "Given the view..."), without naming specific visible objects or narrow categories. Avoid giving hints that reveal the answer.
- Output: Provide "question_reasoning" first, then "question", "option_a" to "option_e", and the selected "answer".

### Step 3 - Answer Reasoning
- Keep the selected correct answer from Step 2 unchanged.
- Do not reference or rely on panorama-wide or unseen information when reasoning.
- Provide concise and individual reasoning for each option ("option_a"-"option_e"), based solely on visible cues from the chosen view and relevant knowledge.
    - Explain why the option could be plausible or correct given the view.
    - Explain why it is ultimately less plausible or incorrect, if it’s not the correct answer.
- After describing all options, provide a short contrastive conclusion that:
    - Summarizes why the chosen answer is the most defensible based on the view.
    - Briefly contrasts it with why each distractor fails or is less consistent with the visible evidence.
    - Do not include the option name (A, B, C, D, E) in the reasoning, just describe the option in general terms.
- After reasoning, give a confidence score for the design of the proposal in the range of 1(low) to 3(high).
- No need to explain the confidence score in any reasoning.
- Output this reasoning as "option_a_reasoning" to "option_e_reasoning", "conclusion_reasoning" and "confidence_score" as the last seven fields.

Output schema
[{
    "view_reasoning": "<why this uv, diag_fov, aspect_ratio was chosen>",
    "u_norm": "<float in [0,1]>", "v_norm": "<float in [0,1]>",
    "diag_fov": "<float in [40, 100]>", 
    "aspect_ratio": "<string in [4:3, 3:4, 3:2, 2:3, 16:9, 9:16, 1:1]>", 
    "question_reasoning": "<why this question, options and answer are suitable 
    designed for the view>", "question": "<string>", 
    "option_a": "<string>", ..., "option_e": "<string>", "answer": "<string>",
    "option_a_reasoning", ..., "option_e_reasoning", "conclusion_reasoning",
    "confidence_score": "<int in [1, 3]>",
 }, {...}, ...])PROMPT";

constexpr std::string_view kGeneratorContextual = R"PROMPT(Question type: Contextual question

Design Objectives:
- Create multi-choice questions that test whether the user can judge which objects, actions, conditions, or scenarios are plausible or implausible outside of the given view.
- First, framing a base view. Then, finding its neighbor views, and use it only during VQA generation as the ground truth for the correct option.

Task constraints:
- Base view coordinate (u,v) framed from the panorama. You may adjust diag_fov and aspect_ratio to provide limited but sufficient evidence.
- The chosen view should provide contextual cues (environment type, spatial layout, activities) that support reasoning about out-of-view plausibility.
- The user can not see the neighbor views, they should rely only on cues visible in the chosen view plus commonsense/contextual reasoning.
- No panorama leakage: In question stem, options and reasoning must never reference the panorama or the neighbor view directly.
- Question stem:
    - Keep the question stem brief and neutral, without describing any visible contents. Frame it in general terms (e.g., "Which object/event/condition would most likely appear outside of the view?" or "Which option would be least plausible to see outside of the view?").
- Options:
    - Options may be single items (e.g., "umbrella") or small sets/lists of items (e.g., "apple, banana, and orange").
    - Options must be mutually exclusive, with distractors that are contextually reasonable but incorrect. Avoid absurd or random sets.
    - Set of items should form a correlative group ("ski poles, snow boots, sled", not "lamp, fish, shoe").
    - Avoid speculative or overly detailed predictions that cannot be inferred with confidence from the base view.
- Answer reasoning:
    - Justify the correct answer based on cues in the base view (e.g., visible building edges, road alignment, horizon, continuation of features).
    - Do not justify correctness by referencing what is seen in the neighbor view. Neighbor view is only a hidden reference to ensure one option is correct.
- Confidence score: Provide a confidence score for the proposal.

Examples of valid questions:
- Which of the following sets of objects would most likely appear outside of this view?
    - option_a: Beach ball, umbrella, and towel
    - option_b: Ski poles, snow boots, and sled
    - option_c: Laptop, projector, and whiteboard
    - option_d: Pots, pans, and oven mitts
    - option_e: Both C and D
- Which of the following activities would be least likely to occur nearby?
- Which type of seating would be most plausible in this area?)PROMPT";

constexpr std::string_view kGeneratorDirectional = R"PROMPT(Question type: Directional question

Design objectives:
- Test whether the user can infer the out-of-view content conditioned on a specified camera rotation (left, right, up, down or set of rotations), using only the current base view’s cues.
- First, framing a base view. Then, defining rotation instruction(s) (e.g., "turn left 60°", "tilt up slightly", "rotate right 30°", "turn left 45° and tilt up slightly") for the prediction task. Finally, find the neighbor view and use it only during VQA generation as the ground truth for the correct option. The user can not see this neighbor view.

Task constraints:
- Base view coordinate (u,v) framed from the panorama. You may adjust diag_fov and aspect_ratio to provide limited but sufficient evidence.
- No panorama leakage: In question stem, options and reasoning must never reference the panorama or the neighbor view directly.
- Handle uncertainty by refining the stem (e.g., "immediately visible," "dominant feature," "center of frame") so the prediction is focused and non-ambiguous, and make the question challenging.
- Question stem:
    - Keep the question stem brief and neutral, without describing any visible contents. Frame it in general terms. The rotation instruction may be single or two camera rotations.
- Options:
    - Exactly one option must align with the ground truth neighbor view, but phrased only in terms of what is reasonably implied from the base view + rotation instructions.
    - Distractors must be plausible in the broader scene type but logically contradict the rotated direction or visible cues from the base view.
    - Avoid speculative or overly detailed predictions that cannot be inferred with confidence from the base view.
- Answer reasoning:
    - Justify the correct answer based on cues in the base view (e.g., visible building edges, road alignment, horizon, continuation of features).
    - Do not justify correctness by referencing what is seen in the neighbor view. Neighbor view is only a hidden reference to ensure one option is correct.
- Confidence score: Provide a confidence score for the proposal.

Examples of valid questions:
- If you turn left about 40° and tilt up slightly, what feature would most likely come into view first?
- After tilting upward slightly, which element would you expect to see appear?
- By rotating right about 60°, what would you most likely see prominently?)PROMPT";

constexpr std::string_view kGeneratorUser = R"PROMPT(Scene Category: {category}

Summary of the panorama:
{summary}

Perspective-projected views and visual analysis of each view:
{list_of_analyses}

Task:
Generate {k} VQAs.
Each question must follow the JSON schema, return a JSON list.)PROMPT";

constexpr std::string_view kCorrectorSystem = R"PROMPT(You are a strict JSON format corrector.

You will be given a string that should represent a JSON list, but it may contain multiple formatting errors. Check the error message carefully and fix the issues. After fixing the current error, re-check for further errors until the output is fully valid JSON.

Task constraints:
- Fix only formatting errors (commas, quotes, colons, brackets, extra/trailing chars, markdown fences, etc.).
- Do not modify keys or values, only repair structure.
- Clean redundant list items if applicable.
- Remove any URLs in the string.
- For any list mixing strings and dicts, output as a JSON array of strings:
    - Example: input '["Person", "Car":"moving"]' → output '["Person", "Car: moving"]'.
    - Ensure no colon appears outside of quotes.
- Replace all '' with ' inside string values.
- Final output must be valid JSON and nothing else (no explanations).)PROMPT";

constexpr std::string_view kCorrectorUser = R"PROMPT(Raw message: {raw_content}
Error message: {error_msg})PROMPT";

constexpr std::string_view kInferenceUser = R"PROMPT(Question: {question}
Options: {options}
Instructions:
Analyze each option's correctness with reasoning or justification based on the image and the question.
Then, conclude with the single correct option in the format: <answer>...</answer>.)PROMPT";

constexpr std::string_view kJudgeUser = R"PROMPT(You are a rigorous evaluator tasked with assessing whether the model’s response, specifically its rationale for the options and the final answer, accurately aligns with the ground truth in terms of evidential support, logical consistency, and completeness for an out-of-view multi-choice visual question answering (VQA) task, which involves reasoning about unseen details inferred from the visible context.

- Minor phrasing or ordering differences are acceptable, but the response must preserve the same key idea as ground truth.
- Responses that omit essential evidence, or only provide the final choice should be considered incorrect.
- Remind that long reasonings do not necessarily mean correct.
- Evaluate both the option-level rationale and the final answer justification holistically.
- Rationales that only state "not visible", "unlikely" or similar vague phrases without elaboration are considered incorrect.

Question: {question}
Options: {options}
Ground Truth Answer: {answer_rationale}
Response (Rationale): {response}

Respond only with one of the following:
<answer>Yes</answer> or <answer>No</answer>.)PROMPT";

constexpr std::string_view kCaptionLoopUser = R"PROMPT(Instructions:
Examine the provided image and generate detailed descriptions for eight sequential perspective views.
Each view should have a horizontal field of view of 90°, with each subsequent view rotated 45° to the right from the previous one (resulting in a 50% overlap between adjacent views).
Start from the current viewpoint (the original image) and continue rotating right until all seven rotated views are covered.

Here is the output schema:
<current_view> description of the current view here </current_view>
<view_1> description of the first rotated view here </view_1>
<view_2> description of the second rotated view here </view_2>
<view_3> description of the third rotated view here </view_3>
<view_4> description of the fourth rotated view here </view_4>
<view_5> description of the fifth rotated view here </view_5>
<view_6> description of the sixth rotated view here </view_6>
<view_7> description of the seventh rotated view here </view_7>)PROMPT";

bool is_ident_start(char c) { return std::islower(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_';
}

// Calls fn(begin, end, name) for every {identifier} in body.
template <typename Fn>
void scan_placeholders(std::string_view body, Fn&& fn) {
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '{' || i + 1 >= body.size() || !is_ident_start(body[i + 1])) continue;
    std::size_t j = i + 1;
    while (j < body.size() && is_ident_char(body[j])) ++j;
    if (j < body.size() && body[j] == '}') {
      fn(i, j + 1, body.substr(i + 1, j - i - 1));
      i = j;
    }
  }
}

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system:
      return "system";
    case Role::user:
      return "user";
    case Role::assistant:
      return "assistant";
  }
  return "user";
}

std::set<std::string> PromptTemplate::placeholders() const {
  std::set<std::string> out;
  for (const auto& part : parts) {
    scan_placeholders(part.body, [&](std::size_t, std::size_t, std::string_view name) { out.emplace(name); });
  }
  return out;
}

const std::vector<PromptTemplate>& template_registry() {
  static const std::vector<PromptTemplate> registry = {
      {templates::kFilter, {{Role::system, kFilterSystem}, {Role::user, kFilterUser}}},
      {templates::kPatchAnalysis, {{Role::system, kPatchSystem}, {Role::user, kPatchUser}}},
      {templates::kPanoramaSummary, {{Role::system, kSummarySystem}, {Role::user, kSummaryUser}}},
      {templates::kGeneratorBase, {{Role::system, kGeneratorBase}}},
      {templates::kGeneratorContextual, {{Role::system, kGeneratorContextual}}},
      {templates::kGeneratorDirectional, {{Role::system, kGeneratorDirectional}}},
      {templates::kGeneratorUser, {{Role::user, kGeneratorUser}}},
      {templates::kFormatCorrector, {{Role::system, kCorrectorSystem}, {Role::user, kCorrectorUser}}},
      {templates::kInference, {{Role::user, kInferenceUser}}},
      {templates::kJudge, {{Role::user, kJudgeUser}}},
      {templates::kCaptionLoop, {{Role::user, kCaptionLoopUser}}},
  };
  return registry;
}

const PromptTemplate& find_template(std::string_view name) {
  const auto& reg = template_registry();
  const auto it = std::find_if(reg.begin(), reg.end(), [&](const PromptTemplate& t) { return t.name == name; });
  if (it == reg.end()) throw ConfigError("unknown template: " + std::string(name));
  return *it;
}

std::string substitute(std::string_view body, const Bindings& bindings) {
  std::string out;
  out.reserve(body.size());
  std::size_t last = 0;
  scan_placeholders(body, [&](std::size_t begin, std::size_t end, std::string_view name) {
    const auto it = bindings.find(std::string(name));
    if (it == bindings.end()) throw ConfigError("unbound placeholder: " + std::string(name));
    out.append(body.substr(last, begin - last));
    out.append(it->second);
    last = end;
  });
  out.append(body.substr(last));
  return out;
}

std::vector<RenderedMessage> render_template(std::string_view name, const Bindings& bindings) {
  const PromptTemplate& t = find_template(name);
  std::vector<RenderedMessage> out;
  out.reserve(t.parts.size());
  for (const auto& part : t.parts) {
    try {
      out.push_back({part.role, substitute(part.body, bindings)});
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(name) + ": " + e.what());
    }
  }
  return out;
}

std::string scene_labels_block() {
  std::string names;
  std::string defs;
  for (SceneLabel s : kAllSceneLabels) {
    if (!names.empty()) names += ", ";
    names += to_string(s);
    defs += "\n- ";
    defs += to_string(s);
    defs += ": ";
    defs += scene_definition(s);
  }
  return names + defs;
}

// Scene taxonomy.

namespace {
constexpr std::array<std::string_view, kSceneLabelCount> kSceneNames = {
    "Civic",     "Rural",     "Nature",      "Culture",   "Heritage",    "Transport",
    "Education", "Hospitality", "Workplace", "Residential", "Commercial"};

constexpr std::array<std::string_view, kSceneLabelCount> kSceneDefinitions = {
    "Squares, parks, playgrounds, botanical gardens, zoos, and other community spaces.",
    "Agricultural and countryside areas such as farms, villages, and fields.",
    "Mountains, forests, beaches, rivers, and other wilderness settings.",
    "Museums, theaters, concert halls, and sports arenas.",
    "Historic and religious sites including temples, monuments, and ruins.",
    "Roads, stations, airports, bus stops, ports, and parking areas.",
    "Campuses, schools, libraries, and other learning environments.",
    "Hotels, resorts, recreation centers, and conference halls.",
    "Offices, labs, hospitals, and institutional buildings.",
    "Homes, apartments, courtyards, and living spaces.",
    "Shops, malls, markets, restaurants, and cafés.",
};
}  // namespace

std::string_view to_string(SceneLabel s) { return kSceneNames[static_cast<std::size_t>(s)]; }

std::string_view scene_definition(SceneLabel s) { return kSceneDefinitions[static_cast<std::size_t>(s)]; }

std::optional<SceneLabel> parse_scene_label(std::string_view s) {
  for (std::size_t i = 0; i < kSceneNames.size(); ++i) {
    if (kSceneNames[i] == s) return static_cast<SceneLabel>(i);
  }
  return std::nullopt;
}

}  // namespace openview
