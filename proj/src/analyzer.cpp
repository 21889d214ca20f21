#include "openview/analyzer.hpp"

#include <algorithm>
#include <cctype>

#include "openview/media.hpp"
#include "openview/parallel.hpp"
#include "openview/prompts.hpp"

namespace openview {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) || s.back() == '.')) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_locations(std::string_view s) {
  std::vector<std::string> out;
  std::string rest = lower(trim(s));
  for (const std::string_view sep : {", and ", " and ", ", "}) {
    for (std::size_t p = rest.find(sep); p != std::string::npos; p = rest.find(sep)) rest.replace(p, sep.size(), "|");
  }
  std::size_t start = 0;
  while (start <= rest.size()) {
    const auto bar = rest.find('|', start);
    std::string_view part = trim(std::string_view(rest).substr(start, bar == std::string::npos ? std::string::npos : bar - start));
    if (part.substr(0, 4) == "the ") part.remove_prefix(4);
    out.emplace_back(part);
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return out;
}

std::vector<std::string> validate_patch_full(const json& v) {
  auto errs = SchemaRegistry::builtin().get(schemas::kPatchAnalysis)(v);
  if (!errs.empty()) return errs;
  for (std::size_t i = 0; i < v["objects"].size(); ++i) {
    const std::string s = v["objects"][i].get<std::string>();
    if (!parse_object_mention(s)) {
      errs.push_back("objects[" + std::to_string(i) + "] \"" + s +
                     "\" must be \"<object> in/at/on <location>\" with locations from: top-left, top, top-right, "
                     "left, center, right, bottom-left, bottom, bottom-right");
    }
  }
  return errs;
}

std::vector<std::string> validate_summary_full(const json& v) {
  auto errs = SchemaRegistry::builtin().get(schemas::kPanoramaSummary)(v);
  if (!errs.empty()) return errs;
  const std::string label = v["label"].get<std::string>();
  if (!parse_scene_label(std::string(trim(label)))) {
    std::string names;
    for (SceneLabel s : kAllSceneLabels) names += (names.empty() ? "" : ", ") + std::string(to_string(s));
    errs.push_back("label \"" + label + "\" is not one of: " + names);
  }
  return errs;
}

json view_json(const ViewSpec& v) {
  return {{"u_norm", v.u_norm}, {"v_norm", v.v_norm}, {"diag_fov", v.diag_fov}, {"aspect_ratio", to_string(v.aspect)}};
}

ViewSpec view_from_json(const json& j) {
  ViewSpec v;
  v.u_norm = j.at("u_norm").get<double>();
  v.v_norm = j.at("v_norm").get<double>();
  v.diag_fov = j.at("diag_fov").get<double>();
  const auto a = parse_aspect_ratio(j.at("aspect_ratio").get<std::string>());
  if (!a) throw ConfigError("bad aspect ratio in stored analysis");
  v.aspect = *a;
  return v;
}

}  // namespace

bool is_location_token(std::string_view s) {
  return std::find(kLocationTokens.begin(), kLocationTokens.end(), s) != kLocationTokens.end();
}

std::optional<ObjectMention> parse_object_mention(std::string_view s) {
  const std::string low = lower(s);
  std::size_t best = std::string::npos;
  for (const std::string_view prep : {" in ", " at ", " on "}) {
    const auto p = low.rfind(prep);
    if (p != std::string::npos && (best == std::string::npos || p > best)) best = p;
  }
  if (best == std::string::npos) return std::nullopt;
  ObjectMention m;
  m.object = std::string(trim(s.substr(0, best)));
  if (m.object.empty()) return std::nullopt;
  m.locations = split_locations(s.substr(best + 4));
  if (m.locations.empty()) return std::nullopt;
  for (const auto& loc : m.locations) {
    if (!is_location_token(loc)) return std::nullopt;
  }
  return m;
}

json to_json(const PatchAnalysis& p) {
  return {{"index", p.index},
          {"view", view_json(p.view)},
          {"neighbors", p.neighbors},
          {"analyzed", p.analyzed},
          {"caption", p.caption},
          {"objects", p.objects},
          {"spatial_facts", p.spatial_facts}};
}

PatchAnalysis patch_analysis_from_json(const json& j) {
  PatchAnalysis p;
  p.index = j.at("index").get<int>();
  p.view = view_from_json(j.at("view"));
  p.neighbors = j.at("neighbors").get<std::vector<int>>();
  p.analyzed = j.value("analyzed", false);
  p.caption = j.value("caption", "");
  p.objects = j.value("objects", std::vector<std::string>{});
  p.spatial_facts = j.value("spatial_facts", std::vector<std::string>{});
  return p;
}

json to_json(const PanoramaAnalysis& a) {
  json patches = json::array();
  for (const auto& p : a.patches) patches.push_back(to_json(p));
  return {{"panorama_id", a.panorama_id},
          {"summary", a.summary},
          {"label", to_string(a.label)},
          {"outdoor", a.outdoor},
          {"patches", patches}};
}

PanoramaAnalysis panorama_analysis_from_json(const json& j) {
  PanoramaAnalysis a;
  a.panorama_id = j.at("panorama_id").get<std::string>();
  a.summary = j.at("summary").get<std::string>();
  const auto label = parse_scene_label(j.at("label").get<std::string>());
  if (!label) throw ConfigError("stored analysis has unknown label");
  a.label = *label;
  a.outdoor = j.at("outdoor").get<bool>();
  for (const auto& p : j.at("patches")) a.patches.push_back(patch_analysis_from_json(p));
  return a;
}

const SchemaRegistry& analysis_schemas() {
  static const SchemaRegistry reg = [] {
    SchemaRegistry r = SchemaRegistry::builtin();
    r.add(std::string(schemas::kPatchAnalysis), validate_patch_full);
    r.add(std::string(schemas::kPanoramaSummary), validate_summary_full);
    return r;
  }();
  return reg;
}

std::string list_of_analyses(const std::vector<PatchAnalysis>& patches) {
  json out = json::array();
  for (const auto& p : patches) {
    json analysis = nullptr;
    if (p.analyzed) {
      analysis = {{"caption", p.caption}, {"objects", p.objects}, {"spatial_facts", p.spatial_facts}};
    }
    out.push_back({{"view_id", p.index},
                   {"uv_norm", {p.view.u_norm, p.view.v_norm}},
                   {"diag_FoV", p.view.diag_fov},
                   {"aspect_ratio", to_string(p.view.aspect)},
                   {"neighbor_views", p.neighbors},
                   {"visual_analysis", analysis}});
  }
  return out.dump(2);
}

std::vector<ViewMeta> parse_list_of_analyses(std::string_view text) {
  std::vector<ViewMeta> out;
  for (const auto& e : json::parse(text)) {
    ViewMeta m;
    m.view_id = e.at("view_id").get<int>();
    m.view.u_norm = e.at("uv_norm").at(0).get<double>();
    m.view.v_norm = e.at("uv_norm").at(1).get<double>();
    m.view.diag_fov = e.at("diag_FoV").get<double>();
    const auto a = parse_aspect_ratio(e.at("aspect_ratio").get<std::string>());
    if (!a) throw ConfigError("bad aspect ratio in list_of_analyses");
    m.view.aspect = *a;
    m.neighbors = e.at("neighbor_views").get<std::vector<int>>();
    out.push_back(std::move(m));
  }
  return out;
}

PatchAnalysis analyze_patch(Gateway& gw, const Image& patch_image, const Patch& meta, const AnalyzerOptions& opts,
                            const std::string& trace_id) {
  ChatRequest req = make_request(opts.model, render_template(templates::kPatchAnalysis, {}),
                                 {as_payload(encode_png(patch_image))}, opts.params, trace_id);
  const ModelResponse resp = gw.chat(req);
  const auto parsed = parse_json_with_repair(resp.text, schemas::kPatchAnalysis, {&gw, opts.model, trace_id},
                                             opts.repair_attempts, analysis_schemas());
  PatchAnalysis p;
  p.index = meta.index;
  p.view = meta.view;
  p.neighbors = meta.neighbors;
  p.analyzed = true;
  p.caption = parsed.value["caption"].get<std::string>();
  p.objects = parsed.value["objects"].get<std::vector<std::string>>();
  p.spatial_facts = parsed.value["spatial_facts"].get<std::vector<std::string>>();
  return p;
}

PanoramaAnalysis summarize_panorama(Gateway& gw, const std::string& panorama_id,
                                    const std::vector<PatchAnalysis>& patches, const AnalyzerOptions& opts) {
  const std::string trace = "summary/" + panorama_id;
  const auto messages = render_template(
      templates::kPanoramaSummary,
      {{"scene_labels_str", scene_labels_block()}, {"list_of_analyses", list_of_analyses(patches)}});
  const ModelResponse resp = gw.chat(make_request(opts.model, messages, {}, opts.params, trace));
  const auto parsed = parse_json_with_repair(resp.text, schemas::kPanoramaSummary, {&gw, opts.model, trace},
                                             opts.repair_attempts, analysis_schemas());
  PanoramaAnalysis a;
  a.panorama_id = panorama_id;
  a.summary = parsed.value["summary"].get<std::string>();
  a.label = *parse_scene_label(std::string(trim(parsed.value["label"].get<std::string>())));
  a.outdoor = *parse_loose_bool(parsed.value["outdoor"]);
  a.patches = patches;
  return a;
}

AnalyzeResult analyze_panorama(Gateway& gw, const Panorama& p, const AnalyzerOptions& opts) {
  check_panorama(p);
  const PatchGrid grid = patch_grid(p);
  AnalyzeResult result;
  auto patches = parallel_map(grid.patches.size(), opts.threads, [&](std::size_t i) {
    const Patch& meta = grid.patches[i];
    try {
      const Image img = render_view(p.pixels, meta.view, opts.patch_long_edge);
      return analyze_patch(gw, img, meta, opts, "patch/" + p.id + "/" + std::to_string(meta.index));
    } catch (const ParseFailure&) {
    } catch (const ContentError&) {
    }
    PatchAnalysis failed;
    failed.index = meta.index;
    failed.view = meta.view;
    failed.neighbors = meta.neighbors;
    return failed;
  });
  for (const auto& pa : patches) {
    if (!pa.analyzed) result.failed_patches.push_back(pa.index);
  }
  if (static_cast<int>(result.failed_patches.size()) > opts.max_failed_patches) {
    result.drop_reason = std::to_string(result.failed_patches.size()) + " of 12 patches unanalyzed";
    return result;
  }
  try {
    result.analysis = summarize_panorama(gw, p.id, patches, opts);
  } catch (const ParseFailure& e) {
    result.drop_reason = std::string("summary: ") + e.what();
  } catch (const ContentError& e) {
    result.drop_reason = std::string("summary refused: ") + e.what();
  }
  return result;
}

}  // namespace openview
