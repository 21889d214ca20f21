#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "openview/chat.hpp"
#include "openview/geometry.hpp"
#include "openview/json_repair.hpp"
#include "openview/scene.hpp"

namespace openview {

inline constexpr std::array<std::string_view, 9> kLocationTokens = {
    "top-left", "top", "top-right", "left", "center", "right", "bottom-left", "bottom", "bottom-right"};

bool is_location_token(std::string_view s);

struct ObjectMention {
  std::string object;
  std::vector<std::string> locations;
};

// "trees at the top-right and right" -> {trees, [top-right, right]}.
// nullopt when there is no in/at/on clause or a location is not a token.
std::optional<ObjectMention> parse_object_mention(std::string_view s);

struct PatchAnalysis {
  int index = 0;
  ViewSpec view;
  std::vector<int> neighbors;
  bool analyzed = false;
  std::string caption;
  std::vector<std::string> objects;
  std::vector<std::string> spatial_facts;
};

struct PanoramaAnalysis {
  std::string panorama_id;
  std::string summary;
  SceneLabel label = SceneLabel::Civic;
  bool outdoor = false;
  std::vector<PatchAnalysis> patches;  // always 12, in grid order
};

json to_json(const PatchAnalysis& p);
PatchAnalysis patch_analysis_from_json(const json& j);
json to_json(const PanoramaAnalysis& a);
PanoramaAnalysis panorama_analysis_from_json(const json& j);

// Builtin schemas plus the location-token and taxonomy checks.
const SchemaRegistry& analysis_schemas();

// Value bound to {list_of_analyses}: a JSON array with one object per view.
std::string list_of_analyses(const std::vector<PatchAnalysis>& patches);

struct ViewMeta {
  int view_id = 0;
  ViewSpec view;
  std::vector<int> neighbors;
};
// Inverse of list_of_analyses for the view metadata.
std::vector<ViewMeta> parse_list_of_analyses(std::string_view text);

struct AnalyzerOptions {
  std::string model = "assistant";
  int patch_long_edge = 768;
  int max_failed_patches = 2;
  DecodingParams params;
  int repair_attempts = 3;
  int threads = 12;
};

// Throws ParseFailure when the output cannot be repaired into the schema.
PatchAnalysis analyze_patch(Gateway& gw, const Image& patch_image, const Patch& meta, const AnalyzerOptions& opts = {},
                            const std::string& trace_id = {});

// Throws ParseFailure on an unrepairable summary or an unknown label.
PanoramaAnalysis summarize_panorama(Gateway& gw, const std::string& panorama_id,
                                    const std::vector<PatchAnalysis>& patches, const AnalyzerOptions& opts = {});

struct AnalyzeResult {
  std::optional<PanoramaAnalysis> analysis;
  std::vector<int> failed_patches;
  std::string drop_reason;  // set when analysis is empty
};

AnalyzeResult analyze_panorama(Gateway& gw, const Panorama& p, const AnalyzerOptions& opts = {});

}  // namespace openview
