#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "openview/errors.hpp"

namespace openview {

enum class Role { system, user, assistant };
std::string_view to_string(Role r);

struct TemplatePart {
  Role role;
  std::string_view body;
};

struct PromptTemplate {
  std::string_view name;
  std::vector<TemplatePart> parts;

  // Names appearing as {identifier} in any part.
  [[nodiscard]] std::set<std::string> placeholders() const;
};

struct RenderedMessage {
  Role role;
  std::string content;
};

using Bindings = std::map<std::string, std::string>;

namespace templates {
inline constexpr std::string_view kFilter = "stage1-filter";
inline constexpr std::string_view kPatchAnalysis = "stage2-patch";
inline constexpr std::string_view kPanoramaSummary = "stage2-summary";
inline constexpr std::string_view kGeneratorBase = "stage3-base";
inline constexpr std::string_view kGeneratorContextual = "stage3-contextual";
inline constexpr std::string_view kGeneratorDirectional = "stage3-directional";
inline constexpr std::string_view kGeneratorUser = "stage3-user";
inline constexpr std::string_view kFormatCorrector = "stage4-format";
inline constexpr std::string_view kInference = "bench-inference";
inline constexpr std::string_view kJudge = "bench-judge";
inline constexpr std::string_view kCaptionLoop = "caption-loop";
}  // namespace templates

const std::vector<PromptTemplate>& template_registry();
const PromptTemplate& find_template(std::string_view name);

// Substitutes {name} placeholders in a single left-to-right pass; bound
// values are not rescanned. Throws ConfigError on unknown names.
std::string substitute(std::string_view body, const Bindings& bindings);

// One message per template part. Throws ConfigError naming the template or
// the first unbound placeholder.
std::vector<RenderedMessage> render_template(std::string_view name, const Bindings& bindings);

// The 11 scene labels followed by their definitions, for {scene_labels_str}.
std::string scene_labels_block();

}  // namespace openview
