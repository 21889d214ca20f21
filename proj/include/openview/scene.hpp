#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace openview {

enum class SceneLabel {
  Civic,
  Rural,
  Nature,
  Culture,
  Heritage,
  Transport,
  Education,
  Hospitality,
  Workplace,
  Residential,
  Commercial,
};

inline constexpr int kSceneLabelCount = 11;

inline constexpr std::array<SceneLabel, kSceneLabelCount> kAllSceneLabels = {
    SceneLabel::Civic,     SceneLabel::Rural,       SceneLabel::Nature,      SceneLabel::Culture,
    SceneLabel::Heritage,  SceneLabel::Transport,   SceneLabel::Education,   SceneLabel::Hospitality,
    SceneLabel::Workplace, SceneLabel::Residential, SceneLabel::Commercial,
};

std::string_view to_string(SceneLabel s);
std::string_view scene_definition(SceneLabel s);
// Exact, case-sensitive match against the taxonomy.
std::optional<SceneLabel> parse_scene_label(std::string_view s);

}  // namespace openview
