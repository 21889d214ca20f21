#pragma once

#include <optional>
#include <string>
#include <vector>

#include "openview/analyzer.hpp"
#include "openview/chat.hpp"
#include "openview/proposal.hpp"

namespace openview {

inline constexpr int kDefaultProposalsPerJob = 3;
inline constexpr std::string_view kGeneratorVersion = "openview-gen/1";

struct GeneratorOptions {
  std::string model = "assistant";
  DecodingParams params;
  int panorama_long_edge = 2048;
  std::uint64_t seed = 0;
  int repair_attempts = 3;
};

// Base block, a blank line, then the task-specific block.
std::string generator_system_prompt(TaskType task);
std::vector<RenderedMessage> generation_messages(const PanoramaAnalysis& analysis, TaskType task, int k);

struct GenerationResult {
  std::vector<Proposal> proposals;
  std::vector<std::string> rejections;  // one entry per dropped element
  std::string error;                    // set when no proposal survived

  [[nodiscard]] bool failed() const { return proposals.empty(); }
};

GenerationResult generate_proposals(Gateway& gw, const Panorama& pano, const PanoramaAnalysis& analysis, TaskType task,
                                    int k = kDefaultProposalsPerJob, const GeneratorOptions& opts = {});

struct Rotation {
  double dyaw = 0.0;    // positive to the right
  double dpitch = 0.0;  // positive upward
};

// Reads the camera rotation from a directional question ("turn left about
// 40° and tilt up slightly"). A bare "slightly" is 15°, a missing amount 45°.
std::optional<Rotation> parse_rotation_instruction(std::string_view question);

// Grid patch nearest to the base view rotated by the question's instruction.
std::optional<int> directional_neighbor(const Proposal& p);

Image render_question_view(const Panorama& pano, const Proposal& p, int long_edge = 1024);

}  // namespace openview
