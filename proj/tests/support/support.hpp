#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "openview/geometry.hpp"
#include "openview/prompts.hpp"
#include "openview/proposal.hpp"

namespace openview::testing {

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "ov");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

// Markdown source holding the appendix prompt boxes and the results table.
std::filesystem::path reference_document();

// Float panorama whose pixel (i, j) stores f(direction of the pixel centre).
ImageF analytic_panorama(int width, int height, const std::function<std::array<float, 3>(const Vec3&)>& f);

// Deterministic noisy 2:1 panorama; distinct seeds give distinct hashes.
Image synthetic_panorama(int width, int height, std::uint64_t seed);

// Writes `count` distinct PNG panoramas plus a manifest listing them as
// still images. Returns the manifest path.
std::filesystem::path write_image_corpus(const std::filesystem::path& dir, int count, int width = 256,
                                         std::uint64_t seed = 1);

// A structurally valid proposal with the given answer letter.
Proposal make_proposal(const std::string& id, TaskType task, char answer, std::string panorama_id = "pano0");

// Raw generator element in the wire schema.
nlohmann::json raw_proposal_json(char answer = 'B', double diag_fov = 70.0, int confidence = 3);

struct AppendixPart {
  Role role;
  std::string text;
};

// Plain-text rendering of every prompt box, keyed by its table label
// ("prompt_stage1_filter", ...). Text before any role heading is tagged
// Role::assistant: it continues the previous box.
std::map<std::string, std::vector<AppendixPart>> appendix_prompts(const std::filesystem::path& doc);

// Registry template name -> expected part bodies, assembled from the boxes.
std::map<std::string, std::vector<AppendixPart>> expected_templates(const std::filesystem::path& doc);

// Numeric cells of the results-table row that starts with `model`.
std::vector<double> results_row(const std::filesystem::path& doc, const std::string& model);

}  // namespace openview::testing
