#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "openview/bench.hpp"
#include "openview/scene.hpp"

namespace openview {

struct BalanceSpec {
  int target = 1327;
  int letter_tolerance = 10;  // max - min over A-E
  // Allowed deviation of each scene's count from its share of the pool.
  std::optional<int> scene_tolerance;
  std::uint64_t seed = 0;
};

// Names the constraint that could not be met: "target", "task split",
// "letter balance" or "scene balance".
class AssemblyError : public std::runtime_error {
 public:
  AssemblyError(std::string constraint, const std::string& msg)
      : std::runtime_error(constraint + ": " + msg), constraint_(std::move(constraint)) {}
  [[nodiscard]] const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

json to_json(const BalanceSpec& s);
BalanceSpec balance_spec_from_json(const json& j);

struct AssemblyReport {
  std::vector<BenchmarkItem> items;
  std::map<char, int> letters;
  std::map<std::string, int> scenes;
  int contextual = 0;
  int directional = 0;
  [[nodiscard]] int letter_spread() const;
};

// Greedy seeded selection: task quota first (ceil/floor of half), then the
// least-filled answer letter, then the scene furthest below its share.
// Pool entries are distinct proposals (originals and augmented variants).
AssemblyReport assemble_benchmark(const std::vector<Proposal>& pool, const BalanceSpec& spec,
                                  const std::map<std::string, SceneLabel>& scene_of_panorama = {});

// Image path used for a benchmark item, relative to the benchmark root.
std::string item_image_path(const std::string& proposal_id);

}  // namespace openview
