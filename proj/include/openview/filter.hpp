#pragma once

#include <span>
#include <string>
#include <vector>

#include "openview/chat.hpp"
#include "openview/corpus.hpp"

namespace openview {

struct FilterVerdict {
  std::string format_reason;
  bool format_valid = false;
  std::string informative_reason;
  bool informative_valid = false;
  bool parsed = true;  // false when the model output could not be repaired

  [[nodiscard]] bool passes() const { return parsed && format_valid && informative_valid; }
};

json to_json(const FilterVerdict& v);
FilterVerdict verdict_from_json(const json& j);

struct FilterOptions {
  std::string model = "assistant";
  int long_edge = 2048;
  DecodingParams params{0.0, std::nullopt};
  int repair_attempts = 3;
};

FilterVerdict assess_panorama(Gateway& gw, const Panorama& p, const FilterOptions& opts = {});

enum class GroupDecision { keep, drop };

inline constexpr int kVideoDropThreshold = 2;

// Drops the whole video when at least two sampled frames are invalid.
GroupDecision filter_video_group(std::span<const FilterVerdict> verdicts);

struct FilterReport {
  int assessed = 0;
  int valid = 0;
  int invalid = 0;
  int unparseable = 0;
  int videos_dropped = 0;
  std::vector<std::size_t> indices;     // records assessed in this run
  std::vector<FilterVerdict> verdicts;  // parallel to indices
};

// Assesses every raw record, then applies the video consistency check and
// advances record status in place. Records already filtered are left alone,
// so a second run is a no-op.
FilterReport filter_records(Gateway& gw, const CorpusStore& store, std::vector<CorpusRecord>& records,
                            const FilterOptions& opts = {}, int threads = 8);

}  // namespace openview
