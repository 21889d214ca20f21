#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "openview/chat.hpp"
#include "openview/jsonl.hpp"

namespace openview {

// Returns the list of schema violations; empty means valid.
using SchemaValidator = std::function<std::vector<std::string>(const json&)>;

namespace schemas {
inline constexpr std::string_view kFilterVerdict = "filter_verdict";
inline constexpr std::string_view kPatchAnalysis = "patch_analysis";
inline constexpr std::string_view kPanoramaSummary = "panorama_summary";
inline constexpr std::string_view kProposalList = "proposal_list";
inline constexpr std::string_view kStringArray = "string_array";
}  // namespace schemas

class SchemaRegistry {
 public:
  void add(std::string id, SchemaValidator v);
  [[nodiscard]] const SchemaValidator& get(std::string_view id) const;
  [[nodiscard]] bool contains(std::string_view id) const;

  // Registry preloaded with the structural schemas above.
  static const SchemaRegistry& builtin();

 private:
  std::map<std::string, SchemaValidator, std::less<>> validators_;
};

class ParseFailure : public std::runtime_error {
 public:
  explicit ParseFailure(std::vector<std::string> errors);
  [[nodiscard]] const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

// Returns the body of the first ``` fenced block, or the input when unfenced.
std::string strip_code_fences(std::string_view raw);

// Deterministic version of the corrector's rules: leading/trailing junk,
// trailing or missing commas, single quotes, Python literals, unclosed
// brackets, mixed string/dict lists, URLs and doubled apostrophes.
std::optional<json> local_repair(std::string_view raw);

struct CorrectorConfig {
  Gateway* gateway = nullptr;  // no model calls when null
  std::string model;
  std::string trace_id;
};

struct RepairOutcome {
  json value;
  int model_calls = 0;
  bool repaired = false;  // false when the input parsed and validated as-is
  std::vector<std::string> errors;
};

// Direct parse, then local repair, then up to max_attempts corrector calls.
RepairOutcome parse_json_with_repair(std::string_view raw, std::string_view schema_id,
                                     const CorrectorConfig& corrector = {}, int max_attempts = 3,
                                     const SchemaRegistry& registry = SchemaRegistry::builtin());

// Accepts JSON booleans and the strings true/false/True/False.
std::optional<bool> parse_loose_bool(const json& v);

}  // namespace openview
