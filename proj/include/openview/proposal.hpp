#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "openview/geometry.hpp"
#include "openview/jsonl.hpp"

namespace openview {

enum class TaskType { contextual, directional };
std::string_view to_string(TaskType t);
TaskType parse_task_type(std::string_view s);

inline constexpr std::array<char, 5> kOptionLetters = {'A', 'B', 'C', 'D', 'E'};

struct Provenance {
  std::string panorama_id;
  std::string generator_version;
  std::uint64_t seed = 0;
  std::string parent_id;                     // set on augmented variants
  std::optional<std::array<int, 4>> permutation;  // perm[old slot] = new slot over A-D
  double jitter_yaw = 0.0;
  double jitter_pitch = 0.0;
  int variant = 0;  // 0 for the original
};

struct Proposal {
  std::string id;
  TaskType task = TaskType::contextual;
  ViewSpec view;
  std::string view_reasoning;
  std::string question_reasoning;
  std::string question;
  std::array<std::string, 5> options;
  char answer = 'A';
  std::array<std::string, 5> rationales;
  std::string conclusion;
  int confidence = 1;
  Provenance provenance;
  std::optional<int> neighbor_patch;  // directional ground-truth patch
  std::string view_image;             // rendered artifact path, when stored

  [[nodiscard]] const std::string& option(char letter) const { return options.at(letter - 'A'); }
  [[nodiscard]] const std::string& correct_text() const { return option(answer); }
};

class ProposalRejected : public std::runtime_error {
 public:
  ProposalRejected(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

json to_json(const Proposal& p);
Proposal proposal_from_json(const json& j);

// Stable id from (panorama id, task type, question text).
std::string proposal_id(std::string_view panorama_id, TaskType task, std::string_view question);

// Letter for the model's answer field: "C", "c", "option_c", "Option C",
// "(C)", "C. text", or the exact text of one option. nullopt otherwise.
std::optional<char> normalize_answer(std::string_view answer, const std::array<std::string, 5>& options);

// Combination or negation style text suitable for slot E.
bool is_interference_option(std::string_view text);

// Validates one element of the generator's output list against its schema
// and ranges. Throws ProposalRejected naming the offending field.
Proposal validate_proposal(const json& raw, TaskType task);

// Throws DomainError unless the proposal's invariants hold.
void check_proposal(const Proposal& p);

}  // namespace openview
