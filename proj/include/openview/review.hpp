#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "openview/proposal.hpp"

namespace openview {

enum class ReviewStatus { pending, revised, accepted, rejected };
enum class CrossReview { none, passed, failed };
enum class VerdictKind { accept, revise, reject };

std::string_view to_string(ReviewStatus s);
std::string_view to_string(CrossReview c);
std::string_view to_string(VerdictKind v);
ReviewStatus parse_review_status(std::string_view s);
VerdictKind parse_verdict_kind(std::string_view s);

struct FieldDiff {
  std::string field;  // "question", "options.B", "view.diag_fov", ...
  json before;
  json after;
  std::string editor;
  std::string timestamp;
  int round = 1;
};

struct VerdictEntry {
  std::string reviewer;
  VerdictKind verdict = VerdictKind::accept;
  int round = 1;
  std::string timestamp;
};

struct ReviewState {
  std::string proposal_id;
  int round = 1;
  ReviewStatus status = ReviewStatus::pending;
  std::string editor_id;  // last editor
  std::vector<FieldDiff> history;
  std::vector<VerdictEntry> verdicts;
  CrossReview cross_review = CrossReview::none;
  std::set<std::string> acceptors;  // accepts on the current content

  [[nodiscard]] bool terminal() const { return status == ReviewStatus::accepted || status == ReviewStatus::rejected; }
  [[nodiscard]] bool awaiting_cross_review() const { return !terminal() && acceptors.size() == 1; }
};

json to_json(const FieldDiff& d);
json to_json(const ReviewState& s);
ReviewState review_state_from_json(const json& j);

json view_to_json(const ViewSpec& v);

// Error with the HTTP status the service maps it to.
class ReviewError : public std::runtime_error {
 public:
  ReviewError(int http_status, const std::string& msg, std::vector<std::string> details = {})
      : std::runtime_error(msg), status_(http_status), details_(std::move(details)) {}
  [[nodiscard]] int http_status() const { return status_; }
  [[nodiscard]] const std::vector<std::string>& details() const { return details_; }

 private:
  int status_;
  std::vector<std::string> details_;
};

// Parses a view edit; throws ReviewError(422) listing every violated range.
ViewSpec parse_view_edit(const json& j, const ViewSpec& current);

// Number of distinct reviewers needed to accept.
inline constexpr std::size_t kRequiredAcceptors = 2;

// Proposals and their review states, persisted to <dir>/review.json after
// every mutation. Readers run concurrently; writers are serialized.
class ReviewStore {
 public:
  using Clock = std::function<std::string()>;

  explicit ReviewStore(std::filesystem::path dir, Clock clock = {});

  // Adds proposals not yet present as pending. Returns how many were added.
  int add(const std::vector<Proposal>& proposals);

  [[nodiscard]] std::vector<std::pair<Proposal, ReviewState>> list(std::optional<ReviewStatus> status = {}) const;
  [[nodiscard]] std::pair<Proposal, ReviewState> get(const std::string& id) const;
  [[nodiscard]] std::vector<Proposal> accepted() const;

  // Returns true when the view changed. Invalid specs throw ReviewError(422).
  bool update_view(const std::string& id, const ViewSpec& view, const std::string& editor);
  // Editable: question, view_reasoning, question_reasoning, conclusion,
  // answer, options.{A-E}, option_rationales.{A-E}. Returns the new state.
  ReviewState update_fields(const std::string& id, const json& fields, const std::string& editor);
  ReviewState record_verdict(const std::string& id, const std::string& reviewer, VerdictKind verdict,
                             const json& edits = json());

  [[nodiscard]] std::filesystem::path state_path() const { return dir_ / "review.json"; }

 private:
  struct Entry {
    Proposal proposal;
    ReviewState state;
  };

  Entry& find(const std::string& id);
  const Entry& find(const std::string& id) const;
  void require_editable(const Entry& e) const;
  // Applies edits; returns the number of changed fields.
  int apply_fields(Entry& e, const json& fields, const std::string& editor);
  void log_diff(Entry& e, std::string field, json before, json after, const std::string& editor);
  void begin_revision(Entry& e, const std::string& editor);
  void persist() const;
  void load();

  std::filesystem::path dir_;
  Clock clock_;
  mutable std::shared_mutex mu_;
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

std::string utc_timestamp();

}  // namespace openview
