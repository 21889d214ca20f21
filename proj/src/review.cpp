#include "openview/review.hpp"

#include <chrono>
#include <ctime>

#include "openview/errors.hpp"
#include "openview/geometry.hpp"

namespace openview {

namespace fs = std::filesystem;

std::string_view to_string(ReviewStatus s) {
  switch (s) {
    case ReviewStatus::pending:
      return "pending";
    case ReviewStatus::revised:
      return "revised";
    case ReviewStatus::accepted:
      return "accepted";
    case ReviewStatus::rejected:
      return "rejected";
  }
  return "pending";
}

std::string_view to_string(CrossReview c) {
  switch (c) {
    case CrossReview::none:
      return "none";
    case CrossReview::passed:
      return "passed";
    case CrossReview::failed:
      return "failed";
  }
  return "none";
}

std::string_view to_string(VerdictKind v) {
  switch (v) {
    case VerdictKind::accept:
      return "accept";
    case VerdictKind::revise:
      return "revise";
    case VerdictKind::reject:
      return "reject";
  }
  return "accept";
}

ReviewStatus parse_review_status(std::string_view s) {
  for (auto v : {ReviewStatus::pending, ReviewStatus::revised, ReviewStatus::accepted, ReviewStatus::rejected})
    if (to_string(v) == s) return v;
  throw ReviewError(400, "unknown status: " + std::string(s));
}

VerdictKind parse_verdict_kind(std::string_view s) {
  for (auto v : {VerdictKind::accept, VerdictKind::revise, VerdictKind::reject})
    if (to_string(v) == s) return v;
  throw ReviewError(400, "unknown verdict: " + std::string(s));
}

namespace {

CrossReview parse_cross_review(std::string_view s) {
  for (auto v : {CrossReview::none, CrossReview::passed, CrossReview::failed})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown cross_review: " + std::string(s));
}

}  // namespace

json to_json(const FieldDiff& d) {
  return {{"field", d.field}, {"before", d.before}, {"after", d.after},
          {"editor", d.editor}, {"timestamp", d.timestamp}, {"round", d.round}};
}

json to_json(const ReviewState& s) {
  json history = json::array();
  for (const auto& d : s.history) history.push_back(to_json(d));
  json verdicts = json::array();
  for (const auto& v : s.verdicts) {
    verdicts.push_back(
        {{"reviewer", v.reviewer}, {"verdict", to_string(v.verdict)}, {"round", v.round}, {"timestamp", v.timestamp}});
  }
  return {{"proposal_id", s.proposal_id},
          {"round", s.round},
          {"status", to_string(s.status)},
          {"editor_id", s.editor_id},
          {"history", history},
          {"verdicts", verdicts},
          {"cross_review", to_string(s.cross_review)},
          {"acceptors", s.acceptors},
          {"awaiting_cross_review", s.awaiting_cross_review()}};
}

ReviewState review_state_from_json(const json& j) {
  ReviewState s;
  s.proposal_id = j.at("proposal_id").get<std::string>();
  s.round = j.value("round", 1);
  s.status = parse_review_status(j.value("status", "pending"));
  s.editor_id = j.value("editor_id", "");
  for (const auto& d : j.value("history", json::array())) {
    s.history.push_back({d.at("field").get<std::string>(), d.at("before"), d.at("after"), d.value("editor", ""),
                         d.value("timestamp", ""), d.value("round", 1)});
  }
  for (const auto& v : j.value("verdicts", json::array())) {
    s.verdicts.push_back({v.at("reviewer").get<std::string>(), parse_verdict_kind(v.at("verdict").get<std::string>()),
                          v.value("round", 1), v.value("timestamp", "")});
  }
  s.cross_review = parse_cross_review(j.value("cross_review", "none"));
  s.acceptors = j.value("acceptors", std::set<std::string>{});
  return s;
}

json view_to_json(const ViewSpec& v) {
  return {{"u_norm", v.u_norm},
          {"v_norm", v.v_norm},
          {"diag_fov", v.diag_fov},
          {"aspect_ratio", to_string(v.aspect)},
          {"roll", v.roll}};
}

ViewSpec parse_view_edit(const json& j, const ViewSpec& current) {
  if (!j.is_object()) throw ReviewError(422, "view must be a JSON object");
  ViewSpec v = current;
  std::vector<std::string> errors;
  auto number = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) {
      errors.push_back(std::string(key) + " must be a number");
      return;
    }
    out = j[key].get<double>();
  };
  number("u_norm", v.u_norm);
  number("v_norm", v.v_norm);
  number(j.contains("diag_fov") ? "diag_fov" : "diag_FoV", v.diag_fov);
  if (j.contains("aspect_ratio")) {
    const auto ar = j["aspect_ratio"].is_string() ? parse_aspect_ratio(j["aspect_ratio"].get<std::string>())
                                                  : std::nullopt;
    if (ar) {
      v.aspect = *ar;
    } else {
      errors.push_back("aspect_ratio must be one of 4:3, 3:4, 3:2, 2:3, 16:9, 9:16, 1:1");
    }
  }
  if (j.contains("roll") && (!j["roll"].is_number() || j["roll"].get<double>() != 0.0))
    errors.push_back("roll must be 0");
  for (auto& e : view_spec_violations(v, kProposalFov)) errors.push_back(std::move(e));
  if (!errors.empty()) throw ReviewError(422, "invalid view", errors);
  return v;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ReviewStore::ReviewStore(fs::path dir, Clock clock) : dir_(std::move(dir)), clock_(std::move(clock)) {
  if (!clock_) clock_ = utc_timestamp;
  fs::create_directories(dir_);
  load();
}

void ReviewStore::load() {
  if (!fs::exists(state_path())) return;
  const json doc = read_json_file(state_path());
  for (const auto& e : doc.at("proposals")) {
    Entry entry{proposal_from_json(e.at("proposal")), review_state_from_json(e.at("review"))};
    const std::string id = entry.proposal.id;
    order_.push_back(id);
    entries_.emplace(id, std::move(entry));
  }
}

void ReviewStore::persist() const {
  json list = json::array();
  for (const auto& id : order_) {
    const Entry& e = entries_.at(id);
    list.push_back({{"proposal", to_json(e.proposal)}, {"review", to_json(e.state)}});
  }
  const fs::path tmp = state_path().string() + ".tmp";
  write_json_file(tmp, {{"proposals", list}});
  fs::rename(tmp, state_path());
}

int ReviewStore::add(const std::vector<Proposal>& proposals) {
  std::unique_lock lock(mu_);
  int added = 0;
  for (const auto& p : proposals) {
    if (entries_.count(p.id)) continue;
    ReviewState s;
    s.proposal_id = p.id;
    entries_.emplace(p.id, Entry{p, s});
    order_.push_back(p.id);
    ++added;
  }
  if (added) persist();
  return added;
}

ReviewStore::Entry& ReviewStore::find(const std::string& id) {
  const auto it = entries_.find(id);
  if (it == entries_.end()) throw ReviewError(404, "no proposal " + id);
  return it->second;
}

const ReviewStore::Entry& ReviewStore::find(const std::string& id) const {
  const auto it = entries_.find(id);
  if (it == entries_.end()) throw ReviewError(404, "no proposal " + id);
  return it->second;
}

std::vector<std::pair<Proposal, ReviewState>> ReviewStore::list(std::optional<ReviewStatus> status) const {
  std::shared_lock lock(mu_);
  std::vector<std::pair<Proposal, ReviewState>> out;
  for (const auto& id : order_) {
    const Entry& e = entries_.at(id);
    if (!status || e.state.status == *status) out.emplace_back(e.proposal, e.state);
  }
  return out;
}

std::pair<Proposal, ReviewState> ReviewStore::get(const std::string& id) const {
  std::shared_lock lock(mu_);
  const Entry& e = find(id);
  return {e.proposal, e.state};
}

std::vector<Proposal> ReviewStore::accepted() const {
  std::vector<Proposal> out;
  for (auto& [p, s] : list(ReviewStatus::accepted)) out.push_back(std::move(p));
  return out;
}

void ReviewStore::require_editable(const Entry& e) const {
  if (e.state.terminal()) {
    throw ReviewError(409, "proposal " + e.proposal.id + " is " + std::string(to_string(e.state.status)) +
                               "; further changes are refused");
  }
}

void ReviewStore::log_diff(Entry& e, std::string field, json before, json after, const std::string& editor) {
  e.state.history.push_back({std::move(field), std::move(before), std::move(after), editor, clock_(), e.state.round});
}

void ReviewStore::begin_revision(Entry& e, const std::string& editor) {
  // A content change after any verdict in this round opens the next round.
  const bool judged = std::any_of(e.state.verdicts.begin(), e.state.verdicts.end(),
                                  [&](const VerdictEntry& v) { return v.round == e.state.round; });
  if (judged) ++e.state.round;
  e.state.status = ReviewStatus::revised;
  e.state.editor_id = editor;
  e.state.acceptors.clear();
}

bool ReviewStore::update_view(const std::string& id, const ViewSpec& view, const std::string& editor) {
  std::unique_lock lock(mu_);
  Entry& e = find(id);
  require_editable(e);
  std::vector<std::string> errors = view_spec_violations(view, kProposalFov);
  if (view.roll != 0.0) errors.push_back("roll must be 0");
  if (!errors.empty()) throw ReviewError(422, "invalid view", errors);
  const json before = view_to_json(e.proposal.view);
  const json after = view_to_json(view);
  if (before == after) return false;
  for (const auto& [key, value] : after.items()) {
    if (before[key] != value) log_diff(e, "view." + key, before[key], value, editor);
  }
  e.proposal.view = view;
  e.proposal.view_image.clear();
  begin_revision(e, editor);
  persist();
  return true;
}

int ReviewStore::apply_fields(Entry& e, const json& fields, const std::string& editor) {
  if (!fields.is_object()) throw ReviewError(422, "fields must be a JSON object");
  Proposal next = e.proposal;
  std::vector<std::string> errors;
  std::vector<std::tuple<std::string, json, json>> diffs;

  auto text = [&](const std::string& name, const json& value, std::string& slot) {
    if (!value.is_string() || value.get<std::string>().empty()) {
      errors.push_back(name + " must be a non-empty string");
      return;
    }
    if (slot != value.get<std::string>()) {
      diffs.emplace_back(name, slot, value);
      slot = value.get<std::string>();
    }
  };
  auto lettered = [&](const std::string& name, const json& value, std::array<std::string, 5>& slots) {
    if (!value.is_object()) {
      errors.push_back(name + " must be an object keyed A-E");
      return;
    }
    for (const auto& [k, v] : value.items()) {
      if (k.size() != 1 || k[0] < 'A' || k[0] > 'E') {
        errors.push_back(name + "." + k + " is not an option letter");
        continue;
      }
      text(name + "." + k, v, slots[k[0] - 'A']);
    }
  };

  for (const auto& [key, value] : fields.items()) {
    if (key == "question") {
      text(key, value, next.question);
    } else if (key == "view_reasoning") {
      text(key, value, next.view_reasoning);
    } else if (key == "question_reasoning") {
      text(key, value, next.question_reasoning);
    } else if (key == "conclusion") {
      text(key, value, next.conclusion);
    } else if (key == "options") {
      lettered(key, value, next.options);
    } else if (key == "option_rationales") {
      lettered(key, value, next.rationales);
    } else if (key == "answer") {
      const std::string a = value.is_string() ? value.get<std::string>() : "";
      if (a.size() != 1 || a[0] < 'A' || a[0] > 'E') {
        errors.push_back("answer must be one of A-E");
      } else if (a[0] != next.answer) {
        diffs.emplace_back(key, std::string(1, next.answer), a);
        next.answer = a[0];
      }
    } else {
      errors.push_back(key + " is not editable");
    }
  }
  if (!is_interference_option(next.options[4])) errors.push_back("options.E must stay an interference option");
  if (!errors.empty()) throw ReviewError(422, "invalid field edits", errors);
  for (auto& [field, before, after] : diffs) log_diff(e, field, before, after, editor);
  e.proposal = std::move(next);
  if (!diffs.empty()) begin_revision(e, editor);
  return static_cast<int>(diffs.size());
}

ReviewState ReviewStore::update_fields(const std::string& id, const json& fields, const std::string& editor) {
  std::unique_lock lock(mu_);
  Entry& e = find(id);
  require_editable(e);
  if (apply_fields(e, fields, editor) > 0) persist();
  return e.state;
}

ReviewState ReviewStore::record_verdict(const std::string& id, const std::string& reviewer, VerdictKind verdict,
                                        const json& edits) {
  if (reviewer.empty()) throw ReviewError(401, "reviewer identity required");
  std::unique_lock lock(mu_);
  Entry& e = find(id);
  require_editable(e);
  if (verdict == VerdictKind::accept && e.state.acceptors.count(reviewer) && (edits.is_null() || edits.empty())) {
    throw ReviewError(409, "reviewer " + reviewer + " already accepted " + id +
                               "; acceptance needs a second, distinct reviewer");
  }
  if (!edits.is_null()) apply_fields(e, edits, reviewer);

  e.state.verdicts.push_back({reviewer, verdict, e.state.round, clock_()});
  switch (verdict) {
    case VerdictKind::accept:
      e.state.acceptors.insert(reviewer);
      if (e.state.acceptors.size() >= kRequiredAcceptors) {
        e.state.status = ReviewStatus::accepted;
        e.state.cross_review = CrossReview::passed;
      }
      break;
    case VerdictKind::revise:
      begin_revision(e, reviewer);
      break;
    case VerdictKind::reject: {
      const bool other_accepted = std::any_of(e.state.acceptors.begin(), e.state.acceptors.end(),
                                              [&](const std::string& a) { return a != reviewer; });
      e.state.status = ReviewStatus::rejected;
      e.state.cross_review = other_accepted ? CrossReview::failed : CrossReview::none;
      break;
    }
  }
  persist();
  return e.state;
}

}  // namespace openview
