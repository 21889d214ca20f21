#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "openview/chat.hpp"
#include "openview/proposal.hpp"

namespace openview {

struct BenchmarkItem {
  std::string id;
  Proposal proposal;
  std::string image_path;
  [[nodiscard]] char answer() const { return proposal.answer; }
  [[nodiscard]] TaskType task() const { return proposal.task; }
};

json to_json(const BenchmarkItem& item);
BenchmarkItem benchmark_item_from_json(const json& j);

// "A. ...\nB. ...\nC. ...\nD. ...\nE. ..."
std::string format_options(const Proposal& p);
// Per-option rationales and the conclusion, as shown to the judge.
std::string ground_truth_rationale(const Proposal& p);

std::vector<RenderedMessage> build_inference_prompt(const BenchmarkItem& item);

// Last <answer> tag (any case), first standalone capital A-E inside it; a
// lone lowercase letter is accepted too. Never throws.
std::optional<char> extract_choice(std::string_view response);

enum class Verdict { yes, no, not_judged };
std::string_view to_string(Verdict v);
Verdict parse_verdict_name(std::string_view s);

// Yes/No from the judge's last answer tag.
std::optional<bool> parse_judge_verdict(std::string_view text);

struct EvalRecord {
  std::string item_id;
  std::string model_id;
  std::string raw_response;
  std::optional<char> choice;
  bool choice_correct = false;
  Verdict rationale = Verdict::not_judged;
  std::string judge_raw;
};

json to_json(const EvalRecord& r);
EvalRecord eval_record_from_json(const json& j);

struct JudgeOptions {
  std::string model = "judge";
  int retries = 1;
};

// Temperature 0. An unparseable verdict is retried, then counted as no.
Verdict judge_rationale(Gateway& judge, const BenchmarkItem& item, std::string_view response,
                        const JudgeOptions& opts = {}, std::string* raw_out = nullptr);

struct InferenceOptions {
  std::string model = "candidate";
  DecodingParams params;
  int threads = 8;
};

// Runs the candidate on each item; images are read from item.image_path
// resolved against image_root.
std::vector<EvalRecord> run_inference(Gateway& candidate, const std::vector<BenchmarkItem>& items,
                                      const std::string& image_root, const InferenceOptions& opts = {});
// Judges every record whose choice is correct; others stay not_judged.
void run_judging(Gateway& judge, const std::vector<BenchmarkItem>& items, std::vector<EvalRecord>& records,
                 const JudgeOptions& opts = {}, int threads = 8);

struct SplitMetrics {
  int total = 0;
  int correct = 0;
  int rationale_yes = 0;
  int rationale_no = 0;
  int joint = 0;
  double choice_acc = 0.0;
  double rationale_acc = 0.0;
  double joint_acc = 0.0;
  bool rationale_undefined = false;
};

struct MetricsReport {
  std::string model_id;
  SplitMetrics contextual;
  SplitMetrics directional;
  SplitMetrics overall;
};

// Throws ConfigError on an empty record set or a record for an unknown item.
MetricsReport compute_metrics(const std::vector<EvalRecord>& records, const std::vector<BenchmarkItem>& items);

json to_json(const MetricsReport& r);
// Percentages with two decimals, columns grouped by task.
std::string format_metrics_table(const std::vector<MetricsReport>& reports);

// Caption view loop.

inline constexpr int kCaptionLoopViews = 8;
inline constexpr double kCaptionLoopStepDeg = 45.0;
inline constexpr double kCaptionLoopHfovDeg = 90.0;

class CaptionParseFailure : public std::runtime_error {
 public:
  explicit CaptionParseFailure(std::vector<std::string> missing);
  [[nodiscard]] const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

std::array<std::string, kCaptionLoopViews> parse_caption_loop(std::string_view text);

// Start view with a 90° horizontal field of view.
ViewSpec caption_start_view(double u_norm, double v_norm, AspectRatio aspect = AspectRatio::k1x1);
// The start view followed by seven views each rotated 45° to the right.
std::vector<ViewSpec> caption_loop_views(const ViewSpec& start);

struct CaptionLoopResult {
  ViewSpec start;
  std::array<std::string, kCaptionLoopViews> descriptions;
  std::array<double, kCaptionLoopViews> yaw_offsets{};  // degrees right of start
  double total_rotation = 0.0;                          // closes the loop: 360
};

CaptionLoopResult caption_view_loop(Gateway& gw, const Panorama& pano, const ViewSpec& start,
                                    const std::string& model = "candidate", int long_edge = 1024);

}  // namespace openview
