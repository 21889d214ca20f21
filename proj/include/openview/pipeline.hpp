#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "openview/config.hpp"

namespace openview {

inline constexpr std::string_view kToolVersion = "openview/0.1.0";

struct OutputLayout {
  std::filesystem::path records;               // corpus records.jsonl
  std::filesystem::path filter_verdicts;
  std::filesystem::path analyses;
  std::filesystem::path analysis_failures;
  std::filesystem::path initial_proposals;
  std::filesystem::path generation_rejections;
  std::filesystem::path refined_proposals;     // confidence 3 only
  std::filesystem::path augmented_proposals;   // refined plus variants
  std::filesystem::path logs;                  // gateway logs
  std::filesystem::path manifest;
};

OutputLayout output_layout(const PipelineConfig& cfg);

class PrerequisiteError : public ConfigError {
 public:
  PrerequisiteError(Stage stage, const std::string& msg) : ConfigError(msg), stage_(stage) {}
  [[nodiscard]] Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

// Throws PrerequisiteError naming the first requested stage whose inputs
// are neither on disk nor produced by an earlier requested stage.
void check_prerequisites(const PipelineConfig& cfg, const std::set<Stage>& stages);

struct StageSummary {
  Stage stage = Stage::ingest;
  bool ok = true;
  json counts = json::object();
  std::vector<std::string> errors;
  std::vector<std::string> outputs;
};

struct RunManifest {
  std::string tool_version{kToolVersion};
  std::string generator_version;
  std::uint64_t seed = 0;
  json config;
  std::vector<StageSummary> stages;
  bool interrupted = false;

  [[nodiscard]] bool ok() const;
};

json to_json(const StageSummary& s);
json to_json(const RunManifest& m);

struct PipelineHooks {
  Gateway* assistant = nullptr;               // overrides the configured backend
  const std::atomic<bool>* stop = nullptr;    // checked between work items
  std::function<void(const std::string&)> progress;
};

// Runs the requested stages in pipeline order and writes the run manifest.
// Contains no timestamps, so identical inputs give identical manifests.
RunManifest run_pipeline(const PipelineConfig& cfg, const std::set<Stage>& stages, const PipelineHooks& hooks = {});

}  // namespace openview
