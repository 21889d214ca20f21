#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "openview/assembly.hpp"
#include "openview/chat.hpp"
#include "openview/mock_assistant.hpp"
#include "openview/refiner.hpp"

namespace openview {

// Subset of TOML: [table] and [dotted.table] headers, key = value with
// strings, integers, floats, booleans and single-line arrays of those,
// and # comments. Throws ConfigError with the line number.
json parse_toml_subset(std::string_view text);

enum class Stage { ingest, filter, analyze, generate, refine };
inline constexpr std::array<Stage, 5> kAllStages = {Stage::ingest, Stage::filter, Stage::analyze, Stage::generate,
                                                    Stage::refine};
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);
// Comma-separated names or "all".
std::set<Stage> parse_stages(std::string_view list);

enum class BackendKind { mock, http, replay };
std::string_view to_string(BackendKind k);
BackendKind parse_backend_kind(std::string_view s);

enum class TaskPlan { both, alternate };

struct RoleConfig {
  std::string model;
  std::string endpoint;
  std::string api_key;  // never written to manifests
};

inline constexpr std::array<std::string_view, 3> kRoles = {"assistant", "judge", "candidate"};

struct PipelineConfig {
  std::filesystem::path corpus_root = "corpus";
  std::filesystem::path output_root = "out";
  std::filesystem::path manifest;  // source manifest for ingest

  BackendKind backend = BackendKind::mock;
  std::filesystem::path replay_log;  // read by the replay backend
  bool record_log = true;            // gateway logs under output_root/logs
  std::map<std::string, RoleConfig> roles;

  std::uint64_t seed = 0;
  std::set<Stage> stages = {kAllStages.begin(), kAllStages.end()};
  int k = 4;
  TaskPlan tasks = TaskPlan::both;
  int concurrency = 8;
  int max_in_flight = 8;
  int max_retries = 3;

  int filter_long_edge = 2048;
  int patch_long_edge = 768;
  int generator_long_edge = 2048;
  int view_long_edge = 1024;

  AugmentationPolicy augmentation;
  BalanceSpec balance;
  MockAssistantOptions mock;

  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  int preview_long_edge = 512;
  std::map<std::string, std::string> tokens;  // bearer token -> reviewer id
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

PipelineConfig config_from_json(const json& doc, const std::filesystem::path& base_dir = {});
// OPENVIEW_CORPUS_ROOT, OPENVIEW_OUTPUT_ROOT, OPENVIEW_SEED, OPENVIEW_BACKEND,
// OPENVIEW_<ROLE>_MODEL, OPENVIEW_<ROLE>_ENDPOINT, OPENVIEW_<ROLE>_API_KEY
// (role-less OPENVIEW_ENDPOINT / OPENVIEW_API_KEY as fallback),
// OPENVIEW_REVIEW_TOKENS ("token=reviewer,..."), OPENVIEW_LISTEN ("host:port").
void apply_env_overrides(PipelineConfig& cfg, const EnvLookup& env = process_env);
void check_config(const PipelineConfig& cfg);
// Reads the file (or defaults when path is empty), applies env overrides, checks.
PipelineConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env);

// Config as recorded in run manifests; secrets are omitted.
json to_json(const PipelineConfig& cfg);

std::unique_ptr<Gateway> make_gateway(const PipelineConfig& cfg, const std::string& role);
std::string model_for(const PipelineConfig& cfg, const std::string& role);

}  // namespace openview
