#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "openview/errors.hpp"
#include "openview/geometry.hpp"
#include "openview/jsonl.hpp"
#include "openview/scene.hpp"

namespace openview {

struct SamplingRule {
  enum class Kind { all_frames, random_fraction, frame_step, middle_k };

  Kind kind = Kind::all_frames;
  double p = 1.0;           // random_fraction
  std::uint64_t seed = 0;   // random_fraction
  int n = 1;                // frame_step
  int k = 1;                // middle_k

  static SamplingRule all() { return {}; }
  static SamplingRule random_fraction(double p, std::uint64_t seed) { return {Kind::random_fraction, p, seed, 1, 1}; }
  static SamplingRule frame_step(int n) { return {Kind::frame_step, 1.0, 0, n, 1}; }
  static SamplingRule middle_k(int k) { return {Kind::middle_k, 1.0, 0, 1, k}; }
};

void check_sampling_rule(const SamplingRule& r);
json to_json(const SamplingRule& r);
SamplingRule sampling_rule_from_json(const json& j);

// Sorted indices into [0, count) selected by the rule. `key` salts the random
// draw so different sources with the same seed do not pick the same indices.
std::vector<int> sample_indices(const SamplingRule& r, int count, std::string_view key = {});

enum class SourceKind { image, video };

struct ManifestEntry {
  std::string dataset;
  SourceKind kind = SourceKind::image;
  std::string path;  // file or directory; relative paths resolve against the manifest
  SamplingRule sampling;
};

struct SourceManifest {
  std::vector<ManifestEntry> entries;
};

SourceManifest manifest_from_json(const json& j, const std::filesystem::path& base_dir = {});
SourceManifest read_manifest(const std::filesystem::path& path);
json to_json(const SourceManifest& m);

enum class RecordStatus { raw, filtered_valid, filtered_invalid };
std::string_view to_string(RecordStatus s);
RecordStatus parse_record_status(std::string_view s);

struct CorpusRecord {
  std::string id;            // first 16 hex digits of the PNG's SHA-256
  std::string storage_path;  // relative to the corpus root
  int width = 0;
  int height = 0;
  SourceInfo source;
  RecordStatus status = RecordStatus::raw;
  std::string status_reason;
  std::optional<SceneLabel> scene;
  std::optional<bool> outdoor;
};

json to_json(const CorpusRecord& r);
CorpusRecord record_from_json(const json& j);

// raw -> filtered_*; re-applying the current status is allowed.
void advance_status(CorpusRecord& r, RecordStatus next, std::string reason = {});

struct IngestIssue {
  std::string dataset;
  std::string path;
  std::string reason;
};

struct IngestResult {
  std::vector<CorpusRecord> records;
  std::vector<IngestIssue> errors;    // unreadable sources
  std::vector<IngestIssue> rejected;  // decoded but unusable (aspect, size)
};

inline constexpr int kMinPanoramaWidth = 64;
inline constexpr int kMinPanoramaHeight = 32;

// Reason the image cannot be a panorama, or nullopt.
std::optional<std::string> panorama_rejection(int width, int height);

// Stores images/<sha256>.png and records.jsonl under `corpus_root`.
// Re-running on the same manifest yields byte-identical output.
IngestResult ingest(const SourceManifest& manifest, const std::filesystem::path& corpus_root);

class CorpusStore {
 public:
  explicit CorpusStore(std::filesystem::path root);

  [[nodiscard]] const std::filesystem::path& root() const { return root_; }
  [[nodiscard]] std::filesystem::path records_path() const { return root_ / "records.jsonl"; }

  std::vector<CorpusRecord> load() const;
  void save(const std::vector<CorpusRecord>& records) const;
  Panorama load_panorama(const CorpusRecord& r) const;

 private:
  std::filesystem::path root_;
};

}  // namespace openview
