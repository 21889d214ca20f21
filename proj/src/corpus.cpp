#include "openview/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "openview/hashing.hpp"
#include "openview/media.hpp"
#include "openview/random.hpp"

namespace openview {

namespace fs = std::filesystem;

void check_sampling_rule(const SamplingRule& r) {
  using K = SamplingRule::Kind;
  if (r.kind == K::random_fraction && !(r.p > 0.0 && r.p <= 1.0))
    throw ConfigError("random_fraction p must be in (0,1], got " + std::to_string(r.p));
  if (r.kind == K::frame_step && r.n < 1) throw ConfigError("frame_step n must be >= 1");
  if (r.kind == K::middle_k && r.k < 1) throw ConfigError("middle_k k must be >= 1");
}

json to_json(const SamplingRule& r) {
  switch (r.kind) {
    case SamplingRule::Kind::all_frames:
      return {{"rule", "all_frames"}};
    case SamplingRule::Kind::random_fraction:
      return {{"rule", "random_fraction"}, {"p", r.p}, {"seed", r.seed}};
    case SamplingRule::Kind::frame_step:
      return {{"rule", "frame_step"}, {"n", r.n}};
    case SamplingRule::Kind::middle_k:
      return {{"rule", "middle_k"}, {"k", r.k}};
  }
  return {};
}

SamplingRule sampling_rule_from_json(const json& j) {
  if (j.is_null()) return SamplingRule::all();
  const std::string rule = j.is_string() ? j.get<std::string>() : j.value("rule", "");
  SamplingRule r;
  if (rule == "all_frames" || rule == "all") {
    r = SamplingRule::all();
  } else if (rule == "random_fraction") {
    r = SamplingRule::random_fraction(j.at("p").get<double>(), j.value("seed", std::uint64_t{0}));
  } else if (rule == "frame_step") {
    r = SamplingRule::frame_step(j.at("n").get<int>());
  } else if (rule == "middle_k") {
    r = SamplingRule::middle_k(j.at("k").get<int>());
  } else {
    throw ConfigError("unknown sampling rule: " + rule);
  }
  check_sampling_rule(r);
  return r;
}

std::vector<int> sample_indices(const SamplingRule& r, int count, std::string_view key) {
  check_sampling_rule(r);
  std::vector<int> out;
  if (count <= 0) return out;
  switch (r.kind) {
    case SamplingRule::Kind::all_frames:
      out.resize(count);
      std::iota(out.begin(), out.end(), 0);
      break;
    case SamplingRule::Kind::random_fraction: {
      const auto m = static_cast<int>(std::lround(r.p * count));
      std::vector<int> all(count);
      std::iota(all.begin(), all.end(), 0);
      Rng rng(mix_seed(r.seed, key));
      // Partial Fisher-Yates: the first m slots are the sample.
      for (int i = 0; i < m; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(count - i)));
        std::swap(all[i], all[j]);
      }
      out.assign(all.begin(), all.begin() + m);
      std::sort(out.begin(), out.end());
      break;
    }
    case SamplingRule::Kind::frame_step:
      for (int i = 0; i < count; i += r.n) out.push_back(i);
      break;
    case SamplingRule::Kind::middle_k: {
      const int trim = count / 10;
      const int lo = trim;
      const int hi = count - trim;
      const int span = hi - lo;
      const int k = std::min(r.k, span);
      for (int i = 0; i < k; ++i) {
        out.push_back(lo + static_cast<int>(std::floor((i + 0.5) * span / k)));
      }
      break;
    }
  }
  return out;
}

SourceManifest manifest_from_json(const json& j, const fs::path& base_dir) {
  SourceManifest m;
  const json& entries = j.is_array() ? j : j.at("entries");
  for (const auto& e : entries) {
    ManifestEntry me;
    me.dataset = e.at("dataset").get<std::string>();
    if (me.dataset.empty()) throw ConfigError("manifest entry with empty dataset name");
    const std::string kind = e.value("kind", "image");
    if (kind == "image") {
      me.kind = SourceKind::image;
    } else if (kind == "video") {
      me.kind = SourceKind::video;
    } else {
      throw ConfigError("manifest kind must be image or video, got " + kind);
    }
    fs::path p = e.at("path").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    me.path = p.lexically_normal().string();
    me.sampling = sampling_rule_from_json(e.value("sampling", json(nullptr)));
    m.entries.push_back(std::move(me));
  }
  return m;
}

SourceManifest read_manifest(const fs::path& path) {
  return manifest_from_json(read_json_file(path), path.parent_path());
}

json to_json(const SourceManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"dataset", e.dataset},
                       {"kind", e.kind == SourceKind::image ? "image" : "video"},
                       {"path", e.path},
                       {"sampling", to_json(e.sampling)}});
  }
  return {{"entries", entries}};
}

std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::raw:
      return "raw";
    case RecordStatus::filtered_valid:
      return "filtered_valid";
    case RecordStatus::filtered_invalid:
      return "filtered_invalid";
  }
  return "raw";
}

RecordStatus parse_record_status(std::string_view s) {
  if (s == "raw") return RecordStatus::raw;
  if (s == "filtered_valid") return RecordStatus::filtered_valid;
  if (s == "filtered_invalid") return RecordStatus::filtered_invalid;
  throw ConfigError("unknown record status: " + std::string(s));
}

json to_json(const CorpusRecord& r) {
  json j = {{"id", r.id},
            {"storage_path", r.storage_path},
            {"width", r.width},
            {"height", r.height},
            {"source",
             {{"dataset", r.source.dataset},
              {"video_id", r.source.video_id},
              {"frame_index", r.source.frame_index},
              {"source_path", r.source.source_path}}},
            {"status", to_string(r.status)}};
  if (!r.status_reason.empty()) j["status_reason"] = r.status_reason;
  if (r.scene) j["scene"] = to_string(*r.scene);
  if (r.outdoor) j["outdoor"] = *r.outdoor;
  return j;
}

CorpusRecord record_from_json(const json& j) {
  CorpusRecord r;
  r.id = j.at("id").get<std::string>();
  r.storage_path = j.at("storage_path").get<std::string>();
  r.width = j.value("width", 0);
  r.height = j.value("height", 0);
  const json& s = j.at("source");
  r.source.dataset = s.value("dataset", "");
  r.source.video_id = s.value("video_id", "");
  r.source.frame_index = s.value("frame_index", 0);
  r.source.source_path = s.value("source_path", "");
  r.status = parse_record_status(j.value("status", "raw"));
  r.status_reason = j.value("status_reason", "");
  if (j.contains("scene")) r.scene = parse_scene_label(j["scene"].get<std::string>());
  if (j.contains("outdoor")) r.outdoor = j["outdoor"].get<bool>();
  return r;
}

void advance_status(CorpusRecord& r, RecordStatus next, std::string reason) {
  if (r.status != RecordStatus::raw && r.status != next) {
    throw ConfigError("record " + r.id + ": status cannot go from " + std::string(to_string(r.status)) + " to " +
                      std::string(to_string(next)));
  }
  r.status = next;
  r.status_reason = std::move(reason);
}

std::optional<std::string> panorama_rejection(int width, int height) {
  if (width < kMinPanoramaWidth || height < kMinPanoramaHeight) {
    return "too small: " + std::to_string(width) + "x" + std::to_string(height) + " (minimum 64x32)";
  }
  if (width != 2 * height) {
    return "not 2:1: " + std::to_string(width) + "x" + std::to_string(height);
  }
  return std::nullopt;
}

namespace {

std::vector<fs::path> image_files(const fs::path& p) {
  std::vector<fs::path> out;
  if (fs::is_directory(p)) {
    for (const auto& e : fs::directory_iterator(p)) {
      if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
  } else {
    out.push_back(p);
  }
  return out;
}

class RecordSink {
 public:
  RecordSink(const fs::path& root, IngestResult& result) : root_(root), result_(result) {
    fs::create_directories(root_ / "images");
  }

  void add(const Image& img, SourceInfo src) {
    if (auto why = panorama_rejection(img.width, img.height)) {
      result_.rejected.push_back({src.dataset, src.source_path + frame_suffix(src), *why});
      return;
    }
    const auto png = encode_png(img);
    const std::string sha = sha256_hex(std::span<const std::uint8_t>(png));
    const std::string id = sha.substr(0, 16);
    if (!seen_.insert(id).second) {
      result_.rejected.push_back({src.dataset, src.source_path + frame_suffix(src), "duplicate of " + id});
      return;
    }
    const std::string rel = "images/" + sha + ".png";
    const fs::path dst = root_ / rel;
    if (!fs::exists(dst)) write_text_file(dst, as_string(png));
    CorpusRecord r;
    r.id = id;
    r.storage_path = rel;
    r.width = img.width;
    r.height = img.height;
    r.source = std::move(src);
    result_.records.push_back(std::move(r));
  }

 private:
  static std::string frame_suffix(const SourceInfo& s) {
    return s.video_id.empty() ? "" : "#" + std::to_string(s.frame_index);
  }
  static std::string as_string(const std::vector<std::uint8_t>& v) { return {v.begin(), v.end()}; }

  fs::path root_;
  IngestResult& result_;
  std::set<std::string> seen_;
};

}  // namespace

IngestResult ingest(const SourceManifest& manifest, const fs::path& corpus_root) {
  IngestResult result;
  RecordSink sink(corpus_root, result);
  for (const auto& e : manifest.entries) {
    try {
      if (!fs::exists(e.path)) throw IoError("source does not exist");
      if (e.kind == SourceKind::image) {
        const auto files = image_files(e.path);
        for (int idx : sample_indices(e.sampling, static_cast<int>(files.size()), e.dataset + "|" + e.path)) {
          try {
            sink.add(read_image(files[idx]), {e.dataset, "", 0, files[idx].string()});
          } catch (const std::exception& ex) {
            result.errors.push_back({e.dataset, files[idx].string(), ex.what()});
          }
        }
      } else {
        VideoSource video(e.path);
        const std::string video_id = fs::path(e.path).filename().string();
        for (int idx : sample_indices(e.sampling, video.frame_count(), e.dataset + "|" + e.path)) {
          sink.add(video.frame(idx), {e.dataset, video_id, idx, e.path});
        }
      }
    } catch (const std::exception& ex) {
      result.errors.push_back({e.dataset, e.path, ex.what()});
    }
  }
  CorpusStore(corpus_root).save(result.records);
  return result;
}

CorpusStore::CorpusStore(fs::path root) : root_(std::move(root)) {}

std::vector<CorpusRecord> CorpusStore::load() const {
  std::vector<CorpusRecord> out;
  if (!fs::exists(records_path())) return out;
  for (const auto& j : read_jsonl(records_path())) out.push_back(record_from_json(j));
  return out;
}

void CorpusStore::save(const std::vector<CorpusRecord>& records) const {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  write_jsonl(records_path(), rows);
}

Panorama CorpusStore::load_panorama(const CorpusRecord& r) const {
  Panorama p;
  p.id = r.id;
  p.pixels = read_image(root_ / r.storage_path);
  p.source = r.source;
  check_panorama(p);
  return p;
}

}  // namespace openview
