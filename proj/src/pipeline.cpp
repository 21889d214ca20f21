#include "openview/pipeline.hpp"

#include "openview/analyzer.hpp"
#include "openview/corpus.hpp"
#include "openview/filter.hpp"
#include "openview/generator.hpp"
#include "openview/parallel.hpp"
#include "openview/refiner.hpp"

namespace openview {

namespace fs = std::filesystem;

OutputLayout output_layout(const PipelineConfig& cfg) {
  const fs::path& o = cfg.output_root;
  return {CorpusStore(cfg.corpus_root).records_path(),
          o / "filter" / "verdicts.jsonl",
          o / "analysis" / "analyses.jsonl",
          o / "analysis" / "failures.jsonl",
          o / "proposals" / "initial.jsonl",
          o / "proposals" / "rejections.jsonl",
          o / "proposals" / "refined.jsonl",
          o / "proposals" / "augmented.jsonl",
          o / "logs",
          o / "run_manifest.json"};
}

void check_prerequisites(const PipelineConfig& cfg, const std::set<Stage>& stages) {
  const OutputLayout out = output_layout(cfg);
  auto need = [&](Stage stage, Stage producer, const fs::path& path) {
    if (!stages.count(stage) || stages.count(producer) || fs::exists(path)) return;
    throw PrerequisiteError(stage, "stage " + std::string(to_string(stage)) + " requires " +
                                       std::string(to_string(producer)) + " outputs (" + path.string() +
                                       " is missing)");
  };
  if (stages.count(Stage::ingest)) {
    if (cfg.manifest.empty()) throw PrerequisiteError(Stage::ingest, "stage ingest requires paths.manifest");
    if (!fs::exists(cfg.manifest))
      throw PrerequisiteError(Stage::ingest, "stage ingest: manifest " + cfg.manifest.string() + " not found");
  }
  need(Stage::filter, Stage::ingest, out.records);
  need(Stage::analyze, Stage::filter, out.filter_verdicts);
  need(Stage::generate, Stage::analyze, out.analyses);
  need(Stage::refine, Stage::generate, out.initial_proposals);
}

bool RunManifest::ok() const {
  if (interrupted) return false;
  for (const auto& s : stages)
    if (!s.ok) return false;
  return true;
}

json to_json(const StageSummary& s) {
  return {{"stage", to_string(s.stage)}, {"ok", s.ok}, {"counts", s.counts}, {"errors", s.errors},
          {"outputs", s.outputs}};
}

json to_json(const RunManifest& m) {
  json stages = json::array();
  for (const auto& s : m.stages) stages.push_back(to_json(s));
  return {{"tool_version", m.tool_version},
          {"generator_version", m.generator_version},
          {"seed", m.seed},
          {"config", m.config},
          {"stages", stages},
          {"interrupted", m.interrupted},
          {"ok", m.ok()}};
}

namespace {

class Runner {
 public:
  Runner(const PipelineConfig& cfg, const PipelineHooks& hooks)
      : cfg_(cfg), hooks_(hooks), out_(output_layout(cfg)), store_(cfg.corpus_root) {}

  bool stopped() const { return hooks_.stop && hooks_.stop->load(); }

  void note(const std::string& msg) const {
    if (hooks_.progress) hooks_.progress(msg);
  }

  Gateway& assistant() {
    if (hooks_.assistant) return *hooks_.assistant;
    if (!owned_) owned_ = make_gateway(cfg_, "assistant");
    return *owned_;
  }

  StageSummary ingest_stage() {
    StageSummary s;
    s.stage = Stage::ingest;
    const IngestResult r = ingest(read_manifest(cfg_.manifest), cfg_.corpus_root);
    s.counts = {{"records", r.records.size()}, {"errors", r.errors.size()}, {"rejected", r.rejected.size()}};
    for (const auto& e : r.errors) s.errors.push_back(e.dataset + ": " + e.path + ": " + e.reason);
    s.ok = r.errors.empty();
    s.outputs.push_back(out_.records.string());
    return s;
  }

  StageSummary filter_stage() {
    StageSummary s;
    s.stage = Stage::filter;
    auto records = store_.load();
    FilterOptions opts;
    opts.model = model_for(cfg_, "assistant");
    opts.long_edge = cfg_.filter_long_edge;
    const FilterReport rep = filter_records(assistant(), store_, records, opts, cfg_.concurrency);
    store_.save(records);
    std::vector<json> lines;
    for (std::size_t i = 0; i < rep.indices.size(); ++i) {
      lines.push_back({{"record_id", records[rep.indices[i]].id}, {"verdict", to_json(rep.verdicts[i])}});
    }
    write_jsonl(out_.filter_verdicts, lines);
    int valid_total = 0;
    for (const auto& r : records) valid_total += r.status == RecordStatus::filtered_valid;
    s.counts = {{"assessed", rep.assessed},     {"valid", rep.valid},
                {"invalid", rep.invalid},       {"unparseable", rep.unparseable},
                {"videos_dropped", rep.videos_dropped}, {"valid_total", valid_total}};
    s.outputs = {out_.records.string(), out_.filter_verdicts.string()};
    return s;
  }

  StageSummary analyze_stage(bool& interrupted) {
    StageSummary s;
    s.stage = Stage::analyze;
    auto records = store_.load();
    AnalyzerOptions opts;
    opts.model = model_for(cfg_, "assistant");
    opts.patch_long_edge = cfg_.patch_long_edge;
    opts.threads = std::min(cfg_.concurrency, kPatchCount);
    std::vector<json> analyses;
    std::vector<json> failures;
    int considered = 0;
    for (auto& rec : records) {
      if (rec.status != RecordStatus::filtered_valid) continue;
      if (stopped()) {
        interrupted = true;
        break;
      }
      ++considered;
      const AnalyzeResult r = analyze_panorama(assistant(), store_.load_panorama(rec), opts);
      if (r.analysis) {
        rec.scene = r.analysis->label;
        rec.outdoor = r.analysis->outdoor;
        analyses.push_back(to_json(*r.analysis));
      } else {
        failures.push_back({{"record_id", rec.id}, {"reason", r.drop_reason}, {"failed_patches", r.failed_patches}});
      }
    }
    store_.save(records);
    write_jsonl(out_.analyses, analyses);
    write_jsonl(out_.analysis_failures, failures);
    s.counts = {{"considered", considered}, {"analyzed", analyses.size()}, {"dropped", failures.size()}};
    s.outputs = {out_.records.string(), out_.analyses.string(), out_.analysis_failures.string()};
    if (interrupted) s.errors.push_back("interrupted; analyses so far were saved");
    s.ok = !interrupted;
    return s;
  }

  StageSummary generate_stage(bool& interrupted) {
    StageSummary s;
    s.stage = Stage::generate;
    std::map<std::string, CorpusRecord> by_id;
    for (auto& r : store_.load()) by_id.emplace(r.id, std::move(r));
    std::vector<PanoramaAnalysis> analyses;
    for (const auto& j : read_jsonl(out_.analyses)) analyses.push_back(panorama_analysis_from_json(j));

    struct Job {
      std::size_t analysis;
      TaskType task;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < analyses.size(); ++i) {
      if (cfg_.tasks == TaskPlan::both) {
        jobs.push_back({i, TaskType::contextual});
        jobs.push_back({i, TaskType::directional});
      } else {
        jobs.push_back({i, i % 2 == 0 ? TaskType::contextual : TaskType::directional});
      }
    }
    GeneratorOptions opts;
    opts.model = model_for(cfg_, "assistant");
    opts.panorama_long_edge = cfg_.generator_long_edge;
    opts.seed = cfg_.seed;

    Gateway& gw = assistant();
    std::atomic<bool> skipped{false};
    const auto results = parallel_map(jobs.size(), cfg_.concurrency, [&](std::size_t j) -> std::optional<GenerationResult> {
      if (stopped()) {
        skipped = true;
        return std::nullopt;
      }
      const PanoramaAnalysis& a = analyses[jobs[j].analysis];
      const auto rec = by_id.find(a.panorama_id);
      if (rec == by_id.end()) {
        GenerationResult r;
        r.error = "panorama " + a.panorama_id + " missing from corpus";
        return r;
      }
      return generate_proposals(gw, store_.load_panorama(rec->second), a, jobs[j].task, cfg_.k, opts);
    });

    std::vector<json> proposals;
    std::vector<json> rejections;
    int failed = 0;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (!results[j]) continue;
      const GenerationResult& r = *results[j];
      const std::string job = analyses[jobs[j].analysis].panorama_id + "/" + std::string(to_string(jobs[j].task));
      for (const auto& p : r.proposals) proposals.push_back(to_json(p));
      for (const auto& why : r.rejections) rejections.push_back({{"job", job}, {"reason", why}});
      if (r.failed()) {
        ++failed;
        s.errors.push_back(job + ": " + r.error);
      }
    }
    interrupted = interrupted || skipped;
    write_jsonl(out_.initial_proposals, proposals);
    write_jsonl(out_.generation_rejections, rejections);
    s.counts = {{"jobs", jobs.size()},
                {"failed_jobs", failed},
                {"proposals", proposals.size()},
                {"rejected_elements", rejections.size()},
                {"k", cfg_.k}};
    s.outputs = {out_.initial_proposals.string(), out_.generation_rejections.string()};
    if (skipped) s.errors.push_back("interrupted; some jobs were not run");
    s.ok = failed == 0 && !skipped;
    return s;
  }

  StageSummary refine_stage() {
    StageSummary s;
    s.stage = Stage::refine;
    std::vector<Proposal> initial;
    for (const auto& j : read_jsonl(out_.initial_proposals)) initial.push_back(proposal_from_json(j));
    const auto refined = filter_confidence(initial);
    std::vector<json> refined_lines;
    std::vector<json> augmented_lines;
    for (const auto& p : refined) {
      refined_lines.push_back(to_json(p));
      for (const auto& v : augment(p, cfg_.augmentation)) augmented_lines.push_back(to_json(v));
    }
    write_jsonl(out_.refined_proposals, refined_lines);
    write_jsonl(out_.augmented_proposals, augmented_lines);
    s.counts = {{"input", initial.size()}, {"retained", refined.size()}, {"augmented", augmented_lines.size()}};
    s.outputs = {out_.refined_proposals.string(), out_.augmented_proposals.string()};
    return s;
  }

  std::vector<std::string> log_files() const {
    std::vector<std::string> out;
    if (!cfg_.record_log || hooks_.assistant) return out;
    if (owned_) out.push_back((out_.logs / "assistant.jsonl").string());
    return out;
  }

 private:
  const PipelineConfig& cfg_;
  const PipelineHooks& hooks_;
  OutputLayout out_;
  CorpusStore store_;
  std::unique_ptr<Gateway> owned_;
};

}  // namespace

RunManifest run_pipeline(const PipelineConfig& cfg, const std::set<Stage>& stages, const PipelineHooks& hooks) {
  check_config(cfg);
  check_prerequisites(cfg, stages);
  fs::create_directories(cfg.output_root);

  RunManifest m;
  m.generator_version = std::string(kGeneratorVersion);
  m.seed = cfg.seed;
  m.config = to_json(cfg);
  m.config["stages"] = json::array();
  for (Stage s : stages) m.config["stages"].push_back(to_string(s));

  Runner run(cfg, hooks);
  for (Stage stage : kAllStages) {
    if (!stages.count(stage)) continue;
    if (run.stopped()) {
      m.interrupted = true;
      break;
    }
    run.note("stage " + std::string(to_string(stage)));
    StageSummary s;
    try {
      switch (stage) {
        case Stage::ingest:
          s = run.ingest_stage();
          break;
        case Stage::filter:
          s = run.filter_stage();
          break;
        case Stage::analyze:
          s = run.analyze_stage(m.interrupted);
          break;
        case Stage::generate:
          s = run.generate_stage(m.interrupted);
          break;
        case Stage::refine:
          s = run.refine_stage();
          break;
      }
    } catch (const std::exception& e) {
      s.stage = stage;
      s.ok = false;
      s.errors.push_back(e.what());
      m.stages.push_back(std::move(s));
      break;
    }
    run.note("stage " + std::string(to_string(stage)) + (s.ok ? " ok" : " failed") + ": " + s.counts.dump());
    m.stages.push_back(std::move(s));
    if (m.interrupted) break;
  }
  const auto logs = run.log_files();
  if (!logs.empty()) m.config["gateway_logs"] = logs;
  write_json_file(output_layout(cfg).manifest, to_json(m));
  return m;
}

}  // namespace openview
