#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "openview/assembly.hpp"
#include "openview/bench.hpp"
#include "openview/config.hpp"
#include "openview/generator.hpp"
#include "openview/media.hpp"
#include "openview/parallel.hpp"
#include "openview/pipeline.hpp"
#include "openview/review.hpp"
#include "openview/service.hpp"
#include "openview/stats.hpp"

namespace fs = std::filesystem;
using namespace openview;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string stages;
  std::optional<int> concurrency;
  std::string backend;
};

PipelineConfig load(const Globals& g) {
  PipelineConfig cfg = load_config(g.config);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.augmentation.seed = cfg.mock.seed = cfg.balance.seed = *g.seed;
  }
  if (g.concurrency) cfg.concurrency = *g.concurrency;
  if (!g.backend.empty()) cfg.backend = parse_backend_kind(g.backend);
  if (!g.stages.empty()) cfg.stages = parse_stages(g.stages);
  check_config(cfg);
  return cfg;
}

int run_stages(const PipelineConfig& cfg, const std::set<Stage>& stages) {
  PipelineHooks hooks;
  hooks.stop = &g_stop;
  hooks.progress = [](const std::string& msg) { std::cerr << msg << "\n"; };
  const RunManifest m = run_pipeline(cfg, stages, hooks);
  for (const auto& s : m.stages) {
    for (const auto& e : s.errors) std::cerr << to_string(s.stage) << ": " << e << "\n";
  }
  std::cout << output_layout(cfg).manifest.string() << "\n";
  if (m.interrupted) std::cerr << "interrupted; completed stages were checkpointed\n";
  return m.ok() ? 0 : 1;
}

std::vector<BenchmarkItem> read_items(const fs::path& path) {
  std::vector<BenchmarkItem> out;
  for (const auto& j : read_jsonl(path)) out.push_back(benchmark_item_from_json(j));
  return out;
}

std::vector<Proposal> read_proposals(const fs::path& path) {
  std::vector<Proposal> out;
  for (const auto& j : read_jsonl(path)) out.push_back(proposal_from_json(j));
  return out;
}

std::vector<EvalRecord> read_records(const fs::path& path) {
  std::vector<EvalRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(eval_record_from_json(j));
  return out;
}

void write_records(const fs::path& path, const std::vector<EvalRecord>& records) {
  std::vector<json> lines;
  for (const auto& r : records) lines.push_back(to_json(r));
  write_jsonl(path, lines);
}

std::map<std::string, CorpusRecord> corpus_by_id(const PipelineConfig& cfg) {
  std::map<std::string, CorpusRecord> out;
  const CorpusStore store(cfg.corpus_root);
  if (!fs::exists(store.records_path())) return out;
  for (auto& r : store.load()) out.emplace(r.id, std::move(r));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OpenView dataset pipeline and benchmark tools"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "TOML config file");
  app.add_option("--seed", g.seed, "Seed for every seeded step");
  app.add_option("--stages", g.stages, "Stages for run: comma list or all");
  app.add_option("--concurrency", g.concurrency, "Worker threads per stage");
  app.add_option("--backend", g.backend, "mock, http or replay");

  for (Stage s : kAllStages) {
    auto* sub = app.add_subcommand(std::string(to_string(s)), "Run the " + std::string(to_string(s)) + " stage");
    sub->callback([&g, s] { throw CLI::RuntimeError(run_stages(load(g), {s})); });
  }
  auto* run = app.add_subcommand("run", "Run the configured stages in order");
  run->callback([&g] {
    const PipelineConfig cfg = load(g);
    throw CLI::RuntimeError(run_stages(cfg, cfg.stages));
  });

  std::string render_items;
  int render_edge = 0;
  auto* render = app.add_subcommand("render", "Render question views for a benchmark file");
  render->add_option("items", render_items, "benchmark.jsonl")->required();
  render->add_option("--long-edge", render_edge, "Output long edge (default from config)");
  render->callback([&] {
    const PipelineConfig cfg = load(g);
    const auto items = read_items(render_items);
    const auto corpus = corpus_by_id(cfg);
    const CorpusStore store(cfg.corpus_root);
    const fs::path root = fs::path(render_items).parent_path();
    const int edge = render_edge > 0 ? render_edge : cfg.view_long_edge;
    std::map<std::string, std::vector<std::size_t>> by_pano;
    for (std::size_t i = 0; i < items.size(); ++i) by_pano[items[i].proposal.provenance.panorama_id].push_back(i);
    for (const auto& [pano_id, idx] : by_pano) {
      const auto rec = corpus.find(pano_id);
      if (rec == corpus.end()) throw ConfigError("panorama " + pano_id + " not in corpus");
      const Panorama pano = store.load_panorama(rec->second);
      parallel_for(idx.size(), cfg.concurrency, [&](std::size_t k) {
        const BenchmarkItem& item = items[idx[k]];
        write_png(root / item.image_path, render_question_view(pano, item.proposal, edge));
      });
    }
    std::cout << items.size() << " views rendered under " << root.string() << "\n";
  });

  std::string serve_proposals;
  bool serve_grammar = false;
  auto* serve = app.add_subcommand("serve", "Start the review service");
  serve->add_option("--proposals", serve_proposals, "Proposals to load (default: refined proposals)");
  serve->add_flag("--grammar", serve_grammar, "Enable the advisory grammar check");
  serve->callback([&] {
    const PipelineConfig cfg = load(g);
    if (cfg.tokens.empty()) throw ConfigError("no reviewer tokens (service.tokens or OPENVIEW_REVIEW_TOKENS)");
    ReviewStore store(cfg.output_root / "review");
    const fs::path src = serve_proposals.empty() ? output_layout(cfg).refined_proposals : fs::path(serve_proposals);
    if (fs::exists(src)) std::cerr << store.add(read_proposals(src)) << " proposals added from " << src << "\n";
    const CorpusStore corpus(cfg.corpus_root);
    std::unique_ptr<Gateway> grammar;
    ServiceOptions opts;
    opts.tokens = cfg.tokens;
    opts.preview_long_edge = cfg.preview_long_edge;
    opts.benchmark_dir = cfg.output_root / "benchmark";
    opts.augmentation = cfg.augmentation;
    if (serve_grammar) {
      grammar = make_gateway(cfg, "assistant");
      opts.grammar = grammar.get();
      opts.grammar_model = model_for(cfg, "assistant");
    }
    ReviewService service(store, corpus, opts);
    const int port = service.start(cfg.listen_host, cfg.listen_port);
    std::cerr << "listening on " << cfg.listen_host << ":" << port << "\n";
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    service.stop();
  });

  std::string eval_items;
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "Run the candidate model on a benchmark");
  eval->add_option("items", eval_items, "benchmark.jsonl")->required();
  eval->add_option("--out", eval_out, "Records file")->required();
  eval->callback([&] {
    const PipelineConfig cfg = load(g);
    const auto items = read_items(eval_items);
    auto gw = make_gateway(cfg, "candidate");
    InferenceOptions opts;
    opts.model = model_for(cfg, "candidate");
    opts.threads = cfg.concurrency;
    const auto records = run_inference(*gw, items, fs::path(eval_items).parent_path().string(), opts);
    write_records(eval_out, records);
    int abstained = 0;
    for (const auto& r : records) abstained += !r.choice;
    std::cout << records.size() << " responses, " << abstained << " without a parseable choice\n";
  });

  std::string judge_items;
  std::string judge_records;
  auto* judge = app.add_subcommand("judge", "Judge rationales of correct choices");
  judge->add_option("items", judge_items, "benchmark.jsonl")->required();
  judge->add_option("records", judge_records, "Records file, updated in place")->required();
  judge->callback([&] {
    const PipelineConfig cfg = load(g);
    const auto items = read_items(judge_items);
    auto records = read_records(judge_records);
    auto gw = make_gateway(cfg, "judge");
    JudgeOptions opts;
    opts.model = model_for(cfg, "judge");
    run_judging(*gw, items, records, opts, cfg.concurrency);
    write_records(judge_records, records);
  });

  std::string report_items;
  std::vector<std::string> report_records;
  std::string report_json;
  auto* report = app.add_subcommand("report", "Metrics table for one or more record files");
  report->add_option("items", report_items, "benchmark.jsonl")->required();
  report->add_option("records", report_records, "Judged record files")->required();
  report->add_option("--json", report_json, "Also write metrics as JSON");
  report->callback([&] {
    const auto items = read_items(report_items);
    std::vector<MetricsReport> reports;
    json all = json::array();
    for (const auto& path : report_records) {
      reports.push_back(compute_metrics(read_records(path), items));
      all.push_back(to_json(reports.back()));
    }
    std::cout << format_metrics_table(reports);
    if (!report_json.empty()) write_json_file(report_json, all);
  });

  std::string stats_proposals;
  bool stats_as_json = false;
  auto* stats = app.add_subcommand("stats", "Dataset statistics for the corpus or a proposal file");
  stats->add_option("--proposals", stats_proposals, "Proposal or benchmark JSONL");
  stats->add_flag("--json", stats_as_json, "Print JSON");
  stats->callback([&] {
    const PipelineConfig cfg = load(g);
    std::vector<CorpusRecord> corpus;
    for (auto& [id, r] : corpus_by_id(cfg)) corpus.push_back(std::move(r));
    StatsReport rep;
    if (stats_proposals.empty()) {
      rep = dataset_stats(corpus);
    } else {
      std::vector<Proposal> props;
      for (const auto& j : read_jsonl(stats_proposals))
        props.push_back(j.contains("proposal") ? proposal_from_json(j["proposal"]) : proposal_from_json(j));
      rep = dataset_stats(props, corpus);
    }
    std::cout << (stats_as_json ? to_json(rep).dump(2) + "\n" : format_stats(rep));
  });

  std::string cl_pano;
  std::string cl_image;
  double cl_u = 0.5;
  double cl_v = 0.5;
  std::string cl_aspect = "1:1";
  auto* caption = app.add_subcommand("caption-loop", "Eight-view caption loop on a panorama");
  caption->add_option("--panorama", cl_pano, "Corpus panorama id");
  caption->add_option("--image", cl_image, "Panorama image file");
  caption->add_option("--u", cl_u, "Start view u_norm");
  caption->add_option("--v", cl_v, "Start view v_norm");
  caption->add_option("--aspect", cl_aspect, "Start view aspect ratio");
  caption->callback([&] {
    const PipelineConfig cfg = load(g);
    Panorama pano;
    if (!cl_image.empty()) {
      pano.id = fs::path(cl_image).stem().string();
      pano.pixels = read_image(cl_image);
    } else {
      const auto corpus = corpus_by_id(cfg);
      const auto it = corpus.find(cl_pano);
      if (it == corpus.end()) throw ConfigError("give --image or a corpus --panorama id");
      pano = CorpusStore(cfg.corpus_root).load_panorama(it->second);
    }
    const auto aspect = parse_aspect_ratio(cl_aspect);
    if (!aspect) throw ConfigError("bad --aspect " + cl_aspect);
    auto gw = make_gateway(cfg, "candidate");
    const auto r = caption_view_loop(*gw, pano, caption_start_view(cl_u, cl_v, *aspect), model_for(cfg, "candidate"),
                                     cfg.view_long_edge);
    json views = json::array();
    for (int i = 0; i < kCaptionLoopViews; ++i)
      views.push_back({{"yaw_offset", r.yaw_offsets[i]}, {"description", r.descriptions[i]}});
    std::cout << json{{"views", views}, {"total_rotation", r.total_rotation}}.dump(2) << "\n";
  });

  std::string ab_pool;
  bool ab_no_augment = false;
  auto* assemble = app.add_subcommand("assemble-bench", "Assemble a balanced benchmark from accepted proposals");
  assemble->add_option("--pool", ab_pool, "Proposal JSONL (default: accepted proposals in the review store)");
  assemble->add_flag("--no-augment", ab_no_augment, "Use the pool as is");
  assemble->callback([&] {
    const PipelineConfig cfg = load(g);
    std::vector<Proposal> base =
        ab_pool.empty() ? ReviewStore(cfg.output_root / "review").accepted() : read_proposals(ab_pool);
    std::vector<Proposal> pool;
    for (const auto& p : base) {
      if (ab_no_augment) {
        pool.push_back(p);
      } else {
        for (auto& v : augment(p, cfg.augmentation)) pool.push_back(std::move(v));
      }
    }
    std::map<std::string, SceneLabel> scenes;
    for (const auto& [id, r] : corpus_by_id(cfg))
      if (r.scene) scenes[id] = *r.scene;
    const AssemblyReport rep = assemble_benchmark(pool, cfg.balance, scenes);
    std::vector<json> lines;
    for (const auto& item : rep.items) lines.push_back(to_json(item));
    const fs::path out = cfg.output_root / "benchmark" / "benchmark.jsonl";
    write_jsonl(out, lines);
    std::cout << rep.items.size() << " items (" << rep.contextual << " contextual, " << rep.directional
              << " directional), letters";
    for (const auto& [k, v] : rep.letters) std::cout << ' ' << k << ':' << v;
    std::cout << "\n" << out.string() << "\n";
  });

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  try {
    app.parse(argc, argv);
  } catch (const CLI::RuntimeError& e) {
    return e.get_exit_code();
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const PrerequisiteError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const AssemblyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
