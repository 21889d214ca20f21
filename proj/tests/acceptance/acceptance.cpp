// Acceptance suite: one PASS/FAIL line per primary criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "openview/assembly.hpp"
#include "openview/bench.hpp"
#include "openview/geometry.hpp"
#include "openview/hashing.hpp"
#include "openview/media.hpp"
#include "openview/mock_assistant.hpp"
#include "openview/pipeline.hpp"
#include "openview/prompts.hpp"
#include "openview/refiner.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace openview;
using openview::testing::TempDir;

namespace {

// Tolerances and limits.
constexpr double kRoundTripTol = 1e-9;
constexpr double kRoundTripSeconds = 1.0;
constexpr double kProjectionTol = 1e-3;
constexpr double kMeridianTol = 1e-4;
constexpr double kProjectionSeconds = 30.0;
constexpr double kPatchSeconds = 10.0;
constexpr double kJitterMax = 3.6;
constexpr double kJitterFloor = 3.4;
constexpr double kShuffleShareTol = 0.02;
constexpr int kAssemblyTarget = 1327;
constexpr int kLetterSpreadMax = 10;
constexpr int kSplitTol = 3;
constexpr double kMetricTolPct = 0.01;
constexpr double kRoundingHalfWidth = 0.005;

struct Result {
  bool ok = true;
  std::string detail;
};

class Check {
 public:
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok_ = false;
      if (failures_.size() < 6) failures_.push_back(what);
    }
  }
  void note(const std::string& s) { notes_.push_back(s); }
  [[nodiscard]] Result result() const {
    std::string d;
    for (const auto& f : failures_) d += (d.empty() ? "" : "; ") + f;
    if (ok_) {
      for (const auto& n : notes_) d += (d.empty() ? "" : ", ") + n;
    }
    return {ok_, d};
  }

 private:
  bool ok_ = true;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string document_text() {
  std::ifstream in(openview::testing::reference_document());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool document_states(const std::string& phrase) {
  static const std::string doc = document_text();
  return doc.find(phrase) != std::string::npos;
}

// Rotation helpers written independently of the library.
Vec3 rotate_x(const Vec3& v, double deg) {  // positive tilts forward toward +y
  const double c = std::cos(deg * kDegToRad), s = std::sin(deg * kDegToRad);
  return {v.x, v.y * c + v.z * s, -v.y * s + v.z * c};
}
Vec3 rotate_y(const Vec3& v, double deg) {  // positive turns forward toward +x
  const double c = std::cos(deg * kDegToRad), s = std::sin(deg * kDegToRad);
  return {v.x * c + v.z * s, v.y, -v.x * s + v.z * c};
}
Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
  return {v.x / n, v.y / n, v.z / n};
}

// ---------------------------------------------------------------------------

Result geometry_round_trip() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  double worst_formula = 0.0;
  for (int i = 0; i <= 100; ++i) {
    for (int j = 0; j <= 100; ++j) {
      const double u = i / 100.0, v = j / 100.0;
      const CameraAngles a = uv_to_angles(u, v);
      worst_formula = std::max({worst_formula, std::abs(a.yaw - (u - 0.5) * 360.0), std::abs(a.pitch - (0.5 - v) * 180.0)});
      const UV back = angles_to_uv(a);
      worst = std::max({worst, std::abs(back.u - u), std::abs(back.v - v)});
      const CameraAngles again = uv_to_angles(back.u, back.v);
      worst = std::max({worst, std::abs(again.yaw - a.yaw) / 360.0, std::abs(again.pitch - a.pitch) / 180.0});
    }
  }
  const double secs = seconds_since(t0);
  c.expect(worst <= kRoundTripTol, "round-trip error " + fmt("%.3g", worst));
  c.expect(worst_formula <= kRoundTripTol, "angle formula error " + fmt("%.3g", worst_formula));
  c.expect(secs < kRoundTripSeconds, "runtime " + fmt("%.3f", secs) + " s");
  c.note("101x101 max err " + fmt("%.2g", worst) + ", " + fmt("%.3f", secs) + " s");
  return c.result();
}

Result projection_oracle() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto field = [](const Vec3& d) -> std::array<float, 3> {
    return {static_cast<float>(0.5 + 0.5 * d.x), static_cast<float>(0.5 + 0.5 * d.y),
            static_cast<float>(0.5 + 0.5 * d.z)};
  };
  const ImageF pano = openview::testing::analytic_panorama(2048, 1024, field);

  Rng rng(20240611);
  double worst = 0.0;
  for (int n = 0; n < 50; ++n) {
    ViewSpec v;
    v.u_norm = rng.uniform(0.0, 1.0);
    v.v_norm = rng.uniform(0.1, 0.9);
    v.diag_fov = rng.uniform(40.0, 100.0);
    v.aspect = kAllAspectRatios[rng.below(kAllAspectRatios.size())];
    const ImageF out = render_view(pano, v, 65);
    const int cx = out.width / 2, cy = out.height / 2;

    // Ray through the centre of pixel (cx, cy) of a pinhole with the given
    // diagonal field of view, tilted then turned to the view centre.
    const double f = std::hypot(out.width, out.height) / 2.0 / std::tan(v.diag_fov / 2.0 * kDegToRad);
    const Vec3 cam{cx + 0.5 - out.width / 2.0, out.height / 2.0 - (cy + 0.5), f};
    const double yaw = (v.u_norm - 0.5) * 360.0;
    const double pitch = (0.5 - v.v_norm) * 180.0;
    const Vec3 world = normalized(rotate_y(rotate_x(cam, pitch), yaw));
    const auto expect = field(world);
    for (int ch = 0; ch < 3; ++ch) worst = std::max(worst, static_cast<double>(std::abs(out.at(cx, cy)[ch] - expect[ch])));
  }
  c.expect(worst <= kProjectionTol, "centre pixel error " + fmt("%.3g", worst));

  // Panorama depending on yaw only: pitch-0 views must have constant columns.
  const ImageF meridians = openview::testing::analytic_panorama(2048, 1024, [](const Vec3& d) -> std::array<float, 3> {
    const double yaw = std::atan2(d.x, d.z);
    return {static_cast<float>(0.5 + 0.5 * std::sin(3 * yaw)), static_cast<float>(0.5 + 0.5 * std::cos(5 * yaw)),
            static_cast<float>(0.5 + 0.25 * std::sin(yaw))};
  });
  double column_spread = 0.0;
  for (int n = 0; n < 10; ++n) {
    ViewSpec v{rng.uniform(0.0, 1.0), 0.5, rng.uniform(40.0, 100.0), kAllAspectRatios[n % 7], 0.0};
    const ImageF out = render_view(meridians, v, 96);
    for (int x = 0; x < out.width; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        float lo = out.at(x, 0)[ch], hi = lo;
        for (int y = 1; y < out.height; ++y) {
          lo = std::min(lo, out.at(x, y)[ch]);
          hi = std::max(hi, out.at(x, y)[ch]);
        }
        column_spread = std::max(column_spread, static_cast<double>(hi - lo));
      }
    }
  }
  c.expect(column_spread <= kMeridianTol, "meridian column spread " + fmt("%.3g", column_spread));
  const double secs = seconds_since(t0);
  c.expect(secs < kProjectionSeconds, "runtime " + fmt("%.2f", secs) + " s");
  c.note("50 specs max err " + fmt("%.2g", worst) + ", column spread " + fmt("%.2g", column_spread) + ", " +
         fmt("%.2f", secs) + " s");
  return c.result();
}

Result patch_grid_check() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  c.expect(document_states("three rows and four columns"), "reference grid statement not found");
  const PatchGrid grid = patch_grid();
  c.expect(grid.patches.size() == 12, "patch count");
  std::set<std::pair<int, int>> cells;
  for (const auto& p : grid.patches) {
    cells.insert({p.row, p.col});
    c.expect(p.view.roll == 0.0, "nonzero roll");
    for (int n : p.neighbors) {
      c.expect(n >= 0 && n < 12 && n != p.index, "bad neighbour index");
      if (n < 0 || n >= 12) continue;
      const auto& back = grid.patches[n].neighbors;
      c.expect(std::find(back.begin(), back.end(), p.index) != back.end(),
               "neighbour " + std::to_string(p.index) + "->" + std::to_string(n) + " not symmetric");
    }
  }
  int rows = 0, cols = 0;
  for (const auto& [r, col] : cells) {
    rows = std::max(rows, r + 1);
    cols = std::max(cols, col + 1);
  }
  c.expect(cells.size() == 12 && rows == 3 && cols == 4, "grid is not 3 rows x 4 columns");

  // Frustum membership from the view spec alone: undo yaw then pitch, and
  // compare the tangent offsets with the half-angles implied by the diagonal.
  Rng rng(77);
  int uncovered = 0;
  constexpr int kSamples = 10000;
  for (int n = 0; n < kSamples; ++n) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2 * kPi);
    const double r = std::sqrt(std::max(0.0, 1 - z * z));
    const Vec3 d{r * std::cos(phi), z, r * std::sin(phi)};
    bool hit = false;
    for (const auto& p : grid.patches) {
      const auto dims = aspect_dims(p.view.aspect);
      const double half_diag = std::tan(p.view.diag_fov / 2.0 * kDegToRad);
      const double tx = half_diag * dims.w / std::hypot(dims.w, dims.h);
      const double ty = half_diag * dims.h / std::hypot(dims.w, dims.h);
      const Vec3 local = rotate_x(rotate_y(d, -(p.view.u_norm - 0.5) * 360.0), -(0.5 - p.view.v_norm) * 180.0);
      if (local.z > 0 && std::abs(local.x / local.z) <= tx && std::abs(local.y / local.z) <= ty) {
        hit = true;
        break;
      }
    }
    if (!hit) ++uncovered;
  }
  c.expect(uncovered == 0, std::to_string(uncovered) + " of 10000 directions uncovered");
  const double secs = seconds_since(t0);
  c.expect(secs < kPatchSeconds, "runtime " + fmt("%.2f", secs) + " s");
  c.note("12 patches, 3x4, symmetric, 10000/10000 covered, " + fmt("%.2f", secs) + " s");
  return c.result();
}

Result jitter_bound() {
  Check c;
  c.expect(document_states("$\\pm~3.6^\\circ$ in yaw and pitch"), "reference jitter bound not found");
  Rng base(5), rng(11);
  double max_yaw = 0.0, max_pitch = 0.0;
  int outside = 0;
  for (int n = 0; n < 10000; ++n) {
    const ViewSpec v{base.uniform(0.0, 1.0), base.uniform(0.1, 0.9), 70.0, AspectRatio::k4x3, 0.0};
    const ViewSpec j = jitter(v, rng);
    const CameraAngles a = uv_to_angles(v.u_norm, v.v_norm);
    const CameraAngles b = uv_to_angles(j.u_norm, j.v_norm);
    double dy = std::fmod(b.yaw - a.yaw + 540.0, 360.0) - 180.0;
    const double dp = b.pitch - a.pitch;
    dy = std::abs(dy);
    if (dy > kJitterMax || std::abs(dp) > kJitterMax) ++outside;
    max_yaw = std::max(max_yaw, dy);
    max_pitch = std::max(max_pitch, std::abs(dp));
  }
  const double worst = std::max(max_yaw, max_pitch);
  c.expect(outside == 0, std::to_string(outside) + " draws outside ±3.6°");
  c.expect(worst > kJitterFloor && worst <= kJitterMax, "empirical max " + fmt("%.4f", worst));
  c.note("10000 draws, max |dyaw| " + fmt("%.4f", max_yaw) + ", max |dpitch| " + fmt("%.4f", max_pitch));
  return c.result();
}

// Fixture texts mark option references with braces; the oracle resolves
// them through the permutation, the input drops the braces.
std::string resolve_refs(const std::string& marked, const Permutation& perm) {
  std::string out;
  for (std::size_t i = 0; i < marked.size(); ++i) {
    if (marked[i] == '{' && i + 2 < marked.size() && marked[i + 2] == '}') {
      const char l = marked[i + 1];
      const bool lower = l >= 'a' && l <= 'e';
      const int slot = (lower ? l - 'a' : l - 'A');
      const int moved = slot < 4 ? perm[slot] : 4;
      out += static_cast<char>((lower ? 'a' : 'A') + moved);
      i += 2;
    } else {
      out += marked[i];
    }
  }
  return out;
}

Result shuffle_correctness() {
  Check c;
  const std::array<std::string, 5> options = {"A food court", "a ticket gate", "baggage carts", "a fountain",
                                              "Both {A} and {C}"};
  const std::array<std::string, 5> rationales = {
      "Food smells drift from the left; unlike option {B} it fits the hall.",
      "Gates would show floor markings, which are absent.",
      "Carts pair with option {A} in travel hubs.",
      "No water sounds or basins are implied.",
      "Both {A} and {C} are supported, so this is the answer.",
  };
  const std::string conclusion = "Options {A} and {C} together beat {B} and {D}; see option_{e}.";

  auto strip = [](const std::string& s) { return resolve_refs(s, kIdentityPermutation); };
  Proposal base = openview::testing::make_proposal("shuffle-fixture", TaskType::contextual, 'E');
  for (int i = 0; i < 5; ++i) {
    base.options[i] = strip(options[i]);
    base.rationales[i] = strip(rationales[i]);
  }
  base.conclusion = strip(conclusion);
  const std::string question_reasoning = "The hall suggests ({A}) and ({C}), never a fountain.";
  base.question_reasoning = strip(question_reasoning);

  Permutation perm = {0, 1, 2, 3};
  int perms = 0;
  do {
    ++perms;
    for (char answer : {'A', 'C', 'E'}) {
      Proposal p = base;
      p.answer = answer;
      const Proposal s = shuffle_options(p, perm);
      const std::string tag = "perm " + std::to_string(perm[0]) + std::to_string(perm[1]) + std::to_string(perm[2]) +
                              std::to_string(perm[3]);
      for (int old = 0; old < 4; ++old) {
        c.expect(s.options[perm[old]] == resolve_refs(options[old], perm), tag + ": option text");
        c.expect(s.rationales[perm[old]] == resolve_refs(rationales[old], perm), tag + ": rationale text");
      }
      c.expect(s.options[4] == resolve_refs(options[4], perm), tag + ": option E " + s.options[4]);
      c.expect(s.rationales[4] == resolve_refs(rationales[4], perm), tag + ": rationale E");
      c.expect(s.conclusion == resolve_refs(conclusion, perm), tag + ": conclusion " + s.conclusion);
      c.expect(s.question_reasoning == resolve_refs(question_reasoning, perm),
               tag + ": question reasoning " + s.question_reasoning);
      c.expect(s.correct_text() == resolve_refs(options[answer - 'A'], perm), tag + ": answer content");
      c.expect(s.question == p.question, tag + ": question changed");
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  c.expect(perms == 24, "permutation count");

  Rng rng(2025);
  std::array<int, 4> hits{};
  constexpr int kTrials = 10000;
  Proposal p = base;
  p.answer = 'B';
  for (int n = 0; n < kTrials; ++n) ++hits[shuffle_options(p, rng).answer - 'A'];
  double worst = 0.0;
  for (int h : hits) worst = std::max(worst, std::abs(h / static_cast<double>(kTrials) - 0.25));
  c.expect(worst <= kShuffleShareTol, "letter share off by " + fmt("%.4f", worst));
  c.note("24 permutations x 3 answers checked, max share deviation " + fmt("%.4f", worst));
  return c.result();
}

Result pipeline_count() {
  Check c;
  c.expect(document_states("616 initial proposals"), "reference proposal count not found");
  c.expect(document_states("only those with a score of 3"), "reference confidence rule not found");
  TempDir dir("ov-accept-pipeline");
  PipelineConfig cfg;
  cfg.manifest = openview::testing::write_image_corpus(dir / "sources", 77, 128);
  cfg.corpus_root = dir / "corpus";
  cfg.output_root = dir / "out";
  cfg.backend = BackendKind::mock;
  cfg.record_log = false;
  cfg.seed = 7;
  cfg.k = 4;
  cfg.tasks = TaskPlan::both;
  cfg.filter_long_edge = 128;
  cfg.patch_long_edge = 32;
  cfg.generator_long_edge = 128;
  cfg.mock.low_confidence_period = 3;  // one of every four per call
  const RunManifest m = run_pipeline(cfg, {kAllStages.begin(), kAllStages.end()});
  for (const auto& st : m.stages) {
    c.expect(st.ok, std::string(to_string(st.stage)) + " stage failed: " + (st.errors.empty() ? "" : st.errors.front()));
  }
  c.expect(m.stages.size() == kAllStages.size(), std::to_string(m.stages.size()) + " stages ran");
  const OutputLayout out = output_layout(cfg);
  if (!fs::exists(out.initial_proposals)) {
    c.expect(false, "no proposals written");
    return c.result();
  }

  const auto records = read_jsonl(out.records);
  c.expect(records.size() == 77, "corpus has " + std::to_string(records.size()) + " panoramas");
  const auto initial = read_jsonl(out.initial_proposals);
  c.expect(initial.size() == 616, "initial proposals " + std::to_string(initial.size()));

  std::map<std::string, std::map<std::string, int>> per_panorama;
  std::vector<std::string> expected_ids;
  for (const auto& j : initial) {
    const Proposal p = proposal_from_json(j);
    ++per_panorama[p.provenance.panorama_id][std::string(to_string(p.task))];
    if (p.confidence == 3) expected_ids.push_back(p.id);
  }
  bool even = per_panorama.size() == 77;
  for (const auto& [id, tasks] : per_panorama) even = even && tasks.size() == 2 && tasks.at("contextual") == 4 && tasks.at("directional") == 4;
  c.expect(even, "proposals are not 4 per task per panorama");

  std::vector<std::string> refined_ids;
  for (const auto& j : read_jsonl(out.refined_proposals)) refined_ids.push_back(j.at("id").get<std::string>());
  c.expect(refined_ids == expected_ids, "refined set is not the confidence-3 subset of the run");
  c.expect(!expected_ids.empty() && expected_ids.size() < initial.size(), "run produced no low-confidence proposals");

  // Crafted fixture with every confidence value and repeated texts.
  std::vector<Proposal> fixture;
  const int confidences[] = {3, 2, 1, 3, 3, 2, 1, 1, 3, 2, 3, 1};
  for (int i = 0; i < 12; ++i) {
    Proposal p = openview::testing::make_proposal("fx" + std::to_string(i), i % 2 ? TaskType::directional : TaskType::contextual,
                                                  kOptionLetters[i % 5]);
    p.confidence = confidences[i];
    fixture.push_back(p);
  }
  std::vector<std::string> oracle;
  for (const auto& p : fixture) {
    if (p.confidence == 3) oracle.push_back(p.id);
  }
  std::vector<std::string> kept;
  for (const auto& p : filter_confidence(fixture)) kept.push_back(p.id);
  c.expect(kept == oracle, "confidence filter disagrees with the fixture oracle");
  c.note("77 panoramas -> " + std::to_string(initial.size()) + " proposals, " + std::to_string(refined_ids.size()) +
         " at confidence 3; fixture kept " + std::to_string(kept.size()) + "/12");
  return c.result();
}

std::vector<Proposal> accepted_pool(std::uint64_t seed, std::map<std::string, SceneLabel>& scenes) {
  Rng rng(seed);
  std::vector<Proposal> pool;
  // Skewed letters so balancing has work to do.
  const double weights[] = {0.34, 0.24, 0.18, 0.14, 0.10};
  for (int i = 0; i < 542; ++i) {
    const std::string pano = "pano" + std::to_string(i % 77);
    scenes[pano] = kAllSceneLabels[(i % 77) % kSceneLabelCount];
    double x = rng.uniform01();
    int letter = 0;
    while (letter < 4 && x >= weights[letter]) x -= weights[letter++];
    Proposal p = openview::testing::make_proposal("acc" + std::to_string(i), i % 2 ? TaskType::directional : TaskType::contextual,
                                                  kOptionLetters[letter], pano);
    pool.push_back(p);
  }
  return pool;
}

Result benchmark_assembly() {
  Check c;
  c.expect(document_states("1,327"), "reference benchmark size not found");
  c.expect(document_states("665 contextual questions and 662 directional"), "reference task split not found");
  std::map<std::string, SceneLabel> scenes;
  const auto accepted = accepted_pool(99, scenes);
  AugmentationPolicy policy;
  policy.seed = 3;
  std::vector<Proposal> pool;
  for (const auto& p : accepted) {
    for (auto& v : augment(p, policy)) pool.push_back(std::move(v));
  }
  BalanceSpec spec;
  spec.target = kAssemblyTarget;
  spec.letter_tolerance = kLetterSpreadMax;
  spec.seed = 42;
  const AssemblyReport a = assemble_benchmark(pool, spec, scenes);
  const AssemblyReport b = assemble_benchmark(pool, spec, scenes);

  c.expect(static_cast<int>(a.items.size()) == kAssemblyTarget, "assembled " + std::to_string(a.items.size()));
  std::map<char, int> letters;
  int ctx = 0, dir = 0;
  std::set<std::string> ids;
  std::set<std::string> pool_ids;
  for (const auto& p : pool) pool_ids.insert(p.id);
  for (const auto& it : a.items) {
    ++letters[it.answer()];
    (it.task() == TaskType::contextual ? ctx : dir)++;
    ids.insert(it.proposal.id);
    c.expect(pool_ids.count(it.proposal.id) == 1, "item not from the pool");
  }
  c.expect(ids.size() == a.items.size(), "duplicate items");
  int lo = 1 << 30, hi = 0;
  for (char l : kOptionLetters) {
    lo = std::min(lo, letters[l]);
    hi = std::max(hi, letters[l]);
  }
  c.expect(hi - lo <= kLetterSpreadMax, "letter spread " + std::to_string(hi - lo));
  c.expect(std::abs(ctx - 665) <= kSplitTol && std::abs(dir - 662) <= kSplitTol,
           "task split " + std::to_string(ctx) + "/" + std::to_string(dir));
  bool same = a.items.size() == b.items.size();
  for (std::size_t i = 0; same && i < a.items.size(); ++i) same = a.items[i].id == b.items[i].id;
  c.expect(same, "same seed gave different selections");
  std::string hist;
  for (char l : kOptionLetters) hist += std::string(1, l) + ":" + std::to_string(letters[l]) + " ";
  c.note("pool " + std::to_string(pool.size()) + " -> " + std::to_string(a.items.size()) + " items, " + hist +
         "split " + std::to_string(ctx) + "/" + std::to_string(dir));
  return c.result();
}

// Counts behind a two-decimal percentage: every k in [0, n] whose 100k/n
// rounds to the reported value.
std::vector<int> counts_for(double pct, int n) {
  std::vector<int> ks;
  for (int k = 0; k <= n; ++k) {
    if (std::abs(100.0 * k / n - pct) < kRoundingHalfWidth) ks.push_back(k);
  }
  return ks;
}

struct TableRow {
  std::string model;
  std::array<double, 9> values;  // contextual c/r/j, directional c/r/j, overall c/r/j
};

std::string question_id(const std::string& prompt) {
  static const std::regex re(R"(Question: [^\n]*\(([A-Za-z0-9_-]+)\))");
  std::smatch m;
  if (!std::regex_search(prompt, m, re)) throw std::runtime_error("no question id in prompt");
  return m[1];
}

std::string last_user_text(const ChatRequest& req) {
  for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
    if (it->role == Role::user) return it->text;
  }
  return {};
}

Result metrics_arithmetic() {
  Check c;
  const std::vector<TableRow> rows = {
      {"GPT-5", {68.72, 99.56, 68.42, 55.74, 98.92, 55.14, 62.25, 99.27, 61.79}},
      {"LLaVA-NeXT", {39.55, 57.41, 22.71, 31.42, 28.37, 8.91, 35.49, 44.59, 15.82}},
      {"Gemini-2.5-flash", {72.93, 96.08, 70.07, 57.40, 92.63, 53.17, 65.18, 94.57, 61.64}},
  };
  constexpr int kContextual = 665, kDirectional = 662;

  TempDir dir("ov-accept-metrics");
  fs::create_directories(dir / "views");
  write_png(dir / "views" / "shared.png", openview::testing::synthetic_panorama(64, 32, 1));

  for (const auto& row : rows) {
    const auto doc_row = openview::testing::results_row(openview::testing::reference_document(), row.model);
    bool pinned = doc_row.size() == 9;
    for (std::size_t i = 0; pinned && i < 9; ++i) pinned = std::abs(doc_row[i] - row.values[i]) < 1e-9;
    c.expect(pinned, row.model + ": pinned values differ from the results table");

    // Per-split counts recovered from the reported percentages.
    int correct[2], yes[2];
    bool unique = true;
    for (int s = 0; s < 2; ++s) {
      const int n = s == 0 ? kContextual : kDirectional;
      const auto cs = counts_for(row.values[3 * s], n);
      unique = unique && cs.size() == 1;
      if (cs.size() != 1) continue;
      const auto ys = counts_for(row.values[3 * s + 1], cs[0]);
      unique = unique && ys.size() == 1;
      if (ys.size() != 1) continue;
      correct[s] = cs[0];
      yes[s] = ys[0];
      // Reported joints are products of the rounded choice and rationale
      // values, so they only agree to the metric tolerance.
      unique = unique && std::abs(100.0 * yes[s] / n - row.values[3 * s + 2]) < kMetricTolPct;
    }
    c.expect(unique, row.model + ": split counts are not uniquely determined");
    if (!unique) continue;

    // Items, scripted candidate answers and judge verdicts.
    std::vector<BenchmarkItem> items;
    std::map<std::string, std::pair<char, bool>> script;  // id -> (reply letter, judge yes)
    for (int s = 0; s < 2; ++s) {
      const int n = s == 0 ? kContextual : kDirectional;
      for (int i = 0; i < n; ++i) {
        const std::string id = (s == 0 ? "ctx" : "dir") + std::to_string(i);
        const char answer = kOptionLetters[i % 5];
        BenchmarkItem item;
        item.id = id;
        item.proposal = openview::testing::make_proposal(id, s == 0 ? TaskType::contextual : TaskType::directional, answer);
        item.image_path = "views/shared.png";
        items.push_back(item);
        const bool right = i < correct[s];
        script[id] = {right ? answer : kOptionLetters[(i + 1) % 5], i < yes[s]};
      }
    }
    auto recorder = std::make_shared<MockBackend>([&script](const ChatRequest& req) -> std::string {
      const std::string text = last_user_text(req);
      const auto& [letter, verdict] = script.at(question_id(text));
      if (text.rfind("You are a rigorous evaluator", 0) == 0) return verdict ? "<answer>Yes</answer>" : "<answer>No</answer>";
      return std::string("Each option weighed against the view.\n<answer>") + letter + "</answer>";
    });
    const fs::path log = dir / (row.model + ".jsonl");
    GatewayOptions rec_opts;
    rec_opts.replay_log = log;
    {
      Gateway live(recorder, rec_opts);
      auto recs = run_inference(live, items, dir.path().string());
      run_judging(live, items, recs);
    }

    Gateway replay(std::make_shared<ReplayBackend>(log));
    auto records = run_inference(replay, items, dir.path().string());
    run_judging(replay, items, records);
    const MetricsReport m = compute_metrics(records, items);

    const SplitMetrics* splits[3] = {&m.contextual, &m.directional, &m.overall};
    for (int s = 0; s < 3; ++s) {
      const SplitMetrics& sm = *splits[s];
      const double choice = 100.0 * sm.choice_acc, rationale = 100.0 * sm.rationale_acc, joint = 100.0 * sm.joint_acc;
      const double tol = s < 2 ? kRoundingHalfWidth : kMetricTolPct;
      const std::string tag = row.model + " split " + std::to_string(s);
      c.expect(std::abs(choice - row.values[3 * s]) < tol, tag + ": choice " + fmt("%.4f", choice));
      c.expect(std::abs(rationale - row.values[3 * s + 1]) < tol, tag + ": rationale " + fmt("%.4f", rationale));
      c.expect(std::abs(joint - row.values[3 * s + 2]) < kMetricTolPct, tag + ": joint " + fmt("%.4f", joint));
      c.expect(std::abs(joint - choice * rationale / 100.0) < kMetricTolPct, tag + ": joint != choice x rationale");
    }
    c.note(row.model + " " + fmt("%.2f", 100 * m.overall.choice_acc) + "/" + fmt("%.2f", 100 * m.overall.rationale_acc) +
           "/" + fmt("%.4f", 100 * m.overall.joint_acc));
  }

  // Hand-counted example: 3 of 5 correct, 2 of those judged Yes.
  std::vector<BenchmarkItem> five;
  std::vector<EvalRecord> recs;
  const bool right[] = {true, true, true, false, false};
  const Verdict verdicts[] = {Verdict::yes, Verdict::yes, Verdict::no, Verdict::not_judged, Verdict::not_judged};
  for (int i = 0; i < 5; ++i) {
    BenchmarkItem it;
    it.id = "h" + std::to_string(i);
    it.proposal = openview::testing::make_proposal(it.id, i < 3 ? TaskType::contextual : TaskType::directional, 'A');
    five.push_back(it);
    EvalRecord r;
    r.item_id = it.id;
    r.choice = right[i] ? 'A' : 'B';
    r.choice_correct = right[i];
    r.rationale = verdicts[i];
    recs.push_back(r);
  }
  const MetricsReport h = compute_metrics(recs, five);
  c.expect(h.overall.choice_acc == 3.0 / 5.0, "hand example choice " + fmt("%.6f", h.overall.choice_acc));
  c.expect(h.overall.rationale_acc == 2.0 / 3.0, "hand example rationale " + fmt("%.6f", h.overall.rationale_acc));
  c.expect(h.overall.joint_acc == 2.0 / 5.0, "hand example joint " + fmt("%.6f", h.overall.joint_acc));
  c.expect(fmt("%.2f", h.overall.choice_acc) == "0.60" && fmt("%.4f", h.overall.rationale_acc) == "0.6667" &&
               fmt("%.2f", h.overall.joint_acc) == "0.40",
           "hand example rounding");
  c.note("5-record example 0.60/0.6667/0.40");
  return c.result();
}

Result answer_extraction() {
  Check c;
  const std::vector<std::pair<std::string, std::optional<char>>> cases = {
      {"<answer>A</answer>", 'A'},
      {"<answer>E</answer>", 'E'},
      {"Weighing each option against the view. <answer>C</answer>", 'C'},
      {"<answer> D </answer>", 'D'},
      {"<answer>B. a vending machine</answer>", 'B'},
      {"<answer>(C)</answer>", 'C'},
      {"<answer>Option B</answer>", 'B'},
      {"<answer>option d</answer>", 'D'},
      {"<answer>b</answer>", 'B'},
      {"<ANSWER>C</ANSWER>", 'C'},
      {"<Answer>E</Answer>", 'E'},
      {"<answer>A</answer> on reflection <answer>D</answer>", 'D'},
      {"<answer>A</answer><answer>B</answer><answer>C</answer>", 'C'},
      {"The answer is B.", std::nullopt},
      {"", std::nullopt},
      {"<answer></answer>", std::nullopt},
      {"<answer>F</answer>", std::nullopt},
      {"<answer>none of them</answer>", std::nullopt},
      {"<answer>B and C</answer>", 'B'},
      {"<answer>A</answer> then <answer>unsure</answer>", std::nullopt},
      {"<answer>All of the above (E)</answer>", 'E'},
      {"<answer>E. Both A and C</answer>", 'E'},
      {"<answer>**C**</answer>", 'C'},
      {"Reasoning first. <answer>C", 'C'},
      {"Option B is right", std::nullopt},
      {"<answer>D</answer>\n", 'D'},
      {"<answer>\nA\n</answer>", 'A'},
      {"answer: C", std::nullopt},
      {"<answer>The correct option is D</answer>", 'D'},
      {"<answer>a</answer>", 'A'},
  };
  c.expect(cases.size() == 30, "fixture size");
  int exceptions = 0, passed = 0;
  for (const auto& [text, want] : cases) {
    try {
      const auto got = extract_choice(text);
      if (got == want) {
        ++passed;
      } else {
        c.expect(false, "\"" + text + "\" -> " + (got ? std::string(1, *got) : "none"));
      }
    } catch (...) {
      ++exceptions;
    }
  }
  c.expect(exceptions == 0, std::to_string(exceptions) + " exceptions");
  c.note(std::to_string(passed) + "/30 cases, 0 exceptions");
  return c.result();
}

Result template_fidelity() {
  Check c;
  // SHA-256 of each registered part body, in registry order.
  const std::map<std::string, std::vector<std::string>> pins = {
      {"stage1-filter",
       {"8ce67af483d4089f7fd3c9bb1850ebf40aaf37b9947b92963b043f73d210f132",
        "49f1123752d58f3bc5e7bee603c54c97c52cac81e4758544febead0464b35314"}},
      {"stage2-patch",
       {"a190dfef1e79e5f8a2ef757827ff1e7edca4f5763c400d810553d95ee5279b4f",
        "14778b319beb34e158085f3e42e0b4ed30035f783767d14439fde6c214dedae9"}},
      {"stage2-summary",
       {"dd0c41f95c2ecc66cc9827f59ee50fc25b9efa6be2fc48df18268f4bfb7b01a4",
        "1726b637e8c992a75b5397e6e113378a653d3d312b6a271abf29dcb10607102c"}},
      {"stage3-base", {"818ae2b243f291ef4f0532272c6cbae4627d42ad46db7bcfbd5c4be05b83fd90"}},
      {"stage3-contextual", {"fbed94a9f99ebd66f8be9783e9221e40c3e80db374f53b4df4101711fc4fed70"}},
      {"stage3-directional", {"5c21a6eb664ecd010b2945b18acd632b96a4a1bdd2ede29c1a2097c07725ac76"}},
      {"stage3-user", {"b001109f39472e2f29ad8306c57206e5ca4d65aedc6ad531d24569e1bcb4a910"}},
      {"stage4-format",
       {"1c5aad14dd52af1fa60202f9d84ce8401fc7d8a84962903a7436be3e0ed7ee17",
        "9fc71f430d361d96346d8706d372db3421be88e20dcc4c373b6022d4bbb9edbb"}},
      {"bench-inference", {"c94e7ce5c641fdc18ecd8c75a34007896acc4a74c36930b71e015f94101901e4"}},
      {"bench-judge", {"56b394f35ae9686e12436d14c1f676ad0ffa87a343c79dd87e8267632e623a2f"}},
      {"caption-loop", {"a7ea95cd69c94a0e928b8e55dfafc205634b0377ea628ced3ed393cc83c44b24"}},
  };
  const auto expected = openview::testing::expected_templates(openview::testing::reference_document());
  const auto& registry = template_registry();
  c.expect(registry.size() == pins.size(), "registry has " + std::to_string(registry.size()) + " templates");
  int parts = 0;
  for (const auto& t : registry) {
    const std::string name(t.name);
    const auto pin = pins.find(name);
    const auto exp = expected.find(name);
    c.expect(pin != pins.end() && exp != expected.end(), name + ": no appendix text or pin");
    if (pin == pins.end() || exp == expected.end()) continue;
    c.expect(t.parts.size() == exp->second.size() && t.parts.size() == pin->second.size(), name + ": part count");
    for (std::size_t i = 0; i < t.parts.size() && i < exp->second.size() && i < pin->second.size(); ++i) {
      const std::string body(t.parts[i].body);
      c.expect(t.parts[i].role == exp->second[i].role, name + ": role of part " + std::to_string(i));
      c.expect(sha256_hex(body) == sha256_hex(exp->second[i].text), name + ": part " + std::to_string(i) + " differs from appendix");
      c.expect(sha256_hex(body) == pin->second[i], name + ": part " + std::to_string(i) + " checksum changed");
      ++parts;
    }
  }
  c.note(std::to_string(registry.size()) + " templates, " + std::to_string(parts) + " parts byte-identical");
  return c.result();
}

Result caption_loop() {
  Check c;
  c.expect(document_states("eight sequential perspective views"), "reference view count not found");
  Gateway gw(make_mock_backend({}));
  Panorama pano;
  pano.id = "caption-pano";
  pano.pixels = openview::testing::synthetic_panorama(256, 128, 4);
  const ViewSpec start = caption_start_view(0.3, 0.5);
  const CaptionLoopResult r = caption_view_loop(gw, pano, start, "candidate", 64);
  std::set<std::string> distinct;
  for (const auto& d : r.descriptions) {
    c.expect(!d.empty(), "empty description");
    distinct.insert(d);
  }
  c.expect(distinct.size() == 8, "descriptions are not 8 distinct texts");
  c.expect(std::abs(r.total_rotation - 360.0) < 1e-9, "total rotation " + fmt("%.3f", r.total_rotation));

  // Independent check on the views: 90° horizontal field and eight 45° steps
  // that close the circle.
  const auto dims = aspect_dims(start.aspect);
  const double hfov = 2 * std::atan(std::tan(start.diag_fov / 2 * kDegToRad) * dims.w / std::hypot(dims.w, dims.h)) / kDegToRad;
  c.expect(std::abs(hfov - 90.0) < 1e-9, "start view horizontal fov " + fmt("%.6f", hfov));
  const auto views = caption_loop_views(start);
  c.expect(views.size() == 8, "loop has " + std::to_string(views.size()) + " views");
  double accumulated = 0.0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& next = views[(i + 1) % views.size()];
    const double step = std::fmod((next.u_norm - views[i].u_norm) * 360.0 + 720.0, 360.0);
    c.expect(std::abs(step - 45.0) < 1e-9, "step " + std::to_string(i) + " is " + fmt("%.6f", step));
    c.expect(std::abs(r.yaw_offsets[i] - 45.0 * static_cast<double>(i)) < 1e-9, "yaw offset " + std::to_string(i));
    accumulated += step;
  }
  c.expect(std::abs(accumulated - 360.0) < 1e-6, "accumulated " + fmt("%.6f", accumulated));
  c.note("8 tagged descriptions, rotation " + fmt("%.0f", accumulated) + "°");
  return c.result();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"geometry round-trip", geometry_round_trip},
      {"projection oracle", projection_oracle},
      {"patch grid", patch_grid_check},
      {"jitter bound", jitter_bound},
      {"shuffle correctness", shuffle_correctness},
      {"pipeline count", pipeline_count},
      {"benchmark assembly", benchmark_assembly},
      {"metrics arithmetic", metrics_arithmetic},
      {"answer extraction", answer_extraction},
      {"template fidelity", template_fidelity},
      {"caption loop", caption_loop},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Result r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    if (!r.ok) ++failed;
    std::printf("%s  %-22s %s\n", r.ok ? "PASS" : "FAIL", name.c_str(), r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
