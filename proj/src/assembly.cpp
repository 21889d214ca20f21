#include "openview/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "openview/random.hpp"

namespace openview {

json to_json(const BalanceSpec& s) {
  json j = {{"target", s.target}, {"letter_tolerance", s.letter_tolerance}, {"seed", s.seed}};
  j["scene_tolerance"] = s.scene_tolerance ? json(*s.scene_tolerance) : json(nullptr);
  return j;
}

BalanceSpec balance_spec_from_json(const json& j) {
  BalanceSpec s;
  s.target = j.value("target", s.target);
  s.letter_tolerance = j.value("letter_tolerance", s.letter_tolerance);
  if (j.contains("scene_tolerance") && !j["scene_tolerance"].is_null()) s.scene_tolerance = j["scene_tolerance"].get<int>();
  s.seed = j.value("seed", s.seed);
  return s;
}

int AssemblyReport::letter_spread() const {
  int lo = -1;
  int hi = 0;
  for (char c : kOptionLetters) {
    const auto it = letters.find(c);
    const int n = it == letters.end() ? 0 : it->second;
    lo = lo < 0 ? n : std::min(lo, n);
    hi = std::max(hi, n);
  }
  return hi - lo;
}

std::string item_image_path(const std::string& proposal_id) { return "views/" + proposal_id + ".png"; }

namespace {

constexpr int task_index(TaskType t) { return t == TaskType::contextual ? 0 : 1; }

}  // namespace

AssemblyReport assemble_benchmark(const std::vector<Proposal>& pool, const BalanceSpec& spec,
                                  const std::map<std::string, SceneLabel>& scene_of_panorama) {
  if (spec.target < 1) throw AssemblyError("target", "must be >= 1");
  if (spec.letter_tolerance < 0) throw AssemblyError("letter balance", "tolerance must be >= 0");

  std::set<std::string> ids;
  for (const auto& p : pool) {
    if (!ids.insert(p.id).second) throw AssemblyError("target", "duplicate proposal id " + p.id + " in pool");
  }
  if (static_cast<std::size_t>(spec.target) > pool.size())
    throw AssemblyError("target", std::to_string(spec.target) + " requested, pool holds " + std::to_string(pool.size()));

  auto scene_name = [&](const Proposal& p) {
    const auto it = scene_of_panorama.find(p.provenance.panorama_id);
    return it == scene_of_panorama.end() ? std::string("unlabelled") : std::string(to_string(it->second));
  };

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(spec.seed, "assemble"));
  rng.shuffle(std::span<std::size_t>(order));

  // Buckets by (task, letter, scene) in shuffled order.
  std::vector<std::string> scene_names;
  std::map<std::string, int> scene_idx;
  std::map<std::string, int> scene_pool;
  for (const auto& p : pool) {
    const std::string s = scene_name(p);
    if (scene_idx.emplace(s, static_cast<int>(scene_names.size())).second) scene_names.push_back(s);
    ++scene_pool[s];
  }
  const int n_scenes = static_cast<int>(scene_names.size());
  std::vector<std::deque<std::size_t>> buckets(2 * 5 * n_scenes);
  auto bucket = [&](int t, int l, int s) -> std::deque<std::size_t>& { return buckets[(t * 5 + l) * n_scenes + s]; };
  std::array<int, 2> available{};
  for (std::size_t i : order) {
    const Proposal& p = pool[i];
    if (p.answer < 'A' || p.answer > 'E') throw AssemblyError("target", "proposal " + p.id + " has no answer letter");
    bucket(task_index(p.task), p.answer - 'A', scene_idx[scene_name(p)]).push_back(i);
    ++available[task_index(p.task)];
  }

  const std::array<int, 2> quota = {(spec.target + 1) / 2, spec.target / 2};
  for (int t = 0; t < 2; ++t) {
    if (available[t] < quota[t]) {
      throw AssemblyError("task split", "need " + std::to_string(quota[t]) + " " +
                                            std::string(to_string(t == 0 ? TaskType::contextual : TaskType::directional)) +
                                            ", pool holds " + std::to_string(available[t]));
    }
  }

  std::vector<double> scene_share(n_scenes);
  for (int s = 0; s < n_scenes; ++s)
    scene_share[s] = static_cast<double>(spec.target) * scene_pool[scene_names[s]] / static_cast<double>(pool.size());

  // Seeded tie-break orders.
  std::array<int, 5> letter_rank = {0, 1, 2, 3, 4};
  rng.shuffle(std::span<int>(letter_rank));
  std::vector<int> scene_rank(n_scenes);
  for (int s = 0; s < n_scenes; ++s) scene_rank[s] = s;
  rng.shuffle(std::span<int>(scene_rank));

  std::array<int, 2> taken{};
  std::array<int, 5> letter_count{};
  std::vector<int> scene_count(n_scenes, 0);
  AssemblyReport rep;

  for (int step = 0; step < spec.target; ++step) {
    // Task with the larger remaining fraction of its quota.
    int t = -1;
    double best_frac = -1.0;
    for (int c = 0; c < 2; ++c) {
      if (taken[c] >= quota[c]) continue;
      const double frac = static_cast<double>(quota[c] - taken[c]) / quota[c];
      if (frac > best_frac) {
        best_frac = frac;
        t = c;
      }
    }
    // Least-filled letter with candidates for this task.
    int letter = -1;
    for (int r = 0; r < 5; ++r) {
      const int l = letter_rank[r];
      bool any = false;
      for (int s = 0; s < n_scenes && !any; ++s) any = !bucket(t, l, s).empty();
      if (!any) continue;
      if (letter < 0 || letter_count[l] < letter_count[letter]) letter = l;
    }
    if (letter < 0) throw AssemblyError("task split", "ran out of candidates");
    // Scene furthest below its share.
    int scene = -1;
    double best_gap = 0.0;
    for (int r = 0; r < n_scenes; ++r) {
      const int s = scene_rank[r];
      if (bucket(t, letter, s).empty()) continue;
      const double gap = scene_share[s] - scene_count[s];
      if (scene < 0 || gap > best_gap) {
        scene = s;
        best_gap = gap;
      }
    }
    auto& q = bucket(t, letter, scene);
    const Proposal& p = pool[q.front()];
    q.pop_front();
    ++taken[t];
    ++letter_count[letter];
    ++scene_count[scene];
    rep.items.push_back({p.id, p, item_image_path(p.id)});
  }

  for (int l = 0; l < 5; ++l) rep.letters[kOptionLetters[l]] = letter_count[l];
  for (int s = 0; s < n_scenes; ++s) rep.scenes[scene_names[s]] = scene_count[s];
  rep.contextual = taken[0];
  rep.directional = taken[1];

  if (rep.letter_spread() > spec.letter_tolerance) {
    throw AssemblyError("letter balance", "spread " + std::to_string(rep.letter_spread()) + " exceeds tolerance " +
                                              std::to_string(spec.letter_tolerance));
  }
  if (spec.scene_tolerance) {
    for (int s = 0; s < n_scenes; ++s) {
      const double dev = std::abs(scene_count[s] - scene_share[s]);
      if (dev > *spec.scene_tolerance) {
        throw AssemblyError("scene balance", scene_names[s] + " off its share by " +
                                                 std::to_string(static_cast<int>(std::ceil(dev))) + " (tolerance " +
                                                 std::to_string(*spec.scene_tolerance) + ")");
      }
    }
  }
  return rep;
}

}  // namespace openview
