#include <gtest/gtest.h>

#include <set>

#include "openview/assembly.hpp"
#include "openview/errors.hpp"
#include "openview/refiner.hpp"
#include "support.hpp"

using namespace openview;
using openview::testing::make_proposal;

namespace {

std::vector<Proposal> balanced_pool(int n, int panoramas = 4) {
  std::vector<Proposal> pool;
  for (int i = 0; i < n; ++i) {
    const TaskType t = i % 2 ? TaskType::directional : TaskType::contextual;
    pool.push_back(make_proposal("p" + std::to_string(i), t, kOptionLetters[(i / 2) % 5],
                                 "pano" + std::to_string(i % panoramas)));
  }
  return pool;
}

std::string assembly_constraint(const std::vector<Proposal>& pool, const BalanceSpec& spec) {
  try {
    assemble_benchmark(pool, spec);
  } catch (const AssemblyError& e) {
    return e.constraint();
  }
  return "";
}

}  // namespace

TEST(Confidence, KeepsOnlyThrees) {
  std::vector<Proposal> props;
  for (int c : {1, 3, 2, 3, 3}) {
    props.push_back(make_proposal("c" + std::to_string(props.size()), TaskType::contextual, 'A'));
    props.back().confidence = c;
  }
  const auto kept = filter_confidence(props);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0].id, "c1");
  EXPECT_EQ(kept[2].id, "c4");
}

TEST(Permutations, Basics) {
  EXPECT_TRUE(is_permutation({2, 0, 3, 1}));
  EXPECT_FALSE(is_permutation({0, 0, 1, 2}));
  EXPECT_FALSE(is_permutation({0, 1, 2, 4}));
  EXPECT_EQ(permute_letter('B', {2, 0, 3, 1}), 'A');
  EXPECT_EQ(permute_letter('E', {2, 0, 3, 1}), 'E');
  std::set<Permutation> seen;
  Rng rng(0);
  for (int i = 0; i < 500; ++i) {
    const Permutation p = random_permutation(rng);
    EXPECT_TRUE(is_permutation(p));
    seen.insert(p);
  }
  EXPECT_EQ(seen.size(), 24u);
}

TEST(LetterRefs, WhatCountsAsAReference) {
  auto letters = [](std::string_view s) {
    std::string out;
    for (const auto& r : find_letter_refs(s)) out += r.letter;
    return out;
  };
  EXPECT_EQ(letters("Both A and C"), "AC");
  EXPECT_EQ(letters("A, B and D are wrong"), "ABD");
  EXPECT_EQ(letters("unlike option B"), "B");
  EXPECT_EQ(letters("as in (C)"), "C");
  EXPECT_EQ(letters("see option_c"), "c");
  EXPECT_EQ(letters("D"), "D");
  EXPECT_EQ(letters("A tall tree"), "");
  EXPECT_EQ(letters("an A-frame house"), "");
  EXPECT_EQ(letters("Plan B's merit"), "");
}

TEST(LetterRefs, RewriteKeepsCase) {
  const Permutation perm = {1, 2, 3, 0};  // A->B, B->C, C->D, D->A
  EXPECT_EQ(rewrite_letter_refs("Both A and D", perm), "Both B and A");
  EXPECT_EQ(rewrite_letter_refs("like option_a", perm), "like option_b");
  EXPECT_EQ(rewrite_letter_refs("A tall tree", perm), "A tall tree");
}

TEST(Shuffle, MovesOptionsAndAnswer) {
  const Proposal p = make_proposal("s", TaskType::contextual, 'B');
  const Permutation perm = {3, 0, 1, 2};
  const Proposal s = shuffle_options(p, perm);
  for (int old = 0; old < 4; ++old) EXPECT_EQ(s.options[perm[old]], p.options[old]);
  EXPECT_EQ(s.options[4], p.options[4]);
  EXPECT_EQ(s.answer, 'A');
  EXPECT_EQ(s.correct_text(), p.correct_text());
  EXPECT_THROW(shuffle_options(p, Permutation{0, 0, 1, 2}), ConfigError);
  EXPECT_EQ(to_json(shuffle_options(p, kIdentityPermutation)), to_json(p));
}

TEST(Augment, VariantsAreSeededAndTraceable) {
  const Proposal p = make_proposal("orig", TaskType::directional, 'C');
  AugmentationPolicy policy;
  policy.copies = 3;
  policy.seed = 11;
  const auto a = augment(p, policy);
  const auto b = augment(p, policy);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(to_json(a[0]), to_json(p));
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(to_json(a[i]), to_json(b[i]));
    ids.insert(a[i].id);
    if (i == 0) continue;
    EXPECT_EQ(a[i].provenance.parent_id, "orig");
    EXPECT_EQ(a[i].provenance.variant, static_cast<int>(i));
    EXPECT_LE(std::abs(a[i].provenance.jitter_yaw), 3.6);
    EXPECT_EQ(a[i].correct_text(), p.correct_text());
    EXPECT_EQ(a[i].answer, permute_letter(p.answer, *a[i].provenance.permutation));
  }
  EXPECT_EQ(ids.size(), 4u);
  policy.seed = 12;
  EXPECT_NE(to_json(augment(p, policy)[1]), to_json(a[1]));
}

TEST(Augment, PolicyLimits) {
  const Proposal p = make_proposal("orig", TaskType::contextual, 'A');
  AugmentationPolicy policy;
  policy.jitter_max_deg = 4.0;
  EXPECT_THROW(augment(p, policy), ConfigError);
  policy.jitter_max_deg = 0.0;
  policy.shuffle = false;
  policy.copies = 1;
  const auto out = augment(p, policy);
  EXPECT_EQ(out[1].view, p.view);
  EXPECT_EQ(out[1].options, p.options);
  policy.copies = 9;
  EXPECT_THROW(check_policy(policy), ConfigError);
}

TEST(Assembly, MeetsQuotasDeterministically) {
  const auto pool = balanced_pool(60);
  BalanceSpec spec;
  spec.target = 25;
  spec.letter_tolerance = 1;
  spec.seed = 2;
  const AssemblyReport a = assemble_benchmark(pool, spec);
  const AssemblyReport b = assemble_benchmark(pool, spec);
  ASSERT_EQ(a.items.size(), 25u);
  EXPECT_EQ(a.contextual + a.directional, 25);
  EXPECT_LE(std::abs(a.contextual - a.directional), 1);
  EXPECT_LE(a.letter_spread(), 1);
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    EXPECT_EQ(a.items[i].id, b.items[i].id);
    EXPECT_EQ(a.items[i].image_path, item_image_path(a.items[i].id));
  }
  std::set<std::string> ids;
  for (const auto& it : a.items) ids.insert(it.id);
  EXPECT_EQ(ids.size(), 25u);
  EXPECT_EQ(item_image_path("abc"), "views/abc.png");
}

TEST(Assembly, SceneCountsUseThePanoramaMap) {
  const auto pool = balanced_pool(40);
  BalanceSpec spec;
  spec.target = 20;
  const std::map<std::string, SceneLabel> scenes = {{"pano0", SceneLabel::Nature},
                                                    {"pano1", SceneLabel::Nature},
                                                    {"pano2", SceneLabel::Civic},
                                                    {"pano3", SceneLabel::Transport}};
  const AssemblyReport r = assemble_benchmark(pool, spec, scenes);
  int total = 0;
  for (const auto& [name, n] : r.scenes) total += n;
  EXPECT_EQ(total, 20);
  EXPECT_GT(r.scenes.at("Nature"), 0);
}

TEST(Assembly, NamesTheFailedConstraint) {
  BalanceSpec spec;
  spec.target = 100;
  EXPECT_EQ(assembly_constraint(balanced_pool(20), spec), "target");

  auto dup = balanced_pool(20);
  dup.push_back(dup.front());
  spec.target = 10;
  EXPECT_EQ(assembly_constraint(dup, spec), "target");

  std::vector<Proposal> one_task;
  for (int i = 0; i < 20; ++i) one_task.push_back(make_proposal("c" + std::to_string(i), TaskType::contextual, kOptionLetters[i % 5]));
  EXPECT_EQ(assembly_constraint(one_task, spec), "task split");

  std::vector<Proposal> all_a;
  for (int i = 0; i < 30; ++i)
    all_a.push_back(make_proposal("a" + std::to_string(i), i % 2 ? TaskType::directional : TaskType::contextual, 'A'));
  spec.target = 20;
  spec.letter_tolerance = 3;
  EXPECT_EQ(assembly_constraint(all_a, spec), "letter balance");
}

TEST(Assembly, SpecJsonRoundTrip) {
  BalanceSpec spec;
  spec.target = 50;
  spec.scene_tolerance = 4;
  spec.seed = 7;
  const BalanceSpec back = balance_spec_from_json(to_json(spec));
  EXPECT_EQ(back.target, 50);
  EXPECT_EQ(back.scene_tolerance, 4);
  EXPECT_EQ(back.seed, 7u);
  EXPECT_EQ(back.letter_tolerance, 10);
}
