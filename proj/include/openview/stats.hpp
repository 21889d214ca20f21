#pragma once

#include <map>
#include <string>
#include <vector>

#include "openview/corpus.hpp"
#include "openview/proposal.hpp"

namespace openview {

struct PrefixNode {
  std::string word;
  int count = 0;
  std::vector<PrefixNode> children;  // by count descending, then word
};

struct StatsReport {
  int items = 0;
  std::map<std::string, int> scene_counts;
  int indoor = 0;
  int outdoor = 0;
  int setting_unknown = 0;
  std::map<char, int> answer_histogram;
  // Word count -> number of texts.
  std::map<int, int> question_words;
  std::map<int, int> option_words;
  std::map<int, int> rationale_words;
  PrefixNode question_prefixes;  // root: all questions; depth <= 4
};

inline constexpr int kPrefixDepth = 4;

int word_count(std::string_view text);
// Lowercased first words with surrounding punctuation stripped.
std::vector<std::string> leading_words(std::string_view text, int n = kPrefixDepth);

// Scene and setting counts over corpus records.
StatsReport dataset_stats(const std::vector<CorpusRecord>& records);
// Full report over proposals; scene counts come from the matching panorama
// record when one is given.
StatsReport dataset_stats(const std::vector<Proposal>& proposals, const std::vector<CorpusRecord>& panoramas = {});

json to_json(const PrefixNode& n);
json to_json(const StatsReport& r);
std::string format_stats(const StatsReport& r);

}  // namespace openview
