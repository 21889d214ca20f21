#include "openview/stats.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace openview {

int word_count(std::string_view text) {
  int n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::vector<std::string> leading_words(std::string_view text, int n) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (static_cast<int>(out.size()) < n && in >> w) {
    const auto keep = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || (c & 0x80); };
    const auto b = std::find_if(w.begin(), w.end(), keep);
    const auto e = std::find_if(w.rbegin(), w.rend(), keep).base();
    if (b >= e) continue;
    std::string t(b, e);
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

void count_setting(StatsReport& r, const std::optional<SceneLabel>& scene, const std::optional<bool>& outdoor) {
  ++r.scene_counts[scene ? std::string(to_string(*scene)) : "unlabelled"];
  if (!outdoor) {
    ++r.setting_unknown;
  } else if (*outdoor) {
    ++r.outdoor;
  } else {
    ++r.indoor;
  }
}

void insert_prefix(PrefixNode& root, const std::vector<std::string>& words) {
  ++root.count;
  PrefixNode* node = &root;
  for (const auto& w : words) {
    auto it = std::find_if(node->children.begin(), node->children.end(),
                           [&](const PrefixNode& c) { return c.word == w; });
    if (it == node->children.end()) {
      node->children.push_back({w, 0, {}});
      it = node->children.end() - 1;
    }
    ++it->count;
    node = &*it;
  }
}

void sort_tree(PrefixNode& n) {
  std::sort(n.children.begin(), n.children.end(), [](const PrefixNode& a, const PrefixNode& b) {
    return a.count != b.count ? a.count > b.count : a.word < b.word;
  });
  for (auto& c : n.children) sort_tree(c);
}

void print_tree(std::ostream& os, const PrefixNode& n, int depth, int max_children) {
  int shown = 0;
  for (const auto& c : n.children) {
    if (shown++ == max_children) {
      os << std::string(2 * depth, ' ') << "...\n";
      break;
    }
    os << std::string(2 * depth, ' ') << c.word << " (" << c.count << ")\n";
    print_tree(os, c, depth + 1, max_children);
  }
}

json histogram_json(const std::map<int, int>& h) {
  json j = json::object();
  for (const auto& [k, v] : h) j[std::to_string(k)] = v;
  return j;
}

}  // namespace

StatsReport dataset_stats(const std::vector<CorpusRecord>& records) {
  StatsReport r;
  for (const auto& rec : records) {
    ++r.items;
    count_setting(r, rec.scene, rec.outdoor);
  }
  return r;
}

StatsReport dataset_stats(const std::vector<Proposal>& proposals, const std::vector<CorpusRecord>& panoramas) {
  std::map<std::string, const CorpusRecord*> by_id;
  for (const auto& rec : panoramas) by_id[rec.id] = &rec;
  StatsReport r;
  for (const auto& p : proposals) {
    ++r.items;
    const auto it = by_id.find(p.provenance.panorama_id);
    if (it != by_id.end()) {
      count_setting(r, it->second->scene, it->second->outdoor);
    } else {
      count_setting(r, std::nullopt, std::nullopt);
    }
    ++r.answer_histogram[p.answer];
    ++r.question_words[word_count(p.question)];
    for (const auto& o : p.options) ++r.option_words[word_count(o)];
    for (const auto& ra : p.rationales) ++r.rationale_words[word_count(ra)];
    insert_prefix(r.question_prefixes, leading_words(p.question));
  }
  sort_tree(r.question_prefixes);
  return r;
}

json to_json(const PrefixNode& n) {
  json children = json::array();
  for (const auto& c : n.children) children.push_back(to_json(c));
  return {{"word", n.word}, {"count", n.count}, {"children", children}};
}

json to_json(const StatsReport& r) {
  json answers = json::object();
  for (const auto& [k, v] : r.answer_histogram) answers[std::string(1, k)] = v;
  return {{"items", r.items},
          {"scene_counts", r.scene_counts},
          {"indoor", r.indoor},
          {"outdoor", r.outdoor},
          {"setting_unknown", r.setting_unknown},
          {"answer_histogram", answers},
          {"question_words", histogram_json(r.question_words)},
          {"option_words", histogram_json(r.option_words)},
          {"rationale_words", histogram_json(r.rationale_words)},
          {"question_prefixes", to_json(r.question_prefixes)}};
}

std::string format_stats(const StatsReport& r) {
  std::ostringstream os;
  os << "items: " << r.items << "\n";
  os << "indoor: " << r.indoor << "  outdoor: " << r.outdoor << "  unknown: " << r.setting_unknown << "\n";
  os << "scenes:\n";
  for (const auto& [k, v] : r.scene_counts) os << "  " << k << ": " << v << "\n";
  if (!r.answer_histogram.empty()) {
    os << "answers:";
    for (const auto& [k, v] : r.answer_histogram) os << ' ' << k << ':' << v;
    os << "\n";
  }
  if (!r.question_prefixes.children.empty()) {
    os << "question prefixes:\n";
    print_tree(os, r.question_prefixes, 1, 5);
  }
  return os.str();
}

}  // namespace openview
