#include "openview/refiner.hpp"

#include <algorithm>
#include <cctype>

#include "openview/errors.hpp"
#include "openview/geometry.hpp"
#include "openview/hashing.hpp"

namespace openview {

bool is_permutation(const Permutation& p) {
  std::array<bool, 4> seen{};
  for (int v : p) {
    if (v < 0 || v > 3 || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

char permute_letter(char letter, const Permutation& perm) {
  if (letter >= 'A' && letter <= 'D') return static_cast<char>('A' + perm[letter - 'A']);
  return letter;
}

Permutation random_permutation(Rng& rng) {
  Permutation p = kIdentityPermutation;
  rng.shuffle(std::span<int>(p));
  return p;
}

std::vector<Proposal> filter_confidence(const std::vector<Proposal>& props) {
  std::vector<Proposal> out;
  std::copy_if(props.begin(), props.end(), std::back_inserter(out), [](const Proposal& p) { return p.confidence == 3; });
  return out;
}

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool word_at(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != word[i]) return false;
  }
  return (pos == 0 || !is_alnum(text[pos - 1])) && (pos + word.size() == text.size() || !is_alnum(text[pos + word.size()]));
}

// Standalone uppercase letters A-E.
std::vector<std::size_t> letter_tokens(std::string_view text) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c < 'A' || c > 'E') continue;
    const bool left = i == 0 || !is_alnum(text[i - 1]);
    const bool right = i + 1 == text.size() || !is_alnum(text[i + 1]);
    // "A's" or "A-frame" are words, not references.
    const bool glued = i + 1 < text.size() && (text[i + 1] == '\'' || text[i + 1] == '-');
    if (left && right && !glued) out.push_back(i);
  }
  return out;
}

// True when the gap between two letters holds only list separators.
bool is_separator(std::string_view gap) {
  std::size_t i = 0;
  bool any = false;
  while (i < gap.size()) {
    const char c = gap[i];
    if (c == ' ' || c == ',' || c == '&' || c == '/') {
      any = any || c != ' ';
      ++i;
      continue;
    }
    bool matched = false;
    for (std::string_view w : {"and", "or", "nor"}) {
      if (word_at(gap, i, w)) {
        i += w.size();
        matched = any = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return any;
}

// Word immediately before pos, lowercased.
std::string previous_word(std::string_view text, std::size_t pos) {
  std::size_t end = pos;
  while (end > 0 && (text[end - 1] == ' ' || text[end - 1] == ':')) --end;
  std::size_t start = end;
  while (start > 0 && std::isalpha(static_cast<unsigned char>(text[start - 1]))) --start;
  std::string w(text.substr(start, end - start));
  for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return w;
}

}  // namespace

std::vector<LetterRef> find_letter_refs(std::string_view text) {
  std::vector<LetterRef> refs;
  const auto toks = letter_tokens(text);

  std::size_t first_non_space = text.find_first_not_of(" \t\n\"'(");
  std::size_t last_non_space = text.find_last_not_of(" \t\n\"').");

  std::size_t i = 0;
  while (i < toks.size()) {
    std::size_t j = i;
    while (j + 1 < toks.size() && is_separator(text.substr(toks[j] + 1, toks[j + 1] - toks[j] - 1))) ++j;
    const std::size_t start = toks[i];
    const std::size_t end = toks[j];
    const std::string prev = previous_word(text, start);
    const bool run = j > i;
    const bool cued = prev == "option" || prev == "options" || prev == "both" || prev == "either" ||
                      prev == "neither" || prev == "choice" || prev == "choices" || prev == "answer";
    const bool parenthesised = start > 0 && text[start - 1] == '(' && end + 1 < text.size() && text[end + 1] == ')';
    const bool whole = start == first_non_space && end == last_non_space;
    if (run || cued || parenthesised || whole) {
      for (std::size_t k = i; k <= j; ++k) refs.push_back({toks[k], text[toks[k]]});
    }
    i = j + 1;
  }

  // Schema-style names such as option_c.
  for (std::size_t p = text.find("option_"); p != std::string_view::npos; p = text.find("option_", p + 1)) {
    const std::size_t q = p + 7;
    if (q < text.size() && text[q] >= 'a' && text[q] <= 'e' && (q + 1 == text.size() || !is_alnum(text[q + 1]))) {
      refs.push_back({q, text[q]});
    }
  }
  std::sort(refs.begin(), refs.end(), [](const LetterRef& a, const LetterRef& b) { return a.pos < b.pos; });
  return refs;
}

std::string rewrite_letter_refs(std::string_view text, const Permutation& perm) {
  std::string out(text);
  for (const auto& r : find_letter_refs(text)) {
    if (r.letter >= 'a' && r.letter <= 'e') {
      out[r.pos] = static_cast<char>(std::tolower(permute_letter(static_cast<char>(std::toupper(r.letter)), perm)));
    } else {
      out[r.pos] = permute_letter(r.letter, perm);
    }
  }
  return out;
}

Proposal shuffle_options(const Proposal& p, const Permutation& perm) {
  if (!is_permutation(perm)) throw ConfigError("not a permutation of A-D");
  Proposal out = p;
  for (int old = 0; old < 4; ++old) {
    out.options[perm[old]] = rewrite_letter_refs(p.options[old], perm);
    out.rationales[perm[old]] = rewrite_letter_refs(p.rationales[old], perm);
  }
  out.options[4] = rewrite_letter_refs(p.options[4], perm);
  out.rationales[4] = rewrite_letter_refs(p.rationales[4], perm);
  out.conclusion = rewrite_letter_refs(p.conclusion, perm);
  out.question_reasoning = rewrite_letter_refs(p.question_reasoning, perm);
  out.answer = permute_letter(p.answer, perm);
  return out;
}

Proposal shuffle_options(const Proposal& p, Rng& rng) { return shuffle_options(p, random_permutation(rng)); }

void check_policy(const AugmentationPolicy& policy) {
  if (!(policy.jitter_max_deg >= 0.0 && policy.jitter_max_deg <= 3.6))
    throw ConfigError("jitter_max_deg must be in [0, 3.6]");
  if (policy.copies < 0 || policy.copies > 8) throw ConfigError("copies must be in [0, 8]");
}

std::vector<Proposal> augment(const Proposal& p, const AugmentationPolicy& policy) {
  check_policy(policy);
  std::vector<Proposal> out;
  out.push_back(p);
  for (int v = 1; v <= policy.copies; ++v) {
    Rng rng(mix_seed(policy.seed, p.id, static_cast<std::uint64_t>(v)));
    const Permutation perm = policy.shuffle ? random_permutation(rng) : kIdentityPermutation;
    Proposal variant = shuffle_options(p, perm);
    const JitterResult j = jitter_view(p.view, rng, policy.jitter_max_deg);
    variant.view = j.view;
    variant.id = sha256_hex(p.id + "#" + std::to_string(v)).substr(0, 16);
    variant.view_image.clear();
    variant.provenance.parent_id = p.id;
    variant.provenance.permutation = perm;
    variant.provenance.jitter_yaw = j.dyaw;
    variant.provenance.jitter_pitch = j.dpitch;
    variant.provenance.variant = v;
    variant.provenance.seed = policy.seed;
    out.push_back(std::move(variant));
  }
  return out;
}

}  // namespace openview
