#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "openview/proposal.hpp"
#include "openview/random.hpp"

namespace openview {

// perm[old slot] = new slot over A-D; E never moves.
using Permutation = std::array<int, 4>;

inline constexpr Permutation kIdentityPermutation = {0, 1, 2, 3};

bool is_permutation(const Permutation& p);
char permute_letter(char letter, const Permutation& perm);
Permutation random_permutation(Rng& rng);

// Keeps exactly the proposals whose confidence is 3.
std::vector<Proposal> filter_confidence(const std::vector<Proposal>& props);

// Span of an option-letter reference inside a text.
struct LetterRef {
  std::size_t pos;
  char letter;
};

// Letters that name options: runs like "A, B and D", "Both A and C",
// "option B", "(C)", "option_c", or a text that is only a letter.
std::vector<LetterRef> find_letter_refs(std::string_view text);
std::string rewrite_letter_refs(std::string_view text, const Permutation& perm);

Proposal shuffle_options(const Proposal& p, const Permutation& perm);
Proposal shuffle_options(const Proposal& p, Rng& rng);

struct AugmentationPolicy {
  bool shuffle = true;
  double jitter_max_deg = 3.6;
  int copies = 3;
  std::uint64_t seed = 0;
};

void check_policy(const AugmentationPolicy& policy);

// The original followed by `copies` variants, each shuffled and jittered
// with a generator seeded from (policy seed, proposal id, variant index).
std::vector<Proposal> augment(const Proposal& p, const AugmentationPolicy& policy);

}  // namespace openview
