#pragma once

#include <cstdint>
#include <memory>

#include "openview/chat.hpp"

namespace openview {

// Deterministic stand-in for every model role. Responses depend only on the
// request content and the seed.
struct MockAssistantOptions {
  std::uint64_t seed = 0;
  // Every n-th generated proposal gets confidence 2 (0: never).
  int low_confidence_period = 0;
  // Every n-th generated proposal carries an out-of-range diag_fov (0: never).
  int invalid_fov_period = 0;
  // Images whose content hash is 0 mod n are judged uninformative (0: never).
  int invalid_image_period = 0;
  // Wrap JSON replies in fences with trailing commas so repair paths run.
  bool sloppy_json = false;
  // When set, the candidate always answers this letter; otherwise the letter
  // is hash-derived.
  char candidate_fixed_letter = 0;
};

MockBackend::Handler make_mock_assistant(MockAssistantOptions opts = {});
std::shared_ptr<MockBackend> make_mock_backend(MockAssistantOptions opts = {});

}  // namespace openview
