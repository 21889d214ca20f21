#pragma once

#include <stdexcept>

namespace openview {

// Bad configuration or caller input: unknown names, out-of-range settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace openview
