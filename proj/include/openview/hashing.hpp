#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace openview {

std::string sha256_hex(std::string_view data);
std::string sha256_hex(std::span<const std::uint8_t> data);

std::string base64_encode(std::string_view data);

}  // namespace openview
