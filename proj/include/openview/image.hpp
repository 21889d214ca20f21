#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace openview {

// Row-major interleaved RGB buffer.
template <typename T>
struct ImageT {
  int width = 0;
  int height = 0;
  std::vector<T> pixels;  // width * height * 3

  static constexpr int kChannels = 3;

  ImageT() = default;
  ImageT(int w, int h, T fill = T{}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * kChannels, fill) {
    if (w < 0 || h < 0) throw std::invalid_argument("negative image size");
  }

  [[nodiscard]] bool empty() const { return width == 0 || height == 0; }

  [[nodiscard]] std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * kChannels;
  }
  T* at(int x, int y) { return pixels.data() + offset(x, y); }
  const T* at(int x, int y) const { return pixels.data() + offset(x, y); }

  friend bool operator==(const ImageT&, const ImageT&) = default;
};

using Image = ImageT<std::uint8_t>;
using ImageF = ImageT<float>;

template <typename T>
struct PixelTraits {
  static T from_float(float v) { return static_cast<T>(v); }
};

template <>
struct PixelTraits<std::uint8_t> {
  static std::uint8_t from_float(float v) {
    if (v <= 0.0f) return 0;
    if (v >= 255.0f) return 255;
    return static_cast<std::uint8_t>(v + 0.5f);
  }
};

}  // namespace openview
