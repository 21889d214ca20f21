#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "openview/image.hpp"

namespace openview {

class MediaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// PNG/JPEG (anything OpenCV imgcodecs reads) into RGB.
Image decode_image(std::span<const std::uint8_t> bytes);
Image read_image(const std::filesystem::path& path);

// Lossless, deterministic PNG encoding.
std::vector<std::uint8_t> encode_png(const Image& img);
void write_png(const std::filesystem::path& path, const Image& img);

// Area-averaged downscale so the longer edge is at most `long_edge`.
Image downscale_to_long_edge(const Image& img, int long_edge);

bool is_image_file(const std::filesystem::path& path);
bool is_video_file(const std::filesystem::path& path);

// A video is either a container file decoded through FFmpeg, or a directory
// holding one image per frame (sorted by file name).
class VideoSource {
 public:
  explicit VideoSource(std::filesystem::path path);
  ~VideoSource();
  VideoSource(const VideoSource&) = delete;
  VideoSource& operator=(const VideoSource&) = delete;

  [[nodiscard]] int frame_count() const { return frame_count_; }
  Image frame(int index);

 private:
  struct Impl;
  std::filesystem::path path_;
  std::vector<std::filesystem::path> frames_;  // frame-directory mode
  int frame_count_ = 0;
  Impl* impl_ = nullptr;
};

// Writes an MJPG .avi; used by tests and fixtures.
void write_video(const std::filesystem::path& path, std::span<const Image> frames, double fps = 10.0);

}  // namespace openview
