#include "openview/media.hpp"

#include <algorithm>
#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

namespace openview {

namespace fs = std::filesystem;

namespace {

Image from_bgr(const cv::Mat& bgr) {
  cv::Mat rgb;
  if (bgr.channels() == 1) {
    cv::cvtColor(bgr, rgb, cv::COLOR_GRAY2RGB);
  } else if (bgr.channels() == 4) {
    cv::cvtColor(bgr, rgb, cv::COLOR_BGRA2RGB);
  } else {
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  }
  if (rgb.depth() != CV_8U) rgb.convertTo(rgb, CV_8UC3, rgb.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
  Image img(rgb.cols, rgb.rows);
  for (int y = 0; y < rgb.rows; ++y) {
    std::copy_n(rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3, img.at(0, y));
  }
  return img;
}

cv::Mat to_bgr(const Image& img) {
  cv::Mat rgb(img.height, img.width, CV_8UC3, const_cast<std::uint8_t*>(img.pixels.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw MediaError("empty image data");
  const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  const cv::Mat m = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (m.empty()) throw MediaError("cannot decode image");
  return from_bgr(m);
}

Image read_image(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MediaError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_image(bytes);
  } catch (const MediaError& e) {
    throw MediaError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.empty()) throw MediaError("cannot encode empty image");
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", to_bgr(img), out, {cv::IMWRITE_PNG_COMPRESSION, 6})) throw MediaError("png encode failed");
  return out;
}

void write_png(const fs::path& path, const Image& img) {
  const auto bytes = encode_png(img);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw MediaError("cannot write " + path.string());
}

Image downscale_to_long_edge(const Image& img, int long_edge) {
  const int cur = std::max(img.width, img.height);
  if (cur <= long_edge) return img;
  const double s = static_cast<double>(long_edge) / cur;
  const int w = std::max(1, static_cast<int>(std::lround(img.width * s)));
  const int h = std::max(1, static_cast<int>(std::lround(img.height * s)));
  cv::Mat src(img.height, img.width, CV_8UC3, const_cast<std::uint8_t*>(img.pixels.data()));
  cv::Mat dst;
  cv::resize(src, dst, cv::Size(w, h), 0, 0, cv::INTER_AREA);
  Image out(w, h);
  for (int y = 0; y < h; ++y) std::copy_n(dst.ptr<std::uint8_t>(y), static_cast<std::size_t>(w) * 3, out.at(0, y));
  return out;
}

bool is_image_file(const fs::path& path) {
  const auto e = lower_ext(path);
  return e == ".png" || e == ".jpg" || e == ".jpeg" || e == ".bmp" || e == ".tif" || e == ".tiff" || e == ".webp";
}

bool is_video_file(const fs::path& path) {
  const auto e = lower_ext(path);
  return e == ".mp4" || e == ".avi" || e == ".mov" || e == ".mkv" || e == ".webm";
}

struct VideoSource::Impl {
  cv::VideoCapture cap;
  int next = 0;
};

VideoSource::VideoSource(fs::path path) : path_(std::move(path)) {
  if (fs::is_directory(path_)) {
    for (const auto& e : fs::directory_iterator(path_)) {
      if (e.is_regular_file() && is_image_file(e.path())) frames_.push_back(e.path());
    }
    std::sort(frames_.begin(), frames_.end());
    frame_count_ = static_cast<int>(frames_.size());
    return;
  }
  impl_ = new Impl;
  if (!impl_->cap.open(path_.string())) {
    delete impl_;
    impl_ = nullptr;
    throw MediaError("cannot open video " + path_.string());
  }
  // Container frame counts are estimates; count by decoding.
  while (impl_->cap.grab()) ++frame_count_;
  impl_->cap.release();
  impl_->cap.open(path_.string());
  impl_->next = 0;
}

VideoSource::~VideoSource() { delete impl_; }

Image VideoSource::frame(int index) {
  if (index < 0 || index >= frame_count_) throw MediaError("frame index out of range");
  if (!impl_) return read_image(frames_[static_cast<std::size_t>(index)]);
  if (index < impl_->next) {
    impl_->cap.release();
    impl_->cap.open(path_.string());
    impl_->next = 0;
  }
  while (impl_->next < index) {
    if (!impl_->cap.grab()) throw MediaError("video ended early");
    ++impl_->next;
  }
  cv::Mat m;
  if (!impl_->cap.read(m) || m.empty()) throw MediaError("cannot decode frame");
  ++impl_->next;
  return from_bgr(m);
}

void write_video(const fs::path& path, std::span<const Image> frames, double fps) {
  if (frames.empty()) throw MediaError("no frames");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  cv::VideoWriter w(path.string(), cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), fps,
                    cv::Size(frames[0].width, frames[0].height));
  if (!w.isOpened()) throw MediaError("cannot open video writer " + path.string());
  for (const Image& f : frames) w.write(to_bgr(f));
}

}  // namespace openview
