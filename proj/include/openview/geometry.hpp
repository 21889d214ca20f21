#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "openview/image.hpp"
#include "openview/random.hpp"

namespace openview {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;

enum class AspectRatio { k4x3, k3x4, k3x2, k2x3, k16x9, k9x16, k1x1 };

inline constexpr std::array<AspectRatio, 7> kAllAspectRatios = {
    AspectRatio::k4x3, AspectRatio::k3x4, AspectRatio::k3x2, AspectRatio::k2x3,
    AspectRatio::k16x9, AspectRatio::k9x16, AspectRatio::k1x1};

struct AspectDims {
  int w;
  int h;
};

AspectDims aspect_dims(AspectRatio a);
std::string_view to_string(AspectRatio a);
std::optional<AspectRatio> parse_aspect_ratio(std::string_view s);

struct FovRange {
  double min_deg;
  double max_deg;
};

// Range a model-framed (proposal) view must respect.
inline constexpr FovRange kProposalFov{40.0, 100.0};
// Anything the pinhole renderer can represent.
inline constexpr FovRange kRenderableFov{1e-6, 179.0};

// Perspective crop of a panorama: centre in normalised panorama coordinates,
// diagonal field of view, output aspect, and zero roll.
struct ViewSpec {
  double u_norm = 0.5;
  double v_norm = 0.5;
  double diag_fov = 90.0;
  AspectRatio aspect = AspectRatio::k1x1;
  double roll = 0.0;

  friend bool operator==(const ViewSpec&, const ViewSpec&) = default;
};

// Human-readable violations; empty when the view is valid under `fov`.
std::vector<std::string> view_spec_violations(const ViewSpec& v, FovRange fov = kProposalFov);
void check_view_spec(const ViewSpec& v, FovRange fov = kProposalFov);

struct CameraAngles {
  double yaw = 0.0;    // degrees, positive to the right
  double pitch = 0.0;  // degrees, positive upward
};

struct UV {
  double u = 0.5;
  double v = 0.5;
};

// yaw = (u - 0.5) * 360, pitch = (0.5 - v) * 180. Throws DomainError outside [0,1].
CameraAngles uv_to_angles(double u, double v);
UV angles_to_uv(CameraAngles a);

// Wraps into [-180, 180).
double normalize_yaw(double yaw);
// Signed smallest difference a - b in (-180, 180].
double yaw_difference(double a, double b);

struct Vec3 {
  double x = 0.0;  // right
  double y = 0.0;  // up
  double z = 1.0;  // forward
};

Vec3 direction_from_angles(CameraAngles a);
CameraAngles angles_from_direction(const Vec3& d);
double angular_distance_deg(CameraAngles a, CameraAngles b);

struct OutputSize {
  int width = 0;
  int height = 0;
};

OutputSize output_size(AspectRatio aspect, int long_edge);
double focal_length_px(double diag_fov_deg, int width, int height);
double horizontal_fov(double diag_fov_deg, AspectRatio aspect);
double vertical_fov(double diag_fov_deg, AspectRatio aspect);
double diag_fov_for_horizontal(double hfov_deg, AspectRatio aspect);

// Pinhole camera for a view rendered at a given output size.
class PinholeCamera {
 public:
  PinholeCamera(const ViewSpec& view, OutputSize size);

  // World ray through image coordinates (x, y) in pixels; pixel (i, j) has
  // its centre at (i + 0.5, j + 0.5).
  [[nodiscard]] Vec3 ray(double x, double y) const;
  [[nodiscard]] double focal() const { return focal_; }
  [[nodiscard]] OutputSize size() const { return size_; }

 private:
  OutputSize size_;
  double focal_;
  double cy_, sy_, cp_, sp_;
};

template <typename T>
void sample_bilinear(const ImageT<T>& pano, CameraAngles a, float out[3]) {
  const double u = a.yaw / 360.0 + 0.5;
  const double v = 0.5 - a.pitch / 180.0;
  double px = u * pano.width - 0.5;
  double py = v * pano.height - 0.5;
  if (py < 0.0) py = 0.0;
  if (py > pano.height - 1) py = pano.height - 1;
  const double fx0 = std::floor(px);
  const double fy0 = std::floor(py);
  const double tx = px - fx0;
  const double ty = py - fy0;
  int x0 = static_cast<int>(fx0) % pano.width;
  if (x0 < 0) x0 += pano.width;
  const int x1 = (x0 + 1) % pano.width;
  const int y0 = static_cast<int>(fy0);
  const int y1 = y0 + 1 < pano.height ? y0 + 1 : y0;
  const T* p00 = pano.at(x0, y0);
  const T* p10 = pano.at(x1, y0);
  const T* p01 = pano.at(x0, y1);
  const T* p11 = pano.at(x1, y1);
  for (int c = 0; c < 3; ++c) {
    const double top = p00[c] + (static_cast<double>(p10[c]) - p00[c]) * tx;
    const double bot = p01[c] + (static_cast<double>(p11[c]) - p01[c]) * tx;
    out[c] = static_cast<float>(top + (bot - top) * ty);
  }
}

void check_panorama_buffer(int width, int height, std::size_t pixel_count);

// Renders a zero-roll pinhole view. The longer output edge is `out_long_edge`.
template <typename T>
ImageT<T> render_view(const ImageT<T>& pano, const ViewSpec& view, int out_long_edge) {
  check_panorama_buffer(pano.width, pano.height, pano.pixels.size());
  check_view_spec(view, kRenderableFov);
  if (out_long_edge < 8) throw DomainError("out_long_edge must be >= 8");
  const OutputSize size = output_size(view.aspect, out_long_edge);
  const PinholeCamera cam(view, size);
  ImageT<T> out(size.width, size.height);
  float px[3];
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) {
      const CameraAngles a = angles_from_direction(cam.ray(x + 0.5, y + 0.5));
      sample_bilinear(pano, a, px);
      T* dst = out.at(x, y);
      for (int c = 0; c < 3; ++c) dst[c] = PixelTraits<T>::from_float(px[c]);
    }
  }
  return out;
}

struct SourceInfo {
  std::string dataset;
  std::string video_id;  // empty for still images
  int frame_index = 0;
  std::string source_path;
};

struct Panorama {
  std::string id;
  Image pixels;
  SourceInfo source;
};

// Throws DomainError unless width == 2 * height and width >= 2.
void check_panorama(const Panorama& p);

inline constexpr int kPatchRows = 3;
inline constexpr int kPatchCols = 4;
inline constexpr int kPatchCount = kPatchRows * kPatchCols;
inline constexpr std::array<double, kPatchRows> kPatchRowPitch = {45.0, 0.0, -45.0};
inline constexpr std::array<double, kPatchCols> kPatchColYaw = {0.0, 90.0, 180.0, 270.0};
// 120° diagonal on a square patch is 101.5° horizontally: the middle row
// overlaps its neighbours and the ±45° rows reach past the poles.
inline constexpr double kPatchDiagFov = 120.0;

struct Patch {
  int index = 0;
  int row = 0;
  int col = 0;
  ViewSpec view;
  std::vector<int> neighbors;  // left, right, then up/down when present
};

struct PatchGrid {
  std::array<Patch, kPatchCount> patches;
};

PatchGrid patch_grid();
PatchGrid patch_grid(const Panorama& p);
// Grid patch whose centre is closest (great-circle) to the direction.
int nearest_patch(const PatchGrid& grid, CameraAngles a);

struct JitterResult {
  ViewSpec view;
  double dyaw = 0.0;
  double dpitch = 0.0;
};

// Perturbs the view centre by up to ±max_deg in yaw and pitch.
JitterResult jitter_view(const ViewSpec& v, Rng& rng, double max_deg = 3.6);
inline ViewSpec jitter(const ViewSpec& v, Rng& rng, double max_deg = 3.6) {
  return jitter_view(v, rng, max_deg).view;
}

// Yaw wraps modulo 360, pitch clamps to [-90, 90]; roll stays 0.
ViewSpec apply_rotation(const ViewSpec& v, double dyaw, double dpitch);

}  // namespace openview
