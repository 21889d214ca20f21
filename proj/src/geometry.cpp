#include "openview/geometry.hpp"

#include <algorithm>
#include <sstream>

namespace openview {

namespace {

constexpr std::array<std::string_view, 7> kAspectNames = {"4:3", "3:4", "3:2", "2:3", "16:9", "9:16", "1:1"};
constexpr std::array<AspectDims, 7> kAspectDims = {{{4, 3}, {3, 4}, {3, 2}, {2, 3}, {16, 9}, {9, 16}, {1, 1}}};

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

std::string fmt_num(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

AspectDims aspect_dims(AspectRatio a) { return kAspectDims[static_cast<std::size_t>(a)]; }

std::string_view to_string(AspectRatio a) { return kAspectNames[static_cast<std::size_t>(a)]; }

std::optional<AspectRatio> parse_aspect_ratio(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  for (std::size_t i = 0; i < kAspectNames.size(); ++i) {
    if (kAspectNames[i] == s) return static_cast<AspectRatio>(i);
  }
  return std::nullopt;
}

std::vector<std::string> view_spec_violations(const ViewSpec& v, FovRange fov) {
  std::vector<std::string> out;
  if (!in_unit(v.u_norm)) out.push_back("u_norm " + fmt_num(v.u_norm) + " outside [0,1]");
  if (!in_unit(v.v_norm)) out.push_back("v_norm " + fmt_num(v.v_norm) + " outside [0,1]");
  if (!(v.diag_fov >= fov.min_deg && v.diag_fov <= fov.max_deg)) {
    out.push_back("diag_fov " + fmt_num(v.diag_fov) + " outside [" + fmt_num(fov.min_deg) + "," +
                  fmt_num(fov.max_deg) + "]");
  }
  if (v.roll != 0.0) out.push_back("roll must be 0");
  return out;
}

void check_view_spec(const ViewSpec& v, FovRange fov) {
  const auto errs = view_spec_violations(v, fov);
  if (errs.empty()) return;
  std::string msg = "invalid view: ";
  for (std::size_t i = 0; i < errs.size(); ++i) msg += (i ? "; " : "") + errs[i];
  throw DomainError(msg);
}

CameraAngles uv_to_angles(double u, double v) {
  if (!in_unit(u) || !in_unit(v)) throw DomainError("uv outside [0,1]");
  return {(u - 0.5) * 360.0, (0.5 - v) * 180.0};
}

UV angles_to_uv(CameraAngles a) { return {a.yaw / 360.0 + 0.5, 0.5 - a.pitch / 180.0}; }

double normalize_yaw(double yaw) {
  double y = std::fmod(yaw + 180.0, 360.0);
  if (y < 0.0) y += 360.0;
  y -= 180.0;
  if (y >= 180.0) y -= 360.0;
  return y;
}

double yaw_difference(double a, double b) {
  double d = std::fmod(a - b, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

Vec3 direction_from_angles(CameraAngles a) {
  const double y = a.yaw * kDegToRad;
  const double p = a.pitch * kDegToRad;
  return {std::cos(p) * std::sin(y), std::sin(p), std::cos(p) * std::cos(y)};
}

CameraAngles angles_from_direction(const Vec3& d) {
  const double horiz = std::hypot(d.x, d.z);
  return {std::atan2(d.x, d.z) / kDegToRad, std::atan2(d.y, horiz) / kDegToRad};
}

double angular_distance_deg(CameraAngles a, CameraAngles b) {
  const Vec3 p = direction_from_angles(a);
  const Vec3 q = direction_from_angles(b);
  const double dot = std::clamp(p.x * q.x + p.y * q.y + p.z * q.z, -1.0, 1.0);
  return std::acos(dot) / kDegToRad;
}

OutputSize output_size(AspectRatio aspect, int long_edge) {
  const auto [w, h] = aspect_dims(aspect);
  if (w >= h) {
    return {long_edge, static_cast<int>(std::lround(static_cast<double>(long_edge) * h / w))};
  }
  return {static_cast<int>(std::lround(static_cast<double>(long_edge) * w / h)), long_edge};
}

double focal_length_px(double diag_fov_deg, int width, int height) {
  const double diag = std::hypot(static_cast<double>(width), static_cast<double>(height));
  return diag / (2.0 * std::tan(diag_fov_deg * kDegToRad / 2.0));
}

double horizontal_fov(double diag_fov_deg, AspectRatio aspect) {
  const auto [w, h] = aspect_dims(aspect);
  const double half = std::tan(diag_fov_deg * kDegToRad / 2.0) * w / std::hypot(w, h);
  return 2.0 * std::atan(half) / kDegToRad;
}

double vertical_fov(double diag_fov_deg, AspectRatio aspect) {
  const auto [w, h] = aspect_dims(aspect);
  const double half = std::tan(diag_fov_deg * kDegToRad / 2.0) * h / std::hypot(w, h);
  return 2.0 * std::atan(half) / kDegToRad;
}

double diag_fov_for_horizontal(double hfov_deg, AspectRatio aspect) {
  const auto [w, h] = aspect_dims(aspect);
  const double half = std::tan(hfov_deg * kDegToRad / 2.0) * std::hypot(w, h) / w;
  return 2.0 * std::atan(half) / kDegToRad;
}

PinholeCamera::PinholeCamera(const ViewSpec& view, OutputSize size)
    : size_(size), focal_(focal_length_px(view.diag_fov, size.width, size.height)) {
  const CameraAngles a = uv_to_angles(view.u_norm, view.v_norm);
  cy_ = std::cos(a.yaw * kDegToRad);
  sy_ = std::sin(a.yaw * kDegToRad);
  cp_ = std::cos(a.pitch * kDegToRad);
  sp_ = std::sin(a.pitch * kDegToRad);
}

Vec3 PinholeCamera::ray(double x, double y) const {
  const double xc = x - size_.width / 2.0;
  const double yc = size_.height / 2.0 - y;
  const double zc = focal_;
  // Pitch about the camera x axis, then yaw about the world up axis.
  const double y1 = yc * cp_ + zc * sp_;
  const double z1 = -yc * sp_ + zc * cp_;
  return {xc * cy_ + z1 * sy_, y1, -xc * sy_ + z1 * cy_};
}

void check_panorama_buffer(int width, int height, std::size_t pixel_count) {
  if (width < 2 || height < 1) throw DomainError("panorama too small");
  if (width != 2 * height) throw DomainError("panorama must have 2:1 aspect ratio");
  if (pixel_count != static_cast<std::size_t>(width) * height * 3) throw DomainError("panorama buffer size mismatch");
}

void check_panorama(const Panorama& p) {
  check_panorama_buffer(p.pixels.width, p.pixels.height, p.pixels.pixels.size());
}

PatchGrid patch_grid() {
  PatchGrid grid;
  for (int row = 0; row < kPatchRows; ++row) {
    for (int col = 0; col < kPatchCols; ++col) {
      Patch& p = grid.patches[row * kPatchCols + col];
      p.index = row * kPatchCols + col;
      p.row = row;
      p.col = col;
      const UV uv = angles_to_uv({normalize_yaw(kPatchColYaw[col]), kPatchRowPitch[row]});
      p.view = ViewSpec{uv.u, uv.v, kPatchDiagFov, AspectRatio::k1x1, 0.0};
      p.neighbors.push_back(row * kPatchCols + (col + kPatchCols - 1) % kPatchCols);
      p.neighbors.push_back(row * kPatchCols + (col + 1) % kPatchCols);
      if (row > 0) p.neighbors.push_back((row - 1) * kPatchCols + col);
      if (row + 1 < kPatchRows) p.neighbors.push_back((row + 1) * kPatchCols + col);
    }
  }
  return grid;
}

PatchGrid patch_grid(const Panorama& p) {
  check_panorama(p);
  return patch_grid();
}

int nearest_patch(const PatchGrid& grid, CameraAngles a) {
  int best = 0;
  double best_d = 1e300;
  for (const Patch& p : grid.patches) {
    const double d = angular_distance_deg(a, uv_to_angles(p.view.u_norm, p.view.v_norm));
    if (d < best_d - 1e-12) {
      best_d = d;
      best = p.index;
    }
  }
  return best;
}

JitterResult jitter_view(const ViewSpec& v, Rng& rng, double max_deg) {
  check_view_spec(v, kRenderableFov);
  if (max_deg < 0.0) throw DomainError("negative jitter bound");
  const double dyaw = rng.uniform(-max_deg, max_deg);
  const double dpitch = rng.uniform(-max_deg, max_deg);
  JitterResult r{v, 0.0, 0.0};
  if (dyaw == 0.0 && dpitch == 0.0) return r;

  // Work in uv space, which is linear in the angles.
  double u = v.u_norm + dyaw / 360.0;
  if (u < 0.0) u += 1.0;
  if (u > 1.0) u -= 1.0;
  double vv = std::clamp(v.v_norm - dpitch / 180.0, 0.0, 1.0);

  const auto induced_yaw = [&](double uu) { return yaw_difference((uu - 0.5) * 360.0, (v.u_norm - 0.5) * 360.0); };
  const auto induced_pitch = [&](double x) { return (v.v_norm - x) * 180.0; };
  // Rounding through uv can push the induced delta one ulp past the bound.
  for (double d = induced_yaw(u); std::abs(d) > max_deg; d = induced_yaw(u)) {
    u = std::nextafter(u, d > 0.0 ? -1.0 : 2.0);
    if (u < 0.0) u = 1.0;
    if (u > 1.0) u = 0.0;
  }
  for (double d = induced_pitch(vv); std::abs(d) > max_deg; d = induced_pitch(vv)) {
    vv = std::nextafter(vv, d > 0.0 ? 2.0 : -1.0);
  }

  r.view.u_norm = u;
  r.view.v_norm = vv;
  r.dyaw = induced_yaw(u);
  r.dpitch = induced_pitch(vv);
  return r;
}

ViewSpec apply_rotation(const ViewSpec& v, double dyaw, double dpitch) {
  const CameraAngles a = uv_to_angles(v.u_norm, v.v_norm);
  const CameraAngles b{normalize_yaw(a.yaw + dyaw), std::clamp(a.pitch + dpitch, -90.0, 90.0)};
  const UV uv = angles_to_uv(b);
  ViewSpec out = v;
  out.u_norm = std::clamp(uv.u, 0.0, 1.0);
  out.v_norm = std::clamp(uv.v, 0.0, 1.0);
  out.roll = 0.0;
  return out;
}

}  // namespace openview
