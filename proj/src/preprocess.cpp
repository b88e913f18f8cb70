#include "surfelmesh/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace sm {

bool PreprocessConfig::valid() const {
  return max_depth > 0 && bilateral_sigma_xy > 0 && bilateral_sigma_z_factor > 0 &&
         temporal_window > 0 && temporal_tolerance > 0 && temporal_tolerance < 1 &&
         erosion_px > 0 && max_normal_view_angle > 0;
}

DepthImage cutoff_far(const DepthImage& depth, double max_depth) {
  DepthImage out = depth;
  for (double& d : out.data)
    if (!(d > 0) || d > max_depth) d = 0;
  return out;
}

MaskImage mask_from_depth(const DepthImage& depth) {
  MaskImage m(depth.width, depth.height, 0);
  for (std::size_t i = 0; i < depth.size(); ++i) m.data[i] = depth.data[i] > 0 ? 1 : 0;
  return m;
}

void apply_mask(DepthImage& depth, const MaskImage& valid) {
  for (std::size_t i = 0; i < depth.size(); ++i)
    if (!valid.data[i]) depth.data[i] = 0;
}

namespace {

int bilateral_half_width(double sigma_xy) { return static_cast<int>(std::ceil(2.0 * sigma_xy)); }

std::vector<double> spatial_weights(int hw, double sigma_xy) {
  int side = 2 * hw + 1;
  std::vector<double> w(std::size_t(side) * side);
  for (int dy = -hw; dy <= hw; ++dy)
    for (int dx = -hw; dx <= hw; ++dx)
      w[std::size_t(dy + hw) * side + (dx + hw)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_xy * sigma_xy));
  return w;
}

inline double bilateral_pixel(const DepthImage& in, int x, int y, int hw,
                              const std::vector<double>& spatial, double sigma_z_factor) {
  double z = in(x, y);
  if (!(z > 0)) return 0;
  double sz = sigma_z_factor * z;
  double inv = 1.0 / (2.0 * sz * sz);
  int side = 2 * hw + 1;
  double sum = 0, wsum = 0;
  int y0 = std::max(0, y - hw), y1 = std::min(in.height - 1, y + hw);
  int x0 = std::max(0, x - hw), x1 = std::min(in.width - 1, x + hw);
  for (int qy = y0; qy <= y1; ++qy) {
    for (int qx = x0; qx <= x1; ++qx) {
      double d = in(qx, qy);
      if (!(d > 0)) continue;
      double dz = d - z;
      double w = spatial[std::size_t(qy - y + hw) * side + (qx - x + hw)] * std::exp(-dz * dz * inv);
      sum += w * d;
      wsum += w;
    }
  }
  return sum / wsum;
}

inline std::uint8_t temporal_pixel(const PosedDepth& center, const std::vector<PosedDepth>& others,
                                   const CameraIntrinsics& K, double tol, int x, int y) {
  double z = (*center.depth)(x, y);
  if (!(z > 0)) return 0;
  Vec3d pw = center.pose.to_world(unproject(x, y, z, K));
  for (const PosedDepth& o : others) {
    auto sp = project(o.pose.to_camera(pw), K);
    if (!sp) return 0;
    int px = static_cast<int>(std::floor(sp->u + 0.5));
    int py = static_cast<int>(std::floor(sp->v + 0.5));
    if (!o.depth->in_bounds(px, py)) return 0;
    double d = (*o.depth)(px, py);
    if (!(d > 0)) return 0;
    if (std::abs(d - sp->depth) > tol * sp->depth) return 0;
  }
  return 1;
}

inline std::uint8_t erode_pixel(const MaskImage& valid, int r, int x, int y) {
  if (!valid(x, y)) return 0;
  int y0 = std::max(0, y - r), y1 = std::min(valid.height - 1, y + r);
  int x0 = std::max(0, x - r), x1 = std::min(valid.width - 1, x + r);
  for (int qy = y0; qy <= y1; ++qy)
    for (int qx = x0; qx <= x1; ++qx)
      if (!valid(qx, qy)) return 0;
  return 1;
}

}  // namespace

DepthImage bilateral_filter(const DepthImage& depth, const PreprocessConfig& config) {
  int hw = bilateral_half_width(config.bilateral_sigma_xy);
  auto spatial = spatial_weights(hw, config.bilateral_sigma_xy);
  DepthImage out(depth.width, depth.height, 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x)
      out(x, y) = bilateral_pixel(depth, x, y, hw, spatial, config.bilateral_sigma_z_factor);
  return out;
}

MaskImage temporal_outlier_filter(const PosedDepth& center, const std::vector<PosedDepth>& others,
                                  const CameraIntrinsics& K, double tolerance) {
  const DepthImage& d = *center.depth;
  MaskImage out(d.width, d.height, 0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) out(x, y) = temporal_pixel(center, others, K, tolerance, x, y);
  return out;
}

MaskImage erode_near_invalid(const MaskImage& valid, int erosion_px) {
  MaskImage out(valid.width, valid.height, 0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < valid.height; ++y)
    for (int x = 0; x < valid.width; ++x) out(x, y) = erode_pixel(valid, erosion_px, x, y);
  return out;
}

namespace serial {

DepthImage bilateral_filter(const DepthImage& depth, const PreprocessConfig& config) {
  int hw = bilateral_half_width(config.bilateral_sigma_xy);
  auto spatial = spatial_weights(hw, config.bilateral_sigma_xy);
  DepthImage out(depth.width, depth.height, 0.0);
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x)
      out(x, y) = bilateral_pixel(depth, x, y, hw, spatial, config.bilateral_sigma_z_factor);
  return out;
}

MaskImage temporal_outlier_filter(const PosedDepth& center, const std::vector<PosedDepth>& others,
                                  const CameraIntrinsics& K, double tolerance) {
  const DepthImage& d = *center.depth;
  MaskImage out(d.width, d.height, 0);
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) out(x, y) = temporal_pixel(center, others, K, tolerance, x, y);
  return out;
}

MaskImage erode_near_invalid(const MaskImage& valid, int erosion_px) {
  MaskImage out(valid.width, valid.height, 0);
  for (int y = 0; y < valid.height; ++y)
    for (int x = 0; x < valid.width; ++x) out(x, y) = erode_pixel(valid, erosion_px, x, y);
  return out;
}

}  // namespace serial

void compute_normals_and_radii(DepthFrame& f, const CameraIntrinsics& K,
                               double max_normal_view_angle_deg) {
  const int w = f.width(), h = f.height();
  Image<Vec3d> P(w, h, Vec3d::Zero());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (f.valid(x, y)) P(x, y) = unproject(x, y, f.depth(x, y), K);

  auto ok = [&](int x, int y) { return f.valid.in_bounds(x, y) && f.valid(x, y); };
  const double cos_max = std::cos(deg2rad(max_normal_view_angle_deg));

  f.normal = Image<Vec3d>(w, h, Vec3d::Zero());
  MaskImage keep(w, h, 0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!ok(x, y)) continue;
      Vec3d tx, ty;
      if (ok(x - 1, y) && ok(x + 1, y)) tx = P(x + 1, y) - P(x - 1, y);
      else if (ok(x + 1, y)) tx = P(x + 1, y) - P(x, y);
      else if (ok(x - 1, y)) tx = P(x, y) - P(x - 1, y);
      else continue;
      if (ok(x, y - 1) && ok(x, y + 1)) ty = P(x, y + 1) - P(x, y - 1);
      else if (ok(x, y + 1)) ty = P(x, y + 1) - P(x, y);
      else if (ok(x, y - 1)) ty = P(x, y) - P(x, y - 1);
      else continue;
      Vec3d n = tx.cross(ty);
      double len = n.norm();
      if (!(len > 0)) continue;
      n /= len;
      Vec3d to_cam = -P(x, y).normalized();
      if (n.dot(to_cam) < 0) n = -n;
      if (n.dot(to_cam) < cos_max) continue;
      f.normal(x, y) = n;
      keep(x, y) = 1;
    }
  }
  f.valid = keep;
  apply_mask(f.depth, f.valid);

  f.radius = DepthImage(w, h, 0.0);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!ok(x, y)) continue;
      double max_d = 0;
      bool complete = true;
      for (int dy = -1; dy <= 1 && complete; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (!ok(x + dx, y + dy)) {
            complete = false;
            break;
          }
          max_d = std::max(max_d, (P(x, y) - P(x + dx, y + dy)).norm());
        }
      }
      if (complete) f.radius(x, y) = 1.5 * max_d;
    }
  }
}

DepthImage preprocess_single(const DepthImage& raw, const PreprocessConfig& config) {
  DepthImage d = config.enable_cutoff ? cutoff_far(raw, config.max_depth) : cutoff_far(raw, INFINITY);
  if (config.enable_bilateral) d = bilateral_filter(d, config);
  return d;
}

DepthFrame preprocess_finish(const DepthImage& filtered, const ColorImage& color, const Pose& pose,
                             std::int64_t t, const std::vector<PosedDepth>& window,
                             const CameraIntrinsics& K, const PreprocessConfig& config) {
  DepthFrame f;
  f.depth = filtered;
  f.color = color;
  f.pose = pose;
  f.t = t;
  f.valid = mask_from_depth(f.depth);
  if (config.enable_temporal && !window.empty()) {
    MaskImage tm = temporal_outlier_filter(PosedDepth{&filtered, pose}, window, K,
                                           config.temporal_tolerance);
    for (std::size_t i = 0; i < tm.size(); ++i) f.valid.data[i] &= tm.data[i];
  }
  if (config.enable_erosion) f.valid = erode_near_invalid(f.valid, config.erosion_px);
  apply_mask(f.depth, f.valid);
  compute_normals_and_radii(f, K, config.max_normal_view_angle);
  return f;
}

}  // namespace sm
