#pragma once

#include <vector>

#include "surfelmesh/core.hpp"

namespace sm {

struct DepthFrame {
  DepthImage depth;           // meters, 0 = invalid
  ColorImage color;
  Image<Vec3d> normal;        // camera frame
  DepthImage radius;          // meters, 0 = undefined
  MaskImage valid;
  Pose pose;
  std::int64_t t = 0;

  int width() const { return depth.width; }
  int height() const { return depth.height; }
};

struct PreprocessConfig {
  double max_depth = 3.0;
  double bilateral_sigma_xy = 3.0;
  double bilateral_sigma_z_factor = 0.05;
  int temporal_window = 4;
  double temporal_tolerance = 0.02;
  int erosion_px = 2;
  double max_normal_view_angle = 85.0;

  bool enable_cutoff = true;
  bool enable_bilateral = true;
  bool enable_temporal = true;
  bool enable_erosion = true;

  bool valid() const;
};

DepthImage cutoff_far(const DepthImage& depth, double max_depth);

DepthImage bilateral_filter(const DepthImage& depth, const PreprocessConfig& config);

struct PosedDepth {
  const DepthImage* depth;
  Pose pose;
};

// Validity mask of the center frame checked against the other frames of the
// window. Frames may be fewer than 2*temporal_window at sequence ends.
MaskImage temporal_outlier_filter(const PosedDepth& center, const std::vector<PosedDepth>& others,
                                  const CameraIntrinsics& K, double tolerance);

MaskImage erode_near_invalid(const MaskImage& valid, int erosion_px);

// Fills normal and radius from depth and valid; drops pixels whose normal is
// undefined or too oblique to the viewing ray.
void compute_normals_and_radii(DepthFrame& frame, const CameraIntrinsics& K,
                               double max_normal_view_angle_deg);

MaskImage mask_from_depth(const DepthImage& depth);
void apply_mask(DepthImage& depth, const MaskImage& valid);

// First two stages, which only depend on the frame itself.
DepthImage preprocess_single(const DepthImage& raw_meters, const PreprocessConfig& config);

// Remaining stages. `window` holds the single-frame-preprocessed neighbors.
DepthFrame preprocess_finish(const DepthImage& filtered, const ColorImage& color, const Pose& pose,
                             std::int64_t t, const std::vector<PosedDepth>& window,
                             const CameraIntrinsics& K, const PreprocessConfig& config);

namespace serial {
DepthImage bilateral_filter(const DepthImage& depth, const PreprocessConfig& config);
MaskImage temporal_outlier_filter(const PosedDepth& center, const std::vector<PosedDepth>& others,
                                  const CameraIntrinsics& K, double tolerance);
MaskImage erode_near_invalid(const MaskImage& valid, int erosion_px);
}  // namespace serial

}  // namespace sm
