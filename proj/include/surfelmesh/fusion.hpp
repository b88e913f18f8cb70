#pragma once

#include "surfelmesh/association.hpp"
#include "surfelmesh/core.hpp"
#include "surfelmesh/preprocess.hpp"

namespace sm {

struct FusionConfig {
  double sigma_max = 5.0;
  double merge_dist_factor = 0.5;
  double merge_normal_angle = 20.0;

  bool valid() const { return sigma_max >= 1; }
};

struct Measurement {
  Vec3d p;
  Vec3d n;
  Vec3d c;
  double radius = 0;  // Eq.-1 radius at the pixel, 0 if undefined
};

struct FusionStats {
  std::size_t integrated = 0;
  std::size_t conflicted = 0;
  std::size_t replaced = 0;
  std::size_t removed = 0;
  std::size_t created = 0;
  std::size_t merged = 0;
};

// World-frame measurement of a pixel; depth taken from `depth` (the blended image).
Measurement measurement_at(const DepthFrame& frame, const DepthImage& depth, int x, int y,
                           const CameraIntrinsics& K);

std::optional<Surfel> create_surfel(const DepthFrame& frame, const DepthImage& depth, int x, int y,
                                    const CameraIntrinsics& K);

void integrate_measurement(Surfel& s, const Measurement& m, double w, std::int64_t t,
                           const FusionConfig& config);

FusionStats integrate_frame(SurfelCloud& cloud, const DepthFrame& frame, const DepthImage& depth,
                            const AssociationResult& assoc, const CameraIntrinsics& K,
                            const FusionConfig& config);

std::size_t merge_similar(SurfelCloud& cloud, const AssociationResult& assoc,
                          const FusionConfig& config);

}  // namespace sm
