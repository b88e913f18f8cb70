#pragma once

#include <cstdint>
#include <vector>

#include "surfelmesh/core.hpp"
#include "surfelmesh/preprocess.hpp"

namespace sm {

enum class AssocClass : std::uint8_t { kUnobserved = 0, kSupported, kConflicting, kOccluded };

struct AssocConfig {
  double gamma = 0.05;
  double occlusion_normal_angle = 60.0;
  // Negative means unlimited.
  std::int64_t active_window = -1;

  bool valid() const { return gamma > 0 && gamma < 1; }
};

struct AssociationResult {
  int width = 0;
  int height = 0;
  std::vector<AssocClass> class_of_surfel;  // indexed by surfel ID
  std::vector<std::vector<SurfelId>> supporters_of_pixel;
  Image<SurfelId> index_image;
  DepthImage surfel_depth_image;
  // Pixel had at least one surfel classified as conflicting against it.
  MaskImage conflict_at_pixel;
  // First pixel (row-major index) each conflicting surfel conflicts with.
  std::vector<std::int64_t> conflict_pixel_of_surfel;
  // Pixel each supported surfel projects to (row-major index), -1 otherwise.
  std::vector<std::int64_t> projected_pixel;

  AssocClass cls(SurfelId id) const {
    return id < class_of_surfel.size() ? class_of_surfel[id] : AssocClass::kUnobserved;
  }
};

bool is_active(const Surfel& s, std::int64_t now, const AssocConfig& config);

// Per-pixel classification of one surfel against one measurement.
AssocClass classify_against_pixel(double surfel_depth, const Vec3d& surfel_normal_cam,
                                  const Vec3d& view_dir_cam, double measured_depth,
                                  const Vec3d& measured_normal_cam, const AssocConfig& config);

AssociationResult associate(const SurfelCloud& cloud, const DepthFrame& frame,
                            const CameraIntrinsics& K, const AssocConfig& config,
                            std::uint64_t seed);

namespace serial {
AssociationResult associate(const SurfelCloud& cloud, const DepthFrame& frame,
                            const CameraIntrinsics& K, const AssocConfig& config,
                            std::uint64_t seed);
}

// Deterministic 64-bit generator (splitmix64) used wherever a seeded choice is
// needed, so results do not depend on the standard library's distributions.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
};

}  // namespace sm
