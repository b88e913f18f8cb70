#pragma once

#include <set>
#include <vector>

#include "surfelmesh/core.hpp"
#include "surfelmesh/octree.hpp"

namespace sm {

// Copy of the surfel attributes the meshing side works on, plus the change
// sets accumulated since the previous snapshot.
struct SurfelSnapshot {
  std::vector<Vec3d> p;  // denoised positions
  std::vector<Vec3d> n;
  std::vector<double> r;
  std::vector<std::int64_t> t;
  std::vector<std::uint8_t> live;
  std::vector<std::uint32_t> generation;
  std::set<SurfelId> moved, replaced, created, removed;
  std::int64_t frame = 0;

  bool is_live(SurfelId id) const { return id < live.size() && live[id]; }
  std::size_t capacity() const { return live.size(); }
};

// Copies the cloud; with `clear_tracking` the cloud's change sets are reset.
SurfelSnapshot make_snapshot(SurfelCloud& cloud, std::int64_t frame, bool clear_tracking = true);

// Brings the octree in line with the snapshot's change sets.
void sync_octree(const SurfelSnapshot& snap, CompressedOctree& tree);
// Rebuilds the octree from all live snapshot surfels.
void rebuild_octree(const SurfelSnapshot& snap, CompressedOctree& tree);

struct MeshingConfig {
  double normal_compat_angle = 60.0;
  double narrow_angle = 10.0;
  double gap_angle = 120.0;
  double boundary_extend_factor = 2.0;

  bool valid() const { return narrow_angle > 0 && narrow_angle < gap_angle && gap_angle < 360; }
};

struct MeshingQueue {
  std::set<SurfelId> pending;
};

MeshingQueue build_queue(const SurfelSnapshot& snap, const TriangleMesh& mesh,
                         const std::set<SurfelId>& scheduled);

enum class TriangulateResult { kSkipped, kAborted, kDone };

struct TriangulateOutcome {
  TriangulateResult result = TriangulateResult::kSkipped;
  int triangles_added = 0;
};

TriangulateOutcome triangulate_surfel(SurfelId s, const SurfelSnapshot& snap, CompressedOctree& tree,
                                      TriangleMesh& mesh, const MeshingConfig& config);

struct MeshingStats {
  std::size_t processed = 0;
  std::size_t aborted = 0;
  std::size_t triangles_added = 0;
  std::vector<SurfelId> aborted_ids;
};

MeshingStats run_meshing_iteration(const MeshingQueue& queue, const SurfelSnapshot& snap,
                                   CompressedOctree& tree, TriangleMesh& mesh,
                                   const MeshingConfig& config);

// Meshes the whole snapshot into an empty mesh: every surfel once, then one
// more pass over surfels that are not yet completed.
MeshingStats mesh_from_scratch(const SurfelSnapshot& snap, CompressedOctree& tree, TriangleMesh& mesh,
                               const MeshingConfig& config);

}  // namespace sm
