#pragma once

#include <set>

#include "surfelmesh/association.hpp"
#include "surfelmesh/mesher.hpp"

namespace sm {

struct RemeshConfig {
  double stretch_factor = 1.5;
  double normal_compat_angle = 60.0;
  double search_extend_factor = 2.0;

  bool valid() const { return stretch_factor >= 1; }
};

bool triangle_valid(const Triangle& tri, const SurfelSnapshot& snap, const RemeshConfig& config);

struct RemeshStats {
  std::size_t tested = 0;
  std::size_t invalid = 0;
  std::size_t deleted = 0;
  std::size_t triangles_before = 0;
  double deletion_fraction() const {
    return triangles_before ? double(deleted) / double(triangles_before) : 0.0;
  }
};

struct RemeshResult {
  RemeshStats stats;
  std::set<SurfelId> scheduled;
};

// Deletes invalid triangles and the neighborhoods of invalid triangles and of
// new surfels. The octree must already be synced to `snap`.
RemeshResult remesh_pass(const SurfelSnapshot& snap, CompressedOctree& tree, TriangleMesh& mesh,
                         const RemeshConfig& config);

// Moved surfels outside the active window, held back until re-observed.
struct DeferredMoves {
  std::set<SurfelId> parked;
};

// Moves inactive IDs out of snap.moved into `deferred`. A negative window
// means every surfel is active.
void defer_inactive(SurfelSnapshot& snap, std::int64_t active_window, DeferredMoves& deferred);
// Re-queues parked surfels that the latest frame classified supported or
// conflicting.
void reactivate_deferred(DeferredMoves& deferred, const AssociationResult& assoc, SurfelCloud& cloud);

}  // namespace sm
